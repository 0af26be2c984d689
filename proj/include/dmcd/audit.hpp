#ifndef DMCD_AUDIT_HPP
#define DMCD_AUDIT_HPP

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "dmcd/dataset.hpp"
#include "dmcd/errors.hpp"
#include "dmcd/graph.hpp"
#include "dmcd/independence.hpp"
#include "dmcd/qvalues.hpp"

// Phase II engine: for every unordered pair in the draft graph, compare the
// graph-implied CI relation against a data-estimated one, adjust the whole
// p-value batch for multiplicity, and classify each pair.

namespace dmcd {

struct ImpliedRelation {
    std::string x;
    std::string y;
    bool separated = false;
    std::set<std::string> conditioning_set;
};

enum class Verdict { Consistent, MissingEdgeCandidate, SpuriousEdgeCandidate, Inconclusive };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Consistent: return "consistent";
        case Verdict::MissingEdgeCandidate: return "missing_edge_candidate";
        case Verdict::SpuriousEdgeCandidate: return "spurious_edge_candidate";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct PairFinding {
    ImpliedRelation implied;
    TestResult observed;
    double q_value = 1.0;
    Verdict verdict = Verdict::Consistent;
};

struct AuditReport {
    double alpha = 0.05;
    double pi0 = 1.0;
    std::vector<PairFinding> findings;  // (x, y) lexicographic by node order
    std::size_t degenerate_count = 0;

    std::size_t pair_count() const { return findings.size(); }
    std::size_t discrepancy_count() const {
        std::size_t c = 0;
        for (const auto& f : findings)
            c += f.verdict == Verdict::MissingEdgeCandidate ||
                 f.verdict == Verdict::SpuriousEdgeCandidate;
        return c;
    }
};

// Graph-implied relation for one pair. Non-adjacent pairs are d-separated by
// the parents of the topologically later endpoint; adjacent pairs are tested
// conditional on the child's other parents, so the test measures the edge's
// incremental contribution rather than the marginal association.
inline ImpliedRelation implied_relation(const Dag& dag, const std::string& x, const std::string& y) {
    if (!dag.has_node(x)) throw UnknownNode("unknown node id: " + x);
    if (!dag.has_node(y)) throw UnknownNode("unknown node id: " + y);
    ImpliedRelation rel;
    rel.x = x;
    rel.y = y;
    if (dag.adjacent(x, y)) {
        rel.separated = false;
        const std::string& child = dag.has_edge(x, y) ? y : x;
        const std::string& other = dag.has_edge(x, y) ? x : y;
        for (const auto& p : dag.parents(child)) {
            if (p != other) rel.conditioning_set.insert(p);
        }
    } else {
        rel.separated = true;
        rel.conditioning_set = dag.separator_for_pair(x, y);
    }
    return rel;
}

// Pure classification rule over (separated, q, alpha); degenerate tests are
// inconclusive regardless of q.
inline Verdict classify_finding(bool separated, bool degenerate, double q, double alpha) {
    if (degenerate) return Verdict::Inconclusive;
    if (separated && q <= alpha) return Verdict::MissingEdgeCandidate;
    if (!separated && q > alpha) return Verdict::SpuriousEdgeCandidate;
    return Verdict::Consistent;
}

struct AuditOptions {
    double alpha = 0.05;
    double lambda = 0.5;
    bool force_bh = false;  // pi0 = 1 (plain Benjamini-Hochberg)
    RegressorConfig regressor;
};

inline AuditReport audit_graph(const Dag& dag, const Dataset& ds, const AuditOptions& opt = {}) {
    if (opt.alpha <= 0.0 || opt.alpha >= 1.0) throw ConfigError("alpha must be in (0,1)");
    for (const auto& node : dag.nodes()) {
        if (!ds.has_variable(node)) throw NodeNotInDataset("draft node not in dataset: " + node);
    }

    AuditReport report;
    report.alpha = opt.alpha;
    const auto& nodes = dag.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            PairFinding f;
            f.implied = implied_relation(dag, nodes[i], nodes[j]);
            f.observed = run_ci_test(ds, nodes[i], nodes[j], f.implied.conditioning_set,
                                     opt.regressor);
            if (f.observed.degenerate) ++report.degenerate_count;
            report.findings.push_back(std::move(f));
        }
    }
    if (report.findings.empty()) return report;

    // One global multiplicity batch per audit.
    std::vector<double> ps;
    ps.reserve(report.findings.size());
    for (const auto& f : report.findings) ps.push_back(f.observed.p_value);
    const QValueBatch batch = adjust_batch(ps, opt.lambda, opt.force_bh);
    report.pi0 = batch.pi0;
    for (std::size_t i = 0; i < report.findings.size(); ++i) {
        auto& f = report.findings[i];
        f.q_value = batch.q_values[i];
        f.verdict = classify_finding(f.implied.separated, f.observed.degenerate, f.q_value,
                                     opt.alpha);
    }
    return report;
}

}  // namespace dmcd

#endif
