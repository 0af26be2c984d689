#ifndef DMCD_METRICS_HPP
#define DMCD_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "dmcd/errors.hpp"
#include "dmcd/graph.hpp"

// Edge-level scoring of a predicted DAG against ground truth. The FDR
// denominator excludes reversed edges, (R + FP) / (TP + FP), which is the
// variant that can exceed 1; bounded mode clamps FDR, FPR, Precision, and F1
// into [0, 1].

namespace dmcd {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t reversed = 0;
    std::size_t fp_extra = 0;
    std::size_t missing = 0;
    std::size_t truth_total = 0;
    std::size_t negatives = 0;  // unordered non-adjacent pairs in truth

    std::size_t predicted_total() const { return tp + reversed + fp_extra; }
};

struct MetricsReport {
    double fdr = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t shd = 0;
    bool bounded = false;
};

// Predicted nodes must be a subset of truth nodes; truth edges touching
// variables the prediction excluded all count as missing.
inline ConfusionCounts count_edge_categories(const Dag& pred, const Dag& truth) {
    for (const auto& node : pred.nodes()) {
        if (!truth.has_node(node)) throw NodeMismatch("predicted node not in truth: " + node);
    }
    ConfusionCounts c;
    c.truth_total = truth.edges().size();
    for (const auto& [u, v] : pred.edges()) {
        if (truth.has_edge(u, v)) {
            ++c.tp;
        } else if (truth.has_edge(v, u)) {
            ++c.reversed;
        } else {
            ++c.fp_extra;
        }
    }
    c.missing = c.truth_total - c.tp - c.reversed;

    const std::size_t n = truth.node_count();
    std::size_t adjacent_pairs = 0;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& [u, v] : truth.edges()) {
        auto key = u < v ? std::make_pair(u, v) : std::make_pair(v, u);
        if (seen.insert(key).second) ++adjacent_pairs;
    }
    c.negatives = n * (n - 1) / 2 - adjacent_pairs;
    return c;
}

inline MetricsReport compute_metrics(const ConfusionCounts& c, bool bounded) {
    const auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
    MetricsReport r;
    r.bounded = bounded;
    const double tp = static_cast<double>(c.tp);
    const double rev = static_cast<double>(c.reversed);
    const double fp = static_cast<double>(c.fp_extra);
    r.fdr = ratio(rev + fp, tp + fp);
    r.tpr = ratio(tp, static_cast<double>(c.truth_total));
    r.fpr = ratio(rev + fp, static_cast<double>(c.negatives));
    r.precision = ratio(tp, static_cast<double>(c.predicted_total()));
    r.recall = r.tpr;
    r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
    r.shd = c.reversed + c.fp_extra + c.missing;
    if (bounded) {
        r.fdr = std::clamp(r.fdr, 0.0, 1.0);
        r.fpr = std::clamp(r.fpr, 0.0, 1.0);
        r.precision = std::clamp(r.precision, 0.0, 1.0);
        r.f1 = std::clamp(r.f1, 0.0, 1.0);
    }
    return r;
}

inline MetricsReport evaluate(const Dag& pred, const Dag& truth, bool bounded) {
    return compute_metrics(count_edge_categories(pred, truth), bounded);
}

// Structural Hamming distance; one reversal counts as one edit.
inline std::size_t shd(const Dag& pred, const Dag& truth) {
    const ConfusionCounts c = count_edge_categories(pred, truth);
    return c.reversed + c.fp_extra + c.missing;
}

struct MetricSummary {
    double mean = 0.0;
    double std_dev = 0.0;  // sample (n-1) standard deviation; 0 for one run
};

struct AggregateReport {
    MetricSummary fdr, tpr, fpr, precision, recall, f1, shd;
    std::size_t run_count = 0;
    bool bounded = false;
    bool single_run = false;
};

inline AggregateReport aggregate_runs(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw EmptyList();
    for (const auto& r : reports) {
        if (r.bounded != reports.front().bounded) throw MixedBoundedFlags();
    }
    const auto summarize = [&](auto getter) {
        MetricSummary s;
        const double n = static_cast<double>(reports.size());
        for (const auto& r : reports) s.mean += getter(r);
        s.mean /= n;
        if (reports.size() > 1) {
            double ss = 0.0;
            for (const auto& r : reports) {
                const double d = getter(r) - s.mean;
                ss += d * d;
            }
            s.std_dev = std::sqrt(ss / (n - 1.0));
        }
        return s;
    };
    AggregateReport agg;
    agg.run_count = reports.size();
    agg.bounded = reports.front().bounded;
    agg.single_run = reports.size() == 1;
    agg.fdr = summarize([](const MetricsReport& r) { return r.fdr; });
    agg.tpr = summarize([](const MetricsReport& r) { return r.tpr; });
    agg.fpr = summarize([](const MetricsReport& r) { return r.fpr; });
    agg.precision = summarize([](const MetricsReport& r) { return r.precision; });
    agg.recall = summarize([](const MetricsReport& r) { return r.recall; });
    agg.f1 = summarize([](const MetricsReport& r) { return r.f1; });
    agg.shd = summarize([](const MetricsReport& r) { return static_cast<double>(r.shd); });
    return agg;
}

}  // namespace dmcd

#endif
