#ifndef DMCD_DRAFTING_HPP
#define DMCD_DRAFTING_HPP

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmcd/audit.hpp"
#include "dmcd/dataset.hpp"
#include "dmcd/errors.hpp"
#include "dmcd/graph.hpp"
#include "dmcd/provider.hpp"

// Phase I: serialize variable metadata into a drafting prompt, parse the
// provider's structured reply into a validated draft DAG, and run the
// discrepancy-driven revision round.

namespace dmcd {

struct DraftResult {
    Dag dag;
    std::vector<std::string> excluded_variables;       // in V but not V_draft
    std::vector<std::string> missing_variable_candidates;  // free text
    std::string raw_response;
};

namespace detail {

inline std::string draft_schema_text() {
    return "Respond with a single JSON object and nothing else:\n"
           "{\n"
           "  \"nodes\": [\"<variable id>\", ...],\n"
           "  \"edges\": [[\"<cause id>\", \"<effect id>\"], ...],\n"
           "  \"excluded\": [\"<variable id judged causally irrelevant>\", ...],\n"
           "  \"missing_variable_candidates\": [\"<short description of a relevant\n"
           "      variable absent from the dataset>\", ...]\n"
           "}";
}

inline std::string serialize_metadata(const std::vector<VariableMeta>& metadata) {
    std::ostringstream out;
    out << "Variables:\n";
    for (const auto& m : metadata) {
        out << "- id: " << m.id;
        if (!m.name.empty() && m.name != m.id) out << " | name: " << m.name;
        if (!m.description.empty()) out << " | description: " << m.description;
        if (!m.unit.empty()) out << " | unit: " << m.unit;
        out << "\n";
    }
    return out.str();
}

}  // namespace detail

inline Prompt build_draft_prompt(const std::vector<VariableMeta>& metadata,
                                 const std::optional<std::string>& domain_hint = std::nullopt) {
    if (metadata.empty()) throw EmptyMetadata();
    Prompt p;
    const std::string domain = domain_hint.value_or("the dataset's subject area");
    p.system_text =
        "You are an expert in " + domain +
        " asked to propose a causal hypothesis over the variables of a dataset, the way a "
        "domain specialist would before looking at any data.";
    std::ostringstream user;
    user << "Propose a draft causal graph over the variables described below.\n\n"
         << "Rules:\n"
         << "- The result must be a directed acyclic graph.\n"
         << "- Do not include isolated nodes: every listed node must have at least one edge.\n"
         << "- Node labels must exactly match the dataset's variable identifiers.\n"
         << "- You may exclude variables you judge causally irrelevant; list them under "
            "\"excluded\".\n"
         << "- If a causally relevant variable is missing from the dataset, name it under "
            "\"missing_variable_candidates\" instead of inventing a node.\n"
         << "- Include all plausible causal relationships among variables that represent "
            "stable, generalizable factors, and choose the most appropriate direction for "
            "each edge with care.\n\n"
         << detail::serialize_metadata(metadata) << "\n"
         << detail::draft_schema_text() << "\n";
    p.user_text = user.str();
    p.response_schema = detail::draft_schema_text();
    return p;
}

inline DraftResult parse_draft_response(const std::string& raw,
                                        const std::set<std::string>& dataset_ids) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("draft response is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
        throw SchemaError("draft response missing required fields");
    if (!j["nodes"].is_array() || !j["edges"].is_array())
        throw SchemaError("draft fields have wrong types");

    std::vector<NodeId> nodes;
    for (const auto& n : j["nodes"]) {
        if (!n.is_string()) throw SchemaError("node entry is not a string");
        nodes.push_back(n.get<std::string>());
    }
    std::vector<Edge> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
            throw SchemaError("edge entry is not a [src, dst] pair");
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    for (const auto& n : nodes) {
        if (!dataset_ids.count(n))
            throw UnknownVariable("draft names a variable with no observational support: " + n);
    }

    Dag dag(nodes, edges);  // throws CycleDetected / UnknownEndpoint / DuplicateNode
    for (const auto& n : dag.nodes()) {
        if (dag.degree(n) == 0) throw IsolatedNode("draft contains isolated node " + n);
    }

    DraftResult result{std::move(dag), {}, {}, raw};
    std::set<std::string> node_set(nodes.begin(), nodes.end());
    for (const auto& id : dataset_ids) {
        if (!node_set.count(id)) result.excluded_variables.push_back(id);
    }
    if (j.contains("missing_variable_candidates") && j["missing_variable_candidates"].is_array()) {
        for (const auto& m : j["missing_variable_candidates"]) {
            if (m.is_string()) result.missing_variable_candidates.push_back(m.get<std::string>());
        }
    }
    return result;
}

inline Prompt build_revision_prompt(const Dag& dag, const AuditReport& report) {
    if (report.discrepancy_count() == 0) throw NoDiscrepancies();
    Prompt p;
    p.system_text =
        "You are an expert reviewer revising a causal graph in light of statistical evidence "
        "from observational data.";
    std::ostringstream user;
    user << "The current causal graph is:\n\nNodes: ";
    for (std::size_t i = 0; i < dag.nodes().size(); ++i)
        user << (i ? ", " : "") << dag.nodes()[i];
    user << "\nEdges:\n";
    for (const auto& [u, v] : dag.edges()) user << "- " << u << " -> " << v << "\n";

    user << "\nConditional independence testing against the data found these discrepancies "
            "(q-values are multiplicity-adjusted p-values, significance level "
         << report.alpha << "):\n";
    for (const auto& f : report.findings) {
        if (f.verdict != Verdict::MissingEdgeCandidate &&
            f.verdict != Verdict::SpuriousEdgeCandidate)
            continue;
        user << "- (" << f.implied.x << ", " << f.implied.y << "): ";
        if (f.verdict == Verdict::MissingEdgeCandidate) {
            user << "the pair is separated in the graph but the data shows significant "
                    "dependence";
        } else {
            user << "the graph asserts an edge but the data shows weak evidence of dependence";
        }
        user << " (q = " << f.q_value << ", conditioning set {";
        bool first = true;
        for (const auto& zid : f.implied.conditioning_set) {
            user << (first ? "" : ", ") << zid;
            first = false;
        }
        user << "})\n";
    }

    user << "\nRevision guidelines:\n"
         << "- Keep the same node set; only edge additions or removals are allowed.\n"
         << "- The result must remain a directed acyclic graph with no isolated nodes.\n"
         << "- Balance statistical strength against semantic plausibility: a discrepancy may "
            "be retained if the statistical evidence is weak or the edge is strongly "
            "justified by domain knowledge.\n"
         << "- Never add an edge between two variables solely because conditioning on a "
            "common effect makes them appear dependent (collider bias); such induced "
            "dependence does not justify a direct causal edge.\n\n"
         << "Respond with a single JSON object and nothing else:\n"
         << "{\"edges\": [[\"<cause id>\", \"<effect id>\"], ...]}\n";
    p.user_text = user.str();
    p.response_schema = "{\"edges\": [[src, dst], ...]}";
    return p;
}

struct RefineOutcome {
    Dag dag;
    bool revised = false;
    std::vector<std::string> warnings;
};

namespace detail {

inline Dag parse_revision(const std::string& raw, const Dag& draft) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("revision is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("edges") || !j["edges"].is_array())
        throw SchemaError("revision missing edges array");
    std::vector<Edge> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
            throw SchemaError("revision edge entry is not a [src, dst] pair");
        const std::string src = e[0].get<std::string>();
        const std::string dst = e[1].get<std::string>();
        if (!draft.has_node(src) || !draft.has_node(dst))
            throw UnknownVariable("revision introduces a node outside the draft node set");
        edges.emplace_back(src, dst);
    }
    // Node-set changes via an explicit nodes field are rejected too.
    if (j.contains("nodes")) {
        for (const auto& n : j["nodes"]) {
            if (!n.is_string() || !draft.has_node(n.get<std::string>()))
                throw UnknownVariable("revision alters the draft node set");
        }
    }
    Dag revised(draft.nodes(), edges);
    for (const auto& n : revised.nodes()) {
        if (revised.degree(n) == 0)
            throw IsolatedNode("revision leaves node " + n + " isolated");
    }
    return revised;
}

}  // namespace detail

// One revision round: prompt, parse, validate; on an invalid reply re-prompt
// once with the validation error appended; on a second failure fall back to
// the unrevised graph with a warning. The node set never changes and the
// output is always a valid DAG.
inline RefineOutcome run_refine_phase(const Dag& dag, const AuditReport& report,
                                      Provider& provider) {
    RefineOutcome out{dag, false, {}};
    if (report.discrepancy_count() == 0) return out;

    Prompt prompt = build_revision_prompt(dag, report);
    std::string error_text;
    for (int attempt = 0; attempt < 2; ++attempt) {
        Prompt current = prompt;
        if (attempt == 1) {
            current.user_text +=
                "\nYour previous revision was invalid: " + error_text +
                "\nProduce a corrected revision that satisfies every rule above.\n";
        }
        const std::string raw = provider.complete(current);
        try {
            out.dag = detail::parse_revision(raw, dag);
            out.revised = true;
            return out;
        } catch (const Error& e) {
            error_text = e.what();
        }
    }
    out.warnings.push_back("revision rejected twice, keeping unrevised graph: " + error_text);
    return out;
}

}  // namespace dmcd

#endif
