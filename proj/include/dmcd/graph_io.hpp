#ifndef DMCD_GRAPH_IO_HPP
#define DMCD_GRAPH_IO_HPP

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmcd/audit.hpp"
#include "dmcd/dataset.hpp"
#include "dmcd/errors.hpp"
#include "dmcd/graph.hpp"
#include "dmcd/metrics.hpp"

namespace dmcd {

enum class GraphFormat { Json, Dot };

inline nlohmann::json graph_to_json(const Dag& dag) {
    nlohmann::json j;
    j["nodes"] = dag.nodes();
    auto& edges = j["edges"] = nlohmann::json::array();
    for (const auto& [u, v] : dag.edges()) edges.push_back({u, v});
    return j;
}

inline std::string graph_to_dot(const Dag& dag) {
    std::ostringstream out;
    out << "digraph {\n";
    for (const auto& n : dag.nodes()) out << "  \"" << n << "\";\n";
    for (const auto& [u, v] : dag.edges()) out << "  \"" << u << "\" -> \"" << v << "\";\n";
    out << "}\n";
    return out.str();
}

inline void write_graph(const Dag& dag, GraphFormat format, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    if (format == GraphFormat::Json) {
        out << graph_to_json(dag).dump(2) << "\n";
    } else {
        out << graph_to_dot(dag);
    }
}

inline Dag graph_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
        throw SchemaError("graph document needs nodes and edges fields");
    std::vector<NodeId> nodes;
    for (const auto& n : j["nodes"]) {
        if (!n.is_string()) throw SchemaError("graph node is not a string");
        nodes.push_back(n.get<std::string>());
    }
    std::vector<Edge> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2) throw SchemaError("graph edge is not a pair");
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    return Dag(std::move(nodes), std::move(edges));  // cyclic input throws here
}

inline Dag read_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("graph file is not valid JSON: " + std::string(e.what()));
    }
    return graph_from_json(j);
}

// Metadata document: a JSON array of {id, name, description, unit, kind?}.
inline std::vector<VariableMeta> read_metadata(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("metadata file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_array()) throw SchemaError("metadata document must be a JSON array");
    std::vector<VariableMeta> out;
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("id") || !item["id"].is_string())
            throw SchemaError("metadata entry needs a string id");
        VariableMeta m;
        m.id = item["id"].get<std::string>();
        m.name = item.value("name", m.id);
        m.description = item.value("description", std::string());
        m.unit = item.value("unit", std::string());
        if (item.contains("kind")) {
            const std::string k = item["kind"].get<std::string>();
            if (k == "continuous") {
                m.declared_kind = ColumnKind::Continuous;
            } else if (k == "discrete") {
                m.declared_kind = ColumnKind::Discrete;
            } else {
                throw SchemaError("unknown kind '" + k + "' for variable " + m.id);
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

inline void write_metadata(const std::vector<VariableMeta>& metadata,
                           const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& m : metadata) {
        nlohmann::json item = {{"id", m.id}, {"name", m.name},
                               {"description", m.description}, {"unit", m.unit}};
        if (m.declared_kind)
            item["kind"] = *m.declared_kind == ColumnKind::Continuous ? "continuous" : "discrete";
        j.push_back(std::move(item));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

// CSV emitter matching load_table's expectations (header row, RFC 4180).
inline void write_table(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << std::setprecision(17);
    const auto ids = ds.variable_ids();
    for (std::size_t c = 0; c < ids.size(); ++c) out << (c ? "," : "") << ids[c];
    out << "\n";
    for (std::size_t i = 0; i < ds.sample_count(); ++i) {
        for (std::size_t c = 0; c < ids.size(); ++c) {
            const Column& col = ds.column(ids[c]);
            if (c) out << ",";
            if (col.is_text()) {
                out << col.textual[i];
            } else {
                out << col.numeric[i];
            }
        }
        out << "\n";
    }
}

inline nlohmann::json audit_report_to_json(const AuditReport& report) {
    nlohmann::json j;
    j["alpha"] = report.alpha;
    j["pi0"] = report.pi0;
    j["pair_count"] = report.pair_count();
    j["degenerate_count"] = report.degenerate_count;
    auto& findings = j["findings"] = nlohmann::json::array();
    for (const auto& f : report.findings) {
        nlohmann::json item;
        item["x"] = f.implied.x;
        item["y"] = f.implied.y;
        item["separated"] = f.implied.separated;
        item["conditioning_set"] = f.implied.conditioning_set;
        item["test_kind"] = test_kind_name(f.observed.test_kind);
        item["statistic"] = f.observed.statistic;
        item["p_value"] = f.observed.p_value;
        item["q_value"] = f.q_value;
        item["verdict"] = verdict_name(f.verdict);
        if (f.observed.degenerate) item["degenerate"] = true;
        if (!f.observed.note.empty()) item["note"] = f.observed.note;
        findings.push_back(std::move(item));
    }
    return j;
}

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
    return {{"fdr", r.fdr},       {"tpr", r.tpr}, {"fpr", r.fpr}, {"precision", r.precision},
            {"recall", r.recall}, {"f1", r.f1},   {"shd", r.shd}, {"bounded", r.bounded}};
}

// Aligned plain-text table, columns in the same order the benchmark tables
// use: FDR TPR FPR SHD Precision Recall F1.
inline std::string metrics_table(const MetricsReport& r) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "FDR     TPR     FPR     SHD   Precision  Recall  F1\n";
    out << r.fdr << "  " << r.tpr << "  " << r.fpr << "  " << std::setw(4) << r.shd << "  "
        << std::setw(9) << r.precision << "  " << r.recall << "  " << r.f1 << "\n";
    return out.str();
}

inline std::string aggregate_table(const AggregateReport& agg) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    const auto row = [&](const char* name, const MetricSummary& s) {
        out << std::left << std::setw(10) << name << std::right << s.mean << " +/- " << s.std_dev
            << "\n";
    };
    out << "Metrics over " << agg.run_count << " runs (mean +/- sample std):\n";
    row("FDR", agg.fdr);
    row("TPR", agg.tpr);
    row("FPR", agg.fpr);
    row("SHD", agg.shd);
    row("Precision", agg.precision);
    row("Recall", agg.recall);
    row("F1", agg.f1);
    return out.str();
}

}  // namespace dmcd

#endif
