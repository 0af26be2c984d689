#ifndef DMCD_PIPELINE_HPP
#define DMCD_PIPELINE_HPP

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dmcd/audit.hpp"
#include "dmcd/dataset.hpp"
#include "dmcd/drafting.hpp"
#include "dmcd/errors.hpp"
#include "dmcd/graph.hpp"
#include "dmcd/graph_io.hpp"
#include "dmcd/metrics.hpp"
#include "dmcd/provider.hpp"

// Orchestration: draft -> audit -> refine -> evaluate, with all prompts,
// responses, graphs, and reports persisted per run index.

namespace dmcd {

enum class ProviderSelection { OpenAiCompatible, Mock };

struct RunConfig {
    std::filesystem::path data_path;
    std::filesystem::path metadata_path;
    std::optional<std::filesystem::path> truth_path;
    double alpha = 0.05;
    double lambda = 0.5;
    bool force_bh = false;
    ProviderSelection provider = ProviderSelection::Mock;
    ProviderConfig provider_config;
    std::filesystem::path mock_dir;
    std::optional<std::string> domain_hint;
    int runs = 1;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    std::optional<NeutralizeMode> neutralize;
    bool bounded_metrics = false;
    bool second_audit = false;
    RegressorConfig regressor;
};

struct PhaseTimings {
    double draft_seconds = 0.0;
    double audit_seconds = 0.0;
    double refine_seconds = 0.0;
    double evaluate_seconds = 0.0;
};

struct RunArtifacts {
    Dag draft;
    AuditReport audit;
    Dag final_graph;
    std::optional<MetricsReport> metrics;
    std::vector<std::string> warnings;
    // Timings stay in memory (never written to the artifact tree, which must
    // be byte-identical across deterministic runs).
    PhaseTimings timings;
};

// Decorator that persists every prompt/response exchange into a directory.
class RecordingProvider : public Provider {
public:
    RecordingProvider(Provider& inner, std::filesystem::path dir)
        : inner_(inner), dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    std::string complete(const Prompt& prompt) override {
        const std::string tag = index_tag(counter_++);
        write(dir_ / ("prompt_" + tag + "_system.txt"), prompt.system_text);
        write(dir_ / ("prompt_" + tag + "_user.txt"), prompt.user_text);
        const std::string response = inner_.complete(prompt);
        write(dir_ / ("response_" + tag + ".txt"), response);
        return response;
    }

private:
    static std::string index_tag(int i) {
        std::ostringstream out;
        out << std::setw(3) << std::setfill('0') << i;
        return out.str();
    }
    static void write(const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p);
        if (!out) throw IoError("cannot write " + p.string());
        out << text;
    }

    Provider& inner_;
    std::filesystem::path dir_;
    int counter_ = 0;
};

namespace detail {

// Re-key dataset columns through an id mapping (used by the neutralization
// ablation so that prompts, audit, and artifacts all live in neutral ids).
inline Dataset rename_dataset(const Dataset& ds,
                              const std::vector<VariableMeta>& new_metadata,
                              const std::map<std::string, std::string>& old_to_new) {
    std::map<std::string, Column> columns;
    for (const auto& m : ds.metadata()) columns[old_to_new.at(m.id)] = ds.column(m.id);
    return Dataset(new_metadata, std::move(columns), ds.dropped_rows());
}

inline Dag rename_graph(const Dag& g, const std::map<std::string, std::string>& old_to_new) {
    std::vector<NodeId> nodes;
    for (const auto& n : g.nodes()) nodes.push_back(old_to_new.at(n));
    std::vector<Edge> edges;
    for (const auto& [u, v] : g.edges()) edges.emplace_back(old_to_new.at(u), old_to_new.at(v));
    return Dag(std::move(nodes), std::move(edges));
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline std::unique_ptr<Provider> make_provider(const RunConfig& cfg) {
    if (cfg.provider == ProviderSelection::Mock) return std::make_unique<MockProvider>(cfg.mock_dir);
    return std::make_unique<HttpProvider>(cfg.provider_config);
}

inline std::vector<RunArtifacts> run_pipeline(const RunConfig& cfg, Provider& provider) {
    if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
    if (cfg.alpha <= 0.0 || cfg.alpha >= 1.0) throw ConfigError("alpha must be in (0,1)");

    auto metadata = read_metadata(cfg.metadata_path);
    Dataset dataset = load_table(cfg.data_path.string(), metadata);
    std::optional<Dag> truth;
    if (cfg.truth_path) truth = read_graph(*cfg.truth_path);

    std::map<std::string, std::string> id_map;  // old -> new (identity when not neutralizing)
    if (cfg.neutralize) {
        auto neutral = neutralize_metadata(metadata, *cfg.neutralize);
        id_map = neutral.old_to_new;
        dataset = detail::rename_dataset(dataset, neutral.metadata, id_map);
        metadata = std::move(neutral.metadata);
        if (truth) truth = detail::rename_graph(*truth, id_map);
    }

    if (truth) {
        for (const auto& n : truth->nodes()) {
            if (!dataset.has_variable(n))
                throw NodeMismatch("ground-truth node not in dataset: " + n);
        }
    }

    std::filesystem::create_directories(cfg.out_dir);
    if (!id_map.empty()) {
        nlohmann::json j(id_map);
        std::ofstream out(cfg.out_dir / "id_mapping.json");
        out << j.dump(2) << "\n";
    }

    const std::set<std::string> dataset_ids = [&] {
        const auto ids = dataset.variable_ids();
        return std::set<std::string>(ids.begin(), ids.end());
    }();

    std::vector<RunArtifacts> all;
    std::vector<MetricsReport> metric_reports;
    Rng root(cfg.seed);
    for (int run = 0; run < cfg.runs; ++run) {
        std::ostringstream dir_name;
        dir_name << "run_" << std::setw(3) << std::setfill('0') << run;
        const auto run_dir = cfg.out_dir / dir_name.str();
        std::filesystem::create_directories(run_dir);
        RecordingProvider recorder(provider, run_dir / "provider");

        Rng run_rng = root.split(static_cast<std::uint64_t>(run));
        AuditOptions audit_opt;
        audit_opt.alpha = cfg.alpha;
        audit_opt.lambda = cfg.lambda;
        audit_opt.force_bh = cfg.force_bh;
        audit_opt.regressor = cfg.regressor;
        audit_opt.regressor.seed = run_rng.next_u64();

        PhaseTimings timings;

        // Phase I: draft.
        auto t0 = std::chrono::steady_clock::now();
        const Prompt draft_prompt = build_draft_prompt(metadata, cfg.domain_hint);
        const std::string draft_raw = recorder.complete(draft_prompt);
        DraftResult draft = parse_draft_response(draft_raw, dataset_ids);
        timings.draft_seconds = detail::seconds_since(t0);
        write_graph(draft.dag, GraphFormat::Json, run_dir / "draft_graph.json");
        {
            nlohmann::json j;
            j["excluded_variables"] = draft.excluded_variables;
            j["missing_variable_candidates"] = draft.missing_variable_candidates;
            std::ofstream out(run_dir / "draft_notes.json");
            out << j.dump(2) << "\n";
        }

        // Phase II: audit.
        t0 = std::chrono::steady_clock::now();
        AuditReport report = audit_graph(draft.dag, dataset, audit_opt);
        timings.audit_seconds = detail::seconds_since(t0);
        {
            std::ofstream out(run_dir / "audit_report.json");
            out << audit_report_to_json(report).dump(2) << "\n";
        }

        // Refinement (skipped when the audit found nothing).
        t0 = std::chrono::steady_clock::now();
        RefineOutcome refined = run_refine_phase(draft.dag, report, recorder);
        timings.refine_seconds = detail::seconds_since(t0);
        write_graph(refined.dag, GraphFormat::Json, run_dir / "final_graph.json");
        write_graph(refined.dag, GraphFormat::Dot, run_dir / "final_graph.dot");

        if (cfg.second_audit && refined.revised) {
            AuditReport post = audit_graph(refined.dag, dataset, audit_opt);
            std::ofstream out(run_dir / "audit_report_post.json");
            out << audit_report_to_json(post).dump(2) << "\n";
        }

        RunArtifacts artifacts{draft.dag, std::move(report), refined.dag, std::nullopt,
                               refined.warnings, timings};

        if (truth) {
            t0 = std::chrono::steady_clock::now();
            artifacts.metrics = evaluate(refined.dag, *truth, cfg.bounded_metrics);
            artifacts.timings.evaluate_seconds = detail::seconds_since(t0);
            std::ofstream out(run_dir / "metrics.json");
            out << metrics_to_json(*artifacts.metrics).dump(2) << "\n";
            metric_reports.push_back(*artifacts.metrics);
        }
        if (!artifacts.warnings.empty()) {
            nlohmann::json j(artifacts.warnings);
            std::ofstream out(run_dir / "warnings.json");
            out << j.dump(2) << "\n";
        }
        all.push_back(std::move(artifacts));
    }

    if (!metric_reports.empty() && cfg.runs > 1) {
        const AggregateReport agg = aggregate_runs(metric_reports);
        std::ofstream out(cfg.out_dir / "summary.txt");
        out << aggregate_table(agg);
    }
    return all;
}

inline std::vector<RunArtifacts> run_pipeline(const RunConfig& cfg) {
    auto provider = make_provider(cfg);
    return run_pipeline(cfg, *provider);
}

// Minimal key = value config file (one pair per line, '#' comments, optional
// double quotes around values). CLI flags override file entries.
inline std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string stripped = strip(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " is not key = value");
        std::string key = strip(stripped.substr(0, eq));
        std::string value = strip(stripped.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.empty()) throw ConfigError("empty key on config line " + std::to_string(lineno));
        out[key] = value;
    }
    return out;
}

}  // namespace dmcd

#endif
