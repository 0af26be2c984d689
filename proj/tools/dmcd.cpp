// Command-line surface for the draft/audit/refine/evaluate pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dmcd/pipeline.hpp"
#include "dmcd/scm.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitProvider = 4;
constexpr int kExitValidation = 5;

struct CliOptions {
    std::string config_file;
    std::string data;
    std::string metadata;
    std::string truth;
    double alpha = 0.05;
    int runs = 1;
    std::string provider = "mock";
    std::string model = "gpt-5.2";
    std::string endpoint = "https://api.openai.com";
    std::string credential_env = "OPENAI_API_KEY";
    std::string mock_dir = "mock_responses";
    std::string domain_hint;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::string neutralize = "off";
    bool bounded = false;
    bool second_audit = false;
    bool bh = false;
    std::string regressor = "gbt";
};

void apply_config_file(CliOptions& opt, const CLI::App& app) {
    if (opt.config_file.empty()) return;
    const auto kv = dmcd::read_config_file(opt.config_file);
    const auto take = [&](const char* key, auto& field, auto parse) {
        // CLI flags win over file entries.
        const auto it = kv.find(key);
        if (it != kv.end() && app.count(std::string("--") + key) == 0) field = parse(it->second);
    };
    const auto as_string = [](const std::string& s) { return s; };
    const auto as_double = [](const std::string& s) { return std::stod(s); };
    const auto as_int = [](const std::string& s) { return std::stoi(s); };
    const auto as_u64 = [](const std::string& s) { return std::stoull(s); };
    const auto as_bool = [](const std::string& s) { return s == "true" || s == "1"; };
    take("data", opt.data, as_string);
    take("metadata", opt.metadata, as_string);
    take("truth", opt.truth, as_string);
    take("alpha", opt.alpha, as_double);
    take("runs", opt.runs, as_int);
    take("provider", opt.provider, as_string);
    take("model", opt.model, as_string);
    take("endpoint", opt.endpoint, as_string);
    take("credential-env", opt.credential_env, as_string);
    take("mock-dir", opt.mock_dir, as_string);
    take("domain-hint", opt.domain_hint, as_string);
    take("seed", opt.seed, as_u64);
    take("out", opt.out, as_string);
    take("neutralize", opt.neutralize, as_string);
    take("bounded", opt.bounded, as_bool);
    take("second-audit", opt.second_audit, as_bool);
    take("bh", opt.bh, as_bool);
    take("regressor", opt.regressor, as_string);
}

dmcd::RunConfig to_run_config(const CliOptions& opt) {
    dmcd::RunConfig cfg;
    cfg.data_path = opt.data;
    cfg.metadata_path = opt.metadata;
    if (!opt.truth.empty()) cfg.truth_path = opt.truth;
    cfg.alpha = opt.alpha;
    cfg.runs = opt.runs;
    cfg.force_bh = opt.bh;
    if (opt.provider == "mock") {
        cfg.provider = dmcd::ProviderSelection::Mock;
    } else if (opt.provider == "openai_compatible") {
        cfg.provider = dmcd::ProviderSelection::OpenAiCompatible;
    } else {
        throw dmcd::ConfigError("unknown provider: " + opt.provider);
    }
    cfg.provider_config.model = opt.model;
    cfg.provider_config.endpoint = opt.endpoint;
    cfg.provider_config.credential_env = opt.credential_env;
    cfg.mock_dir = opt.mock_dir;
    if (!opt.domain_hint.empty()) cfg.domain_hint = opt.domain_hint;
    cfg.seed = opt.seed;
    cfg.out_dir = opt.out;
    if (opt.neutralize == "strip_descriptions") {
        cfg.neutralize = dmcd::NeutralizeMode::StripDescriptions;
    } else if (opt.neutralize == "full_neutralize") {
        cfg.neutralize = dmcd::NeutralizeMode::FullNeutralize;
    } else if (opt.neutralize != "off") {
        throw dmcd::ConfigError("unknown neutralize mode: " + opt.neutralize);
    }
    cfg.bounded_metrics = opt.bounded;
    cfg.second_audit = opt.second_audit;
    if (opt.regressor == "linear") {
        cfg.regressor.family = dmcd::RegressorFamily::Linear;
    } else if (opt.regressor != "gbt") {
        throw dmcd::ConfigError("unknown regressor family: " + opt.regressor);
    }
    return cfg;
}

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_file, "key = value config file; flags override it");
    cmd->add_option("--data", opt.data, "CSV data file with header row");
    cmd->add_option("--metadata", opt.metadata, "JSON metadata file");
    cmd->add_option("--truth", opt.truth, "ground-truth graph JSON");
    cmd->add_option("--alpha", opt.alpha, "significance level (default 0.05)");
    cmd->add_option("--runs", opt.runs, "number of pipeline runs");
    cmd->add_option("--provider", opt.provider, "mock | openai_compatible");
    cmd->add_option("--model", opt.model, "model name for the HTTP provider");
    cmd->add_option("--endpoint", opt.endpoint, "HTTP provider base URL");
    cmd->add_option("--credential-env", opt.credential_env, "env var holding the API key");
    cmd->add_option("--mock-dir", opt.mock_dir, "digest->response directory for the mock provider");
    cmd->add_option("--domain-hint", opt.domain_hint, "expert-role domain for the draft prompt");
    cmd->add_option("--seed", opt.seed, "root seed for all library randomness");
    cmd->add_option("--out", opt.out, "output directory");
    cmd->add_option("--neutralize", opt.neutralize,
                    "off | strip_descriptions | full_neutralize");
    cmd->add_flag("--bounded", opt.bounded, "clamp FDR/FPR/Precision/F1 into [0,1]");
    cmd->add_flag("--second-audit", opt.second_audit, "re-audit the refined graph");
    cmd->add_flag("--bh", opt.bh, "force pi0 = 1 (plain Benjamini-Hochberg)");
    cmd->add_option("--regressor", opt.regressor, "gbt | linear residualizer for mixed tests");
}

int run_command(const CliOptions& opt, bool draft_only, bool audit_only,
                const std::string& graph_path) {
    dmcd::RunConfig cfg = to_run_config(opt);
    if (draft_only || audit_only) cfg.runs = 1;

    if (audit_only) {
        auto metadata = dmcd::read_metadata(cfg.metadata_path);
        dmcd::Dataset ds = dmcd::load_table(cfg.data_path.string(), metadata);
        dmcd::Dag dag = dmcd::read_graph(graph_path);
        dmcd::AuditOptions audit_opt;
        audit_opt.alpha = cfg.alpha;
        audit_opt.force_bh = cfg.force_bh;
        audit_opt.regressor = cfg.regressor;
        const dmcd::AuditReport report = dmcd::audit_graph(dag, ds, audit_opt);
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream out(cfg.out_dir / "audit_report.json");
        out << dmcd::audit_report_to_json(report).dump(2) << "\n";
        std::cout << "audited " << report.pair_count() << " pairs, "
                  << report.discrepancy_count() << " discrepancies, "
                  << report.degenerate_count << " degenerate tests\n";
        return 0;
    }

    if (draft_only) {
        auto metadata = dmcd::read_metadata(cfg.metadata_path);
        dmcd::Dataset ds = dmcd::load_table(cfg.data_path.string(), metadata);
        if (cfg.neutralize) {
            auto neutral = dmcd::neutralize_metadata(metadata, *cfg.neutralize);
            metadata = neutral.metadata;
        }
        auto provider = dmcd::make_provider(cfg);
        std::filesystem::create_directories(cfg.out_dir);
        dmcd::RecordingProvider recorder(*provider, cfg.out_dir / "provider");
        const dmcd::Prompt prompt = dmcd::build_draft_prompt(metadata, cfg.domain_hint);
        const std::string raw = recorder.complete(prompt);
        std::set<std::string> ids;
        for (const auto& m : metadata) ids.insert(m.id);
        const dmcd::DraftResult draft = dmcd::parse_draft_response(raw, ids);
        dmcd::write_graph(draft.dag, dmcd::GraphFormat::Json, cfg.out_dir / "draft_graph.json");
        std::cout << "draft: " << draft.dag.node_count() << " nodes, "
                  << draft.dag.edges().size() << " edges, " << draft.excluded_variables.size()
                  << " excluded\n";
        return 0;
    }

    const auto artifacts = dmcd::run_pipeline(cfg);
    for (std::size_t i = 0; i < artifacts.size(); ++i) {
        const auto& a = artifacts[i];
        std::cout << "run " << i << ": draft " << a.draft.edges().size() << " edges, "
                  << a.audit.discrepancy_count() << " discrepancies, final "
                  << a.final_graph.edges().size() << " edges";
        if (a.metrics) std::cout << ", F1 " << a.metrics->f1 << ", SHD " << a.metrics->shd;
        std::cout << "\n";
        for (const auto& w : a.warnings) std::cerr << "warning (run " << i << "): " << w << "\n";
    }
    if (artifacts.size() > 1 && artifacts.front().metrics) {
        std::vector<dmcd::MetricsReport> reports;
        for (const auto& a : artifacts) reports.push_back(*a.metrics);
        std::cout << dmcd::aggregate_table(dmcd::aggregate_runs(reports));
    }
    return 0;
}

int eval_command(const std::string& pred_path, const std::string& truth_path, bool bounded,
                 const std::string& out_path) {
    const dmcd::Dag pred = dmcd::read_graph(pred_path);
    const dmcd::Dag truth = dmcd::read_graph(truth_path);
    const dmcd::MetricsReport report = dmcd::evaluate(pred, truth, bounded);
    std::cout << dmcd::metrics_table(report);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw dmcd::IoError("cannot write " + out_path);
        out << dmcd::metrics_to_json(report).dump(2) << "\n";
    }
    return 0;
}

// Built-in fixture shapes for the `gen` subcommand.
dmcd::Dag fixture_graph(const std::string& shape, int nodes) {
    std::vector<dmcd::NodeId> ids;
    for (int i = 0; i < nodes; ++i) ids.push_back("V" + std::to_string(i + 1));
    std::vector<dmcd::Edge> edges;
    if (shape == "chain") {
        for (int i = 0; i + 1 < nodes; ++i) edges.emplace_back(ids[i], ids[i + 1]);
    } else if (shape == "collider") {
        for (int i = 0; i + 1 < nodes; ++i) edges.emplace_back(ids[i], ids.back());
    } else if (shape == "fork") {
        for (int i = 1; i < nodes; ++i) edges.emplace_back(ids.front(), ids[i]);
    } else {
        throw dmcd::ConfigError("unknown shape: " + shape);
    }
    return dmcd::Dag(ids, edges);
}

int gen_command(const std::string& shape, int nodes, int samples, double coefficient,
                double noise, std::uint64_t seed, const std::string& out_dir) {
    const dmcd::Dag dag = fixture_graph(shape, nodes);
    const auto spec = dmcd::linear_gaussian_spec(dag, coefficient, noise, seed);
    auto [ds, truth] = dmcd::synthesize_scm(spec, static_cast<std::size_t>(samples));
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    dmcd::write_table(ds, dir / "data.csv");
    dmcd::write_metadata(ds.metadata(), dir / "metadata.json");
    dmcd::write_graph(truth, dmcd::GraphFormat::Json, dir / "truth.json");
    std::cout << "wrote " << samples << " samples over " << nodes << " variables to " << out_dir
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DMCD: LLM-drafted causal discovery with statistical verification"};
    app.require_subcommand(1);

    CliOptions opt;
    std::string graph_path;

    auto* run = app.add_subcommand("run", "full pipeline: draft, audit, refine, evaluate");
    add_common_flags(run, opt);

    auto* draft = app.add_subcommand("draft", "Phase I only: produce a draft graph");
    add_common_flags(draft, opt);

    auto* audit = app.add_subcommand("audit", "Phase II only: audit a graph against data");
    add_common_flags(audit, opt);
    audit->add_option("--graph", graph_path, "graph JSON to audit")->required();

    std::string pred_path, truth_path, eval_out;
    bool eval_bounded = false;
    auto* eval = app.add_subcommand("eval", "score a predicted graph against ground truth");
    eval->add_option("--pred", pred_path, "predicted graph JSON")->required();
    eval->add_option("--truth", truth_path, "ground-truth graph JSON")->required();
    eval->add_flag("--bounded", eval_bounded, "clamp FDR/FPR/Precision/F1 into [0,1]");
    eval->add_option("--out", eval_out, "also write metrics JSON here");

    std::string gen_shape = "chain", gen_out = "fixture";
    int gen_nodes = 3, gen_samples = 5000;
    double gen_coeff = 1.0, gen_noise = 1.0;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen", "generate a synthetic linear-Gaussian fixture");
    gen->add_option("--shape", gen_shape, "chain | collider | fork");
    gen->add_option("--nodes", gen_nodes, "number of variables");
    gen->add_option("--samples", gen_samples, "number of rows");
    gen->add_option("--coeff", gen_coeff, "edge coefficient");
    gen->add_option("--noise", gen_noise, "noise scale");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            apply_config_file(opt, *run);
            return run_command(opt, false, false, "");
        }
        if (draft->parsed()) {
            apply_config_file(opt, *draft);
            return run_command(opt, true, false, "");
        }
        if (audit->parsed()) {
            apply_config_file(opt, *audit);
            return run_command(opt, false, true, graph_path);
        }
        if (eval->parsed()) return eval_command(pred_path, truth_path, eval_bounded, eval_out);
        if (gen->parsed())
            return gen_command(gen_shape, gen_nodes, gen_samples, gen_coeff, gen_noise, gen_seed,
                               gen_out);
    } catch (const dmcd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const dmcd::HeaderMismatch& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const dmcd::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const dmcd::EmptyTable& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const dmcd::IoError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const dmcd::AuthError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const dmcd::Timeout& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const dmcd::RateLimited& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const dmcd::MalformedResponseBody& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const dmcd::MockMissError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const dmcd::Error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
