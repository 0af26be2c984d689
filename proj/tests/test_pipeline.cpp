#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dmcd/graph_io.hpp"
#include "dmcd/pipeline.hpp"
#include "dmcd/scm.hpp"

using namespace dmcd;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Chain fixture on disk: data.csv, metadata.json, truth.json for A -> B -> C.
struct ChainFixture {
    fs::path dir;
    RunConfig cfg;

    explicit ChainFixture(const std::string& name) : dir(fresh_dir(name)) {
        Dag chain({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
        auto [ds, truth] = synthesize_scm(linear_gaussian_spec(chain, 1.0, 1.0, 31), 5000);
        write_table(ds, dir / "data.csv");
        write_metadata(ds.metadata(), dir / "metadata.json");
        write_graph(truth, GraphFormat::Json, dir / "truth.json");
        cfg.data_path = dir / "data.csv";
        cfg.metadata_path = dir / "metadata.json";
        cfg.truth_path = dir / "truth.json";
        cfg.out_dir = dir / "out";
    }
};

const char* kChainDraft = R"({"nodes": ["A", "B", "C"], "edges": [["A", "B"], ["B", "C"]]})";

// Collect relative paths and contents of every regular file under a root.
std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file())
            out[fs::relative(entry.path(), root).string()] = read_text(entry.path());
    }
    return out;
}

}  // namespace

TEST_CASE("graph json roundtrip and dot output") {
    Dag dag({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
    const auto dir = fresh_dir("dmcd_graph_io");
    write_graph(dag, GraphFormat::Json, dir / "g.json");
    const Dag back = read_graph(dir / "g.json");
    CHECK(back.nodes() == dag.nodes());
    CHECK(back.edges() == dag.edges());

    const std::string dot = graph_to_dot(dag);
    CHECK(dot.find("digraph {") != std::string::npos);
    CHECK(dot.find("\"A\" -> \"B\";") != std::string::npos);
    CHECK(dot.find("\"B\" -> \"C\";") != std::string::npos);
}

TEST_CASE("read_graph rejects cycles and malformed documents") {
    const auto dir = fresh_dir("dmcd_graph_bad");
    write_text(dir / "cycle.json",
               R"({"nodes": ["A", "B"], "edges": [["A", "B"], ["B", "A"]]})");
    CHECK_THROWS_AS(read_graph(dir / "cycle.json"), CycleDetected);

    write_text(dir / "broken.json", "{ nope");
    CHECK_THROWS_AS(read_graph(dir / "broken.json"), SchemaError);
    write_text(dir / "fields.json", R"({"nodes": ["A"]})");
    CHECK_THROWS_AS(read_graph(dir / "fields.json"), SchemaError);
    CHECK_THROWS_AS(read_graph(dir / "missing.json"), IoError);
}

TEST_CASE("metadata roundtrip preserves declared kinds") {
    const auto dir = fresh_dir("dmcd_meta_io");
    std::vector<VariableMeta> meta = {{"a", "Alpha", "desc", "kg", ColumnKind::Continuous},
                                      {"b", "Beta", "", "", std::nullopt}};
    write_metadata(meta, dir / "meta.json");
    const auto back = read_metadata(dir / "meta.json");
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "a");
    CHECK(back[0].description == "desc");
    CHECK(back[0].declared_kind == ColumnKind::Continuous);
    CHECK_FALSE(back[1].declared_kind.has_value());

    write_text(dir / "bad_kind.json", R"([{"id": "a", "kind": "fuzzy"}])");
    CHECK_THROWS_AS(read_metadata(dir / "bad_kind.json"), SchemaError);
    write_text(dir / "not_array.json", R"({"id": "a"})");
    CHECK_THROWS_AS(read_metadata(dir / "not_array.json"), SchemaError);
}

TEST_CASE("read_config_file: comments, quoting, and malformed lines") {
    const auto dir = fresh_dir("dmcd_cfg");
    write_text(dir / "run.cfg",
               "# experiment settings\n"
               "alpha = 0.01\n"
               "domain_hint = \"process engineering\"  # quoted value\n"
               "\n"
               "runs=3\n");
    const auto cfg = read_config_file(dir / "run.cfg");
    CHECK(cfg.at("alpha") == "0.01");
    CHECK(cfg.at("domain_hint") == "process engineering");
    CHECK(cfg.at("runs") == "3");
    CHECK(cfg.size() == 3);

    write_text(dir / "bad.cfg", "just words\n");
    CHECK_THROWS_AS(read_config_file(dir / "bad.cfg"), ConfigError);
    CHECK_THROWS_AS(read_config_file(dir / "absent.cfg"), IoError);
}

TEST_CASE("end-to-end mock run: faithful draft scores perfectly against truth") {
    ChainFixture fx("dmcd_e2e");
    SequenceProvider provider({kChainDraft});
    const auto runs = run_pipeline(fx.cfg, provider);
    REQUIRE(runs.size() == 1);
    const auto& r = runs[0];
    CHECK(r.audit.pair_count() == 3);
    CHECK(r.audit.discrepancy_count() == 0);
    CHECK(r.final_graph.edges() == std::vector<Edge>{{"A", "B"}, {"B", "C"}});
    REQUIRE(r.metrics.has_value());
    CHECK(r.metrics->f1 == doctest::Approx(1.0));
    CHECK(r.metrics->shd == 0);

    const auto run_dir = fx.cfg.out_dir / "run_000";
    for (const char* f : {"draft_graph.json", "draft_notes.json", "audit_report.json",
                          "final_graph.json", "final_graph.dot", "metrics.json"}) {
        CHECK(fs::exists(run_dir / f));
    }
    CHECK(fs::exists(run_dir / "provider" / "prompt_000_user.txt"));
    CHECK(fs::exists(run_dir / "provider" / "response_000.txt"));
    CHECK(read_text(run_dir / "provider" / "response_000.txt") == kChainDraft);
    // Clean audit: no revision exchange, no warnings file, no summary (1 run).
    CHECK_FALSE(fs::exists(run_dir / "provider" / "prompt_001_user.txt"));
    CHECK_FALSE(fs::exists(run_dir / "warnings.json"));
    CHECK_FALSE(fs::exists(fx.cfg.out_dir / "summary.txt"));

    const Dag final_on_disk = read_graph(run_dir / "final_graph.json");
    CHECK(final_on_disk.edges() == r.final_graph.edges());
}

TEST_CASE("two identical mock runs produce byte-identical artifact trees") {
    ChainFixture fx("dmcd_determinism");
    fx.cfg.out_dir = fx.dir / "out_a";
    SequenceProvider first({kChainDraft});
    run_pipeline(fx.cfg, first);

    fx.cfg.out_dir = fx.dir / "out_b";
    SequenceProvider second({kChainDraft});
    run_pipeline(fx.cfg, second);

    const auto a = snapshot_tree(fx.dir / "out_a");
    const auto b = snapshot_tree(fx.dir / "out_b");
    CHECK(a.size() > 0);
    CHECK(a == b);
}

TEST_CASE("multiple runs aggregate into a summary table") {
    ChainFixture fx("dmcd_multi");
    fx.cfg.runs = 2;
    SequenceProvider provider({kChainDraft, kChainDraft});
    const auto runs = run_pipeline(fx.cfg, provider);
    CHECK(runs.size() == 2);
    CHECK(fs::exists(fx.cfg.out_dir / "run_000"));
    CHECK(fs::exists(fx.cfg.out_dir / "run_001"));
    const std::string summary = read_text(fx.cfg.out_dir / "summary.txt");
    CHECK(summary.find("over 2 runs") != std::string::npos);
    CHECK(summary.find("+/-") != std::string::npos);
    CHECK(summary.find("F1") != std::string::npos);
}

TEST_CASE("full neutralization keeps original names out of prompts and artifacts") {
    const auto dir = fresh_dir("dmcd_neutral");
    Dag chain({"temp", "rad", "gpp"}, {{"temp", "rad"}, {"rad", "gpp"}});
    auto [ds, truth] = synthesize_scm(linear_gaussian_spec(chain, 1.0, 1.0, 31), 5000);
    write_table(ds, dir / "data.csv");
    std::vector<VariableMeta> meta = {
        {"temp", "Temperature", "ambient air temperature", "C", std::nullopt},
        {"rad", "Radiation", "shortwave radiation", "W/m2", std::nullopt},
        {"gpp", "GPP", "gross primary production", "", std::nullopt}};
    write_metadata(meta, dir / "metadata.json");
    write_graph(truth, GraphFormat::Json, dir / "truth.json");

    RunConfig cfg;
    cfg.data_path = dir / "data.csv";
    cfg.metadata_path = dir / "metadata.json";
    cfg.truth_path = dir / "truth.json";
    cfg.out_dir = dir / "out";
    cfg.neutralize = NeutralizeMode::FullNeutralize;

    SequenceProvider provider(
        {R"({"nodes": ["X1", "X2", "X3"], "edges": [["X1", "X2"], ["X2", "X3"]]})"});
    const auto runs = run_pipeline(cfg, provider);
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].final_graph.has_edge("X1", "X2"));
    REQUIRE(runs[0].metrics.has_value());
    CHECK(runs[0].metrics->f1 == doctest::Approx(1.0));

    const std::string prompt = read_text(cfg.out_dir / "run_000" / "provider" / "prompt_000_user.txt");
    for (const char* leak : {"temp", "rad", "gpp", "Temperature", "Radiation", "primary"}) {
        CHECK(prompt.find(leak) == std::string::npos);
    }
    CHECK(prompt.find("id: X1") != std::string::npos);

    CHECK(fs::exists(cfg.out_dir / "id_mapping.json"));
    nlohmann::json mapping;
    std::ifstream(cfg.out_dir / "id_mapping.json") >> mapping;
    CHECK(mapping.at("temp") == "X1");
    CHECK(mapping.at("gpp") == "X3");
}

TEST_CASE("refinement round-trips through the recorded provider exchange") {
    // Draft adds a spurious A -> C edge on chain data; the audit flags it and
    // the scripted revision removes it.
    ChainFixture fx("dmcd_refine");
    fx.cfg.force_bh = true;  // small batch: plain BH keeps the q-values honest
    SequenceProvider provider(
        {R"({"nodes": ["A", "B", "C"], "edges": [["A", "B"], ["B", "C"], ["A", "C"]]})",
         kChainDraft});
    const auto runs = run_pipeline(fx.cfg, provider);
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].draft.has_edge("A", "C"));
    CHECK(runs[0].audit.discrepancy_count() >= 1);
    CHECK_FALSE(runs[0].final_graph.has_edge("A", "C"));
    CHECK(runs[0].metrics->shd == 0);
    CHECK(fs::exists(fx.cfg.out_dir / "run_000" / "provider" / "response_001.txt"));
}

TEST_CASE("pipeline configuration errors") {
    ChainFixture fx("dmcd_cfg_err");
    SequenceProvider provider({kChainDraft});
    RunConfig bad = fx.cfg;
    bad.runs = 0;
    CHECK_THROWS_AS(run_pipeline(bad, provider), ConfigError);
    bad = fx.cfg;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(run_pipeline(bad, provider), ConfigError);
    bad = fx.cfg;
    bad.data_path = fx.dir / "nope.csv";
    CHECK_THROWS_AS(run_pipeline(bad, provider), IoError);
}

TEST_CASE("cli: end-to-end run via mock recordings and exit codes") {
    ChainFixture fx("dmcd_cli");
    // Record the draft response under the prompt digest the pipeline will use.
    const auto meta = read_metadata(fx.dir / "metadata.json");
    const Prompt draft_prompt = build_draft_prompt(meta);
    MockProvider recorder(fx.dir / "mock");
    recorder.record_to_disk(draft_prompt, kChainDraft);

    const std::string cli = DMCD_CLI_PATH;
    const auto run = [&](const std::string& args) {
        const int status = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    };

    const std::string common = "--data " + (fx.dir / "data.csv").string() + " --metadata " +
                               (fx.dir / "metadata.json").string() + " --truth " +
                               (fx.dir / "truth.json").string() + " --provider mock --mock-dir " +
                               (fx.dir / "mock").string() + " --out " +
                               (fx.dir / "cli_out").string();
    CHECK(run("run " + common) == 0);
    CHECK(fs::exists(fx.dir / "cli_out" / "run_000" / "metrics.json"));

    CHECK(run("run " + common + " --alpha 2.0") == 2);                       // config error
    CHECK(run("run --data nope.csv --metadata nope.json --provider mock") == 3);  // data error
    // Mock miss (empty recordings dir) is a provider failure.
    fs::create_directories(fx.dir / "empty_mock");
    CHECK(run("run --data " + (fx.dir / "data.csv").string() + " --metadata " +
              (fx.dir / "metadata.json").string() + " --provider mock --mock-dir " +
              (fx.dir / "empty_mock").string() + " --out " + (fx.dir / "cli_out2").string()) == 4);

    // eval subcommand on two graph files.
    CHECK(run("eval --pred " + (fx.dir / "truth.json").string() + " --truth " +
              (fx.dir / "truth.json").string()) == 0);
    // gen subcommand produces a loadable fixture.
    CHECK(run("gen --shape chain --nodes 4 --samples 100 --seed 7 --out " +
              (fx.dir / "gen_out").string()) == 0);
    CHECK(fs::exists(fx.dir / "gen_out" / "data.csv"));
    CHECK(fs::exists(fx.dir / "gen_out" / "metadata.json"));
    const Dag gen_truth = read_graph(fx.dir / "gen_out" / "truth.json");
    CHECK(gen_truth.nodes().size() == 4);
}
