#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dmcd/metrics.hpp"
#include "dmcd/rng.hpp"
#include "oracles.hpp"

using namespace dmcd;

TEST_CASE("count_edge_categories: hand enumeration with a reversal") {
    Dag truth({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
    Dag pred({"A", "B", "C"}, {{"A", "B"}, {"C", "B"}});
    const auto c = count_edge_categories(pred, truth);
    CHECK(c.tp == 1);
    CHECK(c.reversed == 1);
    CHECK(c.fp_extra == 0);
    CHECK(c.missing == 0);
    CHECK(c.truth_total == 2);
    CHECK(c.negatives == 1);  // 3 pairs - 2 adjacent
}

TEST_CASE("count_edge_categories: identity and empty prediction") {
    Dag truth({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
    const auto same = count_edge_categories(truth, truth);
    CHECK(same.tp == 2);
    CHECK(same.reversed + same.fp_extra + same.missing == 0);

    Dag empty({"A", "B", "C"}, {});
    const auto none = count_edge_categories(empty, truth);
    CHECK(none.tp == 0);
    CHECK(none.missing == 2);
}

TEST_CASE("count_edge_categories: excluded variables count truth edges as missing") {
    Dag truth({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
    Dag partial({"A", "B"}, {{"A", "B"}});
    const auto c = count_edge_categories(partial, truth);
    CHECK(c.tp == 1);
    CHECK(c.missing == 1);

    Dag outside({"A", "Z"}, {{"A", "Z"}});
    CHECK_THROWS_AS(count_edge_categories(outside, truth), NodeMismatch);
}

TEST_CASE("compute_metrics: hand arithmetic, unbounded FDR, clamping") {
    ConfusionCounts c;
    c.tp = 1;
    c.reversed = 1;
    c.fp_extra = 0;
    c.missing = 0;
    c.truth_total = 2;
    c.negatives = 1;
    const auto r = compute_metrics(c, false);
    CHECK(r.fdr == doctest::Approx(1.0));
    CHECK(r.tpr == doctest::Approx(0.5));
    CHECK(r.precision == doctest::Approx(0.5));
    CHECK(r.shd == 1);

    ConfusionCounts over;
    over.tp = 1;
    over.reversed = 2;
    over.fp_extra = 1;
    over.missing = 0;
    over.truth_total = 3;
    over.negatives = 5;
    const auto unbounded = compute_metrics(over, false);
    CHECK(unbounded.fdr == doctest::Approx(1.5));
    const auto bounded = compute_metrics(over, true);
    CHECK(bounded.fdr == doctest::Approx(1.0));
}

TEST_CASE("compute_metrics: perfect prediction and zero-denominator conventions") {
    ConfusionCounts perfect;
    perfect.tp = 4;
    perfect.truth_total = 4;
    perfect.negatives = 2;
    const auto r = compute_metrics(perfect, false);
    CHECK(r.fdr == 0.0);
    CHECK(r.tpr == 1.0);
    CHECK(r.f1 == doctest::Approx(1.0));
    CHECK(r.shd == 0);

    ConfusionCounts nothing;  // empty prediction and empty truth
    const auto z = compute_metrics(nothing, false);
    CHECK(z.fdr == 0.0);
    CHECK(z.tpr == 0.0);
    CHECK(z.f1 == 0.0);
}

TEST_CASE("shd equals the brute-force edit-distance oracle on all 3-node DAG pairs") {
    const auto ids = oracles::letter_nodes(3);
    std::vector<oracles::SmallGraph> dags;
    oracles::for_each_dag(3, [&](const oracles::SmallGraph& g) { dags.push_back(g); });
    REQUIRE(dags.size() == 25);
    for (const auto& a : dags) {
        Dag pred(ids, oracles::letter_edges(a));
        for (const auto& b : dags) {
            Dag truth(ids, oracles::letter_edges(b));
            CHECK(static_cast<int>(shd(pred, truth)) == oracles::edit_distance(a, b));
        }
    }
}

TEST_CASE("confusion invariants over all 3-node DAG pairs") {
    const auto ids = oracles::letter_nodes(3);
    std::vector<oracles::SmallGraph> dags;
    oracles::for_each_dag(3, [&](const oracles::SmallGraph& g) { dags.push_back(g); });
    for (const auto& a : dags) {
        Dag pred(ids, oracles::letter_edges(a));
        for (const auto& b : dags) {
            Dag truth(ids, oracles::letter_edges(b));
            const auto c = count_edge_categories(pred, truth);
            CHECK(c.tp + c.reversed + c.missing == c.truth_total);
            const auto u = compute_metrics(c, false);
            const auto bd = compute_metrics(c, true);
            CHECK(u.recall == u.tpr);
            CHECK(bd.fdr == doctest::Approx(std::clamp(u.fdr, 0.0, 1.0)));
            CHECK(bd.f1 == doctest::Approx(std::clamp(u.f1, 0.0, 1.0)));
            if (c.tp == 0) CHECK(u.f1 == 0.0);
        }
    }
}

TEST_CASE("aggregate_runs: identical reports, hand std, error cases") {
    MetricsReport r1;
    r1.f1 = 0.2;
    MetricsReport r2;
    r2.f1 = 0.4;
    const auto agg = aggregate_runs({r1, r2});
    CHECK(agg.f1.mean == doctest::Approx(0.3));
    CHECK(agg.f1.std_dev == doctest::Approx(std::sqrt(0.02)).epsilon(1e-6));  // ~0.1414

    const auto same = aggregate_runs(std::vector<MetricsReport>(10, r1));
    CHECK(same.f1.std_dev == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(same.run_count == 10);

    const auto single = aggregate_runs({r1});
    CHECK(single.single_run);
    CHECK(single.f1.std_dev == 0.0);

    CHECK_THROWS_AS(aggregate_runs({}), EmptyList);
    MetricsReport bounded_one;
    bounded_one.bounded = true;
    CHECK_THROWS_AS(aggregate_runs({r1, bounded_one}), MixedBoundedFlags);
}
