#ifndef DMCD_SCM_HPP
#define DMCD_SCM_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dmcd/dataset.hpp"
#include "dmcd/errors.hpp"
#include "dmcd/graph.hpp"
#include "dmcd/rng.hpp"

// Synthetic structural causal model generator. Continuous nodes are linear
// in their parents with Gaussian noise; discrete nodes are sampled from a
// conditional probability table indexed by the joint parent configuration.
// Used for test fixtures and the `gen` CLI subcommand.

namespace dmcd {

struct Cpt {
    // levels per parent, in the node's parent order; empty for root nodes.
    std::vector<int> parent_levels;
    int levels = 2;
    // rows: one per joint parent configuration (row-major over parent_levels,
    // first parent slowest); each row has `levels` probabilities summing to 1.
    std::vector<std::vector<double>> rows;
};

struct NodeMechanism {
    ColumnKind kind = ColumnKind::Continuous;
    std::map<std::string, double> coefficients;  // per parent, continuous nodes only
    double noise_scale = 1.0;                    // continuous nodes only
    Cpt cpt;                                     // discrete nodes only
};

struct ScmSpec {
    Dag dag;
    std::map<std::string, NodeMechanism> mechanisms;
    std::uint64_t seed = 0;
};

namespace detail {

inline void validate_scm(const ScmSpec& spec) {
    for (const auto& node : spec.dag.nodes()) {
        const auto it = spec.mechanisms.find(node);
        if (it == spec.mechanisms.end()) throw InvalidSpec("no mechanism for node " + node);
        const NodeMechanism& m = it->second;
        const auto parents = spec.dag.parents(node);
        if (m.kind == ColumnKind::Continuous) {
            if (m.noise_scale <= 0.0) throw InvalidSpec("noise scale must be positive for " + node);
            for (const auto& p : parents) {
                const auto c = m.coefficients.find(p);
                if (c == m.coefficients.end()) throw InvalidSpec("missing coefficient for " + p + " -> " + node);
                if (!std::isfinite(c->second)) throw InvalidSpec("non-finite coefficient for " + node);
            }
        } else {
            if (m.cpt.levels < 2) throw InvalidSpec("discrete node needs >= 2 levels: " + node);
            std::size_t expected_rows = 1;
            for (int l : m.cpt.parent_levels) expected_rows *= static_cast<std::size_t>(l);
            if (m.cpt.parent_levels.size() != parents.size())
                throw InvalidSpec("cpt parent arity mismatch for " + node);
            if (m.cpt.rows.size() != expected_rows) throw InvalidSpec("cpt row count mismatch for " + node);
            for (const auto& row : m.cpt.rows) {
                if (row.size() != static_cast<std::size_t>(m.cpt.levels))
                    throw InvalidSpec("cpt row width mismatch for " + node);
                double s = 0.0;
                for (double p : row) s += p;
                if (std::fabs(s - 1.0) > 1e-9) throw InvalidSpec("cpt row does not sum to 1 for " + node);
            }
        }
    }
}

}  // namespace detail

inline std::pair<Dataset, Dag> synthesize_scm(const ScmSpec& spec, std::size_t n_samples) {
    if (n_samples < 1) throw InvalidSpec("n_samples must be >= 1");
    detail::validate_scm(spec);

    std::map<std::string, std::vector<double>> values;
    Rng root(spec.seed);
    std::size_t node_index = 0;
    for (const auto& node : spec.dag.topological_order()) {
        Rng rng = root.split(node_index++);
        const NodeMechanism& m = spec.mechanisms.at(node);
        const auto parents = spec.dag.parents(node);
        std::vector<double>& col = values[node];
        col.resize(n_samples);
        if (m.kind == ColumnKind::Continuous) {
            for (std::size_t i = 0; i < n_samples; ++i) {
                double v = m.noise_scale * rng.normal();
                for (const auto& p : parents) v += m.coefficients.at(p) * values.at(p)[i];
                col[i] = v;
            }
        } else {
            for (std::size_t i = 0; i < n_samples; ++i) {
                std::size_t row = 0;
                for (std::size_t pi = 0; pi < parents.size(); ++pi) {
                    const int lv = static_cast<int>(values.at(parents[pi])[i]);
                    row = row * static_cast<std::size_t>(m.cpt.parent_levels[pi]) +
                          static_cast<std::size_t>(lv);
                }
                const auto& probs = m.cpt.rows[row];
                const double u = rng.uniform();
                double acc = 0.0;
                int chosen = m.cpt.levels - 1;
                for (int l = 0; l < m.cpt.levels; ++l) {
                    acc += probs[static_cast<std::size_t>(l)];
                    if (u < acc) {
                        chosen = l;
                        break;
                    }
                }
                col[i] = static_cast<double>(chosen);
            }
        }
    }

    std::vector<VariableMeta> metadata;
    std::map<std::string, Column> columns;
    for (const auto& node : spec.dag.nodes()) {
        const NodeMechanism& m = spec.mechanisms.at(node);
        metadata.push_back({node, node, "", "", m.kind});
        Column c;
        c.numeric = std::move(values.at(node));
        columns.emplace(node, std::move(c));
    }
    return {Dataset(std::move(metadata), std::move(columns)), spec.dag};
}

// Convenience builder: all-continuous linear-Gaussian SCM with unit
// coefficients unless overridden.
inline ScmSpec linear_gaussian_spec(const Dag& dag,
                                    double coefficient,
                                    double noise_scale,
                                    std::uint64_t seed) {
    ScmSpec spec{dag, {}, seed};
    for (const auto& node : dag.nodes()) {
        NodeMechanism m;
        m.kind = ColumnKind::Continuous;
        m.noise_scale = noise_scale;
        for (const auto& p : dag.parents(node)) m.coefficients[p] = coefficient;
        spec.mechanisms[node] = std::move(m);
    }
    return spec;
}

}  // namespace dmcd

#endif
