#ifndef DMCD_GRAPH_HPP
#define DMCD_GRAPH_HPP

#include <algorithm>
#include <cstddef>
#include <deque>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dmcd/errors.hpp"

namespace dmcd {

using NodeId = std::string;
using Edge = std::pair<NodeId, NodeId>;

struct SeparationQuery {
    NodeId x;
    NodeId y;
    std::set<NodeId> z;
};

// Immutable DAG over string-identified variables. Node insertion order is
// preserved so that iteration (and everything downstream of it) is
// deterministic across runs.
class Dag {
public:
    Dag(std::vector<NodeId> nodes, std::vector<Edge> edges)
        : nodes_(std::move(nodes)), edges_(std::move(edges)) {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            auto [it, inserted] = index_.emplace(nodes_[i], i);
            if (!inserted) throw DuplicateNode("duplicate node id: " + nodes_[i]);
        }
        parents_.resize(nodes_.size());
        children_.resize(nodes_.size());
        std::set<Edge> seen;
        std::vector<Edge> unique_edges;
        unique_edges.reserve(edges_.size());
        for (const auto& [src, dst] : edges_) {
            const auto si = index_.find(src);
            const auto di = index_.find(dst);
            if (si == index_.end()) throw UnknownEndpoint("edge source not a node: " + src);
            if (di == index_.end()) throw UnknownEndpoint("edge target not a node: " + dst);
            if (src == dst) throw CycleDetected("self-loop on " + src);
            if (!seen.emplace(src, dst).second) continue;
            unique_edges.emplace_back(src, dst);
            parents_[di->second].push_back(si->second);
            children_[si->second].push_back(di->second);
        }
        edges_ = std::move(unique_edges);
        topo_ = compute_topological_order();
    }

    const std::vector<NodeId>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }

    bool has_node(const NodeId& id) const { return index_.count(id) > 0; }

    bool has_edge(const NodeId& src, const NodeId& dst) const {
        const auto si = index_.find(src);
        const auto di = index_.find(dst);
        if (si == index_.end() || di == index_.end()) return false;
        const auto& kids = children_[si->second];
        return std::find(kids.begin(), kids.end(), di->second) != kids.end();
    }

    bool adjacent(const NodeId& a, const NodeId& b) const {
        return has_edge(a, b) || has_edge(b, a);
    }

    std::vector<NodeId> parents(const NodeId& id) const {
        return resolve(parents_[require(id)]);
    }
    std::vector<NodeId> children(const NodeId& id) const {
        return resolve(children_[require(id)]);
    }

    std::size_t degree(const NodeId& id) const {
        const std::size_t i = require(id);
        return parents_[i].size() + children_[i].size();
    }

    // Sources precede targets; ties broken by node insertion order.
    std::vector<NodeId> topological_order() const { return resolve(topo_); }

    // Standard d-separation via reachability over legal paths (Bayes-ball
    // style). Pure; linear in nodes + edges per query.
    bool d_separated(const SeparationQuery& q) const {
        validate_query(q);
        const std::size_t xi = index_.at(q.x);
        const std::size_t yi = index_.at(q.y);
        std::vector<bool> in_z(nodes_.size(), false);
        for (const auto& id : q.z) in_z[index_.at(id)] = true;

        // Ancestors of Z, needed to open colliders.
        std::vector<bool> anc_z(nodes_.size(), false);
        {
            std::deque<std::size_t> frontier;
            for (const auto& id : q.z) {
                const std::size_t i = index_.at(id);
                if (!anc_z[i]) {
                    anc_z[i] = true;
                    frontier.push_back(i);
                }
            }
            while (!frontier.empty()) {
                const std::size_t v = frontier.front();
                frontier.pop_front();
                for (std::size_t p : parents_[v]) {
                    if (!anc_z[p]) {
                        anc_z[p] = true;
                        frontier.push_back(p);
                    }
                }
            }
        }

        // State: (node, direction of arrival). true = arrived via incoming
        // edge (moving with arrows), false = via outgoing edge (against).
        std::vector<bool> visited_fwd(nodes_.size(), false);
        std::vector<bool> visited_bwd(nodes_.size(), false);
        std::deque<std::pair<std::size_t, bool>> frontier;
        // Start as if we left x along either kind of edge.
        frontier.emplace_back(xi, false);
        visited_bwd[xi] = true;

        while (!frontier.empty()) {
            auto [v, arrived_fwd] = frontier.front();
            frontier.pop_front();
            if (v == yi && v != xi) return false;

            if (!arrived_fwd) {
                // Arrived against an arrow (or at the start): pass through
                // unless v in Z; may go to parents and children.
                if (in_z[v]) continue;
                for (std::size_t p : parents_[v]) {
                    if (!visited_bwd[p]) {
                        visited_bwd[p] = true;
                        frontier.emplace_back(p, false);
                    }
                }
                for (std::size_t c : children_[v]) {
                    if (!visited_fwd[c]) {
                        visited_fwd[c] = true;
                        frontier.emplace_back(c, true);
                    }
                }
            } else {
                // Arrived along an arrow. Chain continues if v not in Z;
                // collider opens only if v is in Z or has a descendant in Z.
                if (!in_z[v]) {
                    for (std::size_t c : children_[v]) {
                        if (!visited_fwd[c]) {
                            visited_fwd[c] = true;
                            frontier.emplace_back(c, true);
                        }
                    }
                }
                if (anc_z[v]) {
                    for (std::size_t p : parents_[v]) {
                        if (!visited_bwd[p]) {
                            visited_bwd[p] = true;
                            frontier.emplace_back(p, false);
                        }
                    }
                }
            }
        }
        return true;
    }

    bool d_separated(const NodeId& x, const NodeId& y, const std::set<NodeId>& z) const {
        return d_separated(SeparationQuery{x, y, z});
    }

    // Separating set for a non-adjacent pair: the parents of whichever
    // endpoint comes later in topological order. Sound by the local Markov
    // property and small, which keeps downstream CI tests well powered.
    std::set<NodeId> separator_for_pair(const NodeId& x, const NodeId& y) const {
        const std::size_t xi = require(x);
        const std::size_t yi = require(y);
        if (adjacent(x, y)) throw AdjacentPair("no separating set exists for adjacent pair " + x + "," + y);
        std::vector<std::size_t> pos(nodes_.size());
        for (std::size_t r = 0; r < topo_.size(); ++r) pos[topo_[r]] = r;
        const std::size_t later = pos[xi] > pos[yi] ? xi : yi;
        std::set<NodeId> sep;
        for (std::size_t p : parents_[later]) {
            if (p != xi && p != yi) sep.insert(nodes_[p]);
        }
        return sep;
    }

private:
    std::size_t require(const NodeId& id) const {
        const auto it = index_.find(id);
        if (it == index_.end()) throw UnknownNode("unknown node id: " + id);
        return it->second;
    }

    void validate_query(const SeparationQuery& q) const {
        if (!has_node(q.x) || !has_node(q.y)) throw InvalidQuery("query endpoint not in graph");
        if (q.x == q.y) throw InvalidQuery("query endpoints coincide");
        for (const auto& id : q.z) {
            if (!has_node(id)) throw InvalidQuery("conditioning node not in graph: " + id);
            if (id == q.x || id == q.y) throw InvalidQuery("conditioning set overlaps endpoints");
        }
    }

    std::vector<NodeId> resolve(const std::vector<std::size_t>& idx) const {
        std::vector<NodeId> out;
        out.reserve(idx.size());
        for (std::size_t i : idx) out.push_back(nodes_[i]);
        return out;
    }

    // Kahn's algorithm with an insertion-order tie break.
    std::vector<std::size_t> compute_topological_order() const {
        std::vector<std::size_t> indeg(nodes_.size(), 0);
        for (std::size_t v = 0; v < nodes_.size(); ++v) indeg[v] = parents_[v].size();
        std::set<std::size_t> ready;
        for (std::size_t v = 0; v < nodes_.size(); ++v) {
            if (indeg[v] == 0) ready.insert(v);
        }
        std::vector<std::size_t> order;
        order.reserve(nodes_.size());
        std::vector<std::size_t> remaining = indeg;
        while (!ready.empty()) {
            const std::size_t v = *ready.begin();
            ready.erase(ready.begin());
            order.push_back(v);
            for (std::size_t c : children_[v]) {
                if (--remaining[c] == 0) ready.insert(c);
            }
        }
        if (order.size() != nodes_.size()) throw CycleDetected();
        return order;
    }

    std::vector<NodeId> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<NodeId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> topo_;
};

inline Dag new_dag(std::vector<NodeId> nodes, std::vector<Edge> edges) {
    return Dag(std::move(nodes), std::move(edges));
}

}  // namespace dmcd

#endif
