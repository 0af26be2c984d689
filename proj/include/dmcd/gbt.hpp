#ifndef DMCD_GBT_HPP
#define DMCD_GBT_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

// Small gradient-boosted regression tree ensemble (squared loss, exact
// greedy splits). Used to residualize variables on their conditioning set
// before the Pillai association test.

namespace dmcd {

struct GbtConfig {
    int tree_count = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_leaf = 5;
};

namespace detail {

struct TreeNode {
    int feature = -1;          // -1 for leaves
    double threshold = 0.0;    // go left if x <= threshold
    double value = 0.0;        // leaf prediction
    int left = -1;
    int right = -1;
};

class RegressionTree {
public:
    void fit(const Eigen::MatrixXd& x,
             const std::vector<std::vector<int>>& sorted_by_feature,
             const Eigen::VectorXd& residual,
             const GbtConfig& cfg) {
        nodes_.clear();
        std::vector<int> all(static_cast<std::size_t>(x.rows()));
        std::iota(all.begin(), all.end(), 0);
        build(x, sorted_by_feature, residual, all, 0, cfg);
    }

    double predict(const Eigen::RowVectorXd& row) const {
        int i = 0;
        while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
            const auto& n = nodes_[static_cast<std::size_t>(i)];
            i = row[n.feature] <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(i)].value;
    }

private:
    int build(const Eigen::MatrixXd& x,
              const std::vector<std::vector<int>>& sorted_by_feature,
              const Eigen::VectorXd& residual,
              const std::vector<int>& samples,
              int depth,
              const GbtConfig& cfg) {
        const int node_id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        double sum = 0.0;
        for (int i : samples) sum += residual[i];
        const double mean = sum / static_cast<double>(samples.size());
        nodes_[static_cast<std::size_t>(node_id)].value = mean;

        if (depth >= cfg.max_depth || static_cast<int>(samples.size()) < 2 * cfg.min_leaf)
            return node_id;

        // Best split over all features; membership mask keeps the presorted
        // order usable at every depth.
        std::vector<char> in_node(static_cast<std::size_t>(x.rows()), 0);
        for (int i : samples) in_node[static_cast<std::size_t>(i)] = 1;

        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;
        double total_sq = 0.0;
        for (int i : samples) {
            const double d = residual[i] - mean;
            total_sq += d * d;
        }

        for (int f = 0; f < x.cols(); ++f) {
            double left_sum = 0.0;
            int left_n = 0;
            const int n = static_cast<int>(samples.size());
            const auto& order = sorted_by_feature[static_cast<std::size_t>(f)];
            double prev_value = std::numeric_limits<double>::quiet_NaN();
            for (int idx : order) {
                if (!in_node[static_cast<std::size_t>(idx)]) continue;
                const double v = x(idx, f);
                if (left_n >= cfg.min_leaf && n - left_n >= cfg.min_leaf && v != prev_value) {
                    const double right_sum = sum - left_sum;
                    const int right_n = n - left_n;
                    const double gain = left_sum * left_sum / left_n +
                                        right_sum * right_sum / right_n - sum * sum / n;
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_feature = f;
                        best_threshold = 0.5 * (prev_value + v);
                    }
                }
                left_sum += residual[idx];
                ++left_n;
                prev_value = v;
            }
        }

        if (best_feature < 0) return node_id;

        std::vector<int> left, right;
        left.reserve(samples.size());
        right.reserve(samples.size());
        for (int i : samples) {
            (x(i, best_feature) <= best_threshold ? left : right).push_back(i);
        }
        if (left.empty() || right.empty()) return node_id;

        nodes_[static_cast<std::size_t>(node_id)].feature = best_feature;
        nodes_[static_cast<std::size_t>(node_id)].threshold = best_threshold;
        const int l = build(x, sorted_by_feature, residual, left, depth + 1, cfg);
        const int r = build(x, sorted_by_feature, residual, right, depth + 1, cfg);
        nodes_[static_cast<std::size_t>(node_id)].left = l;
        nodes_[static_cast<std::size_t>(node_id)].right = r;
        return node_id;
    }

    std::vector<TreeNode> nodes_;
};

}  // namespace detail

class GbtRegressor {
public:
    explicit GbtRegressor(GbtConfig cfg = {}) : cfg_(cfg) {}

    // Fits on x (n x d) and returns in-sample predictions.
    Eigen::VectorXd fit_predict(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
        const auto n = x.rows();
        base_ = y.mean();
        Eigen::VectorXd pred = Eigen::VectorXd::Constant(n, base_);
        if (x.cols() == 0) return pred;

        std::vector<std::vector<int>> sorted_by_feature(static_cast<std::size_t>(x.cols()));
        for (int f = 0; f < x.cols(); ++f) {
            auto& order = sorted_by_feature[static_cast<std::size_t>(f)];
            order.resize(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return x(a, f) < x(b, f); });
        }

        trees_.clear();
        trees_.reserve(static_cast<std::size_t>(cfg_.tree_count));
        Eigen::VectorXd residual = y - pred;
        for (int t = 0; t < cfg_.tree_count; ++t) {
            detail::RegressionTree tree;
            tree.fit(x, sorted_by_feature, residual, cfg_);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double p = cfg_.learning_rate * tree.predict(x.row(i));
                pred[i] += p;
                residual[i] -= p;
            }
            trees_.push_back(std::move(tree));
        }
        return pred;
    }

private:
    GbtConfig cfg_;
    double base_ = 0.0;
    std::vector<detail::RegressionTree> trees_;
};

}  // namespace dmcd

#endif
