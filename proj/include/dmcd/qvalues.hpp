#ifndef DMCD_QVALUES_HPP
#define DMCD_QVALUES_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "dmcd/errors.hpp"

// Storey-style q-value adjustment. pi0 is estimated at a fixed lambda (no
// spline smoothing) and floored at 1/m; forcing pi0 = 1 recovers plain
// Benjamini-Hochberg adjusted p-values.

namespace dmcd {

struct QValueBatch {
    std::vector<double> p_values;
    double pi0 = 1.0;
    double lambda = 0.5;
    std::vector<double> q_values;
};

inline double estimate_pi0(const std::vector<double>& p_values, double lambda = 0.5) {
    if (p_values.empty()) throw EmptyBatch();
    const auto m = static_cast<double>(p_values.size());
    double above = 0.0;
    for (double p : p_values) above += p > lambda;
    const double raw = above / (m * (1.0 - lambda));
    return std::clamp(raw, 1.0 / m, 1.0);
}

inline std::vector<double> q_values(const std::vector<double>& p_values, double pi0) {
    if (p_values.empty()) throw EmptyBatch();
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    std::vector<double> q(m);
    double running = pi0 * p_values[order[m - 1]];
    q[order[m - 1]] = std::min(1.0, running);
    for (std::size_t i = m - 1; i-- > 0;) {
        const double step =
            pi0 * static_cast<double>(m) * p_values[order[i]] / static_cast<double>(i + 1);
        running = std::min(running, step);
        q[order[i]] = std::min(1.0, running);
    }
    // Ties share the smaller q (stable sort + running minimum already give
    // equal p-values equal q, but enforce it explicitly).
    for (std::size_t i = 1; i < m; ++i) {
        if (p_values[order[i]] == p_values[order[i - 1]])
            q[order[i]] = q[order[i - 1]] = std::min(q[order[i]], q[order[i - 1]]);
    }
    return q;
}

inline QValueBatch adjust_batch(const std::vector<double>& p_values,
                                double lambda = 0.5,
                                bool force_bh = false) {
    QValueBatch batch;
    batch.p_values = p_values;
    batch.lambda = lambda;
    batch.pi0 = force_bh ? 1.0 : estimate_pi0(p_values, lambda);
    batch.q_values = q_values(p_values, batch.pi0);
    return batch;
}

}  // namespace dmcd

#endif
