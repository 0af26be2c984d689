#ifndef DMCD_INDEPENDENCE_HPP
#define DMCD_INDEPENDENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmcd/dataset.hpp"
#include "dmcd/errors.hpp"
#include "dmcd/gbt.hpp"
#include "dmcd/special.hpp"

namespace dmcd {

enum class TestKind { PartialCorrelation, ChiSquared, ResidualPillai };

inline const char* test_kind_name(TestKind k) {
    switch (k) {
        case TestKind::PartialCorrelation: return "partial_correlation";
        case TestKind::ChiSquared: return "chi_squared";
        case TestKind::ResidualPillai: return "residual_pillai";
    }
    return "?";
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    TestKind test_kind = TestKind::PartialCorrelation;
    std::string x;
    std::string y;
    std::set<std::string> z;
    std::size_t effective_samples = 0;
    // Degenerate inputs (constant columns, all-sparse strata, rank-deficient
    // residuals) yield p = 1 with this flag set instead of aborting the audit.
    bool degenerate = false;
    std::string note;
};

enum class RegressorFamily { GradientBoostedTrees, Linear };

struct RegressorConfig {
    RegressorFamily family = RegressorFamily::GradientBoostedTrees;
    int tree_count = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
};

// Dispatch rule: all-continuous -> partial correlation, all-discrete ->
// chi-squared, anything mixed -> residual Pillai.
inline TestKind select_test(ColumnKind x, ColumnKind y, const std::vector<ColumnKind>& z) {
    bool all_cont = x == ColumnKind::Continuous && y == ColumnKind::Continuous;
    bool all_disc = x == ColumnKind::Discrete && y == ColumnKind::Discrete;
    for (ColumnKind k : z) {
        all_cont = all_cont && k == ColumnKind::Continuous;
        all_disc = all_disc && k == ColumnKind::Discrete;
    }
    if (all_cont) return TestKind::PartialCorrelation;
    if (all_disc) return TestKind::ChiSquared;
    return TestKind::ResidualPillai;
}

namespace detail {

inline void check_pair(const std::string& x, const std::string& y, const std::set<std::string>& z) {
    if (x == y) throw InvalidQuery("test endpoints coincide");
    if (z.count(x) || z.count(y)) throw InvalidQuery("conditioning set overlaps endpoints");
}

// Design matrix with intercept for the given conditioning columns.
inline Eigen::MatrixXd design_with_intercept(const Dataset& ds, const std::set<std::string>& z) {
    const auto n = static_cast<Eigen::Index>(ds.sample_count());
    Eigen::MatrixXd d(n, static_cast<Eigen::Index>(z.size()) + 1);
    d.col(0).setOnes();
    Eigen::Index c = 1;
    for (const auto& id : z) {
        const auto v = ds.numeric(id);
        for (Eigen::Index i = 0; i < n; ++i) d(i, c) = v[static_cast<std::size_t>(i)];
        ++c;
    }
    return d;
}

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Eigen::VectorXd ols_residual(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
    return y - design * beta;
}

inline std::vector<double> levels_of(const std::vector<double>& col) {
    std::set<double> s(col.begin(), col.end());
    return {s.begin(), s.end()};
}

}  // namespace detail

// Fisher-z test of the Pearson correlation between the least-squares
// residuals of x and y on z (intercept included; empty z mean-centers).
inline TestResult partial_correlation_test(const Dataset& ds,
                                           const std::string& x,
                                           const std::string& y,
                                           const std::set<std::string>& z) {
    detail::check_pair(x, y, z);
    const std::size_t n = ds.sample_count();
    if (n <= z.size() + 3)
        throw InsufficientSamples("partial correlation needs N > |z| + 3");

    TestResult res;
    res.test_kind = TestKind::PartialCorrelation;
    res.x = x;
    res.y = y;
    res.z = z;
    res.effective_samples = n;

    const Eigen::MatrixXd design = detail::design_with_intercept(ds, z);
    const Eigen::VectorXd rx = detail::ols_residual(design, detail::to_vector(ds.numeric(x)));
    const Eigen::VectorXd ry = detail::ols_residual(design, detail::to_vector(ds.numeric(y)));

    const double sx = rx.norm();
    const double sy = ry.norm();
    if (sx < 1e-12 || sy < 1e-12) {
        res.degenerate = true;
        res.note = "zero variance after residualization";
        return res;
    }
    double r = rx.dot(ry) / (sx * sy);
    r = std::clamp(r, -0.9999999999, 0.9999999999);
    const double t = 0.5 * std::log((1.0 + r) / (1.0 - r));
    res.statistic = std::sqrt(static_cast<double>(n - z.size() - 3)) * std::fabs(t);
    res.p_value = std::min(1.0, 2.0 * normal_sf(res.statistic));
    return res;
}

// Pearson chi-squared on the x-by-y contingency table, stratified over every
// configuration of z. Strata whose size cannot support an average expected
// count of 5 per cell are pooled out and reported; statistics and degrees of
// freedom are summed over the retained strata.
inline TestResult chi_squared_test(const Dataset& ds,
                                   const std::string& x,
                                   const std::string& y,
                                   const std::set<std::string>& z) {
    detail::check_pair(x, y, z);
    const std::size_t n = ds.sample_count();

    TestResult res;
    res.test_kind = TestKind::ChiSquared;
    res.x = x;
    res.y = y;
    res.z = z;
    res.effective_samples = n;

    const auto xv = ds.numeric(x);
    const auto yv = ds.numeric(y);
    const auto x_levels = detail::levels_of(xv);
    const auto y_levels = detail::levels_of(yv);
    if (x_levels.size() < 2 || y_levels.size() < 2) {
        res.degenerate = true;
        res.note = "constant column";
        return res;
    }
    std::map<double, int> x_code, y_code;
    for (std::size_t i = 0; i < x_levels.size(); ++i) x_code[x_levels[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < y_levels.size(); ++i) y_code[y_levels[i]] = static_cast<int>(i);

    // Assign each row a stratum key from its z configuration.
    std::vector<std::vector<double>> z_cols;
    for (const auto& id : z) z_cols.push_back(ds.numeric(id));
    std::map<std::vector<double>, std::vector<std::size_t>> strata;
    std::vector<double> key(z_cols.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < z_cols.size(); ++c) key[c] = z_cols[c][i];
        strata[key].push_back(i);
    }

    const double min_stratum =
        5.0 * static_cast<double>(x_levels.size()) * static_cast<double>(y_levels.size());
    double stat = 0.0;
    double df = 0.0;
    std::size_t retained = 0;
    std::size_t pooled_out = 0;
    for (const auto& [cfg, rows] : strata) {
        if (static_cast<double>(rows.size()) < min_stratum) {
            ++pooled_out;
            continue;
        }
        Eigen::MatrixXd table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x_levels.size()),
                                                      static_cast<Eigen::Index>(y_levels.size()));
        for (std::size_t i : rows) table(x_code[xv[i]], y_code[yv[i]]) += 1.0;
        const Eigen::VectorXd row_sum = table.rowwise().sum();
        const Eigen::VectorXd col_sum = table.colwise().sum();
        const double total = row_sum.sum();
        int nonzero_rows = 0, nonzero_cols = 0;
        for (Eigen::Index i = 0; i < row_sum.size(); ++i) nonzero_rows += row_sum[i] > 0.0;
        for (Eigen::Index j = 0; j < col_sum.size(); ++j) nonzero_cols += col_sum[j] > 0.0;
        if (nonzero_rows < 2 || nonzero_cols < 2) {
            ++pooled_out;
            continue;
        }
        for (Eigen::Index i = 0; i < table.rows(); ++i) {
            for (Eigen::Index j = 0; j < table.cols(); ++j) {
                const double expect = row_sum[i] * col_sum[j] / total;
                if (expect > 0.0) {
                    const double d = table(i, j) - expect;
                    stat += d * d / expect;
                }
            }
        }
        df += static_cast<double>((nonzero_rows - 1) * (nonzero_cols - 1));
        ++retained;
    }

    if (retained == 0) {
        res.degenerate = true;
        res.note = "all strata sparse";
        return res;
    }
    if (pooled_out > 0)
        res.note = std::to_string(pooled_out) + "/" + std::to_string(strata.size()) + " strata pooled out";
    res.statistic = stat;
    res.p_value = chi2_sf(stat, df);
    return res;
}

namespace detail {

// One-hot indicator block for a variable: continuous -> single centered-later
// column, discrete -> L-1 indicator columns (last level dropped).
inline Eigen::MatrixXd variable_block(const Dataset& ds, const std::string& id) {
    const auto v = ds.numeric(id);
    const auto n = static_cast<Eigen::Index>(v.size());
    if (ds.kind(id) == ColumnKind::Continuous) {
        Eigen::MatrixXd b(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) b(i, 0) = v[static_cast<std::size_t>(i)];
        return b;
    }
    const auto levels = levels_of(v);
    const auto cols = static_cast<Eigen::Index>(levels.size() > 1 ? levels.size() - 1 : 1);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, cols);
    std::map<double, Eigen::Index> code;
    for (std::size_t i = 0; i < levels.size(); ++i) code[levels[i]] = static_cast<Eigen::Index>(i);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index c = code[v[static_cast<std::size_t>(i)]];
        if (c < cols) b(i, c) = 1.0;
    }
    return b;
}

// Numeric design for the conditioning set (one-hot for discrete members), no
// intercept column; callers center or include it themselves.
inline Eigen::MatrixXd conditioning_design(const Dataset& ds, const std::set<std::string>& z) {
    const auto n = static_cast<Eigen::Index>(ds.sample_count());
    std::vector<Eigen::MatrixXd> parts;
    Eigen::Index total = 0;
    for (const auto& id : z) {
        parts.push_back(variable_block(ds, id));
        total += parts.back().cols();
    }
    Eigen::MatrixXd d(n, total);
    Eigen::Index c = 0;
    for (const auto& p : parts) {
        d.middleCols(c, p.cols()) = p;
        c += p.cols();
    }
    return d;
}

// Residualize every column of `block` on the conditioning design.
inline Eigen::MatrixXd residualize_block(const Eigen::MatrixXd& block,
                                         const Eigen::MatrixXd& z_design,
                                         const RegressorConfig& cfg) {
    const auto n = block.rows();
    Eigen::MatrixXd res(n, block.cols());
    if (z_design.cols() == 0) {
        for (Eigen::Index c = 0; c < block.cols(); ++c)
            res.col(c) = block.col(c).array() - block.col(c).mean();
        return res;
    }
    if (cfg.family == RegressorFamily::Linear) {
        Eigen::MatrixXd d(n, z_design.cols() + 1);
        d.col(0).setOnes();
        d.rightCols(z_design.cols()) = z_design;
        const auto qr = d.colPivHouseholderQr();
        for (Eigen::Index c = 0; c < block.cols(); ++c) {
            const Eigen::VectorXd beta = qr.solve(block.col(c));
            res.col(c) = block.col(c) - d * beta;
        }
        return res;
    }
    GbtConfig gcfg;
    gcfg.tree_count = cfg.tree_count;
    gcfg.max_depth = cfg.max_depth;
    gcfg.learning_rate = cfg.learning_rate;
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
        GbtRegressor reg(gcfg);
        res.col(c) = block.col(c) - reg.fit_predict(z_design, block.col(c));
    }
    return res;
}

// Whitening transform S^{-1/2} with small-eigenvalue truncation; returns the
// effective rank through `rank`.
inline Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& s, Eigen::Index& rank) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    const auto& vals = eig.eigenvalues();
    const double tol = std::max(1e-12, vals.maxCoeff() * 1e-10);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(s.rows(), s.cols());
    rank = 0;
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals[i] > tol) {
            w += eig.eigenvectors().col(i) * eig.eigenvectors().col(i).transpose() /
                 std::sqrt(vals[i]);
            ++rank;
        }
    }
    return w;
}

}  // namespace detail

// Mixed-type CI test: residualize the one-hot blocks of x and y on z, then
// test association between the residual blocks with Pillai's trace over
// their canonical correlations, using the standard MANOVA F approximation.
inline TestResult residual_pillai_test(const Dataset& ds,
                                       const std::string& x,
                                       const std::string& y,
                                       const std::set<std::string>& z,
                                       const RegressorConfig& cfg = {}) {
    detail::check_pair(x, y, z);
    const std::size_t n = ds.sample_count();
    if (n < 50) throw InsufficientSamples("residual Pillai test needs N >= 50");

    TestResult res;
    res.test_kind = TestKind::ResidualPillai;
    res.x = x;
    res.y = y;
    res.z = z;
    res.effective_samples = n;

    const Eigen::MatrixXd z_design = detail::conditioning_design(ds, z);
    Eigen::MatrixXd rx = detail::residualize_block(detail::variable_block(ds, x), z_design, cfg);
    Eigen::MatrixXd ry = detail::residualize_block(detail::variable_block(ds, y), z_design, cfg);
    for (Eigen::Index c = 0; c < rx.cols(); ++c) rx.col(c).array() -= rx.col(c).mean();
    for (Eigen::Index c = 0; c < ry.cols(); ++c) ry.col(c).array() -= ry.col(c).mean();

    const Eigen::MatrixXd sxx = rx.transpose() * rx;
    const Eigen::MatrixXd syy = ry.transpose() * ry;
    const Eigen::MatrixXd sxy = rx.transpose() * ry;

    Eigen::Index rank_x = 0, rank_y = 0;
    const Eigen::MatrixXd wx = detail::inverse_sqrt(sxx, rank_x);
    const Eigen::MatrixXd wy = detail::inverse_sqrt(syy, rank_y);
    if (rank_x == 0 || rank_y == 0) {
        res.degenerate = true;
        res.note = "zero variance after residualization";
        return res;
    }
    if (rank_x < rx.cols() || rank_y < ry.cols())
        res.note = "rank-deficient residual block reduced";

    const Eigen::MatrixXd m = wx * sxy * wy;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    double pillai = 0.0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        const double r = std::min(1.0, svd.singularValues()[i]);
        pillai += r * r;
    }
    res.statistic = pillai;

    // Canonical role assignment (smaller block is the hypothesis side) keeps
    // the p-value symmetric in x and y.
    const double p = static_cast<double>(std::min(rank_x, rank_y));
    const double q = static_cast<double>(std::max(rank_x, rank_y));
    const double dfz = static_cast<double>(z_design.cols());
    const double df_error = static_cast<double>(n) - p - dfz - 1.0;
    const double s = std::min(p, q);
    const double mm = 0.5 * (std::fabs(p - q) - 1.0);
    const double nn = 0.5 * (df_error - q - 1.0);
    if (nn <= 0.0) throw InsufficientSamples("residual Pillai test: too few samples for df");
    const double denom = s - pillai;
    if (denom <= 1e-12) {
        res.p_value = 0.0;
        return res;
    }
    const double f = ((2.0 * nn + s + 1.0) / (2.0 * mm + s + 1.0)) * (pillai / denom);
    const double df1 = s * (2.0 * mm + s + 1.0);
    const double df2 = s * (2.0 * nn + s + 1.0);
    res.p_value = f_sf(f, df1, df2);
    return res;
}

// Run whichever of the three tests the column kinds call for.
inline TestResult run_ci_test(const Dataset& ds,
                              const std::string& x,
                              const std::string& y,
                              const std::set<std::string>& z,
                              const RegressorConfig& cfg = {}) {
    std::vector<ColumnKind> zk;
    for (const auto& id : z) zk.push_back(ds.kind(id));
    switch (select_test(ds.kind(x), ds.kind(y), zk)) {
        case TestKind::PartialCorrelation: return partial_correlation_test(ds, x, y, z);
        case TestKind::ChiSquared: return chi_squared_test(ds, x, y, z);
        case TestKind::ResidualPillai: return residual_pillai_test(ds, x, y, z, cfg);
    }
    throw Error("unreachable");
}

}  // namespace dmcd

#endif
