#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "comove/distributions.hpp"
#include "comove/error.hpp"

namespace comove {

/// Named regressors, one column each. Built column by column:
///
///     auto X = DesignMatrix::with_intercept(n).add("R_m", rm).add("R_m^2", rm2);
class DesignMatrix {
public:
    explicit DesignMatrix(std::size_t rows) : rows_(rows) {}

    static DesignMatrix with_intercept(std::size_t rows) {
        DesignMatrix X(rows);
        X.add("const", std::vector<double>(rows, 1.0));
        X.intercept_ = true;
        return X;
    }

    DesignMatrix& add(std::string name, std::span<const double> values) {
        if (values.size() != rows_)
            throw InvalidInput("DesignMatrix: column " + name + " has " + std::to_string(values.size()) +
                               " rows, expected " + std::to_string(rows_));
        for (double v : values)
            if (!std::isfinite(v)) throw InvalidInput("DesignMatrix: non-finite entry in column " + name);
        names_.push_back(std::move(name));
        columns_.emplace_back(values.begin(), values.end());
        return *this;
    }
    DesignMatrix& add(std::string name, const std::vector<double>& values) {
        return add(std::move(name), std::span<const double>(values));
    }

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return columns_.size(); }
    [[nodiscard]] bool has_intercept() const { return intercept_; }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
    [[nodiscard]] std::span<const double> column(std::size_t j) const { return columns_.at(j); }

    [[nodiscard]] Eigen::MatrixXd matrix() const {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols()));
        for (std::size_t j = 0; j < cols(); ++j)
            for (std::size_t i = 0; i < rows_; ++i) m(Eigen::Index(i), Eigen::Index(j)) = columns_[j][i];
        return m;
    }

private:
    std::size_t rows_;
    bool intercept_ = false;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
};

enum class StdErrorKind { classical, newey_west };

struct RegressionFit {
    std::vector<std::string> names;
    std::vector<double> coef;
    std::vector<double> se;
    std::vector<double> t_stat;
    std::vector<double> p_value;  // two-sided, Student-t with n - k df
    double r_squared = 0.0;
    double rss = 0.0;
    double sigma2 = 0.0;
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> residuals;
    StdErrorKind se_kind = StdErrorKind::classical;
    std::size_t hac_bandwidth = 0;

    [[nodiscard]] std::size_t index(const std::string& name) const {
        for (std::size_t j = 0; j < names.size(); ++j)
            if (names[j] == name) return j;
        throw InvalidInput("RegressionFit: no regressor named " + name);
    }
};

namespace detail {

struct QrSolution {
    Eigen::VectorXd beta;
    Eigen::MatrixXd xtx_inv;  // (X'X)^{-1}
    Eigen::VectorXd residuals;
};

/// Householder QR on unit-norm columns. The rank check compares |R_jj| with
/// 1e-10 times the largest |R_ii|; the first column failing it is reported.
inline QrSolution qr_solve(const DesignMatrix& X, std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(X.rows());
    const auto k = static_cast<Eigen::Index>(X.cols());
    if (X.cols() == 0) throw InvalidInput("ols: design matrix has no columns");
    if (y.size() != X.rows())
        throw InvalidInput("ols: response has " + std::to_string(y.size()) + " rows, design has " +
                           std::to_string(X.rows()));
    if (n < k) throw InvalidInput("ols: fewer observations than regressors");
    for (double v : y)
        if (!std::isfinite(v)) throw InvalidInput("ols: non-finite response");

    Eigen::MatrixXd A = X.matrix();
    Eigen::VectorXd scale(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        scale(j) = A.col(j).norm();
        if (scale(j) == 0.0)
            throw RankDeficient(X.names()[std::size_t(j)], "ols: column " + X.names()[std::size_t(j)] + " is identically zero");
        A.col(j) /= scale(j);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const double rmax = R.diagonal().cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < k; ++j)
        if (std::abs(R(j, j)) <= 1e-10 * rmax)
            throw RankDeficient(X.names()[std::size_t(j)],
                                "ols: design matrix is rank deficient at column " + X.names()[std::size_t(j)]);

    Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    Eigen::VectorXd qty = qr.householderQ().transpose() * yv;
    Eigen::VectorXd beta_s = R.triangularView<Eigen::Upper>().solve(qty.head(k));
    Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));

    QrSolution out;
    out.beta = beta_s.cwiseQuotient(scale);
    Eigen::VectorXd inv_scale = scale.cwiseInverse();
    out.xtx_inv = inv_scale.asDiagonal() * (Rinv * Rinv.transpose()) * inv_scale.asDiagonal();
    out.residuals = yv - X.matrix() * out.beta;
    return out;
}

inline RegressionFit assemble(const DesignMatrix& X, std::span<const double> y, const QrSolution& s,
                              const Eigen::MatrixXd& cov, StdErrorKind kind, std::size_t bandwidth) {
    RegressionFit f;
    f.names = X.names();
    f.n = X.rows();
    f.k = X.cols();
    f.se_kind = kind;
    f.hac_bandwidth = bandwidth;
    f.residuals.assign(s.residuals.data(), s.residuals.data() + s.residuals.size());
    f.rss = s.residuals.squaredNorm();
    const double df = double(f.n) - double(f.k);
    f.sigma2 = df > 0 ? f.rss / df : std::numeric_limits<double>::quiet_NaN();

    double tss = 0.0;
    if (X.has_intercept()) {
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= double(y.size());
        for (double v : y) tss += (v - mean) * (v - mean);
    } else {
        for (double v : y) tss += v * v;
    }
    f.r_squared = tss > 0.0 ? 1.0 - f.rss / tss : 0.0;

    for (std::size_t j = 0; j < f.k; ++j) {
        const auto jj = Eigen::Index(j);
        f.coef.push_back(s.beta(jj));
        f.se.push_back(std::sqrt(cov(jj, jj)));
        f.t_stat.push_back(f.coef[j] / f.se[j]);
        f.p_value.push_back(df > 0 ? dist::t_two_sided(f.t_stat[j], df) : std::numeric_limits<double>::quiet_NaN());
    }
    return f;
}

}  // namespace detail

/// Ordinary least squares with classical (homoskedastic) standard errors.
inline RegressionFit ols(const DesignMatrix& X, std::span<const double> y) {
    auto s = detail::qr_solve(X, y);
    const double df = double(X.rows()) - double(X.cols());
    const double sigma2 = df > 0 ? s.residuals.squaredNorm() / df : std::numeric_limits<double>::quiet_NaN();
    return detail::assemble(X, y, s, sigma2 * s.xtx_inv, StdErrorKind::classical, 0);
}

/// OLS coefficients with Newey-West (Bartlett kernel) covariance. Bandwidth 0
/// gives White's HC0 estimator. No small-sample correction is applied.
inline RegressionFit ols_hac(const DesignMatrix& X, std::span<const double> y, std::size_t bandwidth) {
    auto s = detail::qr_solve(X, y);
    const Eigen::MatrixXd A = X.matrix();
    const auto n = A.rows();
    Eigen::MatrixXd scores = A.array().colwise() * s.residuals.array();  // row t: e_t x_t'
    Eigen::MatrixXd meat = scores.transpose() * scores;
    for (std::size_t lag = 1; lag <= bandwidth && Eigen::Index(lag) < n; ++lag) {
        const double w = 1.0 - double(lag) / double(bandwidth + 1);
        const auto L = Eigen::Index(lag);
        Eigen::MatrixXd g = scores.bottomRows(n - L).transpose() * scores.topRows(n - L);
        meat += w * (g + g.transpose());
    }
    Eigen::MatrixXd cov = s.xtx_inv * meat * s.xtx_inv;
    return detail::assemble(X, y, s, cov, StdErrorKind::newey_west, bandwidth);
}

}  // namespace comove
