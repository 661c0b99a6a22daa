#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "comove/distributions.hpp"
#include "comove/error.hpp"
#include "comove/ingest.hpp"

namespace comove {

// ---------------------------------------------------------------------------
// Mutual information

/// Equal-frequency (quantile) discretisation. Observation at sorted position p
/// goes to bin floor(p * bins / n); tied values share the bin of the first
/// member of their tie group.
inline std::vector<std::size_t> equal_frequency_bins(std::span<const double> x, std::size_t bins) {
    if (bins == 0) throw InvalidInput("equal_frequency_bins: bins must be positive");
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<std::size_t> code(n);
    std::size_t group_bin = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (p == 0 || x[order[p]] != x[order[p - 1]]) group_bin = p * bins / n;
        code[order[p]] = group_bin;
    }
    return code;
}

/// Shannon entropy (nats) of the equal-frequency discretisation of x.
inline double binned_entropy(std::span<const double> x, std::size_t bins) {
    auto code = equal_frequency_bins(x, bins);
    std::vector<std::size_t> count(bins, 0);
    for (auto c : code) ++count[c];
    const double n = double(x.size());
    std::vector<double> terms;
    for (auto c : count)
        if (c) terms.push_back(double(c) / n * std::log(n / double(c)));
    std::sort(terms.begin(), terms.end());
    double h = 0.0;
    for (double t : terms) h += t;
    return h;
}

/// Plug-in mutual information (nats) of the joint equal-frequency histogram.
/// Cell terms are summed in sorted order, so MI(x, y) and MI(y, x) agree bit for bit.
inline double mutual_information(std::span<const double> x, std::span<const double> y, std::size_t bins = 10) {
    if (x.size() != y.size()) throw InvalidInput("mutual_information: length mismatch");
    if (bins < 2) throw InvalidInput("mutual_information: need at least 2 bins");
    if (x.size() < 10 * bins)
        throw InvalidInput("mutual_information: need at least " + std::to_string(10 * bins) + " observations");
    auto degenerate = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    if (degenerate(x) || degenerate(y)) throw InvalidInput("mutual_information: degenerate (constant) series");

    auto cx = equal_frequency_bins(x, bins);
    auto cy = equal_frequency_bins(y, bins);
    std::vector<std::size_t> joint(bins * bins, 0), mx(bins, 0), my(bins, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++joint[cx[i] * bins + cy[i]];
        ++mx[cx[i]];
        ++my[cy[i]];
    }
    const double n = double(x.size());
    std::vector<double> terms;
    for (std::size_t a = 0; a < bins; ++a)
        for (std::size_t b = 0; b < bins; ++b)
            if (auto c = joint[a * bins + b]) {
                const double cc = double(c);
                terms.push_back(cc / n * std::log(cc * n / (double(mx[a]) * double(my[b]))));
            }
    std::sort(terms.begin(), terms.end());
    double mi = 0.0;
    for (double t : terms) mi += t;
    return std::max(mi, 0.0);
}

// ---------------------------------------------------------------------------
// Kendall's tau-b

struct KendallResult {
    double tau = 0.0;
    double p_value = 1.0;
    double z = 0.0;
    std::int64_t s = 0;  // concordant minus discordant pairs
    std::size_t n = 0;
};

namespace detail {

struct TieSums {
    std::int64_t pairs = 0;  // sum t(t-1)/2
    double v0 = 0.0;         // sum t(t-1)(t-2)
    double v1 = 0.0;         // sum t(t-1)(2t+5)
};

template <class Eq>
TieSums tie_sums(std::size_t n, Eq same_as_previous) {
    TieSums s;
    std::size_t run = 1;
    auto flush = [&] {
        const double t = double(run);
        s.pairs += std::int64_t(run) * std::int64_t(run - 1) / 2;
        s.v0 += t * (t - 1) * (t - 2);
        s.v1 += t * (t - 1) * (2 * t + 5);
        run = 1;
    };
    for (std::size_t i = 1; i < n; ++i) {
        if (same_as_previous(i)) {
            ++run;
        } else {
            flush();
        }
    }
    if (n > 0) flush();
    return s;
}

/// Sorts v ascending and returns the number of inversions (pairs i<j with v[i] > v[j]).
inline std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += std::int64_t(mid - i);
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + std::ptrdiff_t(lo), buf.begin() + std::ptrdiff_t(hi), v.begin() + std::ptrdiff_t(lo));
    return swaps;
}

}  // namespace detail

/// Tau-b in O(n log n) (Knight's merge-sort pair counting) with the
/// tie-adjusted normal approximation for the two-sided p-value.
inline KendallResult kendall_tau(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidInput("kendall_tau: length mismatch");
    if (x.size() < 10) throw InvalidInput("kendall_tau: need at least 10 observations");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw InvalidInput("kendall_tau: non-finite value");
    const std::size_t n = x.size();

    std::vector<std::pair<double, double>> xy(n);
    for (std::size_t i = 0; i < n; ++i) xy[i] = {x[i], y[i]};
    std::sort(xy.begin(), xy.end());

    auto xt = detail::tie_sums(n, [&](std::size_t i) { return xy[i].first == xy[i - 1].first; });
    auto joint = detail::tie_sums(n, [&](std::size_t i) { return xy[i] == xy[i - 1]; });

    std::vector<double> ys(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = xy[i].second;
    const std::int64_t swaps = detail::merge_count(ys, buf, 0, n);
    auto yt = detail::tie_sums(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });

    const std::int64_t n0 = std::int64_t(n) * std::int64_t(n - 1) / 2;
    if (xt.pairs == n0 || yt.pairs == n0) throw InvalidInput("kendall_tau: a series is entirely tied");

    KendallResult r;
    r.n = n;
    r.s = n0 - xt.pairs - yt.pairs + joint.pairs - 2 * swaps;
    r.tau = double(r.s) / std::sqrt(double(n0 - xt.pairs) * double(n0 - yt.pairs));

    const double nn = double(n);
    const double m = nn * (nn - 1.0);
    const double var = (m * (2.0 * nn + 5.0) - xt.v1 - yt.v1) / 18.0 +
                       2.0 * double(xt.pairs) * double(yt.pairs) / m + xt.v0 * yt.v0 / (9.0 * m * (nn - 2.0));
    r.z = double(r.s) / std::sqrt(var);
    r.p_value = dist::normal_two_sided(r.z);
    return r;
}

// ---------------------------------------------------------------------------
// Matrices

enum class DependenceMethod { mutual_information, kendall_tau };

struct DependenceSettings {
    std::size_t bins = 10;
};

struct DependenceMatrix {
    std::vector<std::string> tickers;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<double>> p_values;  // empty for mutual information
    DependenceMethod method = DependenceMethod::kendall_tau;
    DependenceSettings settings;
    std::size_t pair_evaluations = 0;
};

/// Evaluates each unordered pair once and mirrors it. Diagonal: the binned
/// marginal entropy for MI, 1 for tau.
inline DependenceMatrix dependence_matrix(const std::vector<std::string>& names,
                                          const std::vector<std::span<const double>>& series, DependenceMethod method,
                                          DependenceSettings settings = {}) {
    if (names.size() != series.size()) throw InvalidInput("dependence_matrix: names/series mismatch");
    const std::size_t k = names.size();
    DependenceMatrix out;
    out.tickers = names;
    out.method = method;
    out.settings = settings;
    out.values.assign(k, std::vector<double>(k, 0.0));
    if (method == DependenceMethod::kendall_tau) out.p_values.assign(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        if (method == DependenceMethod::mutual_information) {
            out.values[i][i] = binned_entropy(series[i], settings.bins);
        } else {
            out.values[i][i] = 1.0;
        }
        for (std::size_t j = i + 1; j < k; ++j) {
            ++out.pair_evaluations;
            if (method == DependenceMethod::mutual_information) {
                out.values[i][j] = out.values[j][i] = mutual_information(series[i], series[j], settings.bins);
            } else {
                auto r = kendall_tau(series[i], series[j]);
                out.values[i][j] = out.values[j][i] = r.tau;
                out.p_values[i][j] = out.p_values[j][i] = r.p_value;
            }
        }
    }
    return out;
}

inline DependenceMatrix dependence_matrix(const ReturnPanel& panel, DependenceMethod method,
                                          DependenceSettings settings = {}) {
    std::vector<std::span<const double>> cols;
    for (std::size_t i = 0; i < panel.n_assets(); ++i) cols.push_back(panel.column(i));
    return dependence_matrix(panel.tickers(), cols, method, settings);
}

}  // namespace comove
