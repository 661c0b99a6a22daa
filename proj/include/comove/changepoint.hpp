#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comove/date.hpp"
#include "comove/error.hpp"

namespace comove {

enum class CostKind { normal_mean_var, normal_mean, l2 };

inline std::string_view to_string(CostKind k) {
    switch (k) {
        case CostKind::normal_mean_var: return "normal_mean_var";
        case CostKind::normal_mean: return "normal_mean";
        case CostKind::l2: return "l2";
    }
    return "?";
}

/// Segment cost over a fixed series, O(1) per segment from prefix sums.
///
///   normal_mean_var  m (ln(2 pi s2) + 1), s2 the segment MLE variance floored at 1e-12
///   normal_mean      sum (y - ybar)^2 / sigma2 + m ln(2 pi sigma2), sigma2 fixed for the series
///   l2               sum (y - ybar)^2
///
/// The first two are twice the negative maximised Gaussian log-likelihood.
/// Segments are half-open ranges [lo, hi) of 0-based indices.
class CostModel {
public:
    static constexpr double kVarianceFloor = 1e-12;

    /// `known_variance` is only used by normal_mean; when absent it is estimated
    /// from first differences (1.4826 MAD / sqrt 2), which ignores level shifts.
    CostModel(std::span<const double> y, CostKind kind, std::optional<double> known_variance = std::nullopt)
        : kind_(kind), n_(y.size()), s1_(y.size() + 1, 0.0), s2_(y.size() + 1, 0.0) {
        double mean = 0.0;
        for (double v : y) {
            if (!std::isfinite(v)) throw InvalidInput("CostModel: non-finite value in series");
            mean += v;
        }
        if (n_ > 0) mean /= double(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            const double v = y[i] - mean;
            s1_[i + 1] = s1_[i] + v;
            s2_[i + 1] = s2_[i] + v * v;
        }
        if (kind_ == CostKind::normal_mean) {
            sigma2_ = known_variance ? *known_variance : estimate_noise_variance(y);
            if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_)) throw InvalidInput("CostModel: variance must be positive");
        }
    }

    [[nodiscard]] CostKind kind() const { return kind_; }
    [[nodiscard]] std::size_t size() const { return n_; }
    [[nodiscard]] double noise_variance() const { return sigma2_; }

    /// Free parameters fitted per segment (mean and variance, or mean only).
    [[nodiscard]] std::size_t params_per_segment() const { return kind_ == CostKind::normal_mean_var ? 2 : 1; }

    [[nodiscard]] double operator()(std::size_t lo, std::size_t hi) const {
        const double m = double(hi - lo);
        const double s1 = s1_[hi] - s1_[lo];
        const double rss = std::max(0.0, (s2_[hi] - s2_[lo]) - s1 * s1 / m);
        switch (kind_) {
            case CostKind::l2: return rss;
            case CostKind::normal_mean: return rss / sigma2_ + m * std::log(2.0 * std::numbers::pi * sigma2_);
            case CostKind::normal_mean_var:
                return m * (std::log(2.0 * std::numbers::pi * std::max(rss / m, kVarianceFloor)) + 1.0);
        }
        return 0.0;
    }

    static double estimate_noise_variance(std::span<const double> y) {
        if (y.size() >= 3) {
            std::vector<double> d(y.size() - 1);
            for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = y[i + 1] - y[i];
            auto median = [](std::vector<double> v) {
                auto mid = v.begin() + std::ptrdiff_t(v.size() / 2);
                std::nth_element(v.begin(), mid, v.end());
                double hi = *mid;
                if (v.size() % 2) return hi;
                double lo = *std::max_element(v.begin(), mid);
                return 0.5 * (lo + hi);
            };
            const double med = median(d);
            for (double& v : d) v = std::abs(v - med);
            const double sigma = 1.4826 * median(d) / std::numbers::sqrt2;
            if (sigma > 0.0) return sigma * sigma;
        }
        double mean = 0.0, ss = 0.0;
        for (double v : y) mean += v;
        mean /= double(std::max<std::size_t>(y.size(), 1));
        for (double v : y) ss += (v - mean) * (v - mean);
        const double var = y.size() > 1 ? ss / double(y.size() - 1) : 0.0;
        return var > 0.0 ? var : 1.0;
    }

private:
    CostKind kind_;
    std::size_t n_;
    std::vector<double> s1_, s2_;
    double sigma2_ = 1.0;
};

/// Checked segment cost: rejects segments shorter than `min_seg`.
inline double segment_cost(const CostModel& cost, std::size_t lo, std::size_t hi, std::size_t min_seg = 1) {
    if (hi > cost.size() || lo >= hi || hi - lo < min_seg)
        throw InvalidInput("segment_cost: segment [" + std::to_string(lo) + ", " + std::to_string(hi) +
                           ") shorter than min_seg or out of range");
    return cost(lo, hi);
}

enum class PenaltyKind { bic, aic, manual };

inline std::string_view to_string(PenaltyKind k) {
    switch (k) {
        case PenaltyKind::bic: return "bic";
        case PenaltyKind::aic: return "aic";
        case PenaltyKind::manual: return "manual";
    }
    return "?";
}

/// Linear per-change-point penalty beta.
struct Penalty {
    PenaltyKind kind = PenaltyKind::manual;
    double value = 0.0;

    static Penalty bic(const CostModel& c) {
        return {PenaltyKind::bic, double(c.params_per_segment()) * std::log(double(std::max<std::size_t>(c.size(), 1)))};
    }
    static Penalty aic(const CostModel& c) { return {PenaltyKind::aic, 2.0 * double(c.params_per_segment())}; }
    static Penalty manual(double v) { return {PenaltyKind::manual, v}; }
};

/// Change points are tau: the number of observations before the
/// break, i.e. the 1-based index of the last observation of a segment. A series
/// with change points {a, b} has segments [0, a), [a, b), [b, n) in 0-based terms.
/// Shortest admissible segment unless the caller says otherwise; keeps the
/// mean-variance cost away from near-degenerate micro-segments.
inline constexpr std::size_t kDefaultMinSeg = 30;

struct Segmentation {
    std::size_t n = 0;
    std::vector<std::size_t> changepoints;
    double total_cost = 0.0;
    Penalty penalty;
    CostKind cost_kind = CostKind::normal_mean_var;
    std::size_t min_seg = kDefaultMinSeg;
    std::size_t max_candidates = 0;  // peak size of the live candidate set (PELT only)

    [[nodiscard]] std::size_t size() const { return changepoints.size(); }
};

namespace detail {

inline void check_inputs(const CostModel& cost, const Penalty& penalty, std::size_t min_seg) {
    if (min_seg == 0) throw InvalidInput("changepoint: min_seg must be positive");
    if (!(penalty.value >= 0.0) || !std::isfinite(penalty.value))
        throw InvalidInput("changepoint: penalty must be finite and non-negative");
    if (cost.size() < 2 * min_seg)
        throw InvalidInput("changepoint: series of length " + std::to_string(cost.size()) +
                           " is shorter than 2 * min_seg");
}

inline std::vector<std::size_t> backtrack(const std::vector<std::size_t>& prev, std::size_t n) {
    std::vector<std::size_t> cps;
    for (std::size_t t = n; t > 0;) {
        const std::size_t s = prev[t];
        if (s > 0) cps.push_back(s);
        t = s;
    }
    std::reverse(cps.begin(), cps.end());
    return cps;
}

}  // namespace detail

/// Exact penalised segmentation by PELT.
///
/// F(0) = -beta, F(t) = min_s F(s) + C[s, t) + beta over candidates with
/// t - s >= min_seg. A candidate s with F(s) + C[s, t) > F(t) can never be the
/// last change before any T >= t + min_seg, so it is dropped at that point;
/// keeping it until then is what preserves exactness under a minimum segment
/// length. Candidates are scanned in increasing order and ties keep the earliest,
/// which matches optimal_partition_bruteforce.
inline Segmentation pelt(const CostModel& cost, Penalty penalty, std::size_t min_seg = kDefaultMinSeg) {
    detail::check_inputs(cost, penalty, min_seg);
    const std::size_t n = cost.size();
    const double beta = penalty.value;
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr std::size_t never = std::numeric_limits<std::size_t>::max();

    struct Candidate {
        std::size_t s;
        std::size_t expires;
    };
    std::vector<double> F(n + 1, inf);
    std::vector<std::size_t> prev(n + 1, 0);
    F[0] = -beta;
    std::vector<Candidate> live{{0, never}};
    std::vector<double> fit(n + 1);  // F(s) + C[s, t) for the current t
    std::size_t peak = 1;

    for (std::size_t t = 1; t <= n; ++t) {
        std::erase_if(live, [t](const Candidate& c) { return c.expires <= t; });
        double best = inf;
        std::size_t arg = 0;
        for (const auto& c : live) {
            if (t - c.s < min_seg) continue;
            fit[c.s] = F[c.s] + cost(c.s, t);
            const double total = fit[c.s] + beta;
            if (total < best) {
                best = total;
                arg = c.s;
            }
        }
        F[t] = best;
        prev[t] = arg;
        if (best < inf) {
            const double bound = best + 1e-9 * std::max(1.0, std::abs(best));
            for (auto& c : live)
                if (t - c.s >= min_seg && fit[c.s] > bound) c.expires = std::min(c.expires, t + min_seg);
            live.push_back({t, never});
        }
        peak = std::max(peak, live.size());
    }

    Segmentation seg;
    seg.n = n;
    seg.changepoints = detail::backtrack(prev, n);
    seg.total_cost = F[n];
    seg.penalty = penalty;
    seg.cost_kind = cost.kind();
    seg.min_seg = min_seg;
    seg.max_candidates = peak;
    return seg;
}

/// Unpruned O(n^2) optimal partitioning with the same objective and tie rule as
/// pelt. Limited to n <= 500.
inline Segmentation optimal_partition_bruteforce(const CostModel& cost, Penalty penalty,
                                                 std::size_t min_seg = kDefaultMinSeg) {
    detail::check_inputs(cost, penalty, min_seg);
    const std::size_t n = cost.size();
    if (n > 500) throw InvalidInput("optimal_partition_bruteforce: limited to n <= 500");
    const double beta = penalty.value;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> F(n + 1, inf);
    std::vector<std::size_t> prev(n + 1, 0);
    F[0] = -beta;
    for (std::size_t t = 1; t <= n; ++t)
        for (std::size_t s = 0; s + min_seg <= t; ++s) {
            if (F[s] == inf) continue;
            const double total = F[s] + cost(s, t) + beta;
            if (total < F[t]) {
                F[t] = total;
                prev[t] = s;
            }
        }
    Segmentation seg;
    seg.n = n;
    seg.changepoints = detail::backtrack(prev, n);
    seg.total_cost = F[n];
    seg.penalty = penalty;
    seg.cost_kind = cost.kind();
    seg.min_seg = min_seg;
    seg.max_candidates = n + 1;
    return seg;
}

/// Sum of segment costs plus beta times the number of change points.
inline double penalized_objective(const CostModel& cost, const std::vector<std::size_t>& changepoints, double beta) {
    double total = 0.0;
    std::size_t lo = 0;
    for (std::size_t cp : changepoints) {
        total += cost(lo, cp);
        lo = cp;
    }
    total += cost(lo, cost.size());
    return total + beta * double(changepoints.size());
}

/// dates[tau] for each change point, i.e. the first date of each new regime.
inline std::vector<Date> map_changepoints_to_dates(const Segmentation& seg, const std::vector<Date>& dates) {
    if (seg.n != dates.size())
        throw InvalidInput("map_changepoints_to_dates: segmentation covers " + std::to_string(seg.n) +
                           " points but the date axis has " + std::to_string(dates.size()));
    std::vector<Date> out;
    out.reserve(seg.changepoints.size());
    for (auto cp : seg.changepoints) out.push_back(dates.at(cp));
    return out;
}

}  // namespace comove
