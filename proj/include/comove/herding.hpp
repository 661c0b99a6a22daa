#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comove/date.hpp"
#include "comove/error.hpp"
#include "comove/ingest.hpp"
#include "comove/regression.hpp"

namespace comove {

enum class DispersionKind { cssd, csad };

/// Return that individual deviations are measured against.
enum class DeviationBasis { market, cross_sectional_mean };

inline std::string_view to_string(DeviationBasis b) {
    return b == DeviationBasis::market ? "market" : "cross_sectional_mean";
}

struct DispersionSeries {
    std::vector<Date> dates;
    std::vector<double> values;
    DispersionKind kind = DispersionKind::cssd;
    std::size_t n_assets = 0;
    DeviationBasis basis = DeviationBasis::market;
};

namespace detail {

inline double basis_return(const ReturnPanel& p, std::size_t t, DeviationBasis basis) {
    if (basis == DeviationBasis::market) return p.market().values()[t];
    double s = 0.0;
    for (std::size_t i = 0; i < p.n_assets(); ++i) s += p.at(t, i);
    return s / double(p.n_assets());
}

}  // namespace detail

/// CSSD_t = sqrt( sum_i (R_it - R_bt)^2 / (N - 1) ).
inline DispersionSeries cssd_series(const ReturnPanel& panel, DeviationBasis basis = DeviationBasis::market) {
    const std::size_t N = panel.n_assets();
    if (N < 2) throw InvalidInput("cssd_series: need at least 2 assets");
    DispersionSeries out{panel.dates(), std::vector<double>(panel.n_dates()), DispersionKind::cssd, N, basis};
    for (std::size_t t = 0; t < panel.n_dates(); ++t) {
        const double b = detail::basis_return(panel, t, basis);
        double ss = 0.0;
        for (std::size_t i = 0; i < N; ++i) ss += (panel.at(t, i) - b) * (panel.at(t, i) - b);
        out.values[t] = std::sqrt(ss / double(N - 1));
    }
    return out;
}

/// CSAD_t = (1/N) sum_i |R_it - R_bt|.
inline DispersionSeries csad_series(const ReturnPanel& panel, DeviationBasis basis = DeviationBasis::market) {
    const std::size_t N = panel.n_assets();
    if (N < 1 || panel.n_dates() == 0) throw InvalidInput("csad_series: empty panel");
    DispersionSeries out{panel.dates(), std::vector<double>(panel.n_dates()), DispersionKind::csad, N, basis};
    for (std::size_t t = 0; t < panel.n_dates(); ++t) {
        const double b = detail::basis_return(panel, t, basis);
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) s += std::abs(panel.at(t, i) - b);
        out.values[t] = s / double(N);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Extreme-market dummies

struct ExtremeDummies {
    std::vector<Date> dates;
    std::vector<double> d_lower;
    std::vector<double> d_upper;
    double tail_fraction = 0.05;
    double lower_threshold = 0.0;
    double upper_threshold = 0.0;
    Date basis_from, basis_to;

    [[nodiscard]] std::size_t lower_count() const { return std::size_t(std::count(d_lower.begin(), d_lower.end(), 1.0)); }
    [[nodiscard]] std::size_t upper_count() const { return std::size_t(std::count(d_upper.begin(), d_upper.end(), 1.0)); }
};

/// Flags days whose market return is at or beyond the k-th smallest (lower) or
/// k-th largest (upper) value of the series, k = max(1, floor(tail * n)).
/// Values tied with the threshold fall in the tail. Quantiles come from the
/// series passed in, so callers pass the regression window itself.
inline ExtremeDummies extreme_dummies(const ReturnSeries& market, double tail_fraction) {
    const std::size_t n = market.size();
    if (n < 20) throw InvalidInput("extreme_dummies: window has " + std::to_string(n) + " days, need at least 20");
    if (!(tail_fraction > 0.0 && tail_fraction <= 0.25))
        throw InvalidInput("extreme_dummies: tail fraction must lie in (0, 0.25]");
    std::vector<double> sorted = market.values();
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k = std::max<std::size_t>(1, std::size_t(std::floor(tail_fraction * double(n) + 1e-9)));
    ExtremeDummies d;
    d.dates = market.dates();
    d.tail_fraction = tail_fraction;
    d.lower_threshold = sorted[k - 1];
    d.upper_threshold = sorted[n - k];
    if (!(d.lower_threshold < d.upper_threshold))
        throw InvalidInput("extreme_dummies: degenerate market series (tails overlap)");
    d.basis_from = market.dates().front();
    d.basis_to = market.dates().back();
    d.d_lower.resize(n);
    d.d_upper.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double r = market.values()[t];
        d.d_lower[t] = r <= d.lower_threshold ? 1.0 : 0.0;
        d.d_upper[t] = r >= d.upper_threshold ? 1.0 : 0.0;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Herding regressions

enum class HerdingModel { cssd_tails, csad_base, csad_up, csad_down, csad_asymmetric };

inline std::string_view to_string(HerdingModel m) {
    switch (m) {
        case HerdingModel::cssd_tails: return "cssd_tails";
        case HerdingModel::csad_base: return "csad_base";
        case HerdingModel::csad_up: return "csad_up";
        case HerdingModel::csad_down: return "csad_down";
        case HerdingModel::csad_asymmetric: return "csad_asymmetric";
    }
    return "?";
}

enum class Verdict { herding, anti_herding, inconclusive };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::herding: return "herding";
        case Verdict::anti_herding: return "anti_herding";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct InferenceOptions {
    bool hac = false;
    std::size_t hac_bandwidth = 0;
    double alpha = 0.05;  // level for the verdict
};

struct HerdingFit {
    std::string window_label;
    HerdingModel model = HerdingModel::csad_asymmetric;
    RegressionFit fit;
    Verdict verdict = Verdict::inconclusive;
    std::string deciding_coefficient;

    [[nodiscard]] double coef(const std::string& name) const { return fit.coef[fit.index(name)]; }
    [[nodiscard]] double t_stat(const std::string& name) const { return fit.t_stat[fit.index(name)]; }
    [[nodiscard]] double p_value(const std::string& name) const { return fit.p_value[fit.index(name)]; }
};

/// Regressor names used by the fits.
namespace reg {
inline const std::string d_lower = "D_L";
inline const std::string d_upper = "D_U";
inline const std::string rm = "R_m";
inline const std::string abs_rm = "abs_R_m";
inline const std::string rm_sq = "R_m_sq";
}  // namespace reg

namespace detail {

inline RegressionFit run(const DesignMatrix& X, std::span<const double> y, const InferenceOptions& o) {
    return o.hac ? ols_hac(X, y, o.hac_bandwidth) : ols(X, y);
}

/// Significantly negative -> herding, significantly positive -> anti-herding.
inline Verdict verdict_from(const RegressionFit& f, const std::string& name, double alpha) {
    const std::size_t j = f.index(name);
    if (!(f.p_value[j] <= alpha)) return Verdict::inconclusive;
    return f.coef[j] < 0.0 ? Verdict::herding : Verdict::anti_herding;
}

inline void check_aligned(const DispersionSeries& d, const std::vector<Date>& other, const char* what) {
    if (d.dates != other) throw InvalidInput(std::string(what) + ": dispersion and regressor axes differ");
}

}  // namespace detail

/// CSSD_t = a + bL D^L_t + bU D^U_t. Verdict decided by bL.
inline HerdingFit fit_cssd(const DispersionSeries& cssd, const ExtremeDummies& dummies, const InferenceOptions& o = {}) {
    detail::check_aligned(cssd, dummies.dates, "fit_cssd");
    auto X = DesignMatrix::with_intercept(cssd.values.size());
    X.add(reg::d_lower, dummies.d_lower).add(reg::d_upper, dummies.d_upper);
    HerdingFit h;
    h.model = HerdingModel::cssd_tails;
    h.fit = detail::run(X, cssd.values, o);
    h.deciding_coefficient = reg::d_lower;
    h.verdict = detail::verdict_from(h.fit, reg::d_lower, o.alpha);
    return h;
}

/// CSAD_t = a + g1 R_m + g2 R_m^2. Verdict decided by g2.
inline HerdingFit fit_csad_base(const DispersionSeries& csad, const ReturnSeries& market, const InferenceOptions& o = {}) {
    detail::check_aligned(csad, market.dates(), "fit_csad_base");
    std::vector<double> sq(market.size());
    for (std::size_t t = 0; t < sq.size(); ++t) sq[t] = market.values()[t] * market.values()[t];
    auto X = DesignMatrix::with_intercept(csad.values.size());
    X.add(reg::rm, market.values()).add(reg::rm_sq, sq);
    HerdingFit h;
    h.model = HerdingModel::csad_base;
    h.fit = detail::run(X, csad.values, o);
    h.deciding_coefficient = reg::rm_sq;
    h.verdict = detail::verdict_from(h.fit, reg::rm_sq, o.alpha);
    return h;
}

enum class MarketDirection { up, down };

/// CSAD_t = a + g1 |R_m| + g2 R_m^2 on days with R_m > 0 (up) or R_m < 0 (down).
/// Zero-return days belong to neither subsample. Verdict decided by g2.
inline HerdingFit fit_csad_directional(const DispersionSeries& csad, const ReturnSeries& market, MarketDirection dir,
                                       const InferenceOptions& o = {}, std::size_t min_obs = 30) {
    detail::check_aligned(csad, market.dates(), "fit_csad_directional");
    std::vector<double> y, a, sq;
    for (std::size_t t = 0; t < market.size(); ++t) {
        const double r = market.values()[t];
        if ((dir == MarketDirection::up && r > 0.0) || (dir == MarketDirection::down && r < 0.0)) {
            y.push_back(csad.values[t]);
            a.push_back(std::abs(r));
            sq.push_back(r * r);
        }
    }
    if (y.size() < min_obs)
        throw InvalidInput(std::string("fit_csad_directional: only ") + std::to_string(y.size()) + " " +
                           (dir == MarketDirection::up ? "up" : "down") + "-market days, need " +
                           std::to_string(min_obs));
    auto X = DesignMatrix::with_intercept(y.size());
    X.add(reg::abs_rm, a).add(reg::rm_sq, sq);
    HerdingFit h;
    h.model = dir == MarketDirection::up ? HerdingModel::csad_up : HerdingModel::csad_down;
    h.fit = detail::run(X, y, o);
    h.deciding_coefficient = reg::rm_sq;
    h.verdict = detail::verdict_from(h.fit, reg::rm_sq, o.alpha);
    return h;
}

/// CSAD_t = a + g1 R_m + g2 |R_m| + g3 R_m^2. Significantly negative g3 is herding,
/// significantly positive g3 anti-herding.
inline HerdingFit fit_csad_asymmetric(const DispersionSeries& csad, const ReturnSeries& market,
                                      const InferenceOptions& o = {}, std::size_t min_obs = 30) {
    detail::check_aligned(csad, market.dates(), "fit_csad_asymmetric");
    if (csad.values.size() < min_obs)
        throw InvalidInput("fit_csad_asymmetric: need at least " + std::to_string(min_obs) + " observations");
    std::vector<double> a(market.size()), sq(market.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
        a[t] = std::abs(market.values()[t]);
        sq[t] = market.values()[t] * market.values()[t];
    }
    auto X = DesignMatrix::with_intercept(csad.values.size());
    X.add(reg::rm, market.values()).add(reg::abs_rm, a).add(reg::rm_sq, sq);
    HerdingFit h;
    h.model = HerdingModel::csad_asymmetric;
    h.fit = detail::run(X, csad.values, o);
    h.deciding_coefficient = reg::rm_sq;
    h.verdict = detail::verdict_from(h.fit, reg::rm_sq, o.alpha);
    return h;
}

// ---------------------------------------------------------------------------
// Event windows

enum class Side { before, after };

inline std::string_view to_string(Side s) { return s == Side::before ? "before" : "after"; }

/// A before/after slice of the trading axis around an anchor date. `months == 0`
/// means the full horizon (data start to anchor, or anchor to data end).
struct EventWindow {
    Date anchor;
    Side side = Side::after;
    int months = 0;
    std::size_t lo = 0, hi = 0;  // resolved half-open row range
    bool truncated = false;      // calendar bound lies outside the data
    Date bound;                  // anchor -/+ months (equals anchor for full horizon)

    [[nodiscard]] std::size_t size() const { return hi - lo; }
    [[nodiscard]] std::string label() const {
        return std::string(to_string(side)) + " " + anchor.iso() + (months ? " " + std::to_string(months) + "m" : " full");
    }
};

/// Before-windows end on the last trading day before the anchor; after-windows
/// start on the first trading day on or after it. A k-month horizon spans
/// [anchor - k months, anchor) or [anchor, anchor + k months) in calendar terms.
inline EventWindow resolve_window(const std::vector<Date>& axis, Date anchor, Side side, int months = 0) {
    if (axis.empty()) throw InvalidInput("resolve_window: empty date axis");
    if (months < 0) throw InvalidInput("resolve_window: negative horizon");
    if (anchor <= axis.front() || anchor > axis.back())
        throw InvalidInput("resolve_window: anchor " + anchor.iso() + " outside data range " + axis.front().iso() +
                           " .. " + axis.back().iso());
    auto first_at_or_after = [&](Date d) {
        return std::size_t(std::lower_bound(axis.begin(), axis.end(), d) - axis.begin());
    };
    EventWindow w;
    w.anchor = anchor;
    w.side = side;
    w.months = months;
    w.bound = anchor;
    const std::size_t split = first_at_or_after(anchor);
    if (side == Side::before) {
        w.hi = split;
        if (months == 0) {
            w.lo = 0;
        } else {
            w.bound = anchor.add_months(-months);
            w.truncated = w.bound < axis.front();
            w.lo = first_at_or_after(w.bound);
        }
    } else {
        w.lo = split;
        if (months == 0) {
            w.hi = axis.size();
        } else {
            w.bound = anchor.add_months(months);
            w.truncated = w.bound > axis.back();
            w.hi = first_at_or_after(w.bound);
        }
    }
    return w;
}

/// Outcome of one regression in one window; exactly one of fit / error is set.
struct FitOutcome {
    std::optional<HerdingFit> fit;
    std::string error;

    [[nodiscard]] bool ok() const { return fit.has_value(); }
};

struct HerdingSettings {
    double tail_fraction = 0.05;
    DeviationBasis basis = DeviationBasis::market;
    double cssd_scale = 100.0;  // CSSD regressions on percent returns
    double csad_scale = 1.0;    // CSAD regressions on decimal returns
    InferenceOptions inference;
    std::size_t min_window = 30;
};

struct WindowAnalysis {
    EventWindow window;
    bool estimable = true;
    std::string reason;  // why the window is not estimable
    FitOutcome cssd;     // CSSD on tail dummies
    FitOutcome csad;     // asymmetric CSAD
};

namespace detail {

template <class F>
FitOutcome attempt(F&& f) {
    FitOutcome out;
    try {
        out.fit = f();
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace detail

/// CSSD on window-local tail dummies and asymmetric CSAD on rows of `panel`.
inline WindowAnalysis analyze_rows(const ReturnPanel& panel, std::size_t lo, std::size_t hi, const HerdingSettings& s,
                                   std::string label) {
    WindowAnalysis a;
    auto sub = panel.slice(lo, hi);
    a.cssd = detail::attempt([&] {
        auto p = sub.scaled(s.cssd_scale);
        auto h = fit_cssd(cssd_series(p, s.basis), extreme_dummies(p.market(), s.tail_fraction), s.inference);
        h.window_label = label;
        return h;
    });
    a.csad = detail::attempt([&] {
        auto p = sub.scaled(s.csad_scale);
        auto h = fit_csad_asymmetric(csad_series(p, s.basis), p.market(), s.inference, s.min_window);
        h.window_label = label;
        return h;
    });
    return a;
}

inline WindowAnalysis analyze_window(const ReturnPanel& panel, const EventWindow& w, const HerdingSettings& s) {
    WindowAnalysis a;
    if (w.truncated) {
        a.window = w;
        a.estimable = false;
        a.reason = "window extends beyond the data (" + w.bound.iso() + ")";
        return a;
    }
    if (w.size() < s.min_window) {
        a.window = w;
        a.estimable = false;
        a.reason = "window has " + std::to_string(w.size()) + " trading days, need " + std::to_string(s.min_window);
        return a;
    }
    a = analyze_rows(panel, w.lo, w.hi, s, w.label());
    a.window = w;
    if (!a.cssd.ok() && !a.csad.ok()) {
        a.estimable = false;
        a.reason = a.cssd.error;
    }
    return a;
}

/// Before and after windows for every anchor at one horizon (0 = full).
inline std::vector<WindowAnalysis> event_split_analysis(const ReturnPanel& panel, const std::vector<Date>& anchors,
                                                        int months, const HerdingSettings& s = {}) {
    std::vector<WindowAnalysis> out;
    for (const Date& anchor : anchors)
        for (Side side : {Side::before, Side::after})
            out.push_back(analyze_window(panel, resolve_window(panel.dates(), anchor, side, months), s));
    return out;
}

/// Full anchor x side x horizon grid. Non-estimable cells are flagged, never zero-filled.
inline std::vector<WindowAnalysis> sensitivity_analysis(const ReturnPanel& panel, const std::vector<Date>& anchors,
                                                        const std::vector<int>& horizons, const HerdingSettings& s = {}) {
    std::vector<WindowAnalysis> out;
    for (const Date& anchor : anchors)
        for (Side side : {Side::before, Side::after})
            for (int m : horizons) {
                if (m <= 0) throw InvalidInput("sensitivity_analysis: horizons must be positive month counts");
                out.push_back(analyze_window(panel, resolve_window(panel.dates(), anchor, side, m), s));
            }
    return out;
}

}  // namespace comove
