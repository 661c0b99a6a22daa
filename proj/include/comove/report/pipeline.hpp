#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "comove/changepoint.hpp"
#include "comove/dependence.hpp"
#include "comove/distributions.hpp"
#include "comove/error.hpp"
#include "comove/herding.hpp"
#include "comove/ingest.hpp"
#include "comove/report/config.hpp"
#include "comove/report/digest.hpp"
#include "comove/report/table.hpp"
#include "comove/stat_tests.hpp"
#include "comove/version.hpp"

namespace comove::report {

enum class Stage { describe, tests, dependence, cpd, herding, sensitivity, plots };

inline constexpr Stage kAllStages[] = {Stage::describe, Stage::tests,       Stage::dependence, Stage::cpd,
                                       Stage::herding,  Stage::sensitivity, Stage::plots};

inline std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::describe: return "describe";
        case Stage::tests: return "tests";
        case Stage::dependence: return "dependence";
        case Stage::cpd: return "cpd";
        case Stage::herding: return "herding";
        case Stage::sensitivity: return "sensitivity";
        case Stage::plots: return "plots";
    }
    return "?";
}

inline std::optional<Stage> parse_stage(std::string_view name) {
    for (Stage s : kAllStages)
        if (to_string(s) == name) return s;
    return std::nullopt;
}

enum class StageState { ok, partial, failed };

inline std::string_view to_string(StageState s) {
    switch (s) {
        case StageState::ok: return "ok";
        case StageState::partial: return "partial";
        case StageState::failed: return "failed";
    }
    return "?";
}

struct StageStatus {
    Stage stage = Stage::describe;
    StageState state = StageState::ok;
    std::vector<std::string> messages;  // per-item errors (partial) or the stage error (failed)
};

struct ManifestEntry {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::size_t bytes = 0;
};

struct ReportBundle {
    std::string output_dir;
    std::string config_sha256;
    std::vector<StageStatus> stages;
    std::vector<ManifestEntry> files;  // every file under output_dir except manifest.json itself

    [[nodiscard]] bool complete() const {
        return std::all_of(stages.begin(), stages.end(), [](const StageStatus& s) { return s.state == StageState::ok; });
    }
};

/// Loaded, aligned inputs shared by every stage.
struct Inputs {
    std::vector<PriceSeries> aligned;  // analysed tickers followed by the market
    std::vector<ReturnSeries> returns;  // same order as `aligned`
    std::optional<ReturnPanel> panel;   // analysed tickers against the market
    std::vector<RowDiagnostic> diagnostics;
    std::string panel_error;
};

using Progress = std::function<void(const std::string&)>;

namespace detail {

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

inline bool needs_anchors(const std::vector<Stage>& stages) {
    return std::any_of(stages.begin(), stages.end(),
                       [](Stage s) { return s == Stage::herding || s == Stage::sensitivity; });
}

/// All writes go through one writer so the manifest sees every file.
class BundleWriter {
public:
    explicit BundleWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + (dir_ / name).string());
        out << content;
        if (!out) throw DataError("write failed for " + (dir_ / name).string());
    }

    void table(const Table& t) {
        write(t.name() + ".csv", t.csv());
        write(t.name() + ".schema.json", t.schema_json());
    }

    [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

inline std::string stars_for(double p) { return std::isfinite(p) ? std::string(dist::stars(p)) : ""; }

inline std::size_t nearest_index(const std::vector<Date>& axis, Date d) {
    auto it = std::lower_bound(axis.begin(), axis.end(), d);
    if (it == axis.end()) return axis.size() - 1;
    if (it != axis.begin() && (d.serial() - (it - 1)->serial()) < (it->serial() - d.serial())) --it;
    return std::size_t(it - axis.begin());
}

/// Target date matched by change point `cp` within `tolerance` trading days, if any.
inline std::optional<Date> matched_target(const std::vector<Date>& axis, std::size_t cp, const std::vector<Date>& targets,
                                          std::size_t tolerance) {
    for (const Date& t : targets) {
        if (t < axis.front() || t > axis.back()) continue;
        const std::size_t ti = nearest_index(axis, t);
        const std::size_t gap = cp > ti ? cp - ti : ti - cp;
        if (gap <= tolerance) return t;
    }
    return std::nullopt;
}

inline Segmentation detect(const ReturnSeries& r, const CpdConfig& c, std::optional<double> penalty_value = {}) {
    CostModel cost(r.view(), c.cost);
    Penalty pen;
    if (penalty_value) pen = Penalty::manual(*penalty_value);
    else if (c.penalty == PenaltyKind::bic) pen = Penalty::bic(cost);
    else if (c.penalty == PenaltyKind::aic) pen = Penalty::aic(cost);
    else pen = Penalty::manual(c.penalty_value);
    return pelt(cost, pen, c.min_seg);
}

}  // namespace detail

/// Loads the data and checks every config constraint that depends on it. All
/// problems are collected into one ConfigError before any analysis runs.
inline Inputs prepare(const RunConfig& c, const std::vector<Stage>& stages = {std::begin(kAllStages), std::end(kAllStages)}) {
    std::vector<std::string> errors;
    Inputs in;
    LoadResult loaded;
    try {
        loaded = load_csv(c.data_path, c.schema);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid configuration:\n  - data: ") + e.what());
    }
    in.diagnostics = loaded.diagnostics;

    auto find = [&](const std::string& t) -> const PriceSeries* {
        for (const auto& s : loaded.series)
            if (s.ticker() == t) return &s;
        return nullptr;
    };
    std::vector<std::string> tickers = c.tickers;
    if (tickers.empty())
        for (const auto& s : loaded.series)
            if (s.ticker() != c.market_ticker) tickers.push_back(s.ticker());
    if (!find(c.market_ticker)) errors.push_back("market_ticker: '" + c.market_ticker + "' not present in data");
    for (const auto& t : tickers) {
        if (!find(t)) errors.push_back("tickers: '" + t + "' not present in data");
        if (t == c.market_ticker) errors.push_back("tickers: '" + t + "' is the market ticker");
    }
    if (tickers.empty()) errors.push_back("tickers: no analysed tickers");

    std::error_code ec;
    std::filesystem::create_directories(c.output_dir, ec);
    {
        const auto probe = std::filesystem::path(c.output_dir) / ".comove-write-probe";
        std::ofstream p(probe);
        if (!p) errors.push_back("output_dir: '" + c.output_dir + "' is not writable");
        p.close();
        std::filesystem::remove(probe, ec);
    }

    if (errors.empty()) {
        std::vector<PriceSeries> chosen;
        for (const auto& t : tickers) chosen.push_back(*find(t));
        chosen.push_back(*find(c.market_ticker));
        try {
            in.aligned = align(chosen);
        } catch (const std::exception& e) {
            errors.push_back(std::string("data: ") + e.what());
        }
    }
    if (errors.empty()) {
        const auto& axis = in.aligned.front().dates();
        if (axis.size() < 3) {
            errors.push_back("data: fewer than 3 common dates after alignment");
        } else if (detail::needs_anchors(stages)) {
            for (const Date& a : c.herding.anchors)
                if (a <= axis.front() || a > axis.back())
                    errors.push_back("herding.anchors: " + a.iso() + " outside data range " + axis.front().iso() +
                                     " .. " + axis.back().iso());
        }
    }
    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    for (const auto& s : in.aligned) in.returns.push_back(to_returns(s, c.returns));
    try {
        in.panel = make_panel(in.aligned, c.market_ticker, c.returns, tickers);
    } catch (const std::exception& e) {
        in.panel_error = e.what();  // per-series stages still run
    }
    return in;
}

// ---------------------------------------------------------------------------
// Stage bodies. Each returns the tables it produced; per-item failures are
// appended to `issues` and leave an error row in the table.

inline Table describe_table(const Inputs& in, std::vector<std::string>& issues) {
    Table t("descriptive", "Summary statistics of daily returns per ticker",
            {{"ticker", "string", "series"},
             {"n", "integer", "number of returns"},
             {"mean", "number", "sample mean"},
             {"median", "number", "sample median"},
             {"variance", "number", "unbiased sample variance"},
             {"std", "number", "square root of variance"},
             {"skewness", "number", "moment skewness g1"},
             {"skewness_p", "number", "two-sided normal p-value, se sqrt(6/n)"},
             {"skewness_stars", "string", "*** <=0.005, ** <=0.01, * <=0.05, . <=0.1"},
             {"excess_kurtosis", "number", "moment excess kurtosis g2"},
             {"kurtosis_p", "number", "two-sided normal p-value, se sqrt(24/n)"},
             {"kurtosis_stars", "string", "significance marker"},
             {"error", "string", "empty when the row is valid"}});
    for (const auto& r : in.returns) {
        try {
            auto m = moments(r.view());
            t.add({r.ticker(), integer(m.n), num(m.mean), num(m.median), num(m.variance), num(std::sqrt(m.variance)),
                   num(m.skewness), num(m.skew_pvalue), detail::stars_for(m.skew_pvalue), num(m.excess_kurtosis),
                   num(m.kurt_pvalue), detail::stars_for(m.kurt_pvalue), ""});
        } catch (const std::exception& e) {
            issues.push_back(r.ticker() + ": " + e.what());
            t.add({r.ticker(), integer(r.size()), "NA", "NA", "NA", "NA", "NA", "NA", "", "NA", "NA", "", e.what()});
        }
    }
    return t;
}

inline Table tests_table(const Inputs& in, const RunConfig& c, std::vector<std::string>& issues) {
    Table t("tests", "Normality, ARCH and unit-root tests on daily returns",
            {{"ticker", "string", "series"},
             {"test", "string", "jarque_bera | arch_lm | adf"},
             {"statistic", "number", "test statistic"},
             {"p_value", "number", "p-value"},
             {"stars", "string", "significance marker"},
             {"lags", "integer", "lags used (arch_lm, adf)"},
             {"nobs", "integer", "observations in the test regression"},
             {"crit_1pct", "number", "ADF critical value at 1%"},
             {"crit_5pct", "number", "ADF critical value at 5%"},
             {"crit_10pct", "number", "ADF critical value at 10%"},
             {"error", "string", "empty when the row is valid"}});
    auto param = [](const TestResult& r, const char* key) {
        auto it = r.params.find(key);
        return it == r.params.end() ? std::string() : num(it->second);
    };
    for (const auto& r : in.returns) {
        auto run = [&](const char* name, auto&& f) {
            try {
                TestResult res = f();
                t.add({r.ticker(), name, num(res.statistic), num(res.p_value), detail::stars_for(res.p_value),
                       param(res, "lags"), param(res, "nobs"), param(res, "crit_1pct"), param(res, "crit_5pct"),
                       param(res, "crit_10pct"), ""});
            } catch (const std::exception& e) {
                issues.push_back(r.ticker() + " " + name + ": " + e.what());
                t.add({r.ticker(), name, "NA", "NA", "", "", "", "", "", "", e.what()});
            }
        };
        run("jarque_bera", [&] { return jarque_bera(r.view()); });
        run("arch_lm", [&] { return arch_lm(r.view(), c.tests.arch_lags); });
        run("adf", [&] {
            const std::size_t max_lag = c.tests.adf_max_lag.value_or(schwert_max_lag(r.size()));
            return adf(r.view(), max_lag, c.tests.adf_selection);
        });
    }
    return t;
}

inline Table dependence_table(const std::string& name, const std::string& what, const DependenceMatrix& m) {
    const bool tau = m.method == DependenceMethod::kendall_tau;
    std::vector<Column> cols{{"ticker_a", "string", "row series"},
                             {"ticker_b", "string", "column series"},
                             {"value", "number", tau ? "Kendall tau-b" : "mutual information (nats); diagonal is entropy"}};
    if (tau) {
        cols.push_back({"p_value", "number", "two-sided normal-approximation p-value"});
        cols.push_back({"stars", "string", "significance marker"});
    }
    Table t(name, what, cols);
    for (std::size_t i = 0; i < m.tickers.size(); ++i)
        for (std::size_t j = 0; j < m.tickers.size(); ++j) {
            std::vector<std::string> row{m.tickers[i], m.tickers[j], num(m.values[i][j])};
            if (tau) {
                row.push_back(i == j ? "NA" : num(m.p_values[i][j]));
                row.push_back(i == j ? "" : detail::stars_for(m.p_values[i][j]));
            }
            t.add(row);
        }
    return t;
}

inline Table changepoint_table(const Inputs& in, const RunConfig& c, std::vector<std::string>& issues) {
    Table t("changepoints", "PELT change points on daily returns; date is the first day of the new regime",
            {{"ticker", "string", "series"},
             {"cost", "string", "segment cost"},
             {"penalty_kind", "string", "bic | aic | manual"},
             {"penalty", "number", "penalty per change point"},
             {"min_seg", "integer", "minimum segment length"},
             {"n_changepoints", "integer", "number of change points for the ticker"},
             {"ordinal", "integer", "1-based position of this change point (empty if none)"},
             {"tau", "integer", "observations before the break"},
             {"date", "date", "date of observation tau (0-based), first of the new segment"},
             {"matched_target", "date", "target date within the tolerance, if any"},
             {"error", "string", "empty when the row is valid"}});
    for (const auto& r : in.returns) {
        try {
            auto seg = detail::detect(r, c.cpd);
            auto dates = map_changepoints_to_dates(seg, r.dates());
            const std::string head[] = {r.ticker(), std::string(to_string(seg.cost_kind)),
                                        std::string(to_string(seg.penalty.kind)), num(seg.penalty.value),
                                        integer(seg.min_seg), integer(seg.size())};
            if (seg.changepoints.empty())
                t.add({head[0], head[1], head[2], head[3], head[4], head[5], "", "", "", "", ""});
            for (std::size_t k = 0; k < seg.size(); ++k) {
                auto hit = detail::matched_target(r.dates(), seg.changepoints[k], c.cpd.target_dates,
                                                  c.cpd.tolerance_days);
                t.add({head[0], head[1], head[2], head[3], head[4], head[5], integer(k + 1),
                       integer(seg.changepoints[k]), dates[k].iso(), hit ? hit->iso() : "", ""});
            }
        } catch (const std::exception& e) {
            issues.push_back(r.ticker() + ": " + e.what());
            t.add({r.ticker(), std::string(to_string(c.cpd.cost)), std::string(to_string(c.cpd.penalty)), "NA",
                   integer(c.cpd.min_seg), "NA", "", "", "", "", e.what()});
        }
    }
    return t;
}

/// Per ticker x penalty: change-point count, dates, and which target dates are
/// hit within the tolerance.
inline Table penalty_sweep(const Inputs& in, const RunConfig& c, const std::vector<double>& grid,
                           std::vector<std::string>* issues = nullptr) {
    if (grid.empty()) throw ConfigError("penalty sweep: grid must not be empty");
    for (double v : grid)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("penalty sweep: values must be finite and non-negative");
    std::vector<Column> cols{{"ticker", "string", "series"},
                             {"penalty", "number", "penalty per change point"},
                             {"n_changepoints", "integer", "number of change points"},
                             {"dates", "string", "change-point dates separated by ';'"}};
    for (const Date& d : c.cpd.target_dates)
        cols.push_back({"hit_" + d.iso(), "boolean", "a change point lies within the tolerance of " + d.iso()});
    cols.push_back({"all_targets", "boolean", "every target date is hit"});
    cols.push_back({"error", "string", "empty when the row is valid"});
    Table t("penalty_sweep", "Change points across a grid of penalty values", cols);
    for (const auto& r : in.returns) {
        for (double beta : grid) {
            std::vector<std::string> row{r.ticker(), num(beta)};
            try {
                auto seg = detail::detect(r, c.cpd, beta);
                std::vector<std::string> ds;
                for (const auto& d : map_changepoints_to_dates(seg, r.dates())) ds.push_back(d.iso());
                row.push_back(integer(seg.size()));
                row.push_back(detail::join(ds, ";"));
                bool all = true;
                for (const Date& target : c.cpd.target_dates) {
                    bool hit = false;
                    for (auto cp : seg.changepoints)
                        hit = hit || detail::matched_target(r.dates(), cp, {target}, c.cpd.tolerance_days).has_value();
                    all = all && hit;
                    row.push_back(hit ? "true" : "false");
                }
                row.push_back(all ? "true" : "false");
                row.push_back("");
            } catch (const std::exception& e) {
                if (issues) issues->push_back(r.ticker() + " @ " + num(beta) + ": " + e.what());
                row.push_back("NA");
                row.push_back("");
                for (std::size_t k = 0; k < c.cpd.target_dates.size(); ++k) row.push_back("");
                row.push_back("");
                row.push_back(e.what());
            }
            t.add(row);
        }
    }
    return t;
}

namespace detail {

inline std::vector<Column> herding_columns() {
    return {{"window", "string", "window label"},
            {"anchor", "date", "anchor date (empty for the full period)"},
            {"side", "string", "before | after | full"},
            {"months", "integer", "horizon in months (0 = to the data boundary)"},
            {"from", "date", "first trading day in the window"},
            {"to", "date", "last trading day in the window"},
            {"model", "string", "cssd_tails | csad_base | csad_up | csad_down | csad_asymmetric"},
            {"tail_fraction", "number", "tail fraction of the dummies (cssd_tails only)"},
            {"term", "string", "regressor"},
            {"coef", "number", "OLS coefficient"},
            {"std_error", "number", "standard error (classical or Newey-West)"},
            {"t_stat", "number", "t statistic"},
            {"p_value", "number", "two-sided Student-t p-value"},
            {"stars", "string", "significance marker"},
            {"nobs", "integer", "observations"},
            {"r_squared", "number", "R squared"},
            {"verdict", "string", "herding | anti_herding | inconclusive, from the deciding term"},
            {"deciding", "boolean", "this term decides the verdict"},
            {"estimable", "boolean", "false when the window cannot be estimated"},
            {"reason", "string", "why the cell is not estimable"}};
}

struct WindowKey {
    std::string label, anchor, side, months, from, to;
};

inline WindowKey key_of(const EventWindow& w, const std::vector<Date>& axis) {
    WindowKey k{w.label(), w.anchor.iso(), std::string(to_string(w.side)), std::to_string(w.months), "", ""};
    if (!w.truncated && w.hi > w.lo) {
        k.from = axis[w.lo].iso();
        k.to = axis[w.hi - 1].iso();
    }
    return k;
}

inline void add_fit_rows(Table& t, const WindowKey& k, HerdingModel model, const std::string& tail,
                         const FitOutcome& f) {
    if (!f.ok()) {
        t.add({k.label, k.anchor, k.side, k.months, k.from, k.to, std::string(to_string(model)), tail, "", "NA", "NA",
               "NA", "NA", "", "", "NA", "", "", "false", f.error});
        return;
    }
    const auto& h = *f.fit;
    for (std::size_t j = 0; j < h.fit.names.size(); ++j) {
        const auto& name = h.fit.names[j];
        t.add({k.label, k.anchor, k.side, k.months, k.from, k.to, std::string(to_string(model)), tail, name,
               num(h.fit.coef[j]), num(h.fit.se[j]), num(h.fit.t_stat[j]), num(h.fit.p_value[j]),
               stars_for(h.fit.p_value[j]), integer(h.fit.n), num(h.fit.r_squared), std::string(to_string(h.verdict)),
               name == h.deciding_coefficient ? "true" : "false", "true", ""});
    }
}

inline void add_window_rows(Table& t, const WindowAnalysis& a, const std::vector<Date>& axis, const std::string& tail,
                            bool with_csad) {
    const auto k = key_of(a.window, axis);
    if (!a.estimable && a.window.truncated) {
        FitOutcome none{std::nullopt, a.reason};
        add_fit_rows(t, k, HerdingModel::cssd_tails, tail, none);
        if (with_csad) add_fit_rows(t, k, HerdingModel::csad_asymmetric, "", none);
        return;
    }
    FitOutcome cssd = a.cssd, csad = a.csad;
    if (!a.estimable && cssd.error.empty()) cssd.error = a.reason;
    if (!a.estimable && csad.error.empty()) csad.error = a.reason;
    add_fit_rows(t, k, HerdingModel::cssd_tails, tail, cssd);
    if (with_csad) add_fit_rows(t, k, HerdingModel::csad_asymmetric, "", csad);
}

inline void collect(const FitOutcome& f, const std::string& where, std::vector<std::string>& issues) {
    if (!f.ok()) issues.push_back(where + ": " + f.error);
}

}  // namespace detail

inline Table herding_full_table(const ReturnPanel& panel, const RunConfig& c, std::vector<std::string>& issues) {
    Table t("herding_full", "Full-period herding regressions", detail::herding_columns());
    const auto& axis = panel.dates();
    detail::WindowKey k{"full", "", "full", "0", axis.front().iso(), axis.back().iso()};
    for (std::size_t i = 0; i < c.herding.tail_fractions.size(); ++i) {
        const double tail = c.herding.tail_fractions[i];
        auto s = c.herding.settings(tail);
        auto a = analyze_rows(panel, 0, panel.n_dates(), s, "full");
        detail::add_fit_rows(t, k, HerdingModel::cssd_tails, num(tail), a.cssd);
        detail::collect(a.cssd, "full cssd tail " + num(tail), issues);
        if (i == 0) {
            auto p = panel.scaled(s.csad_scale);
            auto csad = csad_series(p, s.basis);
            auto attempt = [&](HerdingModel m, auto&& f) {
                auto out = comove::detail::attempt(f);
                detail::add_fit_rows(t, k, m, "", out);
                detail::collect(out, std::string("full ") + std::string(to_string(m)), issues);
            };
            attempt(HerdingModel::csad_base, [&] { return fit_csad_base(csad, p.market(), s.inference); });
            attempt(HerdingModel::csad_up, [&] {
                return fit_csad_directional(csad, p.market(), MarketDirection::up, s.inference, s.min_window);
            });
            attempt(HerdingModel::csad_down, [&] {
                return fit_csad_directional(csad, p.market(), MarketDirection::down, s.inference, s.min_window);
            });
            detail::add_fit_rows(t, k, HerdingModel::csad_asymmetric, "", a.csad);
            detail::collect(a.csad, "full csad_asymmetric", issues);
        }
    }
    return t;
}

/// Anchors for the before/after split: configured anchors plus the change-point
/// target dates, in date order without duplicates.
inline std::vector<Date> split_anchors(const RunConfig& c, const std::vector<Date>& axis) {
    std::set<Date> all(c.herding.anchors.begin(), c.herding.anchors.end());
    for (const Date& d : c.cpd.target_dates)
        if (d > axis.front() && d <= axis.back()) all.insert(d);
    return {all.begin(), all.end()};
}

inline Table herding_windows_table(const std::string& name, const std::string& what, const ReturnPanel& panel,
                                   const RunConfig& c, const std::vector<Date>& anchors, const std::vector<int>& horizons,
                                   std::vector<std::string>& issues) {
    Table t(name, what, detail::herding_columns());
    for (std::size_t i = 0; i < c.herding.tail_fractions.size(); ++i) {
        const double tail = c.herding.tail_fractions[i];
        auto s = c.herding.settings(tail);
        for (int m : horizons) {
            auto cells = m == 0 ? event_split_analysis(panel, anchors, 0, s) : sensitivity_analysis(panel, anchors, {m}, s);
            for (const auto& a : cells) {
                detail::add_window_rows(t, a, panel.dates(), num(tail), i == 0);
                if (a.estimable) {
                    detail::collect(a.cssd, a.window.label() + " cssd tail " + num(tail), issues);
                    if (i == 0) detail::collect(a.csad, a.window.label() + " csad", issues);
                }
            }
        }
    }
    return t;
}

inline Table plot_prices(const Inputs& in) {
    Table t("plot_prices", "Adjusted closing prices, long format", {{"date", "date", "trading day"},
                                                                    {"series", "string", "ticker"},
                                                                    {"value", "number", "price"}});
    for (const auto& s : in.aligned)
        for (std::size_t i = 0; i < s.size(); ++i) t.add({s.dates()[i].iso(), s.ticker(), num(s.prices()[i])});
    return t;
}

inline Table plot_cumulative(const Inputs& in) {
    Table t("plot_cumulative_returns", "Cumulative returns since the first return date, long format",
            {{"date", "date", "trading day"}, {"series", "string", "ticker"}, {"value", "number", "cumulative return"}});
    for (const auto& r : in.returns) {
        auto cum = to_cumulative(r);
        for (std::size_t i = 0; i < cum.values.size(); ++i) t.add({cum.dates[i].iso(), cum.ticker, num(cum.values[i])});
    }
    return t;
}

/// Both series in decimal return units so they share one axis.
inline Table plot_dispersion(const ReturnPanel& panel, const RunConfig& c) {
    Table t("plot_dispersion", "CSSD and CSAD series in decimal return units, long format",
            {{"date", "date", "trading day"}, {"series", "string", "CSSD | CSAD"}, {"value", "number", "dispersion"}});
    auto cssd = cssd_series(panel, c.herding.basis);
    auto csad = csad_series(panel, c.herding.basis);
    for (std::size_t i = 0; i < cssd.values.size(); ++i) t.add({cssd.dates[i].iso(), "CSSD", num(cssd.values[i])});
    for (std::size_t i = 0; i < csad.values.size(); ++i) t.add({csad.dates[i].iso(), "CSAD", num(csad.values[i])});
    return t;
}

namespace detail {

inline const ReturnPanel& require_panel(const Inputs& in) {
    if (!in.panel) throw InvalidInput("panel unavailable: " + in.panel_error);
    return *in.panel;
}

inline std::vector<Table> stage_tables(Stage stage, const Inputs& in, const RunConfig& c,
                                       std::vector<std::string>& issues) {
    switch (stage) {
        case Stage::describe: return {describe_table(in, issues)};
        case Stage::tests: return {tests_table(in, c, issues)};
        case Stage::dependence: {
            const auto& p = require_panel(in);
            DependenceSettings ds{c.dependence.bins};
            std::vector<std::string> names;
            std::vector<std::vector<double>> cum;
            for (std::size_t i = 0; i < p.n_assets(); ++i) {
                names.push_back(p.tickers()[i]);
                cum.push_back(to_cumulative(p.series(i)).values);
            }
            std::vector<std::span<const double>> cum_views(cum.begin(), cum.end());
            return {dependence_table("dependence_mi_daily", "Mutual information between daily returns",
                                     dependence_matrix(p, DependenceMethod::mutual_information, ds)),
                    dependence_table("dependence_mi_cumulative", "Mutual information between cumulative returns",
                                     dependence_matrix(names, cum_views, DependenceMethod::mutual_information, ds)),
                    dependence_table("dependence_tau", "Kendall tau-b between daily returns",
                                     dependence_matrix(p, DependenceMethod::kendall_tau, ds))};
        }
        case Stage::cpd: {
            std::vector<Table> out{changepoint_table(in, c, issues)};
            if (!c.cpd.sweep.empty()) out.push_back(penalty_sweep(in, c, c.cpd.sweep, &issues));
            return out;
        }
        case Stage::herding: {
            const auto& p = require_panel(in);
            return {herding_full_table(p, c, issues),
                    herding_windows_table("herding_events", "Herding regressions before and after each anchor date", p,
                                          c, split_anchors(c, p.dates()), {0}, issues)};
        }
        case Stage::sensitivity: {
            const auto& p = require_panel(in);
            return {herding_windows_table("sensitivity", "Herding regressions on k-month windows around each anchor", p,
                                          c, c.herding.anchors, c.herding.horizons, issues)};
        }
        case Stage::plots: {
            std::vector<Table> out{plot_prices(in), plot_cumulative(in)};
            if (in.panel) out.push_back(plot_dispersion(*in.panel, c));
            else issues.push_back("plot_dispersion: panel unavailable: " + in.panel_error);
            return out;
        }
    }
    return {};
}

inline std::string diagnostics_log(const std::vector<RowDiagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) out += fmt::format("line {}: column {}: {}\n", d.line, d.column, d.reason);
    return out;
}

}  // namespace detail

/// Runs one stage and writes its tables. A stage that throws writes nothing.
inline StageStatus run_stage(Stage stage, const Inputs& in, const RunConfig& c, detail::BundleWriter& w) {
    StageStatus st;
    st.stage = stage;
    try {
        auto tables = detail::stage_tables(stage, in, c, st.messages);
        for (const auto& t : tables) w.table(t);
        st.state = st.messages.empty() ? StageState::ok : StageState::partial;
    } catch (const std::exception& e) {
        st.state = StageState::failed;
        st.messages = {e.what()};
    }
    return st;
}

/// Lists every file under the output directory (except the manifest) with its
/// digest and writes manifest.json.
inline ReportBundle finalize(const RunConfig& c, std::vector<StageStatus> stages) {
    namespace fs = std::filesystem;
    ReportBundle b;
    b.output_dir = c.output_dir;
    b.config_sha256 = sha256_hex(to_json(c).dump());
    b.stages = std::move(stages);
    for (const auto& e : fs::recursive_directory_iterator(c.output_dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), c.output_dir).generic_string();
        if (rel == "manifest.json") continue;
        const auto bytes = read_file(e.path().string());
        b.files.push_back({rel, sha256_hex(bytes), bytes.size()});
    }
    std::sort(b.files.begin(), b.files.end(), [](const auto& x, const auto& y) { return x.path < y.path; });

    nlohmann::json m;
    m["software"] = {{"name", "comove"}, {"version", std::string(kVersion)}};
    m["config_sha256"] = b.config_sha256;
    m["config"] = to_json(c);
    m["complete"] = b.complete();
    m["stages"] = nlohmann::json::array();
    for (const auto& s : b.stages)
        m["stages"].push_back(
            {{"stage", std::string(to_string(s.stage))}, {"status", std::string(to_string(s.state))}, {"messages", s.messages}});
    m["files"] = nlohmann::json::array();
    for (const auto& f : b.files) m["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    detail::BundleWriter(c.output_dir).write("manifest.json", m.dump(2) + "\n");
    return b;
}

/// Runs the given stages in dependency order against one loaded input set.
inline ReportBundle run_stages(const RunConfig& c, std::vector<Stage> stages, const Progress& progress = {}) {
    std::sort(stages.begin(), stages.end());
    stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
    auto say = [&](const std::string& s) {
        if (progress) progress(s);
    };
    say("loading " + c.data_path);
    Inputs in = prepare(c, stages);
    detail::BundleWriter w(c.output_dir);
    w.write("ingest_diagnostics.log", detail::diagnostics_log(in.diagnostics));
    std::vector<StageStatus> statuses;
    for (Stage s : stages) {
        say("stage " + std::string(to_string(s)));
        statuses.push_back(run_stage(s, in, c, w));
        const auto& st = statuses.back();
        say("  " + std::string(to_string(st.state)) +
            (st.messages.empty() ? "" : " (" + std::to_string(st.messages.size()) + " issue(s))"));
        for (const auto& m : st.messages) say("    " + m);
    }
    return finalize(c, std::move(statuses));
}

inline ReportBundle run_all(const RunConfig& c, const Progress& progress = {}) {
    return run_stages(c, {std::begin(kAllStages), std::end(kAllStages)}, progress);
}

inline ReportBundle run_stage(const RunConfig& c, Stage stage, const Progress& progress = {}) {
    return run_stages(c, {stage}, progress);
}

}  // namespace comove::report
