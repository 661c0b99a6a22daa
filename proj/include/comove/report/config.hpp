#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "comove/changepoint.hpp"
#include "comove/date.hpp"
#include "comove/error.hpp"
#include "comove/herding.hpp"
#include "comove/ingest.hpp"
#include "comove/stat_tests.hpp"

namespace comove::report {

struct TestsConfig {
    std::size_t arch_lags = 12;
    std::optional<std::size_t> adf_max_lag;  // absent: floor(12 (n/100)^{1/4})
    LagSelection adf_selection = LagSelection::aic;
};

struct DependenceConfig {
    std::size_t bins = 10;
};

struct CpdConfig {
    CostKind cost = CostKind::normal_mean_var;
    PenaltyKind penalty = PenaltyKind::bic;
    double penalty_value = 0.0;  // used when penalty == manual
    std::size_t min_seg = kDefaultMinSeg;
    std::vector<double> sweep;  // absolute penalty values; empty disables the sweep table
    std::vector<Date> target_dates{Date(2015, 7, 23), Date(2020, 3, 17), Date(2020, 12, 1)};
    std::size_t tolerance_days = 5;  // trading days
};

struct HerdingConfig {
    std::vector<double> tail_fractions{0.05, 0.01};
    DeviationBasis basis = DeviationBasis::market;
    double cssd_scale = 100.0;
    double csad_scale = 1.0;
    bool hac = false;
    std::size_t hac_bandwidth = 0;
    double alpha = 0.05;
    std::vector<Date> anchors{Date(2015, 7, 23), Date(2020, 3, 17), Date(2020, 12, 1), Date(2022, 2, 22),
                              Date(2023, 10, 7)};
    std::vector<int> horizons{2, 4, 6};
    std::size_t min_window = 30;

    [[nodiscard]] HerdingSettings settings(double tail) const {
        HerdingSettings s;
        s.tail_fraction = tail;
        s.basis = basis;
        s.cssd_scale = cssd_scale;
        s.csad_scale = csad_scale;
        s.inference = {hac, hac_bandwidth, alpha};
        s.min_window = min_window;
        return s;
    }
};

struct RunConfig {
    std::string data_path;
    CsvSchema schema;
    std::vector<std::string> tickers;  // empty: every column except the market
    std::string market_ticker = "SPX";
    ReturnConvention returns = ReturnConvention::log;
    std::string output_dir = "comove-out";
    std::uint64_t seed = 0;
    TestsConfig tests;
    DependenceConfig dependence;
    CpdConfig cpd;
    HerdingConfig herding;
};

namespace detail {

using nlohmann::json;

class Reader {
public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    void keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
        if (!obj.is_object()) {
            errors_.push_back(where + ": expected an object");
            return;
        }
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!ok.count(it.key())) errors_.push_back(where + ": unknown key '" + it.key() + "'");
    }

    template <class T>
    void get(const json& obj, const char* key, const std::string& where, T& out) {
        if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return;
        try {
            out = obj[key].get<T>();
        } catch (const std::exception&) {
            errors_.push_back(where + "." + key + ": wrong type");
        }
    }

    void dates(const json& obj, const char* key, const std::string& where, std::vector<Date>& out) {
        std::vector<std::string> raw;
        if (!obj.is_object() || !obj.contains(key)) return;
        get(obj, key, where, raw);
        out.clear();
        for (const auto& s : raw) {
            if (auto d = Date::parse(s)) {
                out.push_back(*d);
            } else {
                errors_.push_back(where + "." + key + ": invalid date '" + s + "'");
            }
        }
    }

    void fail(std::string msg) { errors_.push_back(std::move(msg)); }

private:
    std::vector<std::string>& errors_;
};

}  // namespace detail

/// Parses and validates a configuration document. Every problem found is
/// reported in one ConfigError. Relative data paths resolve against `base_dir`.
inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    std::vector<std::string> errors;
    detail::Reader r(errors);
    RunConfig c;
    r.keys(j, "config", {"data", "tickers", "market_ticker", "returns", "output_dir", "seed", "tests", "dependence", "cpd",
                         "herding"});

    if (!j.contains("data")) {
        errors.push_back("config.data: required");
    } else {
        const auto& d = j["data"];
        r.keys(d, "data", {"path", "layout", "date_column", "columns", "rename", "ticker_column", "price_column",
                           "delimiter"});
        r.get(d, "path", "data", c.data_path);
        if (c.data_path.empty()) errors.push_back("data.path: required");
        std::string layout = "wide";
        r.get(d, "layout", "data", layout);
        if (layout == "wide") {
            c.schema.layout = CsvLayout::wide;
        } else if (layout == "long") {
            c.schema.layout = CsvLayout::long_format;
        } else {
            r.fail("data.layout: expected 'wide' or 'long'");
        }
        r.get(d, "date_column", "data", c.schema.date_column);
        r.get(d, "columns", "data", c.schema.columns);
        r.get(d, "rename", "data", c.schema.rename);
        r.get(d, "ticker_column", "data", c.schema.ticker_column);
        r.get(d, "price_column", "data", c.schema.price_column);
        std::string delim = ",";
        r.get(d, "delimiter", "data", delim);
        if (delim.size() != 1) r.fail("data.delimiter: must be a single character");
        else c.schema.delimiter = delim[0];
        if (!c.data_path.empty() && !base_dir.empty() && std::filesystem::path(c.data_path).is_relative())
            c.data_path = (base_dir / c.data_path).lexically_normal().string();
    }
    r.get(j, "tickers", "config", c.tickers);
    r.get(j, "market_ticker", "config", c.market_ticker);
    std::string conv = "log";
    r.get(j, "returns", "config", conv);
    if (conv == "log") c.returns = ReturnConvention::log;
    else if (conv == "simple") c.returns = ReturnConvention::simple;
    else r.fail("config.returns: expected 'log' or 'simple'");
    r.get(j, "output_dir", "config", c.output_dir);
    r.get(j, "seed", "config", c.seed);

    if (j.contains("tests")) {
        const auto& t = j["tests"];
        r.keys(t, "tests", {"arch_lags", "adf_max_lag", "adf_selection"});
        r.get(t, "arch_lags", "tests", c.tests.arch_lags);
        if (t.contains("adf_max_lag") && !t["adf_max_lag"].is_null()) {
            std::size_t m = 0;
            r.get(t, "adf_max_lag", "tests", m);
            c.tests.adf_max_lag = m;
        }
        std::string sel = "aic";
        r.get(t, "adf_selection", "tests", sel);
        if (sel == "aic") c.tests.adf_selection = LagSelection::aic;
        else if (sel == "fixed") c.tests.adf_selection = LagSelection::fixed;
        else r.fail("tests.adf_selection: expected 'aic' or 'fixed'");
    }
    if (c.tests.arch_lags == 0) r.fail("tests.arch_lags: must be positive");

    if (j.contains("dependence")) {
        r.keys(j["dependence"], "dependence", {"bins"});
        r.get(j["dependence"], "bins", "dependence", c.dependence.bins);
    }
    if (c.dependence.bins < 2) r.fail("dependence.bins: must be at least 2");

    if (j.contains("cpd")) {
        const auto& p = j["cpd"];
        r.keys(p, "cpd", {"cost", "penalty", "penalty_value", "min_seg", "sweep", "target_dates", "tolerance_days"});
        std::string cost = "normal_mean_var";
        r.get(p, "cost", "cpd", cost);
        if (cost == "normal_mean_var") c.cpd.cost = CostKind::normal_mean_var;
        else if (cost == "normal_mean") c.cpd.cost = CostKind::normal_mean;
        else if (cost == "l2") c.cpd.cost = CostKind::l2;
        else r.fail("cpd.cost: expected normal_mean_var, normal_mean or l2");
        std::string pen = "bic";
        r.get(p, "penalty", "cpd", pen);
        if (pen == "bic") c.cpd.penalty = PenaltyKind::bic;
        else if (pen == "aic") c.cpd.penalty = PenaltyKind::aic;
        else if (pen == "manual") c.cpd.penalty = PenaltyKind::manual;
        else r.fail("cpd.penalty: expected bic, aic or manual");
        r.get(p, "penalty_value", "cpd", c.cpd.penalty_value);
        r.get(p, "min_seg", "cpd", c.cpd.min_seg);
        r.get(p, "sweep", "cpd", c.cpd.sweep);
        r.dates(p, "target_dates", "cpd", c.cpd.target_dates);
        r.get(p, "tolerance_days", "cpd", c.cpd.tolerance_days);
    }
    if (c.cpd.min_seg == 0) r.fail("cpd.min_seg: must be positive");
    if (!(c.cpd.penalty_value >= 0.0)) r.fail("cpd.penalty_value: must be non-negative");
    for (double v : c.cpd.sweep)
        if (!(v >= 0.0) || !std::isfinite(v)) r.fail("cpd.sweep: penalties must be finite and non-negative");

    if (j.contains("herding")) {
        const auto& h = j["herding"];
        r.keys(h, "herding", {"tail_fractions", "basis", "cssd_scale", "csad_scale", "hac", "hac_bandwidth", "alpha",
                              "anchors", "horizons", "min_window"});
        r.get(h, "tail_fractions", "herding", c.herding.tail_fractions);
        std::string basis = "market";
        r.get(h, "basis", "herding", basis);
        if (basis == "market") c.herding.basis = DeviationBasis::market;
        else if (basis == "cross_sectional_mean") c.herding.basis = DeviationBasis::cross_sectional_mean;
        else r.fail("herding.basis: expected 'market' or 'cross_sectional_mean'");
        r.get(h, "cssd_scale", "herding", c.herding.cssd_scale);
        r.get(h, "csad_scale", "herding", c.herding.csad_scale);
        r.get(h, "hac", "herding", c.herding.hac);
        r.get(h, "hac_bandwidth", "herding", c.herding.hac_bandwidth);
        r.get(h, "alpha", "herding", c.herding.alpha);
        r.dates(h, "anchors", "herding", c.herding.anchors);
        r.get(h, "horizons", "herding", c.herding.horizons);
        r.get(h, "min_window", "herding", c.herding.min_window);
    }
    if (c.herding.tail_fractions.empty()) r.fail("herding.tail_fractions: must not be empty");
    for (double t : c.herding.tail_fractions)
        if (!(t > 0.0 && t <= 0.25)) r.fail("herding.tail_fractions: values must lie in (0, 0.25]");
    for (int m : c.herding.horizons)
        if (m <= 0) r.fail("herding.horizons: month counts must be positive");
    if (!(c.herding.cssd_scale > 0.0) || !(c.herding.csad_scale > 0.0)) r.fail("herding: scales must be positive");
    if (!(c.herding.alpha > 0.0 && c.herding.alpha < 1.0)) r.fail("herding.alpha: must lie in (0, 1)");

    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j, std::filesystem::path(path).parent_path());
}

/// Canonical JSON form (all defaults filled in); its digest identifies a run.
inline nlohmann::json to_json(const RunConfig& c) {
    auto iso = [](const std::vector<Date>& ds) {
        std::vector<std::string> out;
        for (const auto& d : ds) out.push_back(d.iso());
        return out;
    };
    nlohmann::json j;
    j["data"] = {{"path", c.data_path},
                 {"layout", c.schema.layout == CsvLayout::wide ? "wide" : "long"},
                 {"date_column", c.schema.date_column},
                 {"columns", c.schema.columns},
                 {"rename", c.schema.rename},
                 {"ticker_column", c.schema.ticker_column},
                 {"price_column", c.schema.price_column},
                 {"delimiter", std::string(1, c.schema.delimiter)}};
    j["tickers"] = c.tickers;
    j["market_ticker"] = c.market_ticker;
    j["returns"] = std::string(to_string(c.returns));
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    j["tests"] = {{"arch_lags", c.tests.arch_lags},
                  {"adf_max_lag", c.tests.adf_max_lag ? nlohmann::json(*c.tests.adf_max_lag) : nlohmann::json()},
                  {"adf_selection", c.tests.adf_selection == LagSelection::aic ? "aic" : "fixed"}};
    j["dependence"] = {{"bins", c.dependence.bins}};
    j["cpd"] = {{"cost", std::string(to_string(c.cpd.cost))},
                {"penalty", std::string(to_string(c.cpd.penalty))},
                {"penalty_value", c.cpd.penalty_value},
                {"min_seg", c.cpd.min_seg},
                {"sweep", c.cpd.sweep},
                {"target_dates", iso(c.cpd.target_dates)},
                {"tolerance_days", c.cpd.tolerance_days}};
    j["herding"] = {{"tail_fractions", c.herding.tail_fractions},
                    {"basis", std::string(to_string(c.herding.basis))},
                    {"cssd_scale", c.herding.cssd_scale},
                    {"csad_scale", c.herding.csad_scale},
                    {"hac", c.herding.hac},
                    {"hac_bandwidth", c.herding.hac_bandwidth},
                    {"alpha", c.herding.alpha},
                    {"anchors", iso(c.herding.anchors)},
                    {"horizons", c.herding.horizons},
                    {"min_window", c.herding.min_window}};
    return j;
}

}  // namespace comove::report
