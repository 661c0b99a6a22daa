#pragma once

// Synthetic price panel with volatility regimes, used by the demo and the
// pipeline tests. Not part of the library.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "comove/date.hpp"

namespace comove::synthetic {

struct Regime {
    Date from;      // first trading day of the regime
    double vol;     // daily market volatility
    double spread;  // idiosyncratic volatility scale
};

struct PanelSpec {
    Date start{2014, 1, 2};
    Date end{2024, 6, 28};
    std::vector<std::string> assets{"LIT", "COPX", "PICK", "VAW", "IYM", "XME"};
    std::string market = "SPX";
    std::vector<Regime> regimes{{Date(2014, 1, 2), 0.008, 0.8},
                                {Date(2015, 7, 23), 0.014, 1.0},
                                {Date(2020, 3, 17), 0.040, 1.4},
                                {Date(2020, 12, 1), 0.010, 0.9}};
    std::uint64_t seed = 7;
};

struct Panel {
    std::vector<Date> dates;
    std::vector<std::string> tickers;          // market first
    std::vector<std::vector<double>> prices;  // one column per ticker
};

inline std::vector<Date> weekdays(Date from, Date to) {
    std::vector<Date> out;
    for (auto d = from.sys_days(); d <= to.sys_days(); d += std::chrono::days{1}) {
        const std::chrono::weekday wd{d};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.emplace_back(d);
    }
    return out;
}

inline Panel make_panel(const PanelSpec& shape) {
    std::mt19937_64 rng(shape.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Panel p;
    p.dates = weekdays(shape.start, shape.end);
    p.tickers.push_back(shape.market);
    for (const auto& a : shape.assets) p.tickers.push_back(a);
    const std::size_t k = p.tickers.size();
    p.prices.assign(k, std::vector<double>(p.dates.size(), 0.0));
    std::vector<double> level(k, std::log(100.0));
    for (std::size_t t = 0; t < p.dates.size(); ++t) {
        const Regime* r = &shape.regimes.front();
        for (const auto& g : shape.regimes)
            if (g.from <= p.dates[t]) r = &g;
        const double m = 0.0002 + r->vol * z(rng);
        if (t > 0) level[0] += m;
        for (std::size_t i = 1; i < k; ++i) {
            const double beta = 0.8 + 0.1 * double(i);
            const double idio = r->spread * r->vol * (0.6 + 0.05 * double(i)) * z(rng);
            if (t > 0) level[i] += beta * m + idio;
        }
        for (std::size_t i = 0; i < k; ++i) p.prices[i][t] = std::exp(level[i]);
    }
    return p;
}

inline void write_wide_csv(std::ostream& out, const Panel& p) {
    out << "date";
    for (const auto& t : p.tickers) out << ',' << t;
    out << '\n';
    for (std::size_t t = 0; t < p.dates.size(); ++t) {
        out << p.dates[t].iso();
        for (const auto& col : p.prices) out << ',' << fmt::format("{:.6f}", col[t]);
        out << '\n';
    }
}

}  // namespace comove::synthetic
