#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "comove/date.hpp"
#include "comove/error.hpp"

namespace comove {

enum class ReturnConvention { log, simple };

inline std::string_view to_string(ReturnConvention c) { return c == ReturnConvention::log ? "log" : "simple"; }

/// Daily adjusted closing prices for one ticker.
class PriceSeries {
public:
    PriceSeries(std::string ticker, std::vector<Date> dates, std::vector<double> prices)
        : ticker_(std::move(ticker)), dates_(std::move(dates)), prices_(std::move(prices)) {
        if (dates_.size() != prices_.size())
            throw InvalidInput("PriceSeries " + ticker_ + ": dates and prices differ in length");
        for (std::size_t i = 1; i < dates_.size(); ++i)
            if (!(dates_[i - 1] < dates_[i]))
                throw InvalidInput("PriceSeries " + ticker_ + ": dates not strictly increasing at " + dates_[i].iso());
        for (std::size_t i = 0; i < prices_.size(); ++i)
            if (!std::isfinite(prices_[i]) || prices_[i] <= 0.0)
                throw InvalidInput("PriceSeries " + ticker_ + ": non-positive price on " + dates_[i].iso());
    }

    [[nodiscard]] const std::string& ticker() const { return ticker_; }
    [[nodiscard]] const std::vector<Date>& dates() const { return dates_; }
    [[nodiscard]] const std::vector<double>& prices() const { return prices_; }
    [[nodiscard]] std::size_t size() const { return prices_.size(); }

    friend bool operator==(const PriceSeries&, const PriceSeries&) = default;

private:
    std::string ticker_;
    std::vector<Date> dates_;
    std::vector<double> prices_;
};

/// Per-period returns. `dates()[t]` is the closing date of the period ending at t,
/// so a series built from n prices carries prices' dates 1..n-1.
class ReturnSeries {
public:
    ReturnSeries(std::string ticker, std::vector<Date> dates, std::vector<double> returns,
                 ReturnConvention convention = ReturnConvention::log)
        : ticker_(std::move(ticker)), dates_(std::move(dates)), values_(std::move(returns)), convention_(convention) {
        if (dates_.size() != values_.size())
            throw InvalidInput("ReturnSeries " + ticker_ + ": dates and returns differ in length");
        for (double v : values_)
            if (!std::isfinite(v)) throw InvalidInput("ReturnSeries " + ticker_ + ": non-finite return");
    }

    [[nodiscard]] const std::string& ticker() const { return ticker_; }
    [[nodiscard]] const std::vector<Date>& dates() const { return dates_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] std::span<const double> view() const { return values_; }
    [[nodiscard]] ReturnConvention convention() const { return convention_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }

private:
    std::string ticker_;
    std::vector<Date> dates_;
    std::vector<double> values_;
    ReturnConvention convention_;
};

/// Compounded (simple) or summed (log) return since the start of a ReturnSeries.
struct CumulativeReturnSeries {
    std::string ticker;
    std::vector<Date> dates;
    std::vector<double> values;
};

/// Rectangular date x ticker return matrix plus the benchmark on the same axis.
class ReturnPanel {
public:
    ReturnPanel(std::vector<Date> dates, std::vector<std::string> tickers, std::vector<std::vector<double>> columns,
                ReturnSeries market)
        : dates_(std::move(dates)), tickers_(std::move(tickers)), columns_(std::move(columns)), market_(std::move(market)) {
        if (columns_.size() != tickers_.size()) throw InvalidInput("ReturnPanel: one column per ticker required");
        for (const auto& c : columns_)
            if (c.size() != dates_.size()) throw InvalidInput("ReturnPanel: ragged column");
        if (market_.dates() != dates_) throw InvalidInput("ReturnPanel: market dates differ from panel axis");
    }

    [[nodiscard]] const std::vector<Date>& dates() const { return dates_; }
    [[nodiscard]] const std::vector<std::string>& tickers() const { return tickers_; }
    [[nodiscard]] std::size_t n_dates() const { return dates_.size(); }
    [[nodiscard]] std::size_t n_assets() const { return tickers_.size(); }
    [[nodiscard]] std::span<const double> column(std::size_t i) const { return columns_.at(i); }
    [[nodiscard]] double at(std::size_t t, std::size_t i) const { return columns_[i][t]; }
    [[nodiscard]] const ReturnSeries& market() const { return market_; }

    [[nodiscard]] ReturnSeries series(std::size_t i) const {
        return ReturnSeries(tickers_.at(i), dates_, columns_.at(i), market_.convention());
    }

    /// Rows [lo, hi) of the panel.
    [[nodiscard]] ReturnPanel slice(std::size_t lo, std::size_t hi) const {
        if (lo > hi || hi > dates_.size()) throw InvalidInput("ReturnPanel::slice: bad range");
        auto cut = [&](const std::vector<double>& v) { return std::vector<double>(v.begin() + lo, v.begin() + hi); };
        std::vector<std::vector<double>> cols;
        cols.reserve(columns_.size());
        for (const auto& c : columns_) cols.push_back(cut(c));
        std::vector<Date> d(dates_.begin() + lo, dates_.begin() + hi);
        ReturnSeries m(market_.ticker(), d, cut(market_.values()), market_.convention());
        return ReturnPanel(std::move(d), tickers_, std::move(cols), std::move(m));
    }

    /// Multiplies every asset and market return by `factor` (e.g. 100 for percent units).
    [[nodiscard]] ReturnPanel scaled(double factor) const {
        auto cols = columns_;
        for (auto& c : cols)
            for (double& v : c) v *= factor;
        auto m = market_.values();
        for (double& v : m) v *= factor;
        return ReturnPanel(dates_, tickers_, std::move(cols), ReturnSeries(market_.ticker(), dates_, std::move(m), market_.convention()));
    }

private:
    std::vector<Date> dates_;
    std::vector<std::string> tickers_;
    std::vector<std::vector<double>> columns_;
    ReturnSeries market_;
};

// ---------------------------------------------------------------------------
// CSV ingestion

enum class CsvLayout { wide, long_format };

/// Column mapping for price files.
///
/// Wide layout: one date column plus one price column per ticker. `columns`
/// restricts and orders the tickers that are read (empty = every non-date column);
/// `rename` maps a header name to the ticker label used downstream.
/// Long layout: one row per (date, ticker, price) triple.
struct CsvSchema {
    CsvLayout layout = CsvLayout::wide;
    std::string date_column = "date";
    std::vector<std::string> columns;
    std::map<std::string, std::string> rename;
    std::string ticker_column = "ticker";
    std::string price_column = "price";
    char delimiter = ',';
};

struct RowDiagnostic {
    std::size_t line = 0;  // 1-based line number in the file, header is line 1
    std::string column;
    std::string reason;
};

struct LoadResult {
    std::vector<PriceSeries> series;
    std::vector<RowDiagnostic> diagnostics;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_number(std::string_view s) {
    std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

struct Cell {
    Date date;
    double price;
    std::size_t line;
};

inline PriceSeries finish_series(const std::string& ticker, std::vector<Cell>& cells) {
    if (cells.empty()) throw DataError("series " + ticker + " has no valid rows");
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.date < b.date; });
    std::vector<Date> dates;
    std::vector<double> prices;
    dates.reserve(cells.size());
    prices.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0 && cells[i].date == cells[i - 1].date)
            throw DataError("series " + ticker + ": duplicate date " + cells[i].date.iso() + " (lines " +
                            std::to_string(cells[i - 1].line) + " and " + std::to_string(cells[i].line) + ")");
        dates.push_back(cells[i].date);
        prices.push_back(cells[i].price);
    }
    return PriceSeries(ticker, std::move(dates), std::move(prices));
}

}  // namespace detail

/// Reads a price file. Rows with an unparseable date are rejected whole; cells
/// with a missing, non-numeric or non-positive price are rejected for that ticker
/// only. Every rejection is reported in `diagnostics`. Rows need not be sorted.
inline LoadResult load_csv(std::istream& in, const CsvSchema& schema = {}) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: no header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    auto header = detail::split_csv_line(line, schema.delimiter);
    for (auto& h : header) h = detail::trim(h);

    auto index_of = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError("malformed header: column '" + name + "' not found");
        return static_cast<std::size_t>(it - header.begin());
    };
    {
        std::set<std::string> seen;
        for (const auto& h : header)
            if (!h.empty() && !seen.insert(h).second) throw DataError("malformed header: duplicate column '" + h + "'");
    }
    const std::size_t date_col = index_of(schema.date_column);

    LoadResult result;
    auto label = [&](const std::string& col) {
        auto it = schema.rename.find(col);
        return it == schema.rename.end() ? col : it->second;
    };

    if (schema.layout == CsvLayout::wide) {
        std::vector<std::size_t> cols;
        if (schema.columns.empty()) {
            for (std::size_t i = 0; i < header.size(); ++i)
                if (i != date_col && !header[i].empty()) cols.push_back(i);
        } else {
            for (const auto& c : schema.columns) cols.push_back(index_of(c));
        }
        if (cols.empty()) throw DataError("malformed header: no ticker columns");
        std::vector<std::vector<detail::Cell>> cells(cols.size());
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (detail::trim(line).empty()) continue;
            auto fields = detail::split_csv_line(line, schema.delimiter);
            auto date = date_col < fields.size() ? Date::parse(fields[date_col]) : std::nullopt;
            if (!date) {
                result.diagnostics.push_back({lineno, schema.date_column, "unparseable date"});
                continue;
            }
            for (std::size_t k = 0; k < cols.size(); ++k) {
                const std::string& name = header[cols[k]];
                auto v = cols[k] < fields.size() ? detail::parse_number(fields[cols[k]]) : std::nullopt;
                if (!v) {
                    result.diagnostics.push_back({lineno, name, "missing or non-numeric price"});
                } else if (!std::isfinite(*v) || *v <= 0.0) {
                    result.diagnostics.push_back({lineno, name, "non-positive price"});
                } else {
                    cells[k].push_back({*date, *v, lineno});
                }
            }
        }
        for (std::size_t k = 0; k < cols.size(); ++k)
            result.series.push_back(detail::finish_series(label(header[cols[k]]), cells[k]));
    } else {
        const std::size_t tcol = index_of(schema.ticker_column);
        const std::size_t pcol = index_of(schema.price_column);
        std::map<std::string, std::vector<detail::Cell>> by_ticker;
        std::vector<std::string> order;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (detail::trim(line).empty()) continue;
            auto fields = detail::split_csv_line(line, schema.delimiter);
            if (fields.size() <= std::max({date_col, tcol, pcol})) {
                result.diagnostics.push_back({lineno, "", "too few fields"});
                continue;
            }
            auto date = Date::parse(fields[date_col]);
            if (!date) {
                result.diagnostics.push_back({lineno, schema.date_column, "unparseable date"});
                continue;
            }
            std::string ticker = detail::trim(fields[tcol]);
            if (!schema.columns.empty() &&
                std::find(schema.columns.begin(), schema.columns.end(), ticker) == schema.columns.end())
                continue;
            auto v = detail::parse_number(fields[pcol]);
            if (!v) {
                result.diagnostics.push_back({lineno, ticker, "missing or non-numeric price"});
                continue;
            }
            if (!std::isfinite(*v) || *v <= 0.0) {
                result.diagnostics.push_back({lineno, ticker, "non-positive price"});
                continue;
            }
            if (!by_ticker.count(ticker)) order.push_back(ticker);
            by_ticker[ticker].push_back({*date, *v, lineno});
        }
        if (!schema.columns.empty()) order = schema.columns;
        if (order.empty()) throw DataError("no data rows");
        for (const auto& t : order) result.series.push_back(detail::finish_series(label(t), by_ticker[t]));
    }
    return result;
}

inline LoadResult load_csv(const std::string& path, const CsvSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return load_csv(in, schema);
}

/// Restricts every series to the intersection of their date sets.
inline std::vector<PriceSeries> align(const std::vector<PriceSeries>& series) {
    if (series.size() < 2) throw InvalidInput("align: need at least two series");
    std::vector<Date> common = series.front().dates();
    for (std::size_t k = 1; k < series.size(); ++k) {
        std::vector<Date> next;
        std::set_intersection(common.begin(), common.end(), series[k].dates().begin(), series[k].dates().end(),
                              std::back_inserter(next));
        common = std::move(next);
    }
    if (common.empty()) throw DataError("align: series share no dates");
    std::vector<PriceSeries> out;
    out.reserve(series.size());
    for (const auto& s : series) {
        std::vector<double> prices;
        prices.reserve(common.size());
        std::size_t j = 0;
        for (std::size_t i = 0; i < s.size() && j < common.size(); ++i)
            if (s.dates()[i] == common[j]) {
                prices.push_back(s.prices()[i]);
                ++j;
            }
        out.emplace_back(s.ticker(), common, std::move(prices));
    }
    return out;
}

inline ReturnSeries to_returns(const PriceSeries& s, ReturnConvention convention = ReturnConvention::log) {
    if (s.size() < 2) throw InvalidInput("to_returns: " + s.ticker() + " needs at least two prices");
    const auto& p = s.prices();
    std::vector<double> r(p.size() - 1);
    for (std::size_t t = 0; t + 1 < p.size(); ++t)
        r[t] = convention == ReturnConvention::log ? std::log(p[t + 1] / p[t]) : p[t + 1] / p[t] - 1.0;
    return ReturnSeries(s.ticker(), std::vector<Date>(s.dates().begin() + 1, s.dates().end()), std::move(r), convention);
}

inline CumulativeReturnSeries to_cumulative(const ReturnSeries& r) {
    if (r.size() == 0) throw InvalidInput("to_cumulative: empty series");
    std::vector<double> out(r.size());
    if (r.convention() == ReturnConvention::log) {
        double acc = 0.0;
        for (std::size_t t = 0; t < r.size(); ++t) out[t] = acc += r.values()[t];
    } else {
        double growth = 1.0;
        for (std::size_t t = 0; t < r.size(); ++t) {
            growth *= 1.0 + r.values()[t];
            out[t] = growth - 1.0;
        }
    }
    return {r.ticker(), r.dates(), std::move(out)};
}

/// Builds a panel from price series that already share one date axis. The series
/// named `market_ticker` becomes the benchmark; `assets` selects and orders the
/// remaining columns (empty = every other series, in input order).
inline ReturnPanel make_panel(const std::vector<PriceSeries>& aligned, const std::string& market_ticker,
                              ReturnConvention convention = ReturnConvention::log,
                              const std::vector<std::string>& assets = {}) {
    const PriceSeries* market = nullptr;
    for (const auto& s : aligned)
        if (s.ticker() == market_ticker) market = &s;
    if (!market) throw InvalidInput("make_panel: market ticker " + market_ticker + " not present");
    std::vector<const PriceSeries*> chosen;
    if (assets.empty()) {
        for (const auto& s : aligned)
            if (&s != market) chosen.push_back(&s);
    } else {
        for (const auto& a : assets) {
            auto it = std::find_if(aligned.begin(), aligned.end(), [&](const PriceSeries& s) { return s.ticker() == a; });
            if (it == aligned.end()) throw InvalidInput("make_panel: ticker " + a + " not present");
            chosen.push_back(&*it);
        }
    }
    if (chosen.empty()) throw InvalidInput("make_panel: no asset columns");
    ReturnSeries m = to_returns(*market, convention);
    std::vector<std::string> tickers;
    std::vector<std::vector<double>> cols;
    for (const auto* s : chosen) {
        if (s->dates() != market->dates()) throw InvalidInput("make_panel: series " + s->ticker() + " not aligned");
        tickers.push_back(s->ticker());
        cols.push_back(to_returns(*s, convention).values());
    }
    auto axis = m.dates();
    return ReturnPanel(std::move(axis), std::move(tickers), std::move(cols), std::move(m));
}

}  // namespace comove
