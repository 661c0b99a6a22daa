#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "comove/ingest.hpp"

using namespace comove;

namespace {

LoadResult load(const std::string& text, const CsvSchema& schema = {}) {
    std::istringstream in(text);
    return load_csv(in, schema);
}

PriceSeries series(const std::string& name, std::vector<Date> dates, std::vector<double> prices) {
    return PriceSeries(name, std::move(dates), std::move(prices));
}

}  // namespace

TEST(LoadCsv, TwoRowReadBack) {
    auto r = load("date,LIT\n2014-03-31,100\n2014-04-01,101");
    ASSERT_EQ(r.series.size(), 1u);
    const auto& s = r.series[0];
    EXPECT_EQ(s.ticker(), "LIT");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.dates()[0], Date(2014, 3, 31));
    EXPECT_EQ(s.dates()[1], Date(2014, 4, 1));
    EXPECT_EQ(s.prices()[0], 100.0);
    EXPECT_EQ(s.prices()[1], 101.0);
    EXPECT_TRUE(r.diagnostics.empty());
}

TEST(LoadCsv, ZeroPriceRejectedWithLineNumber) {
    auto r = load("date,LIT,SPX\n2014-03-31,100,1800\n2014-04-01,0,1810\n2014-04-02,102,1820\n");
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].line, 3u);
    EXPECT_EQ(r.diagnostics[0].column, "LIT");
    EXPECT_EQ(r.series[0].size(), 2u);
    EXPECT_EQ(r.series[1].size(), 3u);  // other tickers keep the row
}

TEST(LoadCsv, BadDateRejectsWholeRow) {
    auto r = load("date,A,B\n2014-03-31,1,2\nnot-a-date,3,4\n2014-04-02,5,6\n");
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].line, 3u);
    EXPECT_EQ(r.series[0].size(), 2u);
    EXPECT_EQ(r.series[1].size(), 2u);
}

TEST(LoadCsv, NegativeAndMissingPricesDiagnosed) {
    auto r = load("date,A\n2014-03-31,1\n2014-04-01,-2\n2014-04-02,\n2014-04-03,abc\n2014-04-04,4\n");
    EXPECT_EQ(r.diagnostics.size(), 3u);
    EXPECT_EQ(r.series[0].size(), 2u);
}

TEST(LoadCsv, UnsortedRowsAreOrdered) {
    auto r = load("date,A\n2014-04-02,3\n2014-03-31,1\n2014-04-01,2\n");
    EXPECT_EQ(r.series[0].prices(), (std::vector<double>{1, 2, 3}));
}

TEST(LoadCsv, HandlesBomQuotesAndCrlf) {
    auto r = load("\xEF\xBB\xBF\"date\",\"A\"\r\n\"2014-03-31\",\"1.5\"\r\n2014-04-01,2\r\n");
    ASSERT_EQ(r.series.size(), 1u);
    EXPECT_EQ(r.series[0].ticker(), "A");
    EXPECT_EQ(r.series[0].prices()[0], 1.5);
}

TEST(LoadCsv, ColumnSelectionAndRename) {
    CsvSchema schema;
    schema.date_column = "Date";
    schema.columns = {"^GSPC"};
    schema.rename = {{"^GSPC", "SPX"}};
    auto r = load("Date,LIT,^GSPC\n2014-03-31,1,2\n2014-04-01,3,4\n", schema);
    ASSERT_EQ(r.series.size(), 1u);
    EXPECT_EQ(r.series[0].ticker(), "SPX");
    EXPECT_EQ(r.series[0].prices()[1], 4.0);
}

TEST(LoadCsv, LongLayout) {
    CsvSchema schema;
    schema.layout = CsvLayout::long_format;
    schema.price_column = "close";
    auto r = load("date,ticker,close\n2014-03-31,A,1\n2014-03-31,B,10\n2014-04-01,A,2\n2014-04-01,B,0\n", schema);
    ASSERT_EQ(r.series.size(), 2u);
    EXPECT_EQ(r.series[0].ticker(), "A");
    EXPECT_EQ(r.series[0].size(), 2u);
    EXPECT_EQ(r.series[1].size(), 1u);
    EXPECT_EQ(r.diagnostics.size(), 1u);
}

TEST(LoadCsv, Errors) {
    EXPECT_THROW(load(""), DataError);
    EXPECT_THROW(load("when,A\n2014-03-31,1\n"), DataError);             // no date column
    EXPECT_THROW(load("date\n2014-03-31\n"), DataError);                 // no ticker column
    EXPECT_THROW(load("date,A,A\n2014-03-31,1,2\n"), DataError);         // duplicate column
    EXPECT_THROW(load("date,A\n2014-03-31,0\n"), DataError);             // empty series
    EXPECT_THROW(load("date,A\n2014-03-31,1\n2014-03-31,2\n"), DataError);  // duplicate date
    EXPECT_THROW(load_csv(std::string("/nonexistent/prices.csv")), DataError);
}

TEST(PriceSeries, InvariantsEnforced) {
    EXPECT_THROW(series("A", {Date(2020, 1, 2), Date(2020, 1, 1)}, {1, 2}), InvalidInput);
    EXPECT_THROW(series("A", {Date(2020, 1, 1), Date(2020, 1, 1)}, {1, 2}), InvalidInput);
    EXPECT_THROW(series("A", {Date(2020, 1, 1)}, {-1}), InvalidInput);
    EXPECT_THROW(series("A", {Date(2020, 1, 1)}, {1, 2}), InvalidInput);
}

TEST(Align, IdenticalDatesUnchanged) {
    std::vector<Date> d{Date(2020, 1, 1), Date(2020, 1, 2), Date(2020, 1, 3)};
    auto out = align({series("A", d, {1, 2, 3}), series("B", d, {4, 5, 6})});
    EXPECT_EQ(out[0], series("A", d, {1, 2, 3}));
    EXPECT_EQ(out[1], series("B", d, {4, 5, 6}));
}

TEST(Align, ExtraLeadingDateDropped) {
    auto a = series("A", {Date(2019, 12, 31), Date(2020, 1, 1), Date(2020, 1, 2)}, {9, 1, 2});
    auto b = series("B", {Date(2020, 1, 1), Date(2020, 1, 2)}, {3, 4});
    auto out = align({a, b});
    EXPECT_EQ(out[0].dates(), b.dates());
    EXPECT_EQ(out[0].prices(), (std::vector<double>{1, 2}));
}

TEST(Align, Errors) {
    auto a = series("A", {Date(2020, 1, 1)}, {1});
    auto b = series("B", {Date(2020, 1, 2)}, {1});
    EXPECT_THROW(align({a}), InvalidInput);
    EXPECT_THROW(align({a, b}), DataError);  // empty intersection
}

// Ragged random series against a map-based intersection oracle.
TEST(Align, MatchesIntersectionOracleAndIsIdempotent) {
    std::mt19937 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<PriceSeries> raw;
        for (int k = 0; k < 8; ++k) {
            std::vector<Date> d;
            std::vector<double> p;
            const int start = int(rng() % 40);
            for (int day = start; day < 200; ++day)
                if (rng() % 10 != 0) {
                    d.emplace_back(Date(2020, 1, 1).sys_days() + std::chrono::days{day});
                    p.push_back(1.0 + double(rng() % 1000));
                }
            raw.push_back(series("T" + std::to_string(k), d, p));
        }
        std::map<long, int> count;
        for (const auto& s : raw)
            for (const auto& d : s.dates()) ++count[d.serial()];
        std::vector<long> expected;
        for (auto [day, c] : count)
            if (c == 8) expected.push_back(day);

        auto out = align(raw);
        for (std::size_t k = 0; k < raw.size(); ++k) {
            ASSERT_EQ(out[k].size(), expected.size());
            for (std::size_t i = 0; i < expected.size(); ++i) {
                EXPECT_EQ(out[k].dates()[i].serial(), expected[i]);
                // every cell traces to an input (date, ticker) pair
                auto it = std::find(raw[k].dates().begin(), raw[k].dates().end(), out[k].dates()[i]);
                EXPECT_EQ(out[k].prices()[i], raw[k].prices()[std::size_t(it - raw[k].dates().begin())]);
            }
        }
        EXPECT_EQ(align(out), out);
    }
}

TEST(Returns, Conventions) {
    auto s = series("A", {Date(2020, 1, 1), Date(2020, 1, 2)}, {100, 110});
    auto lr = to_returns(s, ReturnConvention::log);
    ASSERT_EQ(lr.size(), 1u);
    EXPECT_DOUBLE_EQ(lr.values()[0], std::log(1.1));
    EXPECT_EQ(lr.dates()[0], Date(2020, 1, 2));
    EXPECT_NEAR(to_returns(s, ReturnConvention::simple).values()[0], 0.10, 1e-15);

    auto flat = series("B", {Date(2020, 1, 1), Date(2020, 1, 2), Date(2020, 1, 3)}, {5, 5, 5});
    const auto flat_r = to_returns(flat);
    for (double r : flat_r.values()) EXPECT_EQ(r, 0.0);
    EXPECT_THROW(to_returns(series("C", {Date(2020, 1, 1)}, {1})), InvalidInput);
}

TEST(Cumulative, SimpleCompounding) {
    std::vector<Date> d{Date(2020, 1, 2), Date(2020, 1, 3)};
    ReturnSeries one("A", {d[0]}, {0.10}, ReturnConvention::simple);
    EXPECT_NEAR(to_cumulative(one).values[0], 0.10, 1e-15);
    ReturnSeries two("A", d, {0.10, -0.10}, ReturnConvention::simple);
    auto c = to_cumulative(two);
    EXPECT_NEAR(c.values[0], 0.10, 1e-15);
    EXPECT_NEAR(c.values[1], -0.01, 1e-15);
}

TEST(Cumulative, LogRoundTrip) {
    std::mt19937_64 rng(3);
    std::lognormal_distribution<double> step(0.0, 0.02);
    std::vector<Date> d;
    std::vector<double> p{100.0};
    d.push_back(Date(2020, 1, 1));
    for (int i = 1; i < 500; ++i) {
        p.push_back(p.back() * step(rng));
        d.emplace_back(d.back().sys_days() + std::chrono::days{1});
    }
    auto s = series("A", d, p);
    auto c = to_cumulative(to_returns(s, ReturnConvention::log));
    for (std::size_t t = 0; t < c.values.size(); ++t) EXPECT_NEAR(c.values[t], std::log(p[t + 1] / p[0]), 1e-12);
}

TEST(Panel, BuildsRectangularPanelAgainstMarket) {
    std::vector<Date> d{Date(2020, 1, 1), Date(2020, 1, 2), Date(2020, 1, 3)};
    std::vector<PriceSeries> aligned{series("A", d, {1, 2, 4}), series("SPX", d, {10, 11, 12}),
                                     series("B", d, {3, 3, 3})};
    auto panel = make_panel(aligned, "SPX");
    EXPECT_EQ(panel.tickers(), (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(panel.n_dates(), 2u);
    EXPECT_EQ(panel.market().dates(), panel.dates());
    EXPECT_DOUBLE_EQ(panel.at(1, 0), std::log(2.0));
    EXPECT_EQ(panel.at(0, 1), 0.0);

    auto chosen = make_panel(aligned, "SPX", ReturnConvention::log, {"B"});
    EXPECT_EQ(chosen.tickers(), (std::vector<std::string>{"B"}));
    EXPECT_THROW(make_panel(aligned, "QQQ"), InvalidInput);
    EXPECT_THROW(make_panel(aligned, "SPX", ReturnConvention::log, {"Z"}), InvalidInput);

    auto sub = panel.slice(1, 2);
    EXPECT_EQ(sub.n_dates(), 1u);
    EXPECT_EQ(sub.dates()[0], Date(2020, 1, 3));
    auto scaled = panel.scaled(100.0);
    EXPECT_DOUBLE_EQ(scaled.at(1, 0), 100.0 * panel.at(1, 0));
    EXPECT_DOUBLE_EQ(scaled.market().values()[0], 100.0 * panel.market().values()[0]);
}
