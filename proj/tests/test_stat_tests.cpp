#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "comove/stat_tests.hpp"

using namespace comove;

namespace {

std::vector<double> gaussian(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> z(0.0, sd);
    std::vector<double> x(n);
    for (auto& v : x) v = z(rng);
    return x;
}

std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n) {
    auto e = gaussian(rng, n);
    for (std::size_t t = 1; t < n; ++t) e[t] += e[t - 1];
    return e;
}

std::vector<double> arch1(std::mt19937_64& rng, std::size_t n, double a0, double a1) {
    std::normal_distribution<double> z;
    std::vector<double> x(n);
    double prev = 0.0;
    for (auto& v : x) {
        v = std::sqrt(a0 + a1 * prev * prev) * z(rng);
        prev = v;
    }
    return x;
}

// Moment formulas evaluated directly in long double.
struct DirectMoments {
    double mean, variance, g1, g2;
};

DirectMoments direct_moments(const std::vector<double>& x) {
    long double n = x.size(), s = 0;
    for (double v : x) s += v;
    const long double mean = s / n;
    long double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        const long double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    return {double(mean), double(m2 * n / (n - 1)), double(m3 / std::pow(m2, 1.5L)), double(m4 / (m2 * m2) - 3)};
}

}  // namespace

TEST(Moments, SymmetricTwoPointSampleHasZeroSkew) {
    std::vector<double> x;
    for (int i = 0; i < 20; ++i) x.push_back(i % 2 ? 1.0 : -1.0);
    auto m = moments(x);
    EXPECT_EQ(m.skewness, 0.0);
    EXPECT_NEAR(m.excess_kurtosis, -2.0, 1e-12);  // two-point distribution
    EXPECT_EQ(m.median, 0.0);
    EXPECT_NEAR(m.variance, 20.0 / 19.0, 1e-12);
}

TEST(Moments, TenPointHandSampleMatchesDirectFormulas) {
    std::vector<double> x{0.012, -0.034, 0.005, 0.021, -0.002, 0.044, -0.019, 0.007, -0.051, 0.013};
    auto m = moments(x);
    auto d = direct_moments(x);
    EXPECT_NEAR(m.mean, d.mean, 1e-15);
    EXPECT_NEAR(m.variance, d.variance, 1e-15);
    EXPECT_NEAR(m.skewness, d.g1, 1e-12);
    EXPECT_NEAR(m.excess_kurtosis, d.g2, 1e-12);
    EXPECT_NEAR(m.median, (0.005 + 0.007) / 2, 1e-15);
    EXPECT_NEAR(m.skew_pvalue, 2.0 * (1.0 - 0.5 * std::erfc(-std::abs(d.g1) / std::sqrt(6.0 / 10) / std::sqrt(2.0))),
                1e-12);
}

TEST(Moments, Errors) {
    EXPECT_THROW(moments(std::vector<double>{1, 2, 3}), InvalidInput);
    EXPECT_THROW(moments(std::vector<double>{2, 2, 2, 2, 2}), InvalidInput);
}

TEST(JarqueBera, FormulaAndReference) {
    std::mt19937_64 rng(1);
    auto x = gaussian(rng, 300);
    for (auto& v : x) v = v * v * v;  // heavy tails
    auto r = jarque_bera(x);
    auto d = direct_moments(x);
    const double jb = 300.0 / 6.0 * (d.g1 * d.g1 + d.g2 * d.g2 / 4.0);
    EXPECT_NEAR(r.statistic, jb, 1e-9 * jb);
    EXPECT_NEAR(r.p_value, std::exp(-jb / 2.0), 1e-12);  // chi2(2) survival is exp(-x/2)
    EXPECT_EQ(r.reject_at.size(), 4u);
}

TEST(JarqueBera, ZeroForSymmetricMesokurticSample) {
    // Symmetric (g1 = 0) with m4 = 3 m2^2: values {-a, -1, 1, a} at weights chosen so kurtosis is 3.
    // Points +-1 (k copies each) and +-a (1 copy each): m2 = (2k + 2a^2)/N, m4 = (2k + 2a^4)/N, N = 2k + 2.
    const int k = 4;
    const double N = 2.0 * k + 2.0;
    // Solve (2k + 2a^4)/N = 3 ((2k + 2a^2)/N)^2 for a^2 = u: 2k + 2u^2 = 3 (2k + 2u)^2 / N.
    const double A = 2.0 - 12.0 / N, B = -24.0 * k / N, C = 2.0 * k - 12.0 * k * k / N;
    const double u = (-B + std::sqrt(B * B - 4 * A * C)) / (2 * A);
    const double a = std::sqrt(u);
    std::vector<double> x{-a, a};
    for (int i = 0; i < k; ++i) {
        x.push_back(1.0);
        x.push_back(-1.0);
    }
    auto r = jarque_bera(x);
    EXPECT_NEAR(r.statistic, 0.0, 1e-12);
    EXPECT_NEAR(r.p_value, 1.0, 1e-12);
}

TEST(JarqueBera, AffineInvariance) {
    std::mt19937_64 rng(2);
    auto x = gaussian(rng, 500);
    for (auto& v : x) v = std::exp(v);
    const double base = jarque_bera(x).statistic;
    for (auto [a, b] : {std::pair{3.0, 1.0}, {-0.01, 5.0}, {1e4, -2e4}}) {
        std::vector<double> y(x);
        for (auto& v : y) v = a * v + b;
        EXPECT_NEAR(jarque_bera(y).statistic, base, 1e-9 * base);
    }
}

TEST(JarqueBera, Errors) {
    EXPECT_THROW(jarque_bera(std::vector<double>{1, 2, 3, 4, 5, 6, 7}), InvalidInput);
    EXPECT_THROW(jarque_bera(std::vector<double>(10, 1.0)), InvalidInput);
}

TEST(ArchLm, RecordsLagsAndScaleInvariance) {
    std::mt19937_64 rng(3);
    auto x = arch1(rng, 1500, 0.2, 0.4);
    auto r = arch_lm(x, 5);
    EXPECT_EQ(r.params.at("lags"), 5.0);
    EXPECT_EQ(r.params.at("nobs"), 1495.0);
    for (double a : {100.0, -0.3}) {
        std::vector<double> y(x);
        for (auto& v : y) v *= a;
        EXPECT_NEAR(arch_lm(y, 5).statistic, r.statistic, 1e-9 * r.statistic);
    }
    EXPECT_EQ(arch_lm(x).params.at("lags"), 12.0);
}

TEST(ArchLm, PValueMonotoneInStatistic) {
    std::mt19937_64 rng(4);
    std::vector<TestResult> rs;
    for (int i = 0; i < 20; ++i) rs.push_back(arch_lm(arch1(rng, 400, 1.0, 0.05 * i), 3));
    std::sort(rs.begin(), rs.end(), [](const auto& a, const auto& b) { return a.statistic < b.statistic; });
    for (std::size_t i = 1; i < rs.size(); ++i) {
        EXPECT_LE(rs[i].p_value, rs[i - 1].p_value);
        EXPECT_GE(rs[i].p_value, 0.0);
        EXPECT_LE(rs[i].p_value, 1.0);
    }
}

TEST(ArchLm, Errors) {
    std::vector<double> alternating;
    for (int i = 0; i < 100; ++i) alternating.push_back(i % 2 ? 1.0 : -1.0);
    EXPECT_THROW(arch_lm(alternating, 2), RankDeficient);  // squared series is constant
    EXPECT_THROW(arch_lm(std::vector<double>(10, 0.5), 12), InvalidInput);
    EXPECT_THROW(arch_lm(alternating, 0), InvalidInput);
}

TEST(ArchLm, MonteCarloPowerOnArch1) {
    std::mt19937_64 rng(5);
    int rejected = 0;
    for (int seed = 0; seed < 200; ++seed) rejected += arch_lm(arch1(rng, 5000, 1.0, 0.5)).p_value <= 0.01;
    EXPECT_GE(rejected, 198);
}

TEST(ArchLm, MonteCarloSizeOnGaussianNoise) {
    std::mt19937_64 rng(6);
    int rejected = 0;
    for (int seed = 0; seed < 500; ++seed) rejected += arch_lm(gaussian(rng, 5000)).p_value <= 0.05;
    EXPECT_NEAR(rejected / 500.0, 0.05, 0.02);
}

TEST(Adf, MacKinnonSurfaceAgreesWithCriticalValues) {
    // The 1994 p-value surface and the 2010 asymptotic critical values are independent fits.
    EXPECT_NEAR(mackinnon_pvalue(-3.43035), 0.01, 0.002);
    EXPECT_NEAR(mackinnon_pvalue(-2.86154), 0.05, 0.005);
    EXPECT_NEAR(mackinnon_pvalue(-2.56677), 0.10, 0.01);
    EXPECT_EQ(mackinnon_pvalue(-25.0), 0.0);
    EXPECT_EQ(mackinnon_pvalue(3.0), 1.0);
    double prev = 0.0;
    for (double t = -18.0; t < 2.7; t += 0.05) {
        const double p = mackinnon_pvalue(t);
        EXPECT_GE(p, prev - 1e-12);
        prev = p;
    }
    EXPECT_NEAR(mackinnon_critical(0.05, 100000), -2.86154, 1e-3);
    EXPECT_THROW(mackinnon_critical(0.2, 100), InvalidInput);
}

TEST(Adf, SchwertBound) {
    EXPECT_EQ(schwert_max_lag(100), 12u);
    EXPECT_EQ(schwert_max_lag(2500), 26u);
    EXPECT_EQ(schwert_max_lag(16), 7u);
}

TEST(Adf, FixedLagRecordsParamsAndLocationInvariance) {
    std::mt19937_64 rng(7);
    auto x = gaussian(rng, 800);
    auto r = adf(x, 3, LagSelection::fixed);
    EXPECT_EQ(r.params.at("lags"), 3.0);
    EXPECT_EQ(r.params.at("nobs"), 796.0);
    EXPECT_EQ(r.params.at("aic_selection"), 0.0);
    std::vector<double> y(x);
    for (auto& v : y) v += 1234.5;
    EXPECT_NEAR(adf(y, 3, LagSelection::fixed).statistic, r.statistic, 1e-9 * std::abs(r.statistic));
    auto sel = adf(x);
    EXPECT_EQ(sel.params.at("max_lag"), double(schwert_max_lag(800)));
    EXPECT_NEAR(adf(y).statistic, sel.statistic, 1e-9 * std::abs(sel.statistic));
    EXPECT_EQ(adf(y).params.at("lags"), sel.params.at("lags"));
}

TEST(Adf, AicPicksTheTrueOrderOfAnAr2InDifferences) {
    // dx_t = 0.5 dx_{t-1} - 0.3 dx_{t-2} + e_t: a unit root with two augmentation lags.
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z;
    int hits = 0;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x(3000, 0.0);
        double d1 = 0, d2 = 0;
        for (std::size_t t = 1; t < x.size(); ++t) {
            const double d = 0.5 * d1 - 0.3 * d2 + z(rng);
            x[t] = x[t - 1] + d;
            d2 = d1;
            d1 = d;
        }
        hits += adf(x, 8).params.at("lags") >= 2.0;
    }
    EXPECT_GE(hits, 19);
}

TEST(Adf, Errors) {
    EXPECT_THROW(adf(std::vector<double>{1, 2, 3, 4, 5}, 4), InvalidInput);
    EXPECT_THROW(adf(std::vector<double>(50, 1.0), 1, LagSelection::fixed), std::exception);
}

TEST(Adf, MonteCarloSizeOnRandomWalk) {
    std::mt19937_64 rng(9);
    int rejected = 0;
    for (int seed = 0; seed < 500; ++seed) rejected += adf(random_walk(rng, 2000), 4).p_value <= 0.05;
    EXPECT_NEAR(rejected / 500.0, 0.05, 0.025);
}

TEST(Adf, MonteCarloPowerOnWhiteNoise) {
    std::mt19937_64 rng(10);
    int rejected = 0;
    for (int seed = 0; seed < 500; ++seed) rejected += adf(gaussian(rng, 2000), 4).p_value <= 0.05;
    EXPECT_GE(rejected, 495);
}
