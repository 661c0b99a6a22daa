#pragma once

#include <algorithm>
#include <cmath>
#include <string_view>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace comove::dist {

inline double normal_cdf(double z) {
    return boost::math::cdf(boost::math::normal_distribution<double>{}, z);
}

/// Two-sided normal tail probability P(|Z| >= |z|).
inline double normal_two_sided(double z) {
    if (!std::isfinite(z)) return std::isnan(z) ? 1.0 : 0.0;
    return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>{}, std::abs(z)));
}

/// Upper tail P(X >= x) of chi-squared with `df` degrees of freedom.
inline double chi2_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    if (!std::isfinite(x)) return 0.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>{df}, x));
}

/// Two-sided Student-t tail probability.
inline double t_two_sided(double t, double df) {
    if (std::isnan(t)) return 1.0;
    if (!std::isfinite(t)) return 0.0;
    return 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<double>{df}, std::abs(t)));
}

/// Significance legend used in every report table:
/// "***" p <= 0.005, "**" p <= 0.01, "*" p <= 0.05, "." p <= 0.1.
inline std::string_view stars(double p) {
    if (p <= 0.005) return "***";
    if (p <= 0.01) return "**";
    if (p <= 0.05) return "*";
    if (p <= 0.1) return ".";
    return "";
}

}  // namespace comove::dist
