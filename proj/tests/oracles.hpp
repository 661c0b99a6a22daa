#pragma once

// Slow reference implementations shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace comove::oracle {

struct BruteTau {
    double tau;
    double z;
};

// O(n^2) pair counting and the textbook tie-corrected variance.
BruteTau brute_tau(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::int64_t s = 0, tx = 0, ty = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j], dy = y[i] - y[j];
            s += ((dx > 0) - (dx < 0)) * ((dy > 0) - (dy < 0));
            tx += dx == 0;
            ty += dy == 0;
        }
    const double n0 = double(n) * double(n - 1) / 2.0;
    auto groups = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        std::vector<double> sizes;
        for (std::size_t i = 0; i < v.size();) {
            std::size_t j = i;
            while (j < v.size() && v[j] == v[i]) ++j;
            if (j - i > 1) sizes.push_back(double(j - i));
            i = j;
        }
        return sizes;
    };
    const double nn = double(n);
    double vt = 0, vu = 0, t1 = 0, u1 = 0, t2 = 0, u2 = 0;
    for (double t : groups(x)) {
        vt += t * (t - 1) * (2 * t + 5);
        t1 += t * (t - 1);
        t2 += t * (t - 1) * (t - 2);
    }
    for (double u : groups(y)) {
        vu += u * (u - 1) * (2 * u + 5);
        u1 += u * (u - 1);
        u2 += u * (u - 1) * (u - 2);
    }
    const double var = (nn * (nn - 1) * (2 * nn + 5) - vt - vu) / 18.0 + t1 * u1 / (2 * nn * (nn - 1)) +
                       t2 * u2 / (9 * nn * (nn - 1) * (nn - 2));
    return {double(s) / std::sqrt((n0 - double(tx)) * (n0 - double(ty))), double(s) / std::sqrt(var)};
}

}  // namespace comove::oracle
