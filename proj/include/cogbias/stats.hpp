#ifndef COGBIAS_STATS_HPP
#define COGBIAS_STATS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "error.hpp"

namespace cogbias::stats {

inline double mean(std::span<const double> x) {
    if (x.empty()) {
        throw Error("mean of an empty sequence");
    }
    double total = 0;
    for (double v : x) {
        total += v;
    }
    return total / static_cast<double>(x.size());
}

inline double median(std::span<const double> x) {
    if (x.empty()) {
        throw Error("median of an empty sequence");
    }
    std::vector<double> copy(x.begin(), x.end());
    std::sort(copy.begin(), copy.end());
    auto n = copy.size();
    return n % 2 == 1 ? copy[n / 2] : 0.5 * (copy[n / 2 - 1] + copy[n / 2]);
}

/** Sample standard deviation with Bessel's correction (divisor n - 1). */
inline double sample_std(std::span<const double> x) {
    if (x.size() < 2) {
        throw Error("sample standard deviation needs at least 2 values");
    }
    double mu = mean(x);
    double ss = 0;
    for (double v : x) {
        ss += (v - mu) * (v - mu);
    }
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

/** Pearson correlation; throws on length mismatch, fewer than 3 pairs, or zero variance. */
inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error("pearson: length mismatch");
    }
    if (x.size() < 3) {
        throw Error("pearson: needs at least 3 paired values");
    }
    double mx = mean(x), my = mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) {
        throw Error("pearson: zero variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}

#endif
