#ifndef OSMARGIN_MATH_UTIL_HPP
#define OSMARGIN_MATH_UTIL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace osm {

// log(1 + e^x) in the shifted form max(x,0) + log1p(e^{-|x|}). The naive
// exponential overflows double precision near x = 710; margin planes at
// lambda_max = 600 sit close enough that the shifted form is mandatory.
inline double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// 1 / (1 + e^{-x}) evaluated without overflow on either tail.
inline double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log sum_i e^{x_i} with max subtraction; empty input yields -inf.
inline double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - m);
    return m + std::log(sum);
}

}  // namespace osm

#endif
