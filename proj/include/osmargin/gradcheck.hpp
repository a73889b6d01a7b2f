#ifndef OSMARGIN_GRADCHECK_HPP
#define OSMARGIN_GRADCHECK_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace osm {

// Central finite differences against an analytic gradient. The error metric
// is |analytic - numeric| / max(1, |analytic|, |numeric|), i.e. relative at
// gradient scale >= 1 and absolute below it, so saturated components with
// gradients under double-precision resolution do not produce spurious 0/0
// failures.
double relative_error(double analytic, double numeric);

// Max error over all coordinates of x; f is evaluated at x +/- h per
// coordinate. x is restored before returning.
double fd_max_error(const std::function<double(std::span<const double>)>& f, std::span<double> x,
                    std::span<const double> analytic, double h);

struct SuiteResult {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    int instances = 0;
    bool passed() const { return max_error <= tolerance; }
};

// The finite-difference suites behind `osmargin gradcheck` and acceptance
// criterion checks: loss gradients, model composites, the OSM probability
// pullback, CTC, and the OSM->CTC end-to-end chain. `count` scales the number
// of random instances per suite (count <= 0 runs nothing).
std::vector<SuiteResult> gradient_suites(uint64_t seed, int count);

}  // namespace osm

#endif
