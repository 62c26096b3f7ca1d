#pragma once

#include <functional>
#include <vector>

#include "masim/types.hpp"

namespace masim::numeric {

struct QuadOptions {
    double abs_tol = 1e-9;
    double rel_tol = 1e-7;
    int max_depth = 52;
};

// Adaptive Gauss(7)/Kronrod(15) on [a, b]. Throws NumericError when the
// subdivision budget runs out before the tolerance is met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadOptions& opts = {});

// Same, seeded with explicit breakpoints (sorted, within [front, back]); used
// when the integrand has a known sharp feature the top-level panel would miss.
double integrate_segments(const std::function<double(double)>& f,
                          const std::vector<double>& breakpoints,
                          const QuadOptions& opts = {});

// Regularized lower/upper incomplete gamma P(a,x), Q(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double log_factorial(int n);

// Standard normal CDF.
double normal_cdf(double t);

}  // namespace masim::numeric
