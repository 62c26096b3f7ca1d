#include "masim/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace masim::numeric {

namespace {

// Kronrod-15 abscissae/weights on [-1,1] and the embedded Gauss-7 weights.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
    double integral;
    double error;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(center - half * kXgk[i]);
        fv[14 - i] = f(center + half * kXgk[i]);
    }
    fv[7] = f(center);
    double kron = 0.0, gauss = 0.0;
    for (int i = 0; i < 7; ++i) kron += kWgk[i] * (fv[i] + fv[14 - i]);
    kron += kWgk[7] * fv[7];
    for (int i = 0; i < 3; ++i) gauss += kWg[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    gauss += kWg[3] * fv[7];
    kron *= half;
    gauss *= half;
    return {kron, std::abs(kron - gauss)};
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double abs_tol, double rel_tol, int depth, double whole_estimate) {
    const PanelResult r = gk15(f, a, b);
    const double tol = std::max(abs_tol, rel_tol * std::abs(whole_estimate));
    if (r.error <= tol || r.error <= 1e-16 * std::abs(r.integral)) return r.integral;
    if (depth <= 0)
        throw NumericError("quadrature failed to converge on [" + std::to_string(a) +
                           ", " + std::to_string(b) + "], error " + std::to_string(r.error));
    const double mid = 0.5 * (a + b);
    return adapt(f, a, mid, 0.5 * abs_tol, rel_tol, depth - 1, whole_estimate) +
           adapt(f, mid, b, 0.5 * abs_tol, rel_tol, depth - 1, whole_estimate);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadOptions& opts) {
    if (!(a < b)) return 0.0;
    const PanelResult first = gk15(f, a, b);
    return adapt(f, a, b, opts.abs_tol, opts.rel_tol, opts.max_depth, first.integral);
}

double integrate_segments(const std::function<double(double)>& f,
                          const std::vector<double>& breakpoints,
                          const QuadOptions& opts) {
    if (breakpoints.size() < 2) throw InputError("need at least two breakpoints");
    double whole = 0.0;
    for (size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (breakpoints[i] < breakpoints[i + 1])
            whole += gk15(f, breakpoints[i], breakpoints[i + 1]).integral;
    double total = 0.0;
    for (size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (breakpoints[i] < breakpoints[i + 1])
            total += adapt(f, breakpoints[i], breakpoints[i + 1], opts.abs_tol,
                           opts.rel_tol, opts.max_depth, whole);
    return total;
}

namespace {

// Series expansion of P(a,x), valid for x < a+1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw NumericError("gamma_p series did not converge");
}

// Continued fraction for Q(a,x), valid for x >= a+1 (modified Lentz).
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16)
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw NumericError("gamma_q continued fraction did not converge");
}

}  // namespace

double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double normal_cdf(double t) { return 0.5 * std::erfc(-t * 0.7071067811865475244); }

}  // namespace masim::numeric
