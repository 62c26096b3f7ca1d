#include "masim/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "masim/model.hpp"
#include "masim/quadrature.hpp"

namespace masim::analysis {

using numeric::QuadOptions;

double chi2_pdf(double x, int m) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return m == 1 ? 1.0 : 0.0;
    return std::exp(-x + (m - 1) * std::log(x) - numeric::log_factorial(m - 1));
}

double chi2_cdf(double x, int m) {
    if (x <= 0.0) return 0.0;
    return numeric::gamma_p(static_cast<double>(m), x);
}

namespace {

double ordered_density(double x, int n, int na, int m, double log_coef) {
    const double f = chi2_pdf(x, m);
    if (f == 0.0) return 0.0;
    const double cdf = chi2_cdf(x, m);
    const double upper_tail = numeric::gamma_q(static_cast<double>(m), x);
    double v = std::exp(log_coef) * f;
    for (int i = 0; i < na - n; ++i) v *= cdf;
    for (int i = 0; i < n - 1; ++i) v *= upper_tail;
    return v;
}

}  // namespace

double ordered_moment(int n, int na, int m, int power) {
    if (n < 1 || n > na) throw InputError("ordered_moment needs 1 <= n <= na");
    if (power < 0 || power > 2) throw InputError("ordered_moment power must be 0, 1 or 2");
    const double log_coef = numeric::log_factorial(na) - numeric::log_factorial(na - n) -
                            numeric::log_factorial(n - 1);
    auto integrand = [&](double x) {
        double v = ordered_density(x, n, na, m, log_coef);
        for (int i = 0; i < power; ++i) v *= x;
        return v;
    };
    double upper = m + 12.0 * std::sqrt(static_cast<double>(m)) * std::log(na + 1.0);
    QuadOptions opts;
    double result = numeric::integrate(integrand, 0.0, upper, opts);
    // Tail check: extend until the endpoint contribution is negligible.
    for (int tries = 0; integrand(upper) * (upper + 1.0) > 1e-12 * (std::abs(result) + 1e-30);
         ++tries) {
        if (tries > 6) throw NumericError("ordered_moment tail does not decay");
        double more = numeric::integrate(integrand, upper, 2.0 * upper, opts);
        result += more;
        upper *= 2.0;
    }
    return result;
}

ChannelOrderMoments ChannelOrderMoments::compute(int m, int na) {
    ChannelOrderMoments out;
    out.num_antennas = m;
    out.num_active = na;
    out.m1.resize(na);
    out.m2.resize(na);
    for (int n = 1; n <= na; ++n) {
        out.m1[n - 1] = ordered_moment(n, na, m, 1);
        out.m2[n - 1] = ordered_moment(n, na, m, 2);
    }
    return out;
}

double ChannelOrderMoments::sum_m1(int from_rank) const {
    double s = 0.0;
    for (int n = from_rank; n <= num_active; ++n) s += m1[n - 1];
    return s;
}

double residual_noise_variance(int k, int m, int t, int d, double rho0,
                               const ChannelOrderMoments& moments) {
    if (k < 1 || k > moments.num_active)
        throw InputError("residual_noise_variance needs 1 <= k <= na");
    const double mt = static_cast<double>(m) * t;
    return 1.0 - (k - 1) * d / mt +
           rho0 * (k - 1) * d * static_cast<double>(d) / (mt * mt) * moments.sum_m1(k);
}

IterationStats correlation_stats(int k, int m, int t, int d, int na, double rho0,
                                 const ChannelOrderMoments& moments) {
    if (na != moments.num_active || m != moments.num_antennas)
        throw InputError("correlation_stats: moments computed for a different scenario");
    IterationStats st;
    st.k = k;
    const double mt = static_cast<double>(m) * t;
    const double dd = static_cast<double>(d);
    const double sum_k = moments.sum_m1(k);
    const double sum_k1 = moments.sum_m1(k + 1);

    st.sigma_k2 = residual_noise_variance(k, m, t, d, rho0, moments);
    st.sigma_r_prev2 = rho0 * dd / mt * sum_k + st.sigma_k2;
    st.sigma_r_tilde2 = rho0 * dd / mt * sum_k1 + st.sigma_k2;

    st.mu0 = rho0 * dd * dd / mt * sum_k + dd * st.sigma_k2;

    double second0;
    if (k == na) {
        // Refined inactive second moment for the final iteration, where the
        // residual no longer mixes other active users.
        const double s2 = st.sigma_k2;
        second0 = rho0 * rho0 * dd / (mt * mt * t) *
                      (4.0 * (dd * t + 1.0) + (dd * dd - dd) * (dd * t + dd + t)) *
                      moments.m2[na - 1] +
                  2.0 * rho0 * dd * dd / (mt * t) * (dd * t + dd + t - 1.0) *
                      moments.m1[na - 1] * s2 +
                  dd * (dd + 1.0) * s2 * s2;
    } else {
        second0 = dd * (dd + 1.0) * st.sigma_r_prev2 * st.sigma_r_prev2;
    }
    st.sigma02 = second0 - st.mu0 * st.mu0;

    st.mu1 = rho0 * dd / t * (dd + t - 1.0) * moments.m1[k - 1] +
             rho0 * dd * dd / mt * sum_k1 + dd * st.sigma_k2;

    const double bracket = 0.75 + 2.0 * dd + 2.0 * dd * dd / t + dd / (4.0 * t) -
                           dd * dd / (2.0 * static_cast<double>(t) * t);
    const double srt2 = st.sigma_r_tilde2;
    st.sigma12 = rho0 * rho0 / (static_cast<double>(t) * t) * (dd * dd + dd) *
                     (dd + t - 1.0) * (dd + t - 1.0) * moments.m2[k - 1] +
                 dd * (dd + 1.0) * srt2 * srt2 +
                 rho0 * dd * bracket * srt2 * moments.m1[k - 1] - st.mu1 * st.mu1;

    if (st.sigma02 < 0.0) {
        st.sigma02 = 1e-12 * st.mu0 * st.mu0;
        st.clamped = true;
    }
    if (st.sigma12 < 0.0) {
        st.sigma12 = 1e-12 * st.mu1 * st.mu1;
        st.clamped = true;
    }
    return st;
}

namespace {

double log_normal_cdf(double t) {
    if (t > -10.0) return std::log(numeric::normal_cdf(t));
    // Asymptotic expansion for the deep lower tail.
    const double t2 = t * t;
    return -0.5 * t2 - std::log(-t) - 0.91893853320467274178 +
           std::log1p(-1.0 / t2 + 3.0 / (t2 * t2));
}

}  // namespace

double detection_prob(const IterationStats& stats, int n, int na) {
    if (n <= na) throw InputError("detection_prob requires n > na");
    const double s0 = std::sqrt(stats.sigma02);
    const double s1 = std::sqrt(stats.sigma12);
    if (!(s1 > 0.0)) throw NumericError("detection_prob: degenerate active variance");
    const int count = n - na;
    const double inv_norm = 1.0 / (s1 * 2.5066282746310005024);
    auto integrand = [&](double x) {
        const double z = (x - stats.mu1) / s1;
        const double log_max_cdf = count * log_normal_cdf((x - stats.mu0) / s0);
        return std::exp(log_max_cdf - 0.5 * z * z) * inv_norm;
    };
    return numeric::integrate(integrand, stats.mu1 - 12.0 * s1, stats.mu1 + 12.0 * s1);
}

double gudsr_lower_bound(int m, int n, int na, int d, int t, double rho0,
                         const ChannelOrderMoments& moments,
                         std::vector<IterationStats>* per_iteration) {
    double p = 1.0;
    for (int k = 1; k <= na; ++k) {
        const IterationStats st = correlation_stats(k, m, t, d, na, rho0, moments);
        const double pk = detection_prob(st, n, na);
        if (per_iteration) per_iteration->push_back(st);
        p *= std::clamp(pk, 0.0, 1.0);
    }
    return p;
}

double gudsr_lower_bound(int m, int n, int na, int d, int t, double rho0) {
    const ChannelOrderMoments moments = ChannelOrderMoments::compute(m, na);
    return gudsr_lower_bound(m, n, na, d, t, rho0, moments, nullptr);
}

double mean_corr_inactive_generic(int s_prev, int t, int d, int na, double rho0,
                                  double sigma_k2) {
    return (na - s_prev) * rho0 * d * static_cast<double>(d) / t + d * sigma_k2;
}

double mean_corr_active_generic(int s_prev, int t, int d, int na, double rho0,
                                double sigma_k2, double channel_energy) {
    return rho0 * d / static_cast<double>(t) * (d + t - 1.0) * channel_energy +
           (na - s_prev - 1) * rho0 * d * static_cast<double>(d) / t + d * sigma_k2;
}

double ser_conditional(double g, double rho0) {
    const double e = std::erfc(std::sqrt(0.5 * rho0 * g));
    return e - 0.25 * e * e;
}

double g0_constant(int m, int t, int k, int d) {
    return m - (static_cast<double>(k) * d - 1.0) / t;
}

double ser_g0(int m, int t, int k, int d, double rho0) {
    return ser_conditional(g0_constant(m, t, k, d), rho0);
}

double ser_average(int m, int t, int k, int d, double rho0) {
    const long nu = static_cast<long>(m) * t - static_cast<long>(k) * d;
    if (nu < 0) throw ConfigError("ser_average requires K*d <= M*T");
    const double a = static_cast<double>(nu) + 1.0;  // f_G is Gamma(a, 1/T) in g
    const double log_norm = a * std::log(static_cast<double>(t)) - std::lgamma(a);
    auto integrand = [&](double g) {
        if (g <= 0.0) return 0.0;
        const double log_fg = log_norm - t * g + (a - 1.0) * std::log(g);
        if (log_fg < -700.0) return 0.0;
        return ser_conditional(g, rho0) * std::exp(log_fg);
    };
    const double mean = a / t;
    const double sd = std::sqrt(a) / t;
    // Seed panels around the f_G mass and around the small-g region that
    // dominates at high SNR, where the erfc factor has already decayed.
    std::vector<double> bp = {0.0, mean + 14.0 * sd + 46.0 / t};
    for (double c : {0.03, 0.3, 3.0, 30.0}) bp.push_back(c / rho0);
    bp.push_back(std::max(0.0, mean - 12.0 * sd));
    bp.push_back(mean);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    const double upper = bp.back();
    std::vector<double> clipped;
    for (double x : bp)
        if (x >= 0.0 && x <= upper) clipped.push_back(x);
    QuadOptions opts;
    opts.abs_tol = 1e-30;  // SER spans many decades; rely on the relative tol
    return numeric::integrate_segments(integrand, clipped, opts);
}

SerPrediction predict_ser(int m, int t, int k, int d, double rho0) {
    SerPrediction p;
    p.dof = 2 * (static_cast<long>(m) * t - static_cast<long>(k) * d + 1);
    p.scale = 1.0 / t;
    p.average = ser_average(m, t, k, d, rho0);
    p.g0 = g0_constant(m, t, k, d);
    p.ser_at_g0 = ser_conditional(p.g0, rho0);
    return p;
}

double mp_third_moment(int d, int t, MpThirdMomentMode mode, Rng* rng, int trials) {
    if (!(d > 0 && d < t)) throw ConfigError("mp_third_moment requires 0 < d < t");
    const double beta = static_cast<double>(d) / t;
    switch (mode) {
        case MpThirdMomentMode::ClosedForm:
            return (3.0 + 9.0 * beta - 2.0 * beta * beta) / 8.0;
        case MpThirdMomentMode::MpMoment:
            return 1.0 + 3.0 * beta + beta * beta;
        case MpThirdMomentMode::Empirical: {
            if (!rng) throw InputError("empirical mode needs an rng");
            double acc = 0.0;
            for (int i = 0; i < trials; ++i) {
                const Eigen::MatrixXcd p = model::generate_precoding(t, d, *rng);
                const Eigen::MatrixXcd gram = p.adjoint() * p;
                const Eigen::MatrixXcd g2 = gram * gram;
                acc += (g2 * gram).trace().real() / d;
            }
            return acc / trials;
        }
    }
    throw InputError("unknown mp_third_moment mode");
}

}  // namespace masim::analysis
