#pragma once

#include <vector>

#include "masim/rng.hpp"
#include "masim/types.hpp"

namespace masim::analysis {

// Density/CDF of h^H h for an M-antenna CN(0, I) channel: chi-squared with
// 2M degrees of freedom scaled to unit mean per branch, i.e. Gamma(M, 1).
double chi2_pdf(double x, int m);
double chi2_cdf(double x, int m);

// E{ x^power } of the n-th largest of na i.i.d. Gamma(M,1) channel energies
// (n = 1 is the strongest), by adaptive quadrature of the ordered density.
double ordered_moment(int n, int na, int m, int power);

// First/second moments for all ranks, computed once per (m, na).
struct ChannelOrderMoments {
    int num_antennas = 0;
    int num_active = 0;
    std::vector<double> m1;  // m1[n-1] = E{h_n^H h_n}
    std::vector<double> m2;  // m2[n-1] = E{(h_n^H h_n)^2}

    static ChannelOrderMoments compute(int m, int na);
    double sum_m1(int from_rank) const;  // sum over ranks from_rank..na
};

// Variance of each element of the propagated residual error at iteration k
// (1-based), under the strongest-first selection order.
double residual_noise_variance(int k, int m, int t, int d, double rho0,
                               const ChannelOrderMoments& moments);

// Gaussian-approximation statistics of the squared correlation at iteration k.
struct IterationStats {
    int k = 0;
    double sigma_k2 = 0.0;        // propagated-error variance
    double mu0 = 0.0;             // inactive-user correlation mean
    double sigma02 = 0.0;         // inactive-user correlation variance
    double mu1 = 0.0;             // k-th active user correlation mean
    double sigma12 = 0.0;         // k-th active user correlation variance
    double sigma_r_prev2 = 0.0;   // residual element variance before selection
    double sigma_r_tilde2 = 0.0;  // after removing the k-th active contribution
    bool clamped = false;         // a variance went negative and was clamped
};

IterationStats correlation_stats(int k, int m, int t, int d, int na, double rho0,
                                 const ChannelOrderMoments& moments);

// Correlation means for a generic number s_prev of already-selected active
// users, before the ordered-channel refinement. Not used by the bound; kept
// as the raw form behind the per-iteration statistics (they coincide with
// correlation_stats at k = 1, s_prev = 0).
double mean_corr_inactive_generic(int s_prev, int t, int d, int na, double rho0,
                                  double sigma_k2);
double mean_corr_active_generic(int s_prev, int t, int d, int na, double rho0,
                                double sigma_k2, double channel_energy);

// P(E_k): the k-th active user beats the maximum of the N-Na inactive
// correlations, both Gaussian; the inner maximum is collapsed via the CDF
// power [Phi((x-mu0)/sigma0)]^(N-Na).
double detection_prob(const IterationStats& stats, int n, int na);

// Product of P(E_k) over the first Na iterations: approximate lower bound on
// the group user detection success rate.
double gudsr_lower_bound(int m, int n, int na, int d, int t, double rho0);
double gudsr_lower_bound(int m, int n, int na, int d, int t, double rho0,
                         const ChannelOrderMoments& moments,
                         std::vector<IterationStats>* per_iteration);

// QPSK symbol error probability conditioned on the post-LS SNR scale g.
double ser_conditional(double g, double rho0);
// Average over the scaled chi-squared f_G with 2(MT-Kd+1) degrees of freedom.
double ser_average(int m, int t, int k, int d, double rho0);
// Large-system constant G0 = M - (Kd-1)/T and the SER evaluated there.
double g0_constant(int m, int t, int k, int d);
double ser_g0(int m, int t, int k, int d, double rho0);

// Bundled SER prediction: the f_G parameters and both evaluation routes.
struct SerPrediction {
    long dof = 0;        // 2(MT - Kd + 1) chi-squared degrees of freedom
    double scale = 0.0;  // 1/T per squared component
    double average = 0.0;
    double g0 = 0.0;
    double ser_at_g0 = 0.0;
};
SerPrediction predict_ser(int m, int t, int k, int d, double rho0);

// Third moment of the precoder Gram eigenvalue distribution, beta = d/T.
// ClosedForm is the value baked into the variance bracket of
// correlation_stats; MpMoment is the standard Marchenko-Pastur third moment
// 1 + 3*beta + beta^2; Empirical averages tr((P^H P)^3)/d over fresh draws.
// The `validate` report shows all three (the first disagrees with the other
// two; the empirical estimate arbitrates).
enum class MpThirdMomentMode { ClosedForm, MpMoment, Empirical };
double mp_third_moment(int d, int t, MpThirdMomentMode mode, Rng* rng = nullptr,
                       int trials = 200);

}  // namespace masim::analysis
