#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "qmeas/detector.hpp"
#include "qmeas/discrete.hpp"
#include "qmeas/hamiltonian.hpp"
#include "qmeas/rng.hpp"
#include "qmeas/sse.hpp"
#include "qmeas/wavefunction.hpp"

namespace qmeas {

// ---------------------------------------------------------------------------
// Distribution tests
// ---------------------------------------------------------------------------

// Kolmogorov-Smirnov statistics. Critical values use the asymptotic
// coefficient c(alpha) = sqrt(-ln(alpha/2)/2); at the 1% level c = 1.628.
double ks_statistic_normal(std::span<const double> samples, double mean, double sd);
double ks_statistic_two_sample(std::span<const double> a, std::span<const double> b);
double ks_critical(std::size_t n, double alpha = 0.01);
double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha = 0.01);

// ---------------------------------------------------------------------------
// Pointer-sum limit checks
// ---------------------------------------------------------------------------

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

// Curvature-form estimator -tau/t sum_{j<=t/tau} (chi'/chi + 2 (chi''/chi) Y_j^2)
// over i.i.d. pointer draws Y_j; the law-of-large-numbers limit is kappa.
// Zero summands give a zero estimate. A vanishing chi at a sampled point is
// resampled a bounded number of times, then reported as a numeric error.
MonteCarloEstimate lln_kappa_check(const DetectorProfile& profile, double tau, double t,
                                   Rng& rng);

// Same machinery on the integrand chi'/chi + 2 (chi'/chi)^2 Y^2 + 2 (chi''/chi) Y^2
// whose expectation is a total derivative; the limit is 0.
MonteCarloEstimate lln_theta_check(const DetectorProfile& profile, double tau, double t,
                                   Rng& rng);

// Rescaled pointer sums B_t = sqrt(2 tau / kappa) sum_j (chi'/chi)(Y_j^2) Y_j for
// two independent channels drawn from the same profile. `half` and `endpoint`
// hold the per-path sums at t/2 and t for the first channel; `endpoint_p` is the
// second channel. kappa_hat here is the score-form estimate 2 E[w^2] built from
// the same draws (the curvature form lives in lln_kappa_check), theta_hat is the
// per-draw theta integrand mean.
struct LimitDiagnostics {
    MonteCarloEstimate kappa_hat;
    MonteCarloEstimate theta_hat;
    double var_hat = 0.0;      // sample variance of `endpoint`, limit t
    double var_se = 0.0;       // normal-theory standard error of var_hat
    double ks_normal = 0.0;    // endpoint sample against N(0, sqrt(t))
    double ks_crit = 0.0;      // 1% critical value for n_paths
    double incr_corr = 0.0;    // corr of [0, t/2] and [t/2, t] increments
    double cross_corr = 0.0;   // corr of the two channels at t
    double corr_limit = 0.0;   // 3 / sqrt(n_paths)
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::vector<double> half;
    std::vector<double> endpoint;
    std::vector<double> endpoint_p;
};

LimitDiagnostics clt_brownian_check(const DetectorProfile& profile, double tau, double t,
                                    std::size_t n_paths, Rng& rng);

// ---------------------------------------------------------------------------
// Ensemble execution
// ---------------------------------------------------------------------------

inline constexpr std::array<const char*, 7> kTrajectoryColumns = {
    "q_mean", "p_mean", "q_var", "p_var", "qp_cov", "norm", "energy"};

struct EnsembleStats {
    std::vector<double> times;                     // shared checkpoint times
    std::vector<std::array<double, 7>> mean;       // [checkpoint][column]
    std::vector<std::array<double, 7>> variance;   // unbiased; zero when M == 1
    std::vector<std::array<double, 7>> std_error;  // sample SD / sqrt(M)
    std::size_t trajectories = 0;
    bool se_valid = false;  // false when M < 2: the zero SE columns carry no information

    void write_csv(std::ostream& os) const;
};

// Produces the trajectory for one ensemble slot. Must be a pure function of
// (index, seed); the seed passed in is derive_seed(master_seed, index).
using TrajectoryFactory =
    std::function<TrajectoryResult(std::size_t index, std::uint64_t seed)>;

// Runs m trajectories on the ensemble thread pool and aggregates per-checkpoint
// statistics with pairwise reductions in slot order, so results are bit-identical
// for any thread count. Any trajectory failure aborts the aggregation and is
// reported with the failing indices.
EnsembleStats ensemble_run(const TrajectoryFactory& factory, std::size_t m,
                           std::uint64_t master_seed);

// QMEAS_THREADS override, else hardware concurrency.
std::size_t ensemble_thread_count();

// ---------------------------------------------------------------------------
// Discrete -> diffusion-limit convergence study
// ---------------------------------------------------------------------------

// Scale-normalized gaps of the first four moments plus the two-sample KS
// statistic; `total` is the root sum of squares of the five components. The
// skewness and excess-kurtosis gaps are divided by sqrt(6) and sqrt(24) so all
// components share the sqrt(1/n + 1/m) sampling scale under equal laws.
struct DistanceBreakdown {
    double mean_gap = 0.0;
    double sd_gap = 0.0;
    double skew_gap = 0.0;
    double kurt_gap = 0.0;
    double ks = 0.0;
    double total = 0.0;
};

DistanceBreakdown distribution_distance(std::span<const double> a, std::span<const double> b);

struct ConvergenceSettings {
    ApparatusSpec apparatus_q{32, 8.0};
    ApparatusSpec apparatus_p{32, 8.0};
    double sse_dt = 2.5e-4;      // reference integrator step
    std::size_t bootstrap = 200; // resamples behind the distance error bars
};

struct ConvergenceRung {
    double tau = 0.0;
    DistanceBreakdown q;       // distance between discrete and reference <q> at t
    DistanceBreakdown p;       // same for <p>
    double q_boot_se = 0.0;    // bootstrap SE of q.total
    double p_boot_se = 0.0;
    double mean_q_gap = 0.0;   // raw |mean difference| of <q>, for shrink checks
    double cross_corr = 0.0;   // per-trajectory q/p channel noise correlation
    std::size_t m = 0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRung> rungs;  // ordered as the tau ladder
    DistanceBreakdown q_floor;           // reference-vs-reference half-split distance
    DistanceBreakdown p_floor;
    double floor_scale = 0.0;            // sqrt(1/nh + 1/mh) null sampling scale
    bool monotone_q = false;             // non-increasing within 2x bootstrap bands
    bool monotone_p = false;
    double t = 0.0;
    std::size_t m = 0;

    void write_csv(std::ostream& os) const;
    void write_summary(std::ostream& os) const;
};

// For each tau in the decreasing ladder, runs m joint-measurement trajectories
// with couplings mu = nu = sqrt(tau) and compares the t-time distributions of
// <q> and <p> against a diffusion-limit ensemble of m trajectories driven by
// the profiles' kappa values. The reference ensemble is computed once and
// shared across rungs; per-rung channel noise estimates feed the cross-channel
// independence column. Requires m >= 500.
ConvergenceReport convergence_study(const WaveFunction& psi0, const HamiltonianSpec& h,
                                    const DetectorProfile& profile_q,
                                    const DetectorProfile& profile_p,
                                    const std::vector<double>& tau_list, double t,
                                    std::size_t m, std::uint64_t master_seed,
                                    const ConvergenceSettings& settings = {});

}  // namespace qmeas
