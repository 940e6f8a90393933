#include "qmeas/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "qmeas/errors.hpp"
#include "qmeas/util.hpp"

namespace qmeas {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / M_SQRT2); }

double ks_coefficient(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw ConfigError("KS significance level must lie in (0, 1)");
    }
    return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

struct RatioDraw {
    double y;
    double c;   // chi(y^2)
    double d1;  // chi'(y^2)
    double d2;  // chi''(y^2)
};

RatioDraw guarded_draw(const DetectorProfile& profile, Rng& rng) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double y = profile.sample(rng);
        const double c = profile.chi(y * y);
        if (std::abs(c) > 1e-12) {
            return {y, c, profile.chi_d(y * y), profile.chi_dd(y * y)};
        }
    }
    throw NumericError(
        "detector amplitude vanished at 64 consecutive sampled pointer positions");
}

void check_limit_args(double tau, double t) {
    if (!(tau > 0.0) || tau > 1e-2) {
        throw ConfigError("step duration must lie in (0, 1e-2] for the limit checks");
    }
    if (!(t >= 0.0)) throw ConfigError("horizon must be nonnegative");
}

// Runs fn(worker, index) for every index in [0, m); worker w owns the strided
// index set {w, w + n_workers, ...} so per-worker state never needs locking.
// Failures are collected per index and abort the whole run after the join.
void parallel_for_strided(std::size_t m, std::size_t n_workers,
                          const std::function<void(std::size_t, std::size_t)>& fn) {
    struct Failure {
        std::size_t index;
        std::string what;
    };
    std::mutex mu;
    std::vector<Failure> failures;
    auto body = [&](std::size_t w) {
        for (std::size_t i = w; i < m; i += n_workers) {
            try {
                fn(w, i);
            } catch (const std::exception& e) {
                const std::lock_guard<std::mutex> lock(mu);
                failures.push_back({i, e.what()});
            }
        }
    };
    if (n_workers <= 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers - 1);
        for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(body, w);
        body(0);
        for (auto& th : pool) th.join();
    }
    if (!failures.empty()) {
        std::sort(failures.begin(), failures.end(),
                  [](const Failure& a, const Failure& b) { return a.index < b.index; });
        std::string msg = "ensemble aborted: " + std::to_string(failures.size()) + " of " +
                          std::to_string(m) + " trajectories failed (indices";
        const std::size_t shown = std::min<std::size_t>(failures.size(), 12);
        for (std::size_t k = 0; k < shown; ++k) {
            msg += (k == 0 ? " " : ", ") + std::to_string(failures[k].index);
        }
        if (failures.size() > shown) msg += ", ...";
        msg += "); trajectory " + std::to_string(failures[0].index) + ": " + failures[0].what;
        throw NumericError(msg);
    }
}

double column_value(const TrajectoryPoint& pt, std::size_t k) {
    switch (k) {
        case 0: return pt.moments.q_mean;
        case 1: return pt.moments.p_mean;
        case 2: return pt.moments.q_var;
        case 3: return pt.moments.p_var;
        case 4: return pt.moments.qp_cov;
        case 5: return pt.moments.norm;
        default: return pt.energy;
    }
}

struct SampleShape {
    double mean;
    double sd;      // unbiased
    double skew;    // m3 / m2^{3/2}, population convention
    double exkurt;  // m4 / m2^2 - 3
    std::size_t n;
};

SampleShape shape_of(std::span<const double> v) {
    if (v.size() < 8) throw ConfigError("distribution distance needs at least 8 samples");
    SampleShape s{};
    s.n = v.size();
    s.mean = sample_mean(v);
    s.sd = std::sqrt(sample_variance(v));
    const double m2 = std::max(central_moment(v, 2), 1e-300);
    s.skew = central_moment(v, 3) / std::pow(m2, 1.5);
    s.exkurt = central_moment(v, 4) / (m2 * m2) - 3.0;
    return s;
}

double bootstrap_distance_se(std::span<const double> a, std::span<const double> b,
                             std::size_t n_boot, Rng& rng) {
    if (n_boot < 2) return 0.0;
    std::vector<double> ra(a.size()), rb(b.size()), totals(n_boot);
    for (std::size_t bb = 0; bb < n_boot; ++bb) {
        for (auto& x : ra) {
            x = a[std::min(static_cast<std::size_t>(rng.uniform01() * a.size()),
                           a.size() - 1)];
        }
        for (auto& x : rb) {
            x = b[std::min(static_cast<std::size_t>(rng.uniform01() * b.size()),
                           b.size() - 1)];
        }
        totals[bb] = distribution_distance(ra, rb).total;
    }
    return std::sqrt(sample_variance(totals));
}

// Per-trajectory rescaled pointer-noise sum sqrt(2 tau / kappa) sum_j w(Y_j).
double rescaled_noise_sum(const DetectorProfile& profile, const std::vector<double>& outcomes,
                          double tau, double kappa) {
    std::vector<double> w(outcomes.size());
    for (std::size_t j = 0; j < outcomes.size(); ++j) {
        const double y = outcomes[j];
        const double c = profile.chi(y * y);
        if (std::abs(c) <= 1e-12) {
            throw NumericError("detector amplitude vanished at a recorded outcome");
        }
        w[j] = profile.chi_d(y * y) / c * y;
    }
    return std::sqrt(2.0 * tau / kappa) * pairwise_sum(w);
}

}  // namespace

// ---------------------------------------------------------------------------
// Distribution tests
// ---------------------------------------------------------------------------

double ks_statistic_normal(std::span<const double> samples, double mean, double sd) {
    if (samples.empty()) throw ConfigError("KS test needs a nonempty sample");
    if (!(sd > 0.0)) throw ConfigError("KS reference spread must be positive");
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = normal_cdf((x[i] - mean) / sd);
        d = std::max(d, std::max((i + 1) / n - f, f - i / n));
    }
    return d;
}

double ks_statistic_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ConfigError("KS test needs nonempty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / x.size() -
                                 static_cast<double>(j) / y.size()));
    }
    return d;
}

double ks_critical(std::size_t n, double alpha) {
    if (n == 0) throw ConfigError("KS critical value needs n >= 1");
    return ks_coefficient(alpha) / std::sqrt(static_cast<double>(n));
}

double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha) {
    if (n == 0 || m == 0) throw ConfigError("KS critical value needs n, m >= 1");
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return ks_coefficient(alpha) * std::sqrt((nn + mm) / (nn * mm));
}

// ---------------------------------------------------------------------------
// Pointer-sum limit checks
// ---------------------------------------------------------------------------

MonteCarloEstimate lln_kappa_check(const DetectorProfile& profile, double tau, double t,
                                   Rng& rng) {
    check_limit_args(tau, t);
    const auto n = static_cast<std::size_t>(std::floor(t / tau + 1e-9));
    if (n == 0) return {};
    std::vector<double> s(n);
    for (std::size_t j = 0; j < n; ++j) {
        const RatioDraw d = guarded_draw(profile, rng);
        const double u = d.y * d.y;
        s[j] = d.d1 / d.c + 2.0 * (d.d2 / d.c) * u;
    }
    const double scale = tau / t;
    MonteCarloEstimate out;
    out.value = -scale * pairwise_sum(s);
    out.std_error = n >= 2 ? scale * std::sqrt(sample_variance(s) * n) : 0.0;
    out.n = n;
    return out;
}

MonteCarloEstimate lln_theta_check(const DetectorProfile& profile, double tau, double t,
                                   Rng& rng) {
    check_limit_args(tau, t);
    const auto n = static_cast<std::size_t>(std::floor(t / tau + 1e-9));
    if (n == 0) return {};
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) {
        const RatioDraw d = guarded_draw(profile, rng);
        const double u = d.y * d.y;
        const double r1 = d.d1 / d.c;
        g[j] = r1 + 2.0 * r1 * r1 * u + 2.0 * (d.d2 / d.c) * u;
    }
    const double scale = tau / t;
    MonteCarloEstimate out;
    out.value = scale * pairwise_sum(g);
    out.std_error = n >= 2 ? scale * std::sqrt(sample_variance(g) * n) : 0.0;
    out.n = n;
    return out;
}

LimitDiagnostics clt_brownian_check(const DetectorProfile& profile, double tau, double t,
                                    std::size_t n_paths, Rng& rng) {
    check_limit_args(tau, t);
    if (n_paths < 1000) throw ConfigError("CLT diagnostics need at least 1000 paths");
    const auto n = static_cast<std::size_t>(std::floor(t / tau + 1e-9));
    if (n < 2) throw ConfigError("CLT diagnostics need at least two summands per path");
    const double kappa = profile.kappa();
    if (!(kappa > 0.0)) throw ConfigError("profile kappa must be positive");
    const double scale = std::sqrt(2.0 * tau / kappa);
    const std::size_t nh = n / 2;

    LimitDiagnostics diag;
    diag.n_paths = n_paths;
    diag.n_steps = n;
    diag.half.resize(n_paths);
    diag.endpoint.resize(n_paths);
    diag.endpoint_p.resize(n_paths);

    std::vector<double> w(n), score(n), theta(n);
    std::vector<double> path_score(n_paths), path_theta(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const RatioDraw d = guarded_draw(profile, rng);
            const double u = d.y * d.y;
            const double r1 = d.d1 / d.c;
            w[j] = r1 * d.y;
            score[j] = 2.0 * w[j] * w[j];
            theta[j] = r1 + 2.0 * r1 * r1 * u + 2.0 * (d.d2 / d.c) * u;
        }
        diag.half[i] = scale * pairwise_sum(std::span<const double>(w).first(nh));
        diag.endpoint[i] = scale * pairwise_sum(w);
        path_score[i] = pairwise_sum(score) / static_cast<double>(n);
        path_theta[i] = pairwise_sum(theta) / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            const RatioDraw d = guarded_draw(profile, rng);
            w[j] = d.d1 / d.c * d.y;
        }
        diag.endpoint_p[i] = scale * pairwise_sum(w);
    }

    diag.kappa_hat = {sample_mean(path_score),
                      std::sqrt(sample_variance(path_score) / n_paths), n_paths * n};
    diag.theta_hat = {sample_mean(path_theta),
                      std::sqrt(sample_variance(path_theta) / n_paths), n_paths * n};
    diag.var_hat = sample_variance(diag.endpoint);
    diag.var_se = diag.var_hat * std::sqrt(2.0 / (n_paths - 1));
    diag.ks_normal = ks_statistic_normal(diag.endpoint, 0.0, std::sqrt(t));
    diag.ks_crit = ks_critical(n_paths, 0.01);
    std::vector<double> second(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) second[i] = diag.endpoint[i] - diag.half[i];
    diag.incr_corr = pearson_corr(diag.half, second);
    diag.cross_corr = pearson_corr(diag.endpoint, diag.endpoint_p);
    diag.corr_limit = 3.0 / std::sqrt(static_cast<double>(n_paths));
    return diag;
}

// ---------------------------------------------------------------------------
// Ensemble execution
// ---------------------------------------------------------------------------

std::size_t ensemble_thread_count() {
    if (const char* env = std::getenv("QMEAS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1 || v > 256) {
            throw ConfigError("QMEAS_THREADS must be an integer in [1, 256]");
        }
        return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

EnsembleStats ensemble_run(const TrajectoryFactory& factory, std::size_t m,
                           std::uint64_t master_seed) {
    if (!factory) throw ConfigError("ensemble factory is empty");
    if (m < 1) throw ConfigError("ensemble size must be at least 1");

    std::vector<TrajectoryResult> results(m);
    const std::size_t workers = std::min(ensemble_thread_count(), m);
    parallel_for_strided(m, workers, [&](std::size_t, std::size_t i) {
        results[i] = factory(i, derive_seed(master_seed, i));
    });

    const auto& head = results[0].points;
    if (head.empty()) throw ConfigError("trajectories carry no checkpoints");
    for (std::size_t i = 1; i < m; ++i) {
        const auto& pts = results[i].points;
        bool same = pts.size() == head.size();
        for (std::size_t c = 0; same && c < pts.size(); ++c) same = pts[c].t == head[c].t;
        if (!same) throw ConfigError("trajectories disagree on checkpoint times");
    }

    EnsembleStats stats;
    stats.trajectories = m;
    stats.se_valid = m >= 2;
    stats.times.resize(head.size());
    stats.mean.resize(head.size());
    stats.variance.resize(head.size());
    stats.std_error.resize(head.size());
    std::vector<double> scratch(m);
    for (std::size_t c = 0; c < head.size(); ++c) {
        stats.times[c] = head[c].t;
        for (std::size_t k = 0; k < kTrajectoryColumns.size(); ++k) {
            for (std::size_t i = 0; i < m; ++i) scratch[i] = column_value(results[i].points[c], k);
            stats.mean[c][k] = sample_mean(scratch);
            const double var = m >= 2 ? sample_variance(scratch) : 0.0;
            stats.variance[c][k] = var;
            stats.std_error[c][k] = std::sqrt(var / static_cast<double>(m));
        }
    }
    return stats;
}

void EnsembleStats::write_csv(std::ostream& os) const {
    os << "t";
    for (const char* name : kTrajectoryColumns) {
        os << ',' << name << "_mean," << name << "_variance," << name << "_stderr";
    }
    os << '\n';
    for (std::size_t c = 0; c < times.size(); ++c) {
        os << fmt17(times[c]);
        for (std::size_t k = 0; k < kTrajectoryColumns.size(); ++k) {
            os << ',' << fmt17(mean[c][k]) << ',' << fmt17(variance[c][k]) << ','
               << fmt17(std_error[c][k]);
        }
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Discrete -> diffusion-limit convergence study
// ---------------------------------------------------------------------------

DistanceBreakdown distribution_distance(std::span<const double> a, std::span<const double> b) {
    const SampleShape sa = shape_of(a), sb = shape_of(b);
    const double na = static_cast<double>(sa.n), nb = static_cast<double>(sb.n);
    double pooled = std::sqrt(
        ((na - 1.0) * sa.sd * sa.sd + (nb - 1.0) * sb.sd * sb.sd) / (na + nb - 2.0));
    pooled = std::max(pooled, 1e-12);
    DistanceBreakdown d;
    d.mean_gap = std::abs(sa.mean - sb.mean) / pooled;
    d.sd_gap = std::abs(sa.sd - sb.sd) / pooled;
    d.skew_gap = std::abs(sa.skew - sb.skew) / std::sqrt(6.0);
    d.kurt_gap = std::abs(sa.exkurt - sb.exkurt) / std::sqrt(24.0);
    d.ks = ks_statistic_two_sample(a, b);
    d.total = std::sqrt(d.mean_gap * d.mean_gap + d.sd_gap * d.sd_gap +
                        d.skew_gap * d.skew_gap + d.kurt_gap * d.kurt_gap + d.ks * d.ks);
    return d;
}

ConvergenceReport convergence_study(const WaveFunction& psi0, const HamiltonianSpec& h,
                                    const DetectorProfile& profile_q,
                                    const DetectorProfile& profile_p,
                                    const std::vector<double>& tau_list, double t,
                                    std::size_t m, std::uint64_t master_seed,
                                    const ConvergenceSettings& settings) {
    if (tau_list.empty()) throw ConfigError("tau ladder must be nonempty");
    for (std::size_t k = 1; k < tau_list.size(); ++k) {
        if (!(tau_list[k] < tau_list[k - 1])) {
            throw ConfigError("tau ladder must be strictly decreasing");
        }
    }
    if (m < 500) throw ConfigError("convergence study needs at least 500 trajectories");
    if (!(t > 0.0)) throw ConfigError("horizon must be positive");
    if (!(settings.sse_dt > 0.0)) throw ConfigError("reference step must be positive");
    h.validate();

    const double kq = profile_q.kappa();
    const double kp = profile_p.kappa();
    const auto grid = psi0.grid_ptr();
    const std::size_t workers = std::min(ensemble_thread_count(), m);

    SseConfig scfg;
    scfg.kappa_q = kq;
    scfg.kappa_p = kp;
    scfg.dt = settings.sse_dt;
    scfg.n_steps = std::llround(t / settings.sse_dt);
    scfg.h = h;
    if (scfg.n_steps < 1) throw ConfigError("horizon is shorter than the reference step");
    scfg.record_every = static_cast<int>(scfg.n_steps);
    scfg.validate(*grid);

    std::vector<double> ref_q(m), ref_p(m);
    parallel_for_strided(m, workers, [&](std::size_t, std::size_t i) {
        SseConfig c = scfg;
        c.seed = derive_seed(master_seed, i);
        WaveFunction psi = psi0;
        const auto res = run_sse_trajectory(psi, c);
        ref_q[i] = res.points.back().moments.q_mean;
        ref_p[i] = res.points.back().moments.p_mean;
    });

    ConvergenceReport report;
    report.t = t;
    report.m = m;
    std::vector<double> qa, qb, pa, pb;
    for (std::size_t i = 0; i < m; ++i) {
        ((i % 2 == 0) ? qa : qb).push_back(ref_q[i]);
        ((i % 2 == 0) ? pa : pb).push_back(ref_p[i]);
    }
    report.q_floor = distribution_distance(qa, qb);
    report.p_floor = distribution_distance(pa, pb);
    report.floor_scale = std::sqrt(1.0 / qa.size() + 1.0 / qb.size());

    for (std::size_t r = 0; r < tau_list.size(); ++r) {
        const double tau = tau_list[r];
        const auto schedule = CouplingSchedule::sqrt_tau(tau);
        const auto n_steps = static_cast<int>(std::llround(t / tau));
        if (n_steps < 1) throw ConfigError("horizon is shorter than one measurement step");

        // Per-worker kernels, constructed serially so grid-size errors surface typed.
        std::vector<std::unique_ptr<AkKernel>> kernels(workers);
        for (auto& k : kernels) {
            k = std::make_unique<AkKernel>(profile_q, profile_p, schedule,
                                           settings.apparatus_q, settings.apparatus_p, grid);
        }

        std::vector<double> dq(m), dp(m), bq(m), bp(m);
        parallel_for_strided(m, workers, [&](std::size_t w, std::size_t i) {
            Rng rng(derive_seed(master_seed, (r + 1) * 1000000ull + i));
            WaveFunction psi = psi0;
            MeasurementRecord rec;
            const auto res =
                run_discrete_trajectory(*kernels[w], psi, h, n_steps, rng, &rec, n_steps);
            dq[i] = res.points.back().moments.q_mean;
            dp[i] = res.points.back().moments.p_mean;
            bq[i] = rescaled_noise_sum(profile_q, rec.q_outcomes, tau, kq);
            bp[i] = rescaled_noise_sum(profile_p, rec.p_outcomes, tau, kp);
        });

        ConvergenceRung rung;
        rung.tau = tau;
        rung.m = m;
        rung.q = distribution_distance(dq, ref_q);
        rung.p = distribution_distance(dp, ref_p);
        Rng boot_q(derive_seed(master_seed, 0xB0000000ull + 2 * r));
        rung.q_boot_se = bootstrap_distance_se(dq, ref_q, settings.bootstrap, boot_q);
        Rng boot_p(derive_seed(master_seed, 0xB0000000ull + 2 * r + 1));
        rung.p_boot_se = bootstrap_distance_se(dp, ref_p, settings.bootstrap, boot_p);
        rung.mean_q_gap = std::abs(sample_mean(dq) - sample_mean(ref_q));
        rung.cross_corr = pearson_corr(bq, bp);
        report.rungs.push_back(rung);
    }

    auto monotone = [&](auto total_of, auto se_of) {
        for (std::size_t k = 1; k < report.rungs.size(); ++k) {
            const double band = 2.0 * std::sqrt(se_of(report.rungs[k - 1]) * se_of(report.rungs[k - 1]) +
                                                se_of(report.rungs[k]) * se_of(report.rungs[k]));
            if (total_of(report.rungs[k]) > total_of(report.rungs[k - 1]) + band) return false;
        }
        return true;
    };
    report.monotone_q = monotone([](const ConvergenceRung& x) { return x.q.total; },
                                 [](const ConvergenceRung& x) { return x.q_boot_se; });
    report.monotone_p = monotone([](const ConvergenceRung& x) { return x.p.total; },
                                 [](const ConvergenceRung& x) { return x.p_boot_se; });
    return report;
}

void ConvergenceReport::write_csv(std::ostream& os) const {
    os << "tau,dist_q,dist_q_se,dist_p,dist_p_se,ks_q,ks_p,mean_gap_q,cross_corr,m\n";
    for (const auto& r : rungs) {
        os << fmt17(r.tau) << ',' << fmt17(r.q.total) << ',' << fmt17(r.q_boot_se) << ','
           << fmt17(r.p.total) << ',' << fmt17(r.p_boot_se) << ',' << fmt17(r.q.ks) << ','
           << fmt17(r.p.ks) << ',' << fmt17(r.mean_q_gap) << ',' << fmt17(r.cross_corr)
           << ',' << r.m << '\n';
    }
    // The tau = 0 row is the reference ensemble split against itself.
    os << fmt17(0.0) << ',' << fmt17(q_floor.total) << ',' << fmt17(0.0) << ','
       << fmt17(p_floor.total) << ',' << fmt17(0.0) << ',' << fmt17(q_floor.ks) << ','
       << fmt17(p_floor.ks) << ',' << fmt17(0.0) << ',' << fmt17(0.0) << ',' << m << '\n';
}

void ConvergenceReport::write_summary(std::ostream& os) const {
    os << "convergence study: M = " << m << ", horizon t = " << t << '\n';
    for (const auto& r : rungs) {
        os << "  tau = " << r.tau << ": D_q = " << r.q.total << " +- " << r.q_boot_se
           << ", D_p = " << r.p.total << " +- " << r.p_boot_se
           << ", KS_q = " << r.q.ks << ", mean gap q = " << r.mean_q_gap
           << ", cross-corr = " << r.cross_corr << '\n';
    }
    os << "  reference self-distance: D_q = " << q_floor.total
       << ", D_p = " << p_floor.total << " (null scale " << floor_scale << ")\n";
    os << "  monotone within error bars: q = " << (monotone_q ? "yes" : "no")
       << ", p = " << (monotone_p ? "yes" : "no") << '\n';
}

}  // namespace qmeas
