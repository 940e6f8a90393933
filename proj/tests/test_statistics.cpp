#include <cmath>
#include <cstdlib>
#include <memory>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "qmeas/errors.hpp"
#include "qmeas/statistics.hpp"
#include "qmeas/util.hpp"

using namespace qmeas;

namespace {

std::shared_ptr<const Grid> make_grid(int n, double half) {
    GridSpec spec;
    spec.n_points = n;
    spec.x_min = -half;
    spec.x_max = half;
    spec.hbar = 1.0;
    return std::make_shared<const Grid>(spec);
}

TrajectoryPoint synth_point(double t, double v) {
    TrajectoryPoint pt;
    pt.t = t;
    pt.moments.q_mean = v;
    pt.moments.p_mean = 2.0 * v;
    pt.moments.q_var = 1.0 + v * v;
    pt.moments.p_var = 2.0;
    pt.moments.qp_cov = 0.1 * v;
    pt.moments.norm = 1.0;
    pt.energy = 3.0 * v;
    return pt;
}

}  // namespace

TEST_SUITE_BEGIN("statistics");

TEST_CASE("KS statistics against hand-computed values") {
    // {-1, 0, 1} vs N(0,1): D = 1/3 - Phi(-1).
    const std::vector<double> tiny = {-1.0, 0.0, 1.0};
    CHECK(ks_statistic_normal(tiny, 0.0, 1.0) ==
          doctest::Approx(0.17467807940187626).epsilon(1e-12));

    // Interleaved pairs and disjoint supports.
    CHECK(ks_statistic_two_sample(std::vector<double>{1.0, 3.0},
                                  std::vector<double>{2.0, 4.0}) == doctest::Approx(0.5));
    CHECK(ks_statistic_two_sample(std::vector<double>{0.0, 1.0, 2.0},
                                  std::vector<double>{10.0, 11.0, 12.0}) ==
          doctest::Approx(1.0));
    const std::vector<double> same = {0.3, -1.2, 0.7, 2.2, -0.4};
    CHECK(ks_statistic_two_sample(same, same) == doctest::Approx(0.0));

    // Critical values follow c(alpha) = sqrt(-ln(alpha/2)/2).
    CHECK(ks_critical(100, 0.01) ==
          doctest::Approx(std::sqrt(-0.5 * std::log(0.005)) / 10.0).epsilon(1e-14));
    CHECK(ks_critical(100, 0.01) > 0.162);
    CHECK(ks_critical(100, 0.01) < 0.163);
    CHECK(ks_critical_two_sample(200, 50, 0.01) ==
          doctest::Approx(std::sqrt(-0.5 * std::log(0.005)) *
                          std::sqrt(250.0 / (200.0 * 50.0)))
              .epsilon(1e-14));

    // Normal draws pass at the 1% level, uniform draws fail decisively.
    Rng rng(71u);
    std::vector<double> normals(4000), uniforms(4000);
    for (auto& v : normals) v = rng.normal();
    for (auto& v : uniforms) v = rng.uniform01();
    CHECK(ks_statistic_normal(normals, 0.0, 1.0) < ks_critical(4000, 0.01));
    CHECK(ks_statistic_normal(uniforms, 0.0, 1.0) > 10.0 * ks_critical(4000, 0.01));

    CHECK_THROWS_AS(ks_critical(100, 0.0), ConfigError);
    CHECK_THROWS_AS(ks_statistic_normal(std::vector<double>{}, 0.0, 1.0), ConfigError);
}

TEST_CASE("pointer-sum law of large numbers recovers kappa and theta") {
    const auto gauss = DetectorProfile::gaussian();
    const auto pert = DetectorProfile::perturbed_gaussian(0.3);

    Rng rng(5u);
    const auto kg = lln_kappa_check(gauss, 1e-3, 1.0, rng);
    CHECK(kg.n == 1000);
    CHECK(kg.std_error > 0.0);
    CHECK(std::abs(kg.value - 0.125) < 3.0 * kg.std_error);

    const auto kp = lln_kappa_check(pert, 1e-3, 1.0, rng);
    CHECK(std::abs(kp.value - pert.kappa()) < 3.0 * kp.std_error);

    const auto tg = lln_theta_check(gauss, 1e-3, 1.0, rng);
    CHECK(std::abs(tg.value) < 3.0 * tg.std_error);
    const auto tp = lln_theta_check(pert, 1e-3, 1.0, rng);
    CHECK(std::abs(tp.value) < 3.0 * tp.std_error);

    // Determinism and the zero-summand edge.
    Rng a(9u), b(9u);
    CHECK(lln_kappa_check(gauss, 1e-3, 0.5, a).value ==
          lln_kappa_check(gauss, 1e-3, 0.5, b).value);
    const auto empty = lln_kappa_check(gauss, 1e-3, 0.0, a);
    CHECK(empty.value == 0.0);
    CHECK(empty.n == 0);

    Rng c(1u);
    CHECK_THROWS_AS(lln_kappa_check(gauss, 0.5, 1.0, c), ConfigError);
    CHECK_THROWS_AS(lln_theta_check(gauss, -1e-3, 1.0, c), ConfigError);
}

TEST_CASE("rescaled pointer sums behave like Brownian motion") {
    const auto gauss = DetectorProfile::gaussian();
    Rng rng(21u);
    const double t = 1.0;
    const auto diag = clt_brownian_check(gauss, 2e-3, t, 1500, rng);

    CHECK(diag.n_paths == 1500);
    CHECK(diag.n_steps == 500);
    CHECK(std::abs(diag.var_hat - t) < 3.0 * diag.var_se);
    CHECK(diag.ks_normal < diag.ks_crit);
    CHECK(std::abs(diag.incr_corr) < diag.corr_limit);
    CHECK(std::abs(diag.cross_corr) < diag.corr_limit);
    CHECK(std::abs(diag.kappa_hat.value - 0.125) < 3.0 * diag.kappa_hat.std_error);
    CHECK(std::abs(diag.theta_hat.value) < 3.0 * diag.theta_hat.std_error);
    CHECK(diag.endpoint.size() == 1500);

    const auto pert = DetectorProfile::perturbed_gaussian(0.3);
    Rng rng2(22u);
    const auto dp = clt_brownian_check(pert, 2e-3, t, 1200, rng2);
    CHECK(std::abs(dp.var_hat - t) < 3.0 * dp.var_se);
    CHECK(dp.ks_normal < dp.ks_crit);
    CHECK(std::abs(dp.kappa_hat.value - pert.kappa()) < 3.0 * dp.kappa_hat.std_error);

    Rng rng3(23u);
    CHECK_THROWS_AS(clt_brownian_check(gauss, 1e-3, 1.0, 999, rng3), ConfigError);
}

TEST_CASE("distribution distance separates location and scale shifts") {
    Rng rng(31u);
    std::vector<double> a(2000), shifted(2000), scaled(2000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal();
        shifted[i] = rng.normal() + 0.5;
        scaled[i] = 2.0 * rng.normal();
    }

    const auto self = distribution_distance(a, a);
    CHECK(self.total == doctest::Approx(0.0));

    const auto loc = distribution_distance(a, shifted);
    CHECK(loc.mean_gap == doctest::Approx(0.5).epsilon(0.15));
    // True KS distance between N(0,1) and N(1/2,1) is 2 Phi(1/4) - 1 = 0.1974.
    CHECK(loc.ks == doctest::Approx(0.1974).epsilon(0.25));
    CHECK(loc.total >= loc.mean_gap);

    const auto sc = distribution_distance(a, scaled);
    CHECK(sc.sd_gap == doctest::Approx(1.0 / std::sqrt(2.5)).epsilon(0.2));
    CHECK(sc.sd_gap > sc.mean_gap);

    CHECK_THROWS_AS(distribution_distance(std::vector<double>{1.0, 2.0}, a), ConfigError);
}

TEST_CASE("ensemble aggregation: single slot, determinism, failure reporting") {
    auto synth = [](std::size_t index, std::uint64_t seed) {
        TrajectoryResult r;
        const double v = static_cast<double>(seed % 1009) / 1009.0 + 0.1 * index;
        r.points.push_back(synth_point(0.0, v));
        r.points.push_back(synth_point(1.0, 2.0 * v));
        return r;
    };

    const auto one = ensemble_run(synth, 1, 42u);
    CHECK(one.trajectories == 1);
    CHECK(!one.se_valid);
    const auto direct = synth(0, derive_seed(42u, 0));
    CHECK(one.mean[1][0] == direct.points[1].moments.q_mean);
    CHECK(one.variance[1][0] == 0.0);
    CHECK(one.std_error[1][0] == 0.0);

    const auto s1 = ensemble_run(synth, 37, 7u);
    const auto s2 = ensemble_run(synth, 37, 7u);
    for (std::size_t c = 0; c < s1.times.size(); ++c) {
        for (std::size_t k = 0; k < kTrajectoryColumns.size(); ++k) {
            CHECK(s1.mean[c][k] == s2.mean[c][k]);
            CHECK(s1.std_error[c][k] == s2.std_error[c][k]);
        }
    }

    auto failing = [&](std::size_t index, std::uint64_t seed) {
        if (index == 3 || index == 7) throw NumericError("synthetic breakdown");
        return synth(index, seed);
    };
    CHECK_THROWS_WITH_AS(ensemble_run(failing, 10, 1u), doctest::Contains("indices 3, 7"),
                         NumericError);

    auto mismatched = [&](std::size_t index, std::uint64_t seed) {
        auto r = synth(index, seed);
        if (index >= 5) r.points[1].t = 2.0;
        return r;
    };
    CHECK_THROWS_WITH_AS(ensemble_run(mismatched, 10, 1u),
                         doctest::Contains("checkpoint times"), ConfigError);
    CHECK_THROWS_AS(ensemble_run(synth, 0, 1u), ConfigError);
}

TEST_CASE("ensemble aggregation matches a hand-rolled reduction bit for bit") {
    auto grid = make_grid(64, 8.0);
    SseConfig base;
    base.kappa_q = 0.125;
    base.dt = 1e-3;
    base.n_steps = 300;
    base.record_every = 150;
    base.h.kind = PotentialKind::Free;
    base.h.mass = 1.0;

    auto factory = [&](std::size_t, std::uint64_t seed) {
        SseConfig c = base;
        c.seed = seed;
        auto psi = WaveFunction::gaussian(grid, 0.2, 0.5, 0.1);
        return run_sse_trajectory(psi, c);
    };

    const std::size_t m = 24;
    const auto stats = ensemble_run(factory, m, 999u);
    REQUIRE(stats.times.size() == 3);
    CHECK(stats.times[2] == doctest::Approx(0.3));

    std::vector<double> qm(m), en(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto r = factory(i, derive_seed(999u, i));
        qm[i] = r.points.back().moments.q_mean;
        en[i] = r.points.back().energy;
    }
    CHECK(stats.mean[2][0] == sample_mean(qm));
    CHECK(stats.mean[2][6] == sample_mean(en));
    CHECK(stats.variance[2][0] == sample_variance(qm));

    // Thread count must not change any aggregate bit.
    setenv("QMEAS_THREADS", "1", 1);
    const auto t1 = ensemble_run(factory, m, 999u);
    setenv("QMEAS_THREADS", "3", 1);
    const auto t3 = ensemble_run(factory, m, 999u);
    unsetenv("QMEAS_THREADS");
    for (std::size_t c = 0; c < t1.times.size(); ++c) {
        for (std::size_t k = 0; k < kTrajectoryColumns.size(); ++k) {
            CHECK(t1.mean[c][k] == t3.mean[c][k]);
        }
    }

    setenv("QMEAS_THREADS", "zebra", 1);
    CHECK_THROWS_AS(ensemble_thread_count(), ConfigError);
    unsetenv("QMEAS_THREADS");

    std::ostringstream csv;
    stats.write_csv(csv);
    const std::string text = csv.str();
    CHECK(text.find("t,q_mean_mean,q_mean_variance,q_mean_stderr,p_mean_mean") == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // header + 3 checkpoints
}

TEST_CASE("discrete trajectory checkpoint thinning keeps ends and outcomes") {
    auto grid = make_grid(64, 8.0);
    VonNeumannKernel kernel(DetectorProfile::gaussian(),
                            CouplingSchedule::fixed(0.1, 0.0, 1e-3), {64, 8.0}, grid);
    auto psi = WaveFunction::gaussian(grid, 0.0, 0.5, 0.0);
    HamiltonianSpec h;
    h.kind = PotentialKind::None;
    Rng rng(3u);
    MeasurementRecord rec;
    const auto result = run_discrete_trajectory(kernel, psi, h, 10, rng, &rec, 4);
    REQUIRE(result.points.size() == 4);  // t = 0, 4 tau, 8 tau, 10 tau
    CHECK(result.points[1].t == doctest::Approx(4e-3));
    CHECK(result.points[3].t == doctest::Approx(10e-3));
    CHECK(rec.q_outcomes.size() == 10);
    CHECK(rec.p_outcomes.empty());

    Rng rng2(3u);
    CHECK_THROWS_AS(run_discrete_trajectory(kernel, psi, h, 10, rng2, nullptr, 0),
                    ConfigError);
}

TEST_CASE("convergence study: floor at noise level, monotone ladder, channel independence") {
    auto grid = make_grid(64, 10.0);
    const auto psi0 = WaveFunction::gaussian(grid, 0.0, 0.5, 0.0);
    HamiltonianSpec h;
    h.kind = PotentialKind::Free;
    h.mass = 1.0;
    const auto gauss = DetectorProfile::gaussian();

    ConvergenceSettings settings;
    settings.sse_dt = 1e-3;
    settings.bootstrap = 120;

    const std::size_t m = 500;
    const auto report = convergence_study(psi0, h, gauss, gauss, {4e-3, 1e-3}, 0.3, m,
                                          2026u, settings);

    REQUIRE(report.rungs.size() == 2);
    CHECK(report.rungs[0].tau == 4e-3);
    CHECK(report.rungs[1].tau == 1e-3);
    CHECK(report.m == m);

    // Reference split against itself sits at the sampling-noise scale.
    CHECK(report.q_floor.total < 4.5 * report.floor_scale);
    CHECK(report.p_floor.total < 4.5 * report.floor_scale);

    CHECK(report.monotone_q);
    CHECK(report.monotone_p);
    for (const auto& rung : report.rungs) {
        CHECK(std::abs(rung.cross_corr) < 3.0 / std::sqrt(static_cast<double>(m)));
        CHECK(rung.q_boot_se > 0.0);
        CHECK(std::isfinite(rung.q.total));
        CHECK(std::isfinite(rung.p.total));
    }

    std::ostringstream csv, summary;
    report.write_csv(csv);
    report.write_summary(summary);
    const std::string csv_text = csv.str();
    CHECK(csv_text.find("tau,dist_q,dist_q_se") == 0);
    CHECK(std::count(csv_text.begin(), csv_text.end(), '\n') == 4);  // header + 2 + floor
    CHECK(summary.str().find("monotone within error bars") != std::string::npos);

    CHECK_THROWS_AS(convergence_study(psi0, h, gauss, gauss, {1e-3, 4e-3}, 0.3, m, 1u,
                                      settings),
                    ConfigError);
    CHECK_THROWS_AS(convergence_study(psi0, h, gauss, gauss, {4e-3}, 0.3, 100, 1u,
                                      settings),
                    ConfigError);
}

TEST_SUITE_END();
