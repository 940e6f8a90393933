#include "qmeas/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qmeas/acceptance.hpp"
#include "qmeas/config.hpp"
#include "qmeas/detector.hpp"
#include "qmeas/discrete.hpp"
#include "qmeas/errors.hpp"
#include "qmeas/io.hpp"
#include "qmeas/rng.hpp"
#include "qmeas/sse.hpp"
#include "qmeas/statistics.hpp"
#include "qmeas/wavefunction.hpp"

namespace qmeas {
namespace {

namespace fs = std::filesystem;

// Writes one CSV product and reports it on stdout.
void emit_csv(const fs::path& path, std::size_t rows,
              const std::function<void(std::ostream&)>& writer) {
    std::ofstream os(path);
    if (!os) throw ResourceError("cannot write " + path.string());
    writer(os);
    os.flush();
    if (!os) throw ResourceError("write failed for " + path.string());
    std::cout << "wrote " << path.string() << " (" << rows << " rows)\n";
}

void emit_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int discrete_step_count(const RunConfig& cfg) {
    if (cfg.n_steps > std::numeric_limits<int>::max()) {
        throw ConfigError("n_steps exceeds the discrete-model step limit");
    }
    return static_cast<int>(cfg.n_steps);
}

int cmd_kappa(const RunConfig& cfg) {
    const struct {
        const char* tag;
        const std::string& spec;
    } channels[] = {{"q", cfg.profile_q}, {"p", cfg.profile_p}};
    for (const auto& ch : channels) {
        const DetectorProfile profile = make_profile(ch.spec);
        const KappaForms forms = kappa_quadrature(profile);
        // Rounding first and adding zero keeps quadrature dust at -1e-12 from
        // printing as "-0.000000".
        const double theta = std::round(theta_quadrature(profile) * 1e6) / 1e6 + 0.0;
        char line[128];
        std::snprintf(line, sizeof line, "%s: kappa=%.6g theta=%.6f\n", ch.tag,
                      forms.from_curvature, theta);
        std::cout << line;
    }
    return kExitOk;
}

int cmd_simulate_discrete(const RunConfig& cfg) {
    if (cfg.run_mode != RunMode::Discrete) {
        throw ConfigError("simulate-discrete needs run_mode = discrete");
    }
    WaveFunction psi = make_initial_state(cfg);
    const CouplingSchedule schedule = cfg.make_schedule();
    const int n_steps = discrete_step_count(cfg);
    const DetectorProfile profile_q = make_profile(cfg.profile_q);

    Rng rng(cfg.seed);
    MeasurementRecord record;
    TrajectoryResult result;
    if (schedule.nu == 0.0) {
        VonNeumannKernel kernel(profile_q, schedule, cfg.apparatus_q, psi.grid_ptr());
        emit_warnings(kernel.warnings());
        result = run_discrete_trajectory(kernel, psi, cfg.h, n_steps, rng, &record,
                                         cfg.record_every);
    } else {
        AkKernel kernel(profile_q, make_profile(cfg.profile_p), schedule, cfg.apparatus_q,
                        cfg.apparatus_p, psi.grid_ptr());
        emit_warnings(kernel.warnings());
        result = run_discrete_trajectory(kernel, psi, cfg.h, n_steps, rng, &record,
                                         cfg.record_every);
    }

    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    emit_csv(dir / "trajectory.csv", result.points.size(),
             [&](std::ostream& os) { write_trajectory_csv(os, result); });
    emit_csv(dir / "measurements.csv", record.times.size(),
             [&](std::ostream& os) { write_measurement_csv(os, record); });
    if (cfg.snapshot_final) {
        const fs::path snap = dir / "final_state.qtrj";
        write_snapshot(snap.string(), psi);
        std::cout << "wrote " << snap.string() << "\n";
    }
    return kExitOk;
}

int cmd_simulate_sse(const RunConfig& cfg) {
    if (cfg.run_mode != RunMode::Sse) {
        throw ConfigError("simulate-sse needs run_mode = sse");
    }
    WaveFunction psi = make_initial_state(cfg);
    const TrajectoryResult result = run_sse_trajectory(psi, cfg.make_sse());

    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    emit_csv(dir / "trajectory.csv", result.points.size(),
             [&](std::ostream& os) { write_trajectory_csv(os, result); });
    if (cfg.snapshot_final) {
        const fs::path snap = dir / "final_state.qtrj";
        write_snapshot(snap.string(), psi);
        std::cout << "wrote " << snap.string() << "\n";
    }
    return kExitOk;
}

int cmd_ensemble(const RunConfig& cfg) {
    const WaveFunction psi0 = make_initial_state(cfg);
    const std::size_t m = static_cast<std::size_t>(cfg.ensemble_size);

    EnsembleStats stats;
    if (cfg.run_mode == RunMode::Discrete) {
        const CouplingSchedule schedule = cfg.make_schedule();
        const int n_steps = discrete_step_count(cfg);
        const DetectorProfile profile_q = make_profile(cfg.profile_q);
        if (schedule.nu == 0.0) {
            // step() is const: one kernel serves every worker.
            VonNeumannKernel kernel(profile_q, schedule, cfg.apparatus_q, psi0.grid_ptr());
            emit_warnings(kernel.warnings());
            stats = ensemble_run(
                [&](std::size_t, std::uint64_t seed) {
                    WaveFunction psi = psi0;
                    Rng rng(seed);
                    return run_discrete_trajectory(kernel, psi, cfg.h, n_steps, rng, nullptr,
                                                   cfg.record_every);
                },
                m, cfg.seed);
        } else {
            // The joint kernel keeps per-step scratch, so each trajectory
            // builds its own.
            const DetectorProfile profile_p = make_profile(cfg.profile_p);
            {
                AkKernel probe(profile_q, profile_p, schedule, cfg.apparatus_q, cfg.apparatus_p,
                               psi0.grid_ptr());
                emit_warnings(probe.warnings());
            }
            stats = ensemble_run(
                [&](std::size_t, std::uint64_t seed) {
                    AkKernel kernel(profile_q, profile_p, schedule, cfg.apparatus_q,
                                    cfg.apparatus_p, psi0.grid_ptr());
                    WaveFunction psi = psi0;
                    Rng rng(seed);
                    return run_discrete_trajectory(kernel, psi, cfg.h, n_steps, rng, nullptr,
                                                   cfg.record_every);
                },
                m, cfg.seed);
        }
    } else if (cfg.run_mode == RunMode::Sse) {
        const SseConfig base = cfg.make_sse();
        stats = ensemble_run(
            [&](std::size_t, std::uint64_t seed) {
                SseConfig one = base;
                one.seed = seed;
                WaveFunction psi = psi0;
                return run_sse_trajectory(psi, one);
            },
            m, cfg.seed);
    } else {
        throw ConfigError("ensemble needs run_mode = discrete or sse");
    }

    if (!stats.se_valid) {
        std::cerr << "warning: standard errors need at least two trajectories\n";
    }
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    emit_csv(dir / "ensemble.csv", stats.times.size(),
             [&](std::ostream& os) { stats.write_csv(os); });
    return kExitOk;
}

int cmd_converge(const RunConfig& cfg) {
    const WaveFunction psi0 = make_initial_state(cfg);
    ConvergenceSettings settings;
    settings.apparatus_q = cfg.apparatus_q;
    settings.apparatus_p = cfg.apparatus_p;
    settings.sse_dt = cfg.converge_dt;
    settings.bootstrap = static_cast<std::size_t>(cfg.bootstrap);
    const ConvergenceReport report = convergence_study(
        psi0, cfg.h, make_profile(cfg.profile_q), make_profile(cfg.profile_p), cfg.tau_list,
        cfg.horizon, static_cast<std::size_t>(cfg.ensemble_size), cfg.seed, settings);

    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    emit_csv(dir / "convergence.csv", report.rungs.size(),
             [&](std::ostream& os) { report.write_csv(os); });
    report.write_summary(std::cout);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"repeated weak quantum measurement and its diffusion limit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "flat key = value run configuration")
            ->required();
        sub->add_option("--set", overrides, "override one key as key=value (repeatable)");
        return sub;
    };

    CLI::App* kappa =
        add_common(app.add_subcommand("kappa", "print the profile quadratures per channel"));
    CLI::App* sim_d = add_common(
        app.add_subcommand("simulate-discrete", "one trajectory of the measurement chain"));
    CLI::App* sim_s =
        add_common(app.add_subcommand("simulate-sse", "one trajectory of the limit equation"));
    CLI::App* ens =
        add_common(app.add_subcommand("ensemble", "trajectory ensemble with moment statistics"));
    CLI::App* conv = add_common(
        app.add_subcommand("converge", "discrete-to-limit distribution convergence study"));
    CLI::App* verify =
        add_common(app.add_subcommand("verify", "run the full verification gate"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        const RunConfig cfg = parse_config(config_path, overrides, &std::cerr);
        if (kappa->parsed()) return cmd_kappa(cfg);
        if (sim_d->parsed()) return cmd_simulate_discrete(cfg);
        if (sim_s->parsed()) return cmd_simulate_sse(cfg);
        if (ens->parsed()) return cmd_ensemble(cfg);
        if (conv->parsed()) return cmd_converge(cfg);
        if (verify->parsed()) return acceptance::run(std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ResourceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}

}  // namespace qmeas
