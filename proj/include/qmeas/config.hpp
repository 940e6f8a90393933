#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qmeas/detector.hpp"
#include "qmeas/discrete.hpp"
#include "qmeas/hamiltonian.hpp"
#include "qmeas/sse.hpp"
#include "qmeas/wavefunction.hpp"

namespace qmeas {

enum class RunMode { None, Discrete, Sse };
enum class StateKind { Gaussian, Snapshot };

// One run described by a flat key = value file. Field initializers are the
// schema defaults; parse_config reports every field left at its default.
struct RunConfig {
    int schema_version = 1;
    std::uint64_t seed = 0;  // files must set this explicitly, never defaulted
    RunMode run_mode = RunMode::None;
    std::string output_dir = "out";

    GridSpec grid{128, -10.0, 10.0, 1.0};
    HamiltonianSpec h{};

    StateKind state_kind = StateKind::Gaussian;
    std::string state_snapshot;   // set iff state_kind == Snapshot
    double state_center = 0.0;
    double state_variance = 0.5;
    double state_momentum = 0.0;  // target <p>; the wavenumber used is this / hbar

    std::string profile_q = "gaussian";  // gaussian | perturbed:<a> | table:<path>
    std::string profile_p = "gaussian";

    // Discrete-step keys. Under SqrtTau the couplings are slaved to sqrt(tau)
    // and the mu / nu keys may not be set.
    ScalingRule scaling = ScalingRule::SqrtTau;
    double mu = 0.1;
    double nu = 0.0;  // 0 selects the position-only kernel
    double tau = 1e-3;
    double sigma = 1.0;
    ApparatusSpec apparatus_q{};
    ApparatusSpec apparatus_p{};

    // Limit-equation keys.
    double kappa_q = 0.125;
    double kappa_p = 0.0;
    double dt = 1e-3;
    bool renormalize = true;

    long long n_steps = 1000;
    int record_every = 1;
    int ensemble_size = 100;
    bool snapshot_final = false;

    // Convergence-study keys.
    std::vector<double> tau_list{4e-3, 1e-3, 2.5e-4};
    double horizon = 1.0;
    double converge_dt = 2.5e-4;
    int bootstrap = 200;

    bool operator==(const RunConfig&) const = default;

    CouplingSchedule make_schedule() const;  // realizes the scaling rule
    SseConfig make_sse() const;              // folds in h, n_steps, seed, record_every
};

// Parses `key = value` lines ('#' starts a comment, blank lines are skipped)
// and then the CLI overrides, each also of the form key=value. Every problem
// is collected and thrown as one ConfigError with one line per item: unknown
// keys (with a nearest-key suggestion), duplicate keys, unparseable or
// out-of-range values, a missing schema_version or seed, keys belonging to the
// mode not selected by run_mode, and referenced files that do not exist. With
// `provenance` given, each field left at its default is echoed as
// "default: key = value".
RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {},
                       std::ostream* provenance = nullptr);
RunConfig parse_config_text(const std::string& text, const std::string& origin,
                            const std::vector<std::string>& overrides = {},
                            std::ostream* provenance = nullptr);

// Emits keys in schema order with doubles at 17 significant digits. Keys of
// the mode not selected by run_mode are omitted, as are mu / nu under the
// sqrt_tau rule, so parse_config_text of the result reproduces the config.
std::string serialize_config(const RunConfig& cfg);

// Builds the profile named by a spec string: "gaussian", "perturbed:<a>", or
// "table:<path>" where the file holds two-column u, chi lines (comma or
// whitespace separated) on uniform u nodes starting at 0.
DetectorProfile make_profile(const std::string& spec);

// Initial state on the configured grid. A snapshot state carries its own grid,
// which then replaces the grid keys.
WaveFunction make_initial_state(const RunConfig& cfg);

}  // namespace qmeas
