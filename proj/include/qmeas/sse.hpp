#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "qmeas/discrete.hpp"
#include "qmeas/hamiltonian.hpp"
#include "qmeas/rng.hpp"
#include "qmeas/wavefunction.hpp"

namespace qmeas {

// Configuration of the limit-equation integrator
//   |dPsi> = { H/(i hbar) - kq (q-<q>)^2 - kp (p-<p>)^2 } |Psi> dt
//            - sqrt(2 kq) (q-<q>) |Psi> dB_q - sqrt(2 kp) (p-<p>) |Psi> dB_p
// with kq, kp the detector-profile curvature constants of the two channels.
struct SseConfig {
    double kappa_q = 0.0;  // 1/(length^2 time)
    double kappa_p = 0.0;  // 1/(momentum^2 time)
    double dt = 1e-3;
    HamiltonianSpec h{};
    long long n_steps = 0;
    std::uint64_t seed = 1;
    bool renormalize = true;  // per-step renormalization (the exact invariant)
    int record_every = 1;     // trajectory row thinning; first/last rows always kept

    // Throws ConfigError. The stability guard needs the grid extents:
    // dt * max(kq Lq^2, kp Lp^2) < 0.1 with Lq = max|x|, Lp = max|p|.
    void validate(const Grid& grid) const;
};

// Pre-drawn Brownian increments, one pair per step, i.i.d. normal(0, dt),
// independent across the two channels.
struct WienerPath {
    std::vector<double> db_q, db_p;
    double dt = 0.0;
    std::uint64_t seed = 0;

    static WienerPath generate(long long n_steps, double dt, std::uint64_t seed);

    double quadratic_variation_q() const;
    double quadratic_variation_p() const;
    // Throws NumericError if either channel's quadratic variation leaves the
    // band n dt +- 5 sqrt(2 n) dt.
    void validate() const;
};

// One Euler-Maruyama update per step: the Hamiltonian factor is applied by
// split-step, the p-channel factors spectrally, and the noise quadratics are
// kept pathwise (dB^2 and dB_q dB_p terms), which drops the un-renormalized
// per-step norm defect from O(dt) to O(dt^{3/2}).
class SseIntegrator {
  public:
    SseIntegrator(std::shared_ptr<const Grid> grid, SseConfig cfg);

    // Advances psi by one step; returns the un-renormalized |norm^2 - 1|.
    double step(WaveFunction& psi, double db_q, double db_p);

    const SseConfig& config() const { return cfg_; }
    const Propagator& propagator() const { return prop_; }

  private:
    std::shared_ptr<const Grid> grid_;
    SseConfig cfg_;
    Propagator prop_;
    bool spectral_;  // kp > 0: momentum-side factors are needed
    std::vector<cplx> fwd_;   // [psi~, (A_q psi)~] batch
    std::vector<cplx> inv_;   // [A_p psi, A_p^2 psi, A_p A_q psi] batch
    std::vector<double> absq_;
};

// |'post norm'^2 - 1| of one un-renormalized update. `pre` names the state the
// step started from (contracted to be normalized) and is not inspected.
double norm_defect(const WaveFunction& pre, const WaveFunction& post);

enum class LindbladObservable { Q, P, Q2, P2, H };

// <L(Y)> = <[Y,H]/(i hbar)> + kq <[q,Y]q + q[Y,q]> + kp <[p,Y]p + p[Y,p]>,
// evaluated through grid/spectral operator applications on psi.
double lindblad_drift(const WaveFunction& psi, LindbladObservable y, const SseConfig& cfg);

// Full path. Rows are recorded at t = 0 and every record_every-th step plus
// the final step. Deterministic given cfg.seed; step errors carry the index.
TrajectoryResult run_sse_trajectory(WaveFunction& psi, const SseConfig& cfg);
TrajectoryResult run_sse_trajectory(WaveFunction& psi, const SseConfig& cfg,
                                    const WienerPath& path);

}  // namespace qmeas
