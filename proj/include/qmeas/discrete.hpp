#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qmeas/detector.hpp"
#include "qmeas/hamiltonian.hpp"
#include "qmeas/rng.hpp"
#include "qmeas/wavefunction.hpp"

namespace qmeas {

// Coupling strengths of one measurement step. Under SqrtTau the couplings are
// slaved to the step: mu = nu = sqrt(tau) exactly.
enum class ScalingRule { Fixed, SqrtTau };

struct CouplingSchedule {
    double mu = 0.0;     // system-position / apparatus' coupling
    double nu = 0.0;     // system-momentum / apparatus'' coupling (joint model)
    double tau = 1e-3;   // step duration
    double sigma = 1.0;  // detector pointer scale
    ScalingRule rule = ScalingRule::Fixed;

    static CouplingSchedule fixed(double mu, double nu, double tau, double sigma = 1.0);
    static CouplingSchedule sqrt_tau(double tau, double sigma = 1.0);

    void validate() const;                    // throws ConfigError
    std::vector<std::string> warnings() const;  // e.g. mu/sigma above 0.3
};

// Outcome stream of one trajectory. p_outcomes stays empty for the
// position-only model.
struct MeasurementRecord {
    std::vector<double> times;
    std::vector<double> q_outcomes;
    std::vector<double> p_outcomes;
    CouplingSchedule schedule;
};

struct StepOutcome {
    double q_prime = 0.0;
    double p_dblprime = 0.0;
    bool joint = false;
};

// Uniform outcome grid for one apparatus axis, nodes on [-half_width,
// half_width). The joint kernel transforms along apparatus axes, so there
// n_points must be a power of two.
struct ApparatusSpec {
    int n_points = 256;
    double half_width = 12.0;

    bool operator==(const ApparatusSpec&) const = default;
};

struct OutcomeDensity {
    std::vector<double> nodes;
    std::vector<double> density;  // nonnegative, node sum * spacing ~ 1
    double spacing = 0.0;
    double mass = 0.0;
};

// Position-only indirect measurement: couple the system position to a fresh
// pointer, read the pointer exactly, collapse.
//
// One step on psi:
//   rho(q') = sum_k |psi_k|^2 dx * (1/sigma) chi^2(((q'-mu x_k)/sigma)^2)
// sampled by inverse CDF over the apparatus nodes; collapse multiplies psi_k
// by chi(((Q'-mu x_k)/sigma)^2) and renormalizes.
class VonNeumannKernel {
  public:
    VonNeumannKernel(DetectorProfile profile, CouplingSchedule schedule, ApparatusSpec apparatus,
                     std::shared_ptr<const Grid> system_grid);

    StepOutcome step(WaveFunction& psi, Rng& rng) const;
    OutcomeDensity outcome_density(const WaveFunction& psi) const;

    const CouplingSchedule& schedule() const { return schedule_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

  private:
    double pointer_amp(double z) const;  // chi((z/sigma)^2), table backed

    DetectorProfile profile_;
    CouplingSchedule schedule_;
    ApparatusSpec apparatus_;
    std::shared_ptr<const Grid> grid_;
    std::vector<std::string> warnings_;
    std::vector<double> nodes_;      // apparatus q' nodes
    std::vector<double> amp_table_;  // chi(y^2) on uniform y grid
    double amp_y_max_ = 0.0;
    double amp_step_ = 0.0;
};

// Joint position-momentum measurement on the tensor product
//   system (position rep) x apparatus' (position rep) x apparatus'' (momentum rep)
// with the interaction V = exp{(mu p' q - nu q'' p)/(i hbar)} applied exactly
// as three commuting-phase factors (the generator cross-commutator is central):
//   V = exp(mu p' q/(i hbar)) exp(-nu q'' p/(i hbar)) exp(mu nu p' q''/(2 i hbar)).
// Q' and P'' are sampled jointly from the exact post-interaction density
// (marginal in Q', then the conditional slice), and the system state is
// collapsed accordingly.
//
// step() uses a factored form of the same transform: with the tensor indexed
// (q', q'', x), V (psi x phi1 x phi2) = U(q', q'', x) B(q'', x) where
// U collects every system-independent factor (pointer states, the central
// phase, the mu-coupling shift of q') and B is the system state translated by
// nu q''. U is fixed per kernel and precomputed, so a step costs one small
// FFT batch for B, a weighted reduction against |U|^2 for the Q' marginal
// (Parseval makes the q'' representation equivalent to p'' there), and one
// slice transform q'' -> p'' for the sampled conditional.
class AkKernel {
  public:
    enum class Axis { ApparatusQ, ApparatusP, System };

    AkKernel(DetectorProfile profile_q, DetectorProfile profile_p, CouplingSchedule schedule,
             ApparatusSpec apparatus_q, ApparatusSpec apparatus_p,
             std::shared_ptr<const Grid> system_grid,
             std::size_t memory_cap_bytes = std::size_t{1} << 29);

    StepOutcome step(WaveFunction& psi, Rng& rng);

    // Full post-interaction outcome density on the (q', p'') node lattice,
    // row-major over (i_q', i_p''). Diagnostic path, one full tensor pass.
    struct JointDensity {
        std::vector<double> q_nodes;
        std::vector<double> p_nodes;
        std::vector<double> density;  // size q_nodes.size() * p_nodes.size()
        double cell = 0.0;            // dq' * dp''
        double mass = 0.0;
    };
    JointDensity joint_density(const WaveFunction& psi);

    // Tensor-level building blocks, exposed for the conjugation checks.
    std::vector<cplx> build_product(const WaveFunction& psi) const;
    void apply_interaction(std::vector<cplx>& tensor, int direction) const;  // +1: V, -1: V+
    void multiply_primal_nodes(std::vector<cplx>& tensor, Axis axis) const;
    void multiply_dual_nodes(std::vector<cplx>& tensor, Axis axis) const;
    double tensor_norm(const std::vector<cplx>& tensor) const;

    const CouplingSchedule& schedule() const { return schedule_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    int n_apparatus_q() const { return n1_; }
    int n_apparatus_p() const { return n2_; }

    // Pointer states on their grids (apparatus' position rep, apparatus''
    // momentum rep), normalized to unit grid mass.
    const std::vector<double>& pointer_q() const { return phi1_; }
    const std::vector<double>& pointer_p() const { return phi2_; }
    const std::vector<double>& apparatus_q_nodes() const { return q1_; }
    const std::vector<double>& apparatus_p_nodes() const { return p2_; }

  private:
    void to_dual(std::vector<cplx>& tensor, Axis axis) const;
    void to_primal(std::vector<cplx>& tensor, Axis axis) const;
    void check_tails(const std::vector<double>& marginal, double spacing,
                     const char* which) const;

    DetectorProfile profile_q_, profile_p_;
    CouplingSchedule schedule_;
    std::shared_ptr<const Grid> grid_;
    std::vector<std::string> warnings_;
    int n1_, n2_, ns_;
    double d1_, d2_;            // apparatus node spacings (q' and p'')
    std::vector<double> q1_;    // apparatus' position nodes
    std::vector<double> p1d_;   // apparatus' momentum nodes, FFT order
    std::vector<double> p2_;    // apparatus'' momentum nodes
    std::vector<double> q2d_;   // apparatus'' position nodes, FFT order
    std::vector<double> phi1_, phi2_;
    std::vector<double> phi12_;       // outer product phi1 x phi2
    std::vector<cplx> phase_c_;       // n1 x n2: exp(-i mu nu p' q''/(2 hbar))
    std::vector<cplx> phase_b_;       // n2 x ns: exp(+i nu q'' p/hbar)
    std::vector<cplx> phase_a_;       // n1 x ns: exp(-i mu p' x/hbar)
    std::vector<cplx> ax1_fwd_, ax1_inv_;  // axis transform phases (incl. scale)
    std::vector<cplx> ax2_fwd_, ax2_inv_;
    std::vector<cplx> axs_fwd_, axs_inv_;
    std::vector<cplx> tensor_;  // diagnostic-path scratch

    // Fast-step precomputation and scratch; layout [(i*n2 + l)*ns + k].
    std::vector<cplx> ufac_;    // U(q', q'', x), step independent
    std::vector<double> usq_;   // |U|^2
    std::vector<cplx> psid_;    // system state in the dual rep
    std::vector<cplx> bmat_;    // B(q'', x)
    std::vector<double> bsq_;   // |B|^2
    std::vector<cplx> slice_;   // sampled-Q' conditional slice
    std::vector<double> rho1_, rho2_;
};

struct ConjugationReport {
    double residual_q = 0.0;  // |V+ q' V - (q' + mu q - mu nu q''/2)| on the state
    double residual_p = 0.0;  // |V+ p'' V - (p'' + nu p - mu nu p'/2)| on the state
};

ConjugationReport conjugation_check(const AkKernel& kernel, const WaveFunction& psi);

struct TrajectoryPoint {
    double t = 0.0;
    WaveFunction::Moments moments{};
    double energy = 0.0;
};

struct TrajectoryResult {
    std::vector<TrajectoryPoint> points;
};

// Repeated measurement interleaved with Hamiltonian evolution: each step
// measures (collapse) and then evolves for tau. psi is advanced in place.
// Point j holds the state at t = j*tau; outcome j is recorded at t = j*tau.
// Moments are stored at t = 0, every record_every-th step, and the final step;
// the outcome record always holds every step.
template <class Kernel>
TrajectoryResult run_discrete_trajectory(Kernel& kernel, WaveFunction& psi,
                                         const HamiltonianSpec& h, int n_steps, Rng& rng,
                                         MeasurementRecord* record = nullptr,
                                         int record_every = 1);

}  // namespace qmeas
