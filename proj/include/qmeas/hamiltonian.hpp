#pragma once

#include <string>
#include <vector>

#include "qmeas/wavefunction.hpp"

namespace qmeas {

// System Hamiltonian H = p^2/(2m) + Phi(q). `None` disables the kinetic term
// as well, giving no free dynamics at all.
enum class PotentialKind { None, Free, Harmonic, Quartic, Table };

struct HamiltonianSpec {
    PotentialKind kind = PotentialKind::Free;
    double mass = 1.0;
    double omega = 1.0;           // Harmonic: Phi = m omega^2 q^2 / 2
    double quartic_coeff = 1.0;   // Quartic: Phi = c q^4
    std::vector<double> table_x;  // Table: Phi sampled on these nodes
    std::vector<double> table_phi;
    std::vector<double> table_phi_dd;  // second derivative, same nodes

    double potential(double x) const;
    double potential_curvature(double x) const;  // Phi''(x)
    bool has_kinetic() const { return kind != PotentialKind::None; }
    void validate() const;  // throws ConfigError

    bool operator==(const HamiltonianSpec&) const = default;
};

// Cached split-step propagator exp(t H / (i hbar)) for a fixed (grid, H, dt):
// half potential phase, full kinetic phase in the momentum representation,
// half potential phase. Exact for Phi == 0; second order in dt otherwise.
class Propagator {
  public:
    Propagator(std::shared_ptr<const Grid> grid, const HamiltonianSpec& h, double dt);

    void apply(WaveFunction& psi) const;  // one dt step
    double dt() const { return dt_; }
    const HamiltonianSpec& hamiltonian() const { return h_; }

    // <H> for the current state (kinetic via one transform + potential sum).
    double energy(const WaveFunction& psi) const;
    // <Phi''> for the current state.
    double curvature_mean(const WaveFunction& psi) const;

  private:
    std::shared_ptr<const Grid> grid_;
    HamiltonianSpec h_;
    double dt_;
    bool trivial_;                 // kind == None: apply() is the identity
    std::vector<cplx> half_pot_;   // exp(-i Phi(x) dt / (2 hbar))
    std::vector<cplx> kin_phase_;  // exp(-i p^2 dt / (2 m hbar))
    std::vector<double> pot_, curv_;
};

// Evolve psi by exp(t H / (i hbar)) using `substeps` split steps.
void free_evolve(WaveFunction& psi, const HamiltonianSpec& h, double t, int substeps = 1);

}  // namespace qmeas
