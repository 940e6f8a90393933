#include "qmeas/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include "qmeas/errors.hpp"

namespace qmeas {

namespace {
// Linear interpolation into the potential table; clamped at the ends.
double table_lookup(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] * (1.0 - t) + ys[j] * t;
}
}  // namespace

double HamiltonianSpec::potential(double x) const {
    switch (kind) {
        case PotentialKind::None:
        case PotentialKind::Free:
            return 0.0;
        case PotentialKind::Harmonic:
            return 0.5 * mass * omega * omega * x * x;
        case PotentialKind::Quartic:
            return quartic_coeff * x * x * x * x;
        case PotentialKind::Table:
            return table_lookup(table_x, table_phi, x);
    }
    return 0.0;
}

double HamiltonianSpec::potential_curvature(double x) const {
    switch (kind) {
        case PotentialKind::None:
        case PotentialKind::Free:
            return 0.0;
        case PotentialKind::Harmonic:
            return mass * omega * omega;
        case PotentialKind::Quartic:
            return 12.0 * quartic_coeff * x * x;
        case PotentialKind::Table:
            return table_lookup(table_x, table_phi_dd, x);
    }
    return 0.0;
}

void HamiltonianSpec::validate() const {
    if (kind != PotentialKind::None && !(mass > 0.0))
        throw ConfigError("hamiltonian: mass must be positive");
    if (kind == PotentialKind::Harmonic && !(omega > 0.0))
        throw ConfigError("hamiltonian: omega must be positive");
    if (kind == PotentialKind::Table) {
        if (table_x.size() < 2 || table_x.size() != table_phi.size() ||
            table_x.size() != table_phi_dd.size())
            throw ConfigError("hamiltonian: potential table needs matching x/phi/phi'' columns");
        if (!std::is_sorted(table_x.begin(), table_x.end()))
            throw ConfigError("hamiltonian: potential table nodes must be ascending");
    }
}

Propagator::Propagator(std::shared_ptr<const Grid> grid, const HamiltonianSpec& h, double dt)
    : grid_(std::move(grid)), h_(h), dt_(dt) {
    h_.validate();
    trivial_ = (h_.kind == PotentialKind::None);
    const int n = grid_->n();
    pot_.resize(n);
    curv_.resize(n);
    for (int i = 0; i < n; ++i) {
        pot_[i] = h_.potential(grid_->x(i));
        curv_[i] = h_.potential_curvature(grid_->x(i));
    }
    if (trivial_) return;
    half_pot_.resize(n);
    kin_phase_.resize(n);
    const double hbar = grid_->hbar();
    for (int i = 0; i < n; ++i) {
        const double ph = -pot_[i] * dt / (2.0 * hbar);
        half_pot_[i] = cplx(std::cos(ph), std::sin(ph));
    }
    for (int m = 0; m < n; ++m) {
        const double p = grid_->p(m);
        const double ph = -p * p * dt / (2.0 * h_.mass * hbar);
        kin_phase_[m] = cplx(std::cos(ph), std::sin(ph));
    }
}

void Propagator::apply(WaveFunction& psi) const {
    if (trivial_) return;
    auto& a = psi.amp();
    const int n = grid_->n();
    const bool flat = (h_.kind == PotentialKind::Free);
    if (!flat)
        for (int i = 0; i < n; ++i) a[i] *= half_pot_[i];
    std::vector<cplx> phi(n);
    grid_->to_momentum(a.data(), phi.data());
    for (int m = 0; m < n; ++m) phi[m] *= kin_phase_[m];
    grid_->to_position(phi.data(), a.data());
    if (!flat)
        for (int i = 0; i < n; ++i) a[i] *= half_pot_[i];
}

double Propagator::energy(const WaveFunction& psi) const {
    const auto& a = psi.amp();
    const int n = grid_->n();
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = std::norm(a[i]) * pot_[i];
    const double pot = pairwise_sum(w) * grid_->dx();
    if (trivial_) return pot;
    std::vector<cplx> phi(n);
    grid_->to_momentum(a.data(), phi.data());
    for (int m = 0; m < n; ++m) w[m] = std::norm(phi[m]) * grid_->p(m) * grid_->p(m);
    const double kin = pairwise_sum(w) * grid_->dp() / (2.0 * h_.mass);
    return kin + pot;
}

double Propagator::curvature_mean(const WaveFunction& psi) const {
    const auto& a = psi.amp();
    const int n = grid_->n();
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = std::norm(a[i]) * curv_[i];
    return pairwise_sum(w) * grid_->dx();
}

void free_evolve(WaveFunction& psi, const HamiltonianSpec& h, double t, int substeps) {
    if (substeps < 1) throw ConfigError("free_evolve: substeps must be >= 1");
    Propagator prop(psi.grid_ptr(), h, t / substeps);
    for (int s = 0; s < substeps; ++s) prop.apply(psi);
}

}  // namespace qmeas
