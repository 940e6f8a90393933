#include "qmeas/grid.hpp"

#include <cmath>
#include <numbers>

#include "qmeas/errors.hpp"
#include "qmeas/fft.hpp"

namespace qmeas {

namespace {
bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }
}

Grid::Grid(const GridSpec& spec) : spec_(spec) {
    if (!is_pow2(spec.n_points) || spec.n_points < 8)
        throw ConfigError("grid: n_points must be a power of two >= 8, got " +
                          std::to_string(spec.n_points));
    if (!(spec.x_max > spec.x_min))
        throw ConfigError("grid: x_max must exceed x_min");
    if (!(spec.hbar > 0.0))
        throw ConfigError("grid: hbar must be positive");

    const int n = spec.n_points;
    dx_ = (spec.x_max - spec.x_min) / n;
    dp_ = 2.0 * std::numbers::pi * spec.hbar / (n * dx_);
    x_.resize(n);
    p_.resize(n);
    fwd_phase_.resize(n);
    inv_phase_.resize(n);
    for (int i = 0; i < n; ++i) x_[i] = spec.x_min + i * dx_;
    for (int m = 0; m < n; ++m) {
        const int k = (m < n / 2) ? m : m - n;
        p_[m] = k * dp_;
        const double ph = p_[m] * spec.x_min / spec.hbar;
        fwd_phase_[m] = cplx(std::cos(ph), -std::sin(ph));
        inv_phase_[m] = cplx(std::cos(ph), std::sin(ph));
    }
}

void Grid::to_momentum(const cplx* psi, cplx* phi) const {
    const int n = spec_.n_points;
    fft::forward(n, psi, phi);
    const double c = dx_ / std::sqrt(2.0 * std::numbers::pi * spec_.hbar);
    for (int m = 0; m < n; ++m) phi[m] *= c * fwd_phase_[m];
}

void Grid::to_position(const cplx* phi, cplx* psi) const {
    const int n = spec_.n_points;
    std::vector<cplx> tmp(n);
    const double c = n * dp_ / std::sqrt(2.0 * std::numbers::pi * spec_.hbar);
    for (int m = 0; m < n; ++m) tmp[m] = phi[m] * c * inv_phase_[m];
    fft::inverse(n, tmp.data(), psi);
}

Grid build_grid(const GridSpec& spec) { return Grid(spec); }

}  // namespace qmeas
