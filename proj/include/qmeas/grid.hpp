#pragma once

#include <vector>

#include "qmeas/util.hpp"

namespace qmeas {

// Uniform position grid on [x_min, x_max) with n_points a power of two.
struct GridSpec {
    int n_points = 256;
    double x_min = -20.0;
    double x_max = 20.0;
    double hbar = 1.0;

    bool operator==(const GridSpec&) const = default;
};

// Realized grid. Position nodes are x[i] = x_min + i*dx. The dual momentum
// grid is kept in FFT storage order: p[m] = m*dp for m < n/2 and (m-n)*dp
// otherwise, with dp = 2*pi*hbar/(n*dx), so dx*dp*n == 2*pi*hbar exactly.
//
// Representation change follows the continuum convention
//   phi(p) = (2*pi*hbar)^(-1/2) * Integral psi(x) exp(-i p x / hbar) dx,
// discretized on the nodes. With the x_min phase pulled out this reduces to a
// plain DFT, and the map is exactly unitary between the grid inner products
// sum |psi|^2 dx and sum |phi|^2 dp.
class Grid {
  public:
    explicit Grid(const GridSpec& spec);  // throws ConfigError on bad spec

    const GridSpec& spec() const { return spec_; }
    int n() const { return spec_.n_points; }
    double dx() const { return dx_; }
    double dp() const { return dp_; }
    double hbar() const { return spec_.hbar; }
    double length_x() const { return spec_.x_max - spec_.x_min; }
    double length_p() const { return dp_ * spec_.n_points; }
    double x(int i) const { return spec_.x_min + i * dx_; }
    double p(int m) const { return p_[m]; }
    const std::vector<double>& x_nodes() const { return x_; }
    const std::vector<double>& p_nodes() const { return p_; }  // FFT order

    // psi (values on x nodes) -> phi (values on p nodes, FFT order).
    void to_momentum(const cplx* psi, cplx* phi) const;
    void to_position(const cplx* phi, cplx* psi) const;

  private:
    GridSpec spec_;
    double dx_, dp_;
    std::vector<double> x_, p_;
    std::vector<cplx> fwd_phase_, inv_phase_;  // exp(-+ i p[m] x_min / hbar)
};

Grid build_grid(const GridSpec& spec);

}  // namespace qmeas
