#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qmeas/grid.hpp"
#include "qmeas/util.hpp"

namespace qmeas {

// One-body pure state on a Grid. amp[i] holds psi(x_i); the L2 norm is
// sqrt(sum |amp|^2 dx).
class WaveFunction {
  public:
    WaveFunction(std::shared_ptr<const Grid> grid, std::vector<cplx> amp);

    // Normalized Gaussian  psi(q) = (2 pi var)^(-1/4) exp(-(q-center)^2/(4 var)
    //                               + i k0 (q-center)),
    // so the position density has the given mean and variance and <p> = hbar*k0.
    static WaveFunction gaussian(std::shared_ptr<const Grid> grid, double center,
                                 double var, double k0);

    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
    int n() const { return grid_->n(); }
    std::vector<cplx>& amp() { return amp_; }
    const std::vector<cplx>& amp() const { return amp_; }

    double norm() const;
    void normalize();  // throws NumericError if the norm underflows

    // <psi|other> with the dx measure.
    cplx overlap(const WaveFunction& other) const;

    double position_mean() const;
    double position_var() const;
    // Central position moment <(q - <q>)^k>.
    double position_central_moment(int order) const;

    // Momentum-side quantities (one transform per call).
    double momentum_mean() const;
    double momentum_var() const;

    // All eight per-step observables in one pass (single FFT):
    // {q_mean, p_mean, q_var, p_var, qp_cov, norm, kinetic}.
    struct Moments {
        double q_mean, p_mean, q_var, p_var, qp_cov, norm, kinetic;
    };
    Moments moments() const;

    // Multiply by f(x) pointwise / f(p) spectrally.
    void apply_position_fn(const std::function<cplx(double)>& f);
    void apply_momentum_fn(const std::function<cplx(double)>& f);

    // Largest |amp| over the outermost `edge_fraction` of nodes on each side.
    double boundary_amplitude(double edge_fraction = 0.05) const;
    // Error message if the boundary amplitude exceeds `threshold`.
    std::optional<std::string> boundary_violation(double threshold = 1e-6,
                                                  double edge_fraction = 0.05) const;

  private:
    std::shared_ptr<const Grid> grid_;
    std::vector<cplx> amp_;
};

}  // namespace qmeas
