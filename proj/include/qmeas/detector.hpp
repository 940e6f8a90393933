#pragma once

#include <memory>
#include <vector>

#include "qmeas/rng.hpp"

namespace qmeas {

enum class ProfileKind { Gaussian, PerturbedGaussian, Table };

// How the raw shape g(u) is scaled into the working profile chi(u) = A g(s u):
//  Density:   chi(y^2)^2 is a probability density in y with unit variance.
//  Amplitude: Integral chi(y^2) dy = 1 and Integral chi(y^2) y^2 dy = 1.
// Density is the default and the only mode used by the acceptance checks;
// Amplitude is kept for comparison runs.
enum class NormalizationMode { Density, Amplitude };

// Detector response profile chi as a function of u = y^2. Real and even in y
// by construction. Exposes derivatives in u, the diffusion coefficient kappa,
// and an inverse-CDF sampler for the pointer density chi(y^2)^2.
class DetectorProfile {
  public:
    static DetectorProfile gaussian(NormalizationMode mode = NormalizationMode::Density);

    // (1 + a u) exp(-u/4) with a in [0, 1/2].
    static DetectorProfile perturbed_gaussian(double a,
                                              NormalizationMode mode = NormalizationMode::Density);
    // chi sampled on uniformly spaced u nodes starting at 0; cubic-spline
    // interpolated. Requires at least 32 knots.
    static DetectorProfile from_table(const std::vector<double>& u_nodes,
                                      const std::vector<double>& chi_values,
                                      NormalizationMode mode = NormalizationMode::Density);

    double chi(double u) const;
    double chi_d(double u) const;   // d chi / du
    double chi_dd(double u) const;  // d^2 chi / du^2

    double density(double y) const;  // chi(y^2)^2
    double cdf(double y) const;      // cached cumulative table of density
    double sample(Rng& rng) const;   // inverse-CDF draw, deterministic per rng

    double kappa() const;  // cached score-form value
    double y_max() const;  // effective support half-width used in quadrature

    ProfileKind kind() const;
    NormalizationMode mode() const;
    double amplitude_scale() const;  // A
    double argument_scale() const;   // s

    // Same shape with the normalization deliberately broken; used only as a
    // negative control in diagnostics.
    DetectorProfile rescaled(double amp_factor, double arg_factor) const;

    // Re-solves the scale equations for the current shape. Identity within
    // quadrature accuracy when the profile already satisfies `mode`.
    DetectorProfile normalized(NormalizationMode mode) const;

    struct Impl;

  private:
    explicit DetectorProfile(std::shared_ptr<const Impl> impl);
    std::shared_ptr<const Impl> impl_;
};

// kappa by adaptive quadrature, two algebraically equivalent forms:
//   from_curvature = -Integral (chi' chi + 2 chi chi'' y^2) dy
//   from_score     =  2 Integral (chi'(y^2) y)^2 dy
struct KappaForms {
    double from_curvature;
    double from_score;
};
KappaForms kappa_quadrature(const DetectorProfile& p);

// Integral (chi chi' + 2 chi'^2 y^2 + 2 chi'' chi y^2) dy. The integrand is
// d/dy [y chi' chi], so this vanishes for every decaying profile.
double theta_quadrature(const DetectorProfile& p);

// Same integrand ratios taken from `ratios` but weighted by the pointer
// density of `weight`. Equal to theta_quadrature when both arguments are the
// same profile; nonzero when they disagree (negative-control diagnostic).
double theta_weighted(const DetectorProfile& weight, const DetectorProfile& ratios);

}  // namespace qmeas
