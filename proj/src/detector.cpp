#include "qmeas/detector.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qmeas/errors.hpp"

namespace qmeas {
namespace {

using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

template <class F>
double integrate(const F& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-12);
}

// Raw argument z beyond which exp(-z^2/2) times any shipped polynomial factor
// is below double underflow concerns.
constexpr double kAnalyticRawHalfWidth = 16.0;
constexpr int kCdfCells = 1 << 16;
constexpr size_t kMinTableKnots = 32;

}  // namespace

struct DetectorProfile::Impl {
    ProfileKind kind = ProfileKind::Gaussian;
    NormalizationMode mode = NormalizationMode::Density;
    double a = 0.0;    // perturbation coefficient; 0 for the plain gaussian
    double amp = 1.0;  // A in chi(u) = A * raw(s u)
    double arg = 1.0;  // s
    double raw_half_width = kAnalyticRawHalfWidth;  // raw support in z = sqrt(u)
    std::shared_ptr<const Spline> spline;           // table kind only
    double table_u_max = 0.0;

    double kappa = 0.0;
    double y_max = 0.0;
    std::vector<double> cdf_y;
    std::vector<double> cdf_f;

    double raw(double u) const {
        if (spline) {
            if (u < 0.0 || u > table_u_max) return 0.0;
            return (*spline)(u);
        }
        return (1.0 + a * u) * std::exp(-0.25 * u);
    }
    double raw_d(double u) const {
        if (spline) {
            if (u < 0.0 || u > table_u_max) return 0.0;
            return spline->prime(u);
        }
        return (a - 0.25 * (1.0 + a * u)) * std::exp(-0.25 * u);
    }
    double raw_dd(double u) const {
        if (spline) {
            if (u < 0.0 || u > table_u_max) return 0.0;
            return spline->double_prime(u);
        }
        return (-0.5 * a + 0.0625 * (1.0 + a * u)) * std::exp(-0.25 * u);
    }

    double chi(double u) const { return amp * raw(arg * u); }
    double chi_d(double u) const { return amp * arg * raw_d(arg * u); }
    double chi_dd(double u) const { return amp * arg * arg * raw_dd(arg * u); }
    double density(double y) const {
        const double c = chi(y * y);
        return c * c;
    }
};

namespace {

// Solves chi(u) = A f(s u) so chi satisfies `mode`; `f` is evaluated in the
// unscaled variable z over [0, z_max].
template <class F>
std::pair<double, double> solve_scales(const F& f, double z_max, NormalizationMode mode) {
    if (mode == NormalizationMode::Density) {
        const double m0 = 2.0 * integrate([&](double z) { return f(z) * f(z); }, 0.0, z_max);
        const double m2 =
            2.0 * integrate([&](double z) { return z * z * f(z) * f(z); }, 0.0, z_max);
        if (!(m0 > 0.0) || !(m2 > 0.0)) {
            throw ConfigError("detector profile has non-positive normalization moments");
        }
        const double s = m2 / m0;
        return {std::sqrt(std::sqrt(s) / m0), s};
    }
    const double l0 = 2.0 * integrate(f, 0.0, z_max);
    const double l2 = 2.0 * integrate([&](double z) { return z * z * f(z); }, 0.0, z_max);
    if (!(l0 > 0.0) || !(l2 > 0.0)) {
        throw ConfigError("detector profile has non-positive normalization moments");
    }
    const double s = l2 / l0;
    return {std::sqrt(s) / l0, s};
}

void rebuild_caches(DetectorProfile::Impl& impl) {
    impl.y_max = impl.raw_half_width / std::sqrt(impl.arg);
    impl.kappa = 4.0 * integrate(
                           [&](double y) {
                               const double d = impl.chi_d(y * y) * y;
                               return d * d;
                           },
                           0.0, impl.y_max);

    const int n = kCdfCells;
    impl.cdf_y.resize(n + 1);
    impl.cdf_f.resize(n + 1);
    const double h = 2.0 * impl.y_max / n;
    double prev = impl.density(-impl.y_max);
    double acc = 0.0;
    impl.cdf_y[0] = -impl.y_max;
    impl.cdf_f[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        const double lo = -impl.y_max + i * h;
        const double next = impl.density(lo + h);
        acc += h / 6.0 * (prev + 4.0 * impl.density(lo + 0.5 * h) + next);
        impl.cdf_y[i + 1] = lo + h;
        impl.cdf_f[i + 1] = acc;
        prev = next;
    }
    if (!(acc > 0.0) || !std::isfinite(acc)) {
        throw ConfigError("detector pointer density has non-positive total mass");
    }
    for (auto& f : impl.cdf_f) f /= acc;
}

std::shared_ptr<const DetectorProfile::Impl> finalize(
    std::shared_ptr<DetectorProfile::Impl> impl) {
    const auto [amp, arg] = solve_scales([&](double z) { return impl->raw(z * z); },
                                         impl->raw_half_width, impl->mode);
    impl->amp = amp;
    impl->arg = arg;
    rebuild_caches(*impl);
    return impl;
}

}  // namespace

DetectorProfile::DetectorProfile(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

DetectorProfile DetectorProfile::gaussian(NormalizationMode mode) {
    auto impl = std::make_shared<Impl>();
    impl->kind = ProfileKind::Gaussian;
    impl->mode = mode;
    impl->a = 0.0;
    return DetectorProfile(finalize(std::move(impl)));
}

DetectorProfile DetectorProfile::perturbed_gaussian(double a, NormalizationMode mode) {
    if (!(a >= 0.0 && a <= 0.5)) {
        throw ConfigError("perturbed-gaussian coefficient must lie in [0, 0.5]");
    }
    auto impl = std::make_shared<Impl>();
    impl->kind = ProfileKind::PerturbedGaussian;
    impl->mode = mode;
    impl->a = a;
    return DetectorProfile(finalize(std::move(impl)));
}

DetectorProfile DetectorProfile::from_table(const std::vector<double>& u_nodes,
                                            const std::vector<double>& chi_values,
                                            NormalizationMode mode) {
    if (u_nodes.size() != chi_values.size()) {
        throw ConfigError("detector table: node and value counts differ");
    }
    if (u_nodes.size() < kMinTableKnots) {
        throw ConfigError("detector table needs at least 32 knots");
    }
    if (std::abs(u_nodes.front()) > 1e-12) {
        throw ConfigError("detector table must start at u = 0");
    }
    const double h = u_nodes[1] - u_nodes[0];
    if (!(h > 0.0)) {
        throw ConfigError("detector table nodes must be increasing");
    }
    const double u_max = u_nodes.back();
    for (size_t i = 0; i < u_nodes.size(); ++i) {
        if (std::abs(u_nodes[i] - static_cast<double>(i) * h) > 1e-9 * u_max) {
            throw ConfigError("detector table nodes must be uniformly spaced");
        }
    }
    double peak = 0.0;
    for (double v : chi_values) {
        if (!std::isfinite(v)) throw ConfigError("detector table contains non-finite values");
        peak = std::max(peak, std::abs(v));
    }
    if (!(peak > 0.0)) throw ConfigError("detector table is identically zero");
    const double tail =
        std::max(std::abs(chi_values.back()), std::abs(chi_values[chi_values.size() - 2]));
    if (tail > 1e-4 * peak) {
        throw ConfigError("detector table must decay at its far end");
    }

    auto impl = std::make_shared<Impl>();
    impl->kind = ProfileKind::Table;
    impl->mode = mode;
    impl->spline =
        std::make_shared<const Spline>(chi_values.data(), chi_values.size(), 0.0, h);
    impl->table_u_max = u_max;
    impl->raw_half_width = std::sqrt(u_max);
    return DetectorProfile(finalize(std::move(impl)));
}

double DetectorProfile::chi(double u) const { return impl_->chi(u); }
double DetectorProfile::chi_d(double u) const { return impl_->chi_d(u); }
double DetectorProfile::chi_dd(double u) const { return impl_->chi_dd(u); }
double DetectorProfile::density(double y) const { return impl_->density(y); }

double DetectorProfile::cdf(double y) const {
    const auto& im = *impl_;
    if (y <= -im.y_max) return 0.0;
    if (y >= im.y_max) return 1.0;
    const double h = 2.0 * im.y_max / kCdfCells;
    const double pos = (y + im.y_max) / h;
    const int i = std::min(static_cast<int>(pos), kCdfCells - 1);
    const double frac = pos - i;
    return im.cdf_f[i] + frac * (im.cdf_f[i + 1] - im.cdf_f[i]);
}

double DetectorProfile::sample(Rng& rng) const {
    const auto& im = *impl_;
    const double u = rng.uniform01();
    const auto it = std::upper_bound(im.cdf_f.begin(), im.cdf_f.end(), u);
    int cell = static_cast<int>(it - im.cdf_f.begin()) - 1;
    cell = std::clamp(cell, 0, kCdfCells - 1);
    const double df = im.cdf_f[cell + 1] - im.cdf_f[cell];
    const double frac = df > 0.0 ? (u - im.cdf_f[cell]) / df : 0.5;
    return im.cdf_y[cell] + frac * (im.cdf_y[cell + 1] - im.cdf_y[cell]);
}

double DetectorProfile::kappa() const { return impl_->kappa; }
double DetectorProfile::y_max() const { return impl_->y_max; }
ProfileKind DetectorProfile::kind() const { return impl_->kind; }
NormalizationMode DetectorProfile::mode() const { return impl_->mode; }
double DetectorProfile::amplitude_scale() const { return impl_->amp; }
double DetectorProfile::argument_scale() const { return impl_->arg; }

DetectorProfile DetectorProfile::rescaled(double amp_factor, double arg_factor) const {
    if (!(amp_factor > 0.0) || !(arg_factor > 0.0)) {
        throw ConfigError("rescale factors must be positive");
    }
    auto impl = std::make_shared<Impl>(*impl_);
    impl->amp *= amp_factor;
    impl->arg *= arg_factor;
    rebuild_caches(*impl);
    return DetectorProfile(std::move(impl));
}

DetectorProfile DetectorProfile::normalized(NormalizationMode mode) const {
    const auto [amp_f, arg_f] =
        solve_scales([&](double z) { return impl_->chi(z * z); }, impl_->y_max, mode);
    auto impl = std::make_shared<Impl>(*impl_);
    impl->mode = mode;
    impl->amp *= amp_f;
    impl->arg *= arg_f;
    rebuild_caches(*impl);
    return DetectorProfile(std::move(impl));
}

KappaForms kappa_quadrature(const DetectorProfile& p) {
    const double w = p.y_max();
    KappaForms out;
    out.from_curvature = -2.0 * integrate(
                                    [&](double y) {
                                        const double u = y * y;
                                        return p.chi_d(u) * p.chi(u) +
                                               2.0 * p.chi(u) * p.chi_dd(u) * u;
                                    },
                                    0.0, w);
    out.from_score = 4.0 * integrate(
                               [&](double y) {
                                   const double d = p.chi_d(y * y) * y;
                                   return d * d;
                               },
                               0.0, w);
    return out;
}

double theta_quadrature(const DetectorProfile& p) {
    return 2.0 * integrate(
                     [&](double y) {
                         const double u = y * y;
                         const double c = p.chi(u);
                         const double d = p.chi_d(u);
                         return c * d + 2.0 * (d * d + p.chi_dd(u) * c) * u;
                     },
                     0.0, p.y_max());
}

double theta_weighted(const DetectorProfile& weight, const DetectorProfile& ratios) {
    return 2.0 * integrate(
                     [&](double y) {
                         const double u = y * y;
                         const double c = ratios.chi(u);
                         if (std::abs(c) < 1e-290) return 0.0;
                         const double r1 = ratios.chi_d(u) / c;
                         const double r2 = ratios.chi_dd(u) / c;
                         return weight.density(y) * (r1 + 2.0 * (r1 * r1 + r2) * u);
                     },
                     0.0, weight.y_max());
}

}  // namespace qmeas
