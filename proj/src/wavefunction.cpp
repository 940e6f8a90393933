#include "qmeas/wavefunction.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qmeas/errors.hpp"

namespace qmeas {

WaveFunction::WaveFunction(std::shared_ptr<const Grid> grid, std::vector<cplx> amp)
    : grid_(std::move(grid)), amp_(std::move(amp)) {
    if (static_cast<int>(amp_.size()) != grid_->n())
        throw std::invalid_argument("WaveFunction: amplitude size does not match grid");
}

WaveFunction WaveFunction::gaussian(std::shared_ptr<const Grid> grid, double center,
                                    double var, double k0) {
    if (!(var > 0.0)) throw ConfigError("gaussian state: variance must be positive");
    const int n = grid->n();
    std::vector<cplx> a(n);
    const double norm_c = std::pow(2.0 * std::numbers::pi * var, -0.25);
    for (int i = 0; i < n; ++i) {
        const double d = grid->x(i) - center;
        const double mag = norm_c * std::exp(-d * d / (4.0 * var));
        a[i] = mag * cplx(std::cos(k0 * d), std::sin(k0 * d));
    }
    WaveFunction psi(grid, std::move(a));
    psi.normalize();
    return psi;
}

double WaveFunction::norm() const {
    std::vector<double> sq(amp_.size());
    for (std::size_t i = 0; i < amp_.size(); ++i) sq[i] = std::norm(amp_[i]);
    return std::sqrt(pairwise_sum(sq) * grid_->dx());
}

void WaveFunction::normalize() {
    const double nrm = norm();
    if (!(nrm > 1e-300)) throw NumericError("normalize: state norm underflow");
    const double inv = 1.0 / nrm;
    for (auto& a : amp_) a *= inv;
}

cplx WaveFunction::overlap(const WaveFunction& other) const {
    cplx s = 0.0;
    for (std::size_t i = 0; i < amp_.size(); ++i) s += std::conj(amp_[i]) * other.amp_[i];
    return s * grid_->dx();
}

double WaveFunction::position_mean() const {
    std::vector<double> w(amp_.size());
    for (std::size_t i = 0; i < amp_.size(); ++i) w[i] = std::norm(amp_[i]) * grid_->x(i);
    return pairwise_sum(w) * grid_->dx();
}

double WaveFunction::position_var() const { return position_central_moment(2); }

double WaveFunction::position_central_moment(int order) const {
    const double m = position_mean();
    std::vector<double> w(amp_.size());
    for (std::size_t i = 0; i < amp_.size(); ++i)
        w[i] = std::norm(amp_[i]) * std::pow(grid_->x(i) - m, order);
    return pairwise_sum(w) * grid_->dx();
}

double WaveFunction::momentum_mean() const {
    std::vector<cplx> phi(amp_.size());
    grid_->to_momentum(amp_.data(), phi.data());
    std::vector<double> w(amp_.size());
    for (std::size_t m = 0; m < amp_.size(); ++m) w[m] = std::norm(phi[m]) * grid_->p(m);
    return pairwise_sum(w) * grid_->dp();
}

double WaveFunction::momentum_var() const {
    std::vector<cplx> phi(amp_.size());
    grid_->to_momentum(amp_.data(), phi.data());
    std::vector<double> w(amp_.size()), w2(amp_.size());
    for (std::size_t m = 0; m < amp_.size(); ++m) {
        const double d = std::norm(phi[m]);
        w[m] = d * grid_->p(m);
        w2[m] = d * grid_->p(m) * grid_->p(m);
    }
    const double mean = pairwise_sum(w) * grid_->dp();
    return pairwise_sum(w2) * grid_->dp() - mean * mean;
}

WaveFunction::Moments WaveFunction::moments() const {
    const std::size_t n = amp_.size();
    const double dx = grid_->dx(), dp = grid_->dp();

    std::vector<double> w0(n), wq(n), wq2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::norm(amp_[i]);
        w0[i] = d;
        wq[i] = d * grid_->x(i);
        wq2[i] = d * grid_->x(i) * grid_->x(i);
    }
    const double mass = pairwise_sum(w0) * dx;
    const double q_mean = pairwise_sum(wq) * dx / mass;
    const double q2 = pairwise_sum(wq2) * dx / mass;

    std::vector<cplx> phi(n), dpsi(n);
    grid_->to_momentum(amp_.data(), phi.data());
    std::vector<double> vp(n), vp2(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double d = std::norm(phi[m]);
        vp[m] = d * grid_->p(m);
        vp2[m] = d * grid_->p(m) * grid_->p(m);
        dpsi[m] = phi[m] * grid_->p(m);
    }
    const double p_mean = pairwise_sum(vp) * dp / mass;
    const double p2 = pairwise_sum(vp2) * dp / mass;

    // qp_cov = Re <psi| q (p psi)> - <q><p> = (1/2)<qp + pq> - <q><p>.
    grid_->to_position(dpsi.data(), dpsi.data());
    std::vector<double> wc(n);
    for (std::size_t i = 0; i < n; ++i)
        wc[i] = std::real(std::conj(amp_[i]) * dpsi[i]) * grid_->x(i);
    const double qp = pairwise_sum(wc) * dx / mass;

    Moments mo;
    mo.norm = std::sqrt(mass);
    mo.q_mean = q_mean;
    mo.q_var = q2 - q_mean * q_mean;
    mo.p_mean = p_mean;
    mo.p_var = p2 - p_mean * p_mean;
    mo.qp_cov = qp - q_mean * p_mean;
    mo.kinetic = p2;  // <p^2>; caller divides by 2m
    return mo;
}

void WaveFunction::apply_position_fn(const std::function<cplx(double)>& f) {
    for (std::size_t i = 0; i < amp_.size(); ++i) amp_[i] *= f(grid_->x(i));
}

void WaveFunction::apply_momentum_fn(const std::function<cplx(double)>& f) {
    std::vector<cplx> phi(amp_.size());
    grid_->to_momentum(amp_.data(), phi.data());
    for (std::size_t m = 0; m < amp_.size(); ++m) phi[m] *= f(grid_->p(m));
    grid_->to_position(phi.data(), amp_.data());
}

double WaveFunction::boundary_amplitude(double edge_fraction) const {
    const int n = grid_->n();
    const int k = std::max(1, static_cast<int>(n * edge_fraction));
    double peak = 0.0;
    for (int i = 0; i < k; ++i) {
        peak = std::max(peak, std::abs(amp_[i]));
        peak = std::max(peak, std::abs(amp_[n - 1 - i]));
    }
    return peak;
}

std::optional<std::string> WaveFunction::boundary_violation(double threshold,
                                                            double edge_fraction) const {
    const double peak = boundary_amplitude(edge_fraction);
    if (peak <= threshold) return std::nullopt;
    return "boundary guard: edge amplitude " + fmt17(peak) + " exceeds " + fmt17(threshold);
}

}  // namespace qmeas
