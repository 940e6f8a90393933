#include <algorithm>
#include <cmath>
#include <complex>

#include "qmeas/discrete.hpp"
#include "qmeas/errors.hpp"
#include "qmeas/fft.hpp"
#include "qmeas/util.hpp"

namespace qmeas {
namespace {

constexpr double kMassTolerance = 1e-8;
constexpr double kTwoPi = 6.28318530717958647692;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::vector<double> fft_order_dual(int n, double spacing_dual) {
    std::vector<double> out(n);
    for (int m = 0; m < n; ++m) {
        out[m] = (m < n / 2 ? m : m - n) * spacing_dual;
    }
    return out;
}

}  // namespace

AkKernel::AkKernel(DetectorProfile profile_q, DetectorProfile profile_p,
                   CouplingSchedule schedule, ApparatusSpec apparatus_q,
                   ApparatusSpec apparatus_p, std::shared_ptr<const Grid> system_grid,
                   std::size_t memory_cap_bytes)
    : profile_q_(std::move(profile_q)),
      profile_p_(std::move(profile_p)),
      schedule_(schedule),
      grid_(std::move(system_grid)) {
    schedule_.validate();
    warnings_ = schedule_.warnings();
    n1_ = apparatus_q.n_points;
    n2_ = apparatus_p.n_points;
    ns_ = grid_->n();
    if (!is_pow2(n1_) || !is_pow2(n2_) || n1_ < 16 || n2_ < 16) {
        throw ConfigError("apparatus grids need a power-of-two node count of at least 16");
    }
    if (!(apparatus_q.half_width > 0.0) || !(apparatus_p.half_width > 0.0)) {
        throw ConfigError("apparatus half width must be positive");
    }
    const std::size_t total = static_cast<std::size_t>(n1_) * n2_ * ns_;
    // Precomputed U, its squared modulus, and one diagnostic scratch tensor.
    const std::size_t bytes = (2 * sizeof(cplx) + sizeof(double)) * total;
    if (bytes > memory_cap_bytes) {
        throw ResourceError("tensor grid needs " + std::to_string(bytes) +
                            " bytes, above the configured cap of " +
                            std::to_string(memory_cap_bytes));
    }

    const double hbar = grid_->hbar();
    d1_ = 2.0 * apparatus_q.half_width / n1_;
    d2_ = 2.0 * apparatus_p.half_width / n2_;
    const double q1_min = -apparatus_q.half_width;
    const double p2_min = -apparatus_p.half_width;
    const double dp1 = kTwoPi * hbar / (n1_ * d1_);
    const double dq2 = kTwoPi * hbar / (n2_ * d2_);

    q1_.resize(n1_);
    for (int i = 0; i < n1_; ++i) q1_[i] = q1_min + i * d1_;
    p2_.resize(n2_);
    for (int l = 0; l < n2_; ++l) p2_[l] = p2_min + l * d2_;
    p1d_ = fft_order_dual(n1_, dp1);
    q2d_ = fft_order_dual(n2_, dq2);

    const double sigma = schedule_.sigma;
    const double amp = 1.0 / std::sqrt(sigma);
    phi1_.resize(n1_);
    for (int i = 0; i < n1_; ++i) {
        const double y = q1_[i] / sigma;
        phi1_[i] = amp * profile_q_.chi(y * y);
    }
    phi2_.resize(n2_);
    for (int l = 0; l < n2_; ++l) {
        const double y = p2_[l] / sigma;
        phi2_[l] = amp * profile_p_.chi(y * y);
    }
    phi12_.resize(static_cast<std::size_t>(n1_) * n2_);
    for (int i = 0; i < n1_; ++i) {
        for (int l = 0; l < n2_; ++l) phi12_[static_cast<std::size_t>(i) * n2_ + l] = phi1_[i] * phi2_[l];
    }

    // Interaction factor phases, each diagonal in the representation noted in
    // the header: C on (p', q''), B on (q'', p), A on (p', x).
    const double mu = schedule_.mu;
    const double nu = schedule_.nu;
    phase_c_.resize(static_cast<std::size_t>(n1_) * n2_);
    for (int i = 0; i < n1_; ++i) {
        for (int l = 0; l < n2_; ++l) {
            phase_c_[static_cast<std::size_t>(i) * n2_ + l] =
                std::polar(1.0, -0.5 * mu * nu * p1d_[i] * q2d_[l] / hbar);
        }
    }
    phase_b_.resize(static_cast<std::size_t>(n2_) * ns_);
    for (int l = 0; l < n2_; ++l) {
        for (int k = 0; k < ns_; ++k) {
            phase_b_[static_cast<std::size_t>(l) * ns_ + k] =
                std::polar(1.0, nu * q2d_[l] * grid_->p(k) / hbar);
        }
    }
    phase_a_.resize(static_cast<std::size_t>(n1_) * ns_);
    for (int i = 0; i < n1_; ++i) {
        for (int k = 0; k < ns_; ++k) {
            phase_a_[static_cast<std::size_t>(i) * ns_ + k] =
                std::polar(1.0, -mu * p1d_[i] * grid_->x(k) / hbar);
        }
    }

    // Axis representation changes, unitary with the scale constants folded in.
    const double root = std::sqrt(kTwoPi * hbar);
    ax1_fwd_.resize(n1_);
    ax1_inv_.resize(n1_);
    for (int m = 0; m < n1_; ++m) {
        ax1_fwd_[m] = std::polar(d1_ / root, -p1d_[m] * q1_min / hbar);
        ax1_inv_[m] = std::polar(n1_ * dp1 / root, p1d_[m] * q1_min / hbar);
    }
    ax2_fwd_.resize(n2_);
    ax2_inv_.resize(n2_);
    for (int m = 0; m < n2_; ++m) {
        ax2_fwd_[m] = std::polar(n2_ * d2_ / root, q2d_[m] * p2_min / hbar);
        ax2_inv_[m] = std::polar(dq2 / root, -q2d_[m] * p2_min / hbar);
    }
    axs_fwd_.resize(ns_);
    axs_inv_.resize(ns_);
    for (int m = 0; m < ns_; ++m) {
        axs_fwd_[m] = std::polar(grid_->dx() / root, -grid_->p(m) * grid_->spec().x_min / hbar);
        axs_inv_[m] = std::polar(ns_ * grid_->dp() / root, grid_->p(m) * grid_->spec().x_min / hbar);
    }

    // Step-independent factor U: pointer pair in the dual pair representation,
    // dressed with the central phase and the mu-coupling shift, returned to the
    // q' representation. One setup transform, reused by every step().
    std::vector<cplx> phi1_dual(n1_);
    for (int m = 0; m < n1_; ++m) phi1_dual[m] = phi1_[m];
    fft::forward(n1_, phi1_dual.data(), phi1_dual.data());
    for (int m = 0; m < n1_; ++m) phi1_dual[m] *= ax1_fwd_[m];
    std::vector<cplx> phi2_dual(n2_);
    for (int m = 0; m < n2_; ++m) phi2_dual[m] = phi2_[m];
    fft::inverse(n2_, phi2_dual.data(), phi2_dual.data());
    for (int m = 0; m < n2_; ++m) phi2_dual[m] *= ax2_fwd_[m];

    ufac_.resize(total);
    for (int m = 0; m < n1_; ++m) {
        const cplx lead = phi1_dual[m] * ax1_inv_[m];
        for (int l = 0; l < n2_; ++l) {
            const cplx pair = lead * phi2_dual[l] * phase_c_[static_cast<std::size_t>(m) * n2_ + l];
            cplx* row = &ufac_[(static_cast<std::size_t>(m) * n2_ + l) * ns_];
            const cplx* pa = &phase_a_[static_cast<std::size_t>(m) * ns_];
            for (int k = 0; k < ns_; ++k) row[k] = pair * pa[k];
        }
    }
    fft::inverse_many(n1_, static_cast<std::size_t>(n2_) * ns_,
                      static_cast<std::ptrdiff_t>(static_cast<std::size_t>(n2_) * ns_), 1,
                      ufac_.data(), ufac_.data());
    usq_.resize(total);
    for (std::size_t j = 0; j < total; ++j) usq_[j] = std::norm(ufac_[j]);

    psid_.resize(ns_);
    bmat_.resize(static_cast<std::size_t>(n2_) * ns_);
    bsq_.resize(bmat_.size());
    slice_.resize(bmat_.size());
    rho1_.resize(n1_);
    rho2_.resize(n2_);
}

namespace {

enum class PhaseLayout { IL, LK, IK };

void apply_axis_factor(std::vector<cplx>& t, int n1, int n2, int ns, int axis,
                       const std::vector<cplx>& factor) {
    // axis: 0 -> index i, 1 -> index l, 2 -> index k.
    std::size_t idx = 0;
    for (int i = 0; i < n1; ++i) {
        for (int l = 0; l < n2; ++l) {
            for (int k = 0; k < ns; ++k, ++idx) {
                t[idx] *= factor[axis == 0 ? i : (axis == 1 ? l : k)];
            }
        }
    }
}

void apply_pair_phase(std::vector<cplx>& t, int n1, int n2, int ns, PhaseLayout lay,
                      const std::vector<cplx>& ph, bool conjugate) {
    for (int i = 0; i < n1; ++i) {
        for (int l = 0; l < n2; ++l) {
            cplx* row = &t[(static_cast<std::size_t>(i) * n2 + l) * ns];
            switch (lay) {
                case PhaseLayout::IL: {
                    cplx f = ph[static_cast<std::size_t>(i) * n2 + l];
                    if (conjugate) f = std::conj(f);
                    for (int k = 0; k < ns; ++k) row[k] *= f;
                    break;
                }
                case PhaseLayout::LK: {
                    const cplx* pr = &ph[static_cast<std::size_t>(l) * ns];
                    if (conjugate) {
                        for (int k = 0; k < ns; ++k) row[k] *= std::conj(pr[k]);
                    } else {
                        for (int k = 0; k < ns; ++k) row[k] *= pr[k];
                    }
                    break;
                }
                case PhaseLayout::IK: {
                    const cplx* pr = &ph[static_cast<std::size_t>(i) * ns];
                    if (conjugate) {
                        for (int k = 0; k < ns; ++k) row[k] *= std::conj(pr[k]);
                    } else {
                        for (int k = 0; k < ns; ++k) row[k] *= pr[k];
                    }
                    break;
                }
            }
        }
    }
}

}  // namespace

void AkKernel::to_dual(std::vector<cplx>& t, Axis axis) const {
    const std::size_t block = static_cast<std::size_t>(n2_) * ns_;
    switch (axis) {
        case Axis::ApparatusQ:
            fft::forward_many(n1_, block, static_cast<std::ptrdiff_t>(block), 1, t.data(),
                              t.data());
            apply_axis_factor(t, n1_, n2_, ns_, 0, ax1_fwd_);
            break;
        case Axis::ApparatusP:
            for (int i = 0; i < n1_; ++i) {
                cplx* base = t.data() + i * block;
                fft::inverse_many(n2_, ns_, ns_, 1, base, base);
            }
            apply_axis_factor(t, n1_, n2_, ns_, 1, ax2_fwd_);
            break;
        case Axis::System:
            fft::forward_many(ns_, static_cast<std::size_t>(n1_) * n2_, 1, ns_, t.data(),
                              t.data());
            apply_axis_factor(t, n1_, n2_, ns_, 2, axs_fwd_);
            break;
    }
}

void AkKernel::to_primal(std::vector<cplx>& t, Axis axis) const {
    const std::size_t block = static_cast<std::size_t>(n2_) * ns_;
    switch (axis) {
        case Axis::ApparatusQ:
            apply_axis_factor(t, n1_, n2_, ns_, 0, ax1_inv_);
            fft::inverse_many(n1_, block, static_cast<std::ptrdiff_t>(block), 1, t.data(),
                              t.data());
            break;
        case Axis::ApparatusP:
            apply_axis_factor(t, n1_, n2_, ns_, 1, ax2_inv_);
            for (int i = 0; i < n1_; ++i) {
                cplx* base = t.data() + i * block;
                fft::forward_many(n2_, ns_, ns_, 1, base, base);
            }
            break;
        case Axis::System:
            apply_axis_factor(t, n1_, n2_, ns_, 2, axs_inv_);
            fft::inverse_many(ns_, static_cast<std::size_t>(n1_) * n2_, 1, ns_, t.data(),
                              t.data());
            break;
    }
}

std::vector<cplx> AkKernel::build_product(const WaveFunction& psi) const {
    if (psi.n() != ns_) throw ConfigError("state grid does not match the kernel grid");
    std::vector<cplx> t(static_cast<std::size_t>(n1_) * n2_ * ns_);
    std::size_t idx = 0;
    for (int i = 0; i < n1_; ++i) {
        for (int l = 0; l < n2_; ++l) {
            const double w = phi12_[static_cast<std::size_t>(i) * n2_ + l];
            for (int k = 0; k < ns_; ++k, ++idx) t[idx] = w * psi.amp()[k];
        }
    }
    return t;
}

void AkKernel::apply_interaction(std::vector<cplx>& t, int direction) const {
    // V = e^A e^B e^C with A = mu p' q/(i hbar), B = -nu q'' p/(i hbar),
    // C = mu nu p' q''/(2 i hbar); rightmost factor acts first.
    if (direction >= 0) {
        to_dual(t, Axis::ApparatusP);
        to_dual(t, Axis::ApparatusQ);
        apply_pair_phase(t, n1_, n2_, ns_, PhaseLayout::IL, phase_c_, false);
        to_dual(t, Axis::System);
        apply_pair_phase(t, n1_, n2_, ns_, PhaseLayout::LK, phase_b_, false);
        to_primal(t, Axis::System);
        apply_pair_phase(t, n1_, n2_, ns_, PhaseLayout::IK, phase_a_, false);
        to_primal(t, Axis::ApparatusQ);
        to_primal(t, Axis::ApparatusP);
    } else {
        to_dual(t, Axis::ApparatusQ);
        apply_pair_phase(t, n1_, n2_, ns_, PhaseLayout::IK, phase_a_, true);
        to_dual(t, Axis::ApparatusP);
        to_dual(t, Axis::System);
        apply_pair_phase(t, n1_, n2_, ns_, PhaseLayout::LK, phase_b_, true);
        to_primal(t, Axis::System);
        apply_pair_phase(t, n1_, n2_, ns_, PhaseLayout::IL, phase_c_, true);
        to_primal(t, Axis::ApparatusP);
        to_primal(t, Axis::ApparatusQ);
    }
}

void AkKernel::multiply_primal_nodes(std::vector<cplx>& t, Axis axis) const {
    auto mul = [&](const std::vector<double>& nodes, int which) {
        std::vector<cplx> f(nodes.size());
        for (std::size_t m = 0; m < nodes.size(); ++m) f[m] = nodes[m];
        apply_axis_factor(t, n1_, n2_, ns_, which, f);
    };
    switch (axis) {
        case Axis::ApparatusQ: mul(q1_, 0); break;
        case Axis::ApparatusP: mul(p2_, 1); break;
        case Axis::System: mul(grid_->x_nodes(), 2); break;
    }
}

void AkKernel::multiply_dual_nodes(std::vector<cplx>& t, Axis axis) const {
    to_dual(t, axis);
    auto mul = [&](const std::vector<double>& nodes, int which) {
        std::vector<cplx> f(nodes.size());
        for (std::size_t m = 0; m < nodes.size(); ++m) f[m] = nodes[m];
        apply_axis_factor(t, n1_, n2_, ns_, which, f);
    };
    switch (axis) {
        case Axis::ApparatusQ: mul(p1d_, 0); break;
        case Axis::ApparatusP: mul(q2d_, 1); break;
        case Axis::System: mul(grid_->p_nodes(), 2); break;
    }
    to_primal(t, axis);
}

double AkKernel::tensor_norm(const std::vector<cplx>& t) const {
    std::vector<double> sq(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) sq[j] = std::norm(t[j]);
    return std::sqrt(pairwise_sum(sq) * grid_->dx() * d1_ * d2_);
}

void AkKernel::check_tails(const std::vector<double>& marginal, double spacing,
                           const char* which) const {
    const std::size_t n = marginal.size();
    const double edge =
        (marginal[0] + marginal[1] + marginal[n - 2] + marginal[n - 1]) * spacing;
    if (edge > kMassTolerance) {
        throw ConfigError(std::string(which) +
                          " apparatus grid too narrow: outcome density touches the grid edge");
    }
}

StepOutcome AkKernel::step(WaveFunction& psi, Rng& rng) {
    if (std::abs(psi.norm() - 1.0) > 1e-8) {
        throw NumericError("measurement step requires a normalized state");
    }
    if (psi.n() != ns_) throw ConfigError("state grid does not match the kernel grid");
    const double hbar = grid_->hbar();
    const double dx = grid_->dx();
    const double dq2 = kTwoPi * hbar / (n2_ * d2_);
    const std::size_t plane = static_cast<std::size_t>(n2_) * ns_;

    // B(q'', x): the system state translated by nu q'', built in the dual rep.
    // The axs_fwd/axs_inv scale pair cancels exactly, so the plain FFT pair
    // with phase_b in between reproduces the diagnostic-path system stages.
    fft::forward(ns_, psi.amp().data(), psid_.data());
    for (int l = 0; l < n2_; ++l) {
        cplx* row = &bmat_[static_cast<std::size_t>(l) * ns_];
        const cplx* pb = &phase_b_[static_cast<std::size_t>(l) * ns_];
        for (int k = 0; k < ns_; ++k) row[k] = psid_[k] * pb[k];
    }
    fft::inverse_many(ns_, n2_, 1, ns_, bmat_.data(), bmat_.data());
    for (std::size_t j = 0; j < plane; ++j) bsq_[j] = std::norm(bmat_[j]);

    // Marginal in Q'. Summing over q'' instead of p'' is exact (Parseval).
    for (int i = 0; i < n1_; ++i) {
        const double* w = &usq_[static_cast<std::size_t>(i) * plane];
        double acc = 0.0;
        for (std::size_t j = 0; j < plane; ++j) acc += w[j] * bsq_[j];
        rho1_[i] = acc * dx * dq2;
    }
    const double mass = pairwise_sum(rho1_) * d1_;
    if (std::abs(mass - 1.0) > kMassTolerance) {
        throw ConfigError("joint outcome density mass deviates from 1 by " +
                          std::to_string(std::abs(mass - 1.0)) +
                          "; apparatus grids too narrow");
    }
    check_tails(rho1_, d1_, "position");

    double u = rng.uniform01() * mass;
    double acc = 0.0;
    int pick_i = n1_ - 1;
    for (int i = 0; i < n1_; ++i) {
        acc += rho1_[i] * d1_;
        if (u <= acc) {
            pick_i = i;
            break;
        }
    }

    // Conditional in P'' on the picked slice, transformed q'' -> p''.
    const cplx* urow = &ufac_[static_cast<std::size_t>(pick_i) * plane];
    for (int l = 0; l < n2_; ++l) {
        const cplx f = ax2_inv_[l];
        cplx* dst = &slice_[static_cast<std::size_t>(l) * ns_];
        const cplx* us = urow + static_cast<std::size_t>(l) * ns_;
        const cplx* bs = &bmat_[static_cast<std::size_t>(l) * ns_];
        for (int k = 0; k < ns_; ++k) dst[k] = f * us[k] * bs[k];
    }
    fft::forward_many(n2_, ns_, ns_, 1, slice_.data(), slice_.data());
    for (int l = 0; l < n2_; ++l) {
        const cplx* row = &slice_[static_cast<std::size_t>(l) * ns_];
        double s = 0.0;
        for (int k = 0; k < ns_; ++k) s += std::norm(row[k]);
        rho2_[l] = s * dx * d1_;
    }
    const double cond_mass = pairwise_sum(rho2_) * d2_;
    check_tails(rho2_, d2_ / cond_mass, "momentum");  // relative edge fraction

    u = rng.uniform01() * cond_mass;
    acc = 0.0;
    int pick_l = n2_ - 1;
    for (int l = 0; l < n2_; ++l) {
        acc += rho2_[l] * d2_;
        if (u <= acc) {
            pick_l = l;
            break;
        }
    }

    const cplx* out_slice = &slice_[static_cast<std::size_t>(pick_l) * ns_];
    std::copy(out_slice, out_slice + ns_, psi.amp().begin());
    psi.normalize();

    StepOutcome out;
    out.q_prime = q1_[pick_i];
    out.p_dblprime = p2_[pick_l];
    out.joint = true;
    return out;
}

AkKernel::JointDensity AkKernel::joint_density(const WaveFunction& psi) {
    const std::size_t total = static_cast<std::size_t>(n1_) * n2_ * ns_;
    tensor_.resize(total);
    std::size_t idx = 0;
    for (int i = 0; i < n1_; ++i) {
        for (int l = 0; l < n2_; ++l) {
            const double w = phi12_[static_cast<std::size_t>(i) * n2_ + l];
            for (int k = 0; k < ns_; ++k, ++idx) tensor_[idx] = w * psi.amp()[k];
        }
    }
    apply_interaction(tensor_, +1);

    JointDensity jd;
    jd.q_nodes = q1_;
    jd.p_nodes = p2_;
    jd.cell = d1_ * d2_;
    jd.density.assign(static_cast<std::size_t>(n1_) * n2_, 0.0);
    const double dx = grid_->dx();
    idx = 0;
    for (int i = 0; i < n1_; ++i) {
        for (int l = 0; l < n2_; ++l) {
            double acc = 0.0;
            for (int k = 0; k < ns_; ++k, ++idx) acc += std::norm(tensor_[idx]);
            jd.density[static_cast<std::size_t>(i) * n2_ + l] = acc * dx;
        }
    }
    std::vector<double> masses(jd.density.begin(), jd.density.end());
    jd.mass = pairwise_sum(masses) * jd.cell;
    return jd;
}

ConjugationReport conjugation_check(const AkKernel& kernel, const WaveFunction& psi) {
    using Axis = AkKernel::Axis;
    const double mu = kernel.schedule().mu;
    const double nu = kernel.schedule().nu;
    const auto t0 = kernel.build_product(psi);
    const double nrm = kernel.tensor_norm(t0);

    ConjugationReport rep;
    // V+ q' V = q' + mu q - (mu nu/2) q''.
    {
        auto lhs = t0;
        kernel.apply_interaction(lhs, +1);
        kernel.multiply_primal_nodes(lhs, Axis::ApparatusQ);
        kernel.apply_interaction(lhs, -1);
        auto rhs = t0;
        kernel.multiply_primal_nodes(rhs, Axis::ApparatusQ);
        auto sys = t0;
        kernel.multiply_primal_nodes(sys, Axis::System);
        auto crs = t0;
        kernel.multiply_dual_nodes(crs, Axis::ApparatusP);
        std::vector<cplx> diff(lhs.size());
        for (std::size_t j = 0; j < lhs.size(); ++j) {
            diff[j] = lhs[j] - (rhs[j] + mu * sys[j] - 0.5 * mu * nu * crs[j]);
        }
        rep.residual_q = kernel.tensor_norm(diff) / nrm;
    }
    // V+ p'' V = p'' + nu p - (mu nu/2) p'.
    {
        auto lhs = t0;
        kernel.apply_interaction(lhs, +1);
        kernel.multiply_primal_nodes(lhs, Axis::ApparatusP);
        kernel.apply_interaction(lhs, -1);
        auto rhs = t0;
        kernel.multiply_primal_nodes(rhs, Axis::ApparatusP);
        auto sys = t0;
        kernel.multiply_dual_nodes(sys, Axis::System);
        auto crs = t0;
        kernel.multiply_dual_nodes(crs, Axis::ApparatusQ);
        std::vector<cplx> diff(lhs.size());
        for (std::size_t j = 0; j < lhs.size(); ++j) {
            diff[j] = lhs[j] - (rhs[j] + nu * sys[j] - 0.5 * mu * nu * crs[j]);
        }
        rep.residual_p = kernel.tensor_norm(diff) / nrm;
    }
    return rep;
}

}  // namespace qmeas
