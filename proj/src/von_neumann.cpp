#include <algorithm>
#include <cmath>

#include "qmeas/discrete.hpp"
#include "qmeas/errors.hpp"
#include "qmeas/util.hpp"

namespace qmeas {
namespace {

// Table fine enough that the linear-interpolation mass bias (~step^2) stays
// well under kMassTolerance; at 1 << 16 the bias reaches ~1.4e-8 and long runs
// trip the check.
constexpr int kAmpTableSize = 1 << 20;
constexpr double kMassTolerance = 1e-8;

}  // namespace

VonNeumannKernel::VonNeumannKernel(DetectorProfile profile, CouplingSchedule schedule,
                                   ApparatusSpec apparatus,
                                   std::shared_ptr<const Grid> system_grid)
    : profile_(std::move(profile)),
      schedule_(schedule),
      apparatus_(apparatus),
      grid_(std::move(system_grid)) {
    schedule_.validate();
    warnings_ = schedule_.warnings();
    if (apparatus_.n_points < 32) {
        throw ConfigError("apparatus grid needs at least 32 nodes");
    }
    if (!(apparatus_.half_width > 0.0)) {
        throw ConfigError("apparatus half width must be positive");
    }
    const double d = 2.0 * apparatus_.half_width / apparatus_.n_points;
    nodes_.resize(apparatus_.n_points);
    for (int i = 0; i < apparatus_.n_points; ++i) {
        nodes_[i] = -apparatus_.half_width + i * d;
    }

    // chi(y^2) on a fine uniform table; the step loop only ever evaluates the
    // profile through this table.
    amp_y_max_ = profile_.y_max();
    amp_step_ = 2.0 * amp_y_max_ / kAmpTableSize;
    amp_table_.resize(kAmpTableSize + 1);
    for (int i = 0; i <= kAmpTableSize; ++i) {
        const double y = -amp_y_max_ + i * amp_step_;
        amp_table_[i] = profile_.chi(y * y);
    }
}

double VonNeumannKernel::pointer_amp(double z) const {
    const double y = z / schedule_.sigma;
    if (y <= -amp_y_max_ || y >= amp_y_max_) return 0.0;
    const double pos = (y + amp_y_max_) / amp_step_;
    const int i = std::min(static_cast<int>(pos), kAmpTableSize - 1);
    const double frac = pos - i;
    return amp_table_[i] + frac * (amp_table_[i + 1] - amp_table_[i]);
}

OutcomeDensity VonNeumannKernel::outcome_density(const WaveFunction& psi) const {
    const int ns = psi.n();
    const int na = apparatus_.n_points;
    const double dx = grid_->dx();
    const double mu = schedule_.mu;
    const double inv_sigma = 1.0 / schedule_.sigma;

    std::vector<double> w(ns);
    for (int k = 0; k < ns; ++k) w[k] = std::norm(psi.amp()[k]) * dx;
    if (std::abs(pairwise_sum(w) - 1.0) > 1e-8) {
        throw NumericError("measurement step requires a normalized state");
    }

    OutcomeDensity d;
    d.nodes = nodes_;
    d.spacing = 2.0 * apparatus_.half_width / na;
    d.density.assign(na, 0.0);
    const auto& x = grid_->x_nodes();
    for (int i = 0; i < na; ++i) {
        double acc = 0.0;
        for (int k = 0; k < ns; ++k) {
            const double a = pointer_amp(nodes_[i] - mu * x[k]);
            acc += w[k] * a * a;
        }
        d.density[i] = acc * inv_sigma;
    }
    d.mass = pairwise_sum(d.density) * d.spacing;

    if (std::abs(d.mass - 1.0) > kMassTolerance) {
        throw ConfigError("apparatus grid too narrow: outcome density mass deviates from 1 by " +
                          std::to_string(std::abs(d.mass - 1.0)));
    }
    const double edge =
        (d.density[0] + d.density[1] + d.density[na - 2] + d.density[na - 1]) * d.spacing;
    if (edge > kMassTolerance) {
        throw ConfigError("apparatus grid too narrow: outcome density touches the grid edge");
    }
    return d;
}

StepOutcome VonNeumannKernel::step(WaveFunction& psi, Rng& rng) const {
    const auto d = outcome_density(psi);
    const int na = apparatus_.n_points;

    const double u = rng.uniform01() * d.mass;
    double acc = 0.0;
    int pick = na - 1;
    for (int i = 0; i < na; ++i) {
        acc += d.density[i] * d.spacing;
        if (u <= acc) {
            pick = i;
            break;
        }
    }

    const double q_prime = nodes_[pick];
    const double mu = schedule_.mu;
    const auto& x = grid_->x_nodes();
    for (int k = 0; k < psi.n(); ++k) {
        psi.amp()[k] *= pointer_amp(q_prime - mu * x[k]);
    }
    psi.normalize();

    StepOutcome out;
    out.q_prime = q_prime;
    out.joint = false;
    return out;
}

}  // namespace qmeas
