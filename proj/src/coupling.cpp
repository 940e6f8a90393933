#include <cmath>

#include "qmeas/discrete.hpp"
#include "qmeas/errors.hpp"

namespace qmeas {

CouplingSchedule CouplingSchedule::fixed(double mu, double nu, double tau, double sigma) {
    CouplingSchedule s;
    s.mu = mu;
    s.nu = nu;
    s.tau = tau;
    s.sigma = sigma;
    s.rule = ScalingRule::Fixed;
    return s;
}

CouplingSchedule CouplingSchedule::sqrt_tau(double tau, double sigma) {
    CouplingSchedule s;
    s.tau = tau;
    s.sigma = sigma;
    s.rule = ScalingRule::SqrtTau;
    s.mu = std::sqrt(tau);
    s.nu = s.mu;
    return s;
}

void CouplingSchedule::validate() const {
    if (!(tau > 0.0)) throw ConfigError("coupling schedule: tau must be positive");
    if (!(sigma > 0.0)) throw ConfigError("coupling schedule: sigma must be positive");
    if (mu < 0.0 || nu < 0.0) {
        throw ConfigError("coupling schedule: couplings must be nonnegative");
    }
    if (rule == ScalingRule::SqrtTau && (mu != std::sqrt(tau) || nu != std::sqrt(tau))) {
        throw ConfigError("coupling schedule: sqrt-tau rule requires mu = nu = sqrt(tau)");
    }
}

std::vector<std::string> CouplingSchedule::warnings() const {
    std::vector<std::string> out;
    if (mu / sigma > 0.3 || nu / sigma > 0.3) {
        out.push_back(
            "coupling exceeds 0.3 of the detector scale; per-step disturbance is "
            "outside the weak-measurement regime");
    }
    return out;
}

}  // namespace qmeas
