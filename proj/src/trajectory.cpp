#include <string>

#include "qmeas/discrete.hpp"
#include "qmeas/errors.hpp"

namespace qmeas {

template <class Kernel>
TrajectoryResult run_discrete_trajectory(Kernel& kernel, WaveFunction& psi,
                                         const HamiltonianSpec& h, int n_steps, Rng& rng,
                                         MeasurementRecord* record, int record_every) {
    if (n_steps < 0) throw ConfigError("step count must be nonnegative");
    if (record_every < 1) throw ConfigError("record interval must be at least 1");
    h.validate();
    const double tau = kernel.schedule().tau;
    Propagator prop(psi.grid_ptr(), h, tau);

    if (record) {
        record->times.clear();
        record->q_outcomes.clear();
        record->p_outcomes.clear();
        record->schedule = kernel.schedule();
    }

    TrajectoryResult out;
    out.points.reserve(static_cast<std::size_t>(n_steps / record_every) + 2);
    out.points.push_back({0.0, psi.moments(), prop.energy(psi)});

    for (int j = 1; j <= n_steps; ++j) {
        try {
            const StepOutcome o = kernel.step(psi, rng);
            prop.apply(psi);
            if (auto why = psi.boundary_violation()) {
                throw NumericError(*why);
            }
            if (record) {
                record->times.push_back(j * tau);
                record->q_outcomes.push_back(o.q_prime);
                if (o.joint) record->p_outcomes.push_back(o.p_dblprime);
            }
        } catch (const ConfigError& e) {
            throw ConfigError("trajectory step " + std::to_string(j) + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("trajectory step " + std::to_string(j) + ": " + e.what());
        } catch (const ResourceError& e) {
            throw ResourceError("trajectory step " + std::to_string(j) + ": " + e.what());
        }
        if (j % record_every == 0 || j == n_steps) {
            out.points.push_back({j * tau, psi.moments(), prop.energy(psi)});
        }
    }
    return out;
}

template TrajectoryResult run_discrete_trajectory<VonNeumannKernel>(VonNeumannKernel&,
                                                                    WaveFunction&,
                                                                    const HamiltonianSpec&, int,
                                                                    Rng&, MeasurementRecord*,
                                                                    int);
template TrajectoryResult run_discrete_trajectory<AkKernel>(AkKernel&, WaveFunction&,
                                                            const HamiltonianSpec&, int, Rng&,
                                                            MeasurementRecord*, int);

}  // namespace qmeas
