#pragma once

#include <iosfwd>
#include <string>

#include "qmeas/discrete.hpp"
#include "qmeas/wavefunction.hpp"

namespace qmeas {

// Trajectory rows as CSV `t,q_mean,p_mean,q_var,p_var,qp_cov,norm,energy`,
// every number with 17 significant digits, locale independent.
void write_trajectory_csv(std::ostream& os, const TrajectoryResult& r);

// Outcome stream as CSV, `step,t,Qprime` for the position-only model and
// `step,t,Qprime,Pdoubleprime` when joint outcomes are present; steps count
// from 1.
void write_measurement_csv(std::ostream& os, const MeasurementRecord& rec);

// Wave-function snapshot, binary, native endianness:
//   magic "QTRJ", u16 version (= 1), u32 n_points,
//   f64 x_min, x_max, hbar, then n_points interleaved (re, im) f64 pairs.
void write_snapshot(const std::string& path, const WaveFunction& psi);
WaveFunction read_snapshot(const std::string& path);

}  // namespace qmeas
