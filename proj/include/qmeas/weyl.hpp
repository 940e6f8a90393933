#pragma once

#include <Eigen/Dense>

#include "qmeas/wavefunction.hpp"

namespace qmeas {

// Phase-space displacement W(q0, p0) = exp((q0 p - p0 q) / (i hbar)).
// Sign convention: W shifts <q> by +q0 and <p> by +p0. Because the exponent's
// commutator is central, W factors exactly as
//   W(q0, p0) = exp(i q0 p0 / (2 hbar)) * Shift(q0) * Boost(p0)
// with Shift a spectral translation and Boost the phase exp(i p0 x / hbar).
// Composition law: W(a) W(b) = exp(-i (a.q b.p - a.p b.q) / (2 hbar)) W(a+b).
void weyl_operator_apply(WaveFunction& psi, double q0, double p0);

// <psi| exp(i (a q + b p)) |psi>, evaluated through the exact symmetric split
// exp(i a q / 2) exp(i b p) exp(i a q / 2). This is the characteristic
// function of the state's phase-space quasi-density at (a, b).
cplx weyl_char(const WaveFunction& psi, double a, double b);

// Dense position / momentum operator matrices on the grid (momentum through
// the unitary representation change, so the matrices are exactly Hermitian on
// the grid's inner product).
Eigen::MatrixXcd position_matrix(const Grid& grid);
Eigen::MatrixXcd momentum_matrix(const Grid& grid);

// Symmetric-ordering quantization of the monomial q^jq p^jp, computed with the
// one-sided reordering identity
//   [q^j p^k]_sym = 2^(-j) sum_r C(j, r) q^r p^k q^(j-r).
// Tests check it against the mean over all distinct operator orderings, which
// is an independent route to the same operator.
Eigen::MatrixXcd weyl_quantize_monomial(int jq, int jp, const Grid& grid);

// Quantization of (a q + b p)^n via the monomial expansion
// sum_j C(n, j) a^j b^(n-j) [q^j p^(n-j)]_sym. Equals the plain matrix power
// (a q + b p)^n, which tests verify.
Eigen::MatrixXcd weyl_linear_power(double a, double b, int n, const Grid& grid);

// Mean over all distinct orderings of j 'q' factors and k 'p' factors.
// Exponential in (j+k); intended for degree <= 4 cross-checks.
Eigen::MatrixXcd symmetrized_product_reference(int jq, int jp, const Grid& grid);

}  // namespace qmeas
