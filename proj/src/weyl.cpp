#include "qmeas/weyl.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qmeas {

void weyl_operator_apply(WaveFunction& psi, double q0, double p0) {
    const double hbar = psi.grid().hbar();
    // Boost: multiply exp(i p0 x / hbar).
    psi.apply_position_fn([p0, hbar](double x) {
        const double ph = p0 * x / hbar;
        return cplx(std::cos(ph), std::sin(ph));
    });
    // Shift by q0: spectral phase exp(-i p q0 / hbar).
    psi.apply_momentum_fn([q0, hbar](double p) {
        const double ph = -p * q0 / hbar;
        return cplx(std::cos(ph), std::sin(ph));
    });
    // Central BCH phase.
    const double ph = q0 * p0 / (2.0 * hbar);
    const cplx c(std::cos(ph), std::sin(ph));
    for (auto& a : psi.amp()) a *= c;
}

cplx weyl_char(const WaveFunction& psi, double a, double b) {
    WaveFunction w = psi;
    w.apply_position_fn([a](double x) {
        const double ph = 0.5 * a * x;
        return cplx(std::cos(ph), std::sin(ph));
    });
    w.apply_momentum_fn([b](double p) {
        const double ph = b * p;
        return cplx(std::cos(ph), std::sin(ph));
    });
    w.apply_position_fn([a](double x) {
        const double ph = 0.5 * a * x;
        return cplx(std::cos(ph), std::sin(ph));
    });
    return psi.overlap(w);
}

Eigen::MatrixXcd position_matrix(const Grid& grid) {
    const int n = grid.n();
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) q(i, i) = grid.x(i);
    return q;
}

Eigen::MatrixXcd momentum_matrix(const Grid& grid) {
    const int n = grid.n();
    Eigen::MatrixXcd p(n, n);
    std::vector<cplx> col(n), phi(n);
    for (int j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), cplx(0.0));
        col[j] = 1.0;
        grid.to_momentum(col.data(), phi.data());
        for (int m = 0; m < n; ++m) phi[m] *= grid.p(m);
        grid.to_position(phi.data(), col.data());
        for (int i = 0; i < n; ++i) p(i, j) = col[i];
    }
    return p;
}

namespace {
double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

Eigen::MatrixXcd matrix_power(const Eigen::MatrixXcd& m, int n) {
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    for (int i = 0; i < n; ++i) r = r * m;
    return r;
}
}  // namespace

Eigen::MatrixXcd weyl_quantize_monomial(int jq, int jp, const Grid& grid) {
    if (jq < 0 || jp < 0) throw std::invalid_argument("weyl_quantize_monomial: negative degree");
    const Eigen::MatrixXcd q = position_matrix(grid);
    const Eigen::MatrixXcd p = momentum_matrix(grid);
    const Eigen::MatrixXcd pk = matrix_power(p, jp);
    const int n = grid.n();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
    for (int r = 0; r <= jq; ++r)
        acc += binomial(jq, r) * matrix_power(q, r) * pk * matrix_power(q, jq - r);
    return acc / std::pow(2.0, jq);
}

Eigen::MatrixXcd weyl_linear_power(double a, double b, int n, const Grid& grid) {
    if (n < 0) throw std::invalid_argument("weyl_linear_power: negative power");
    const int dim = grid.n();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
    for (int j = 0; j <= n; ++j)
        acc += binomial(n, j) * std::pow(a, j) * std::pow(b, n - j) *
               weyl_quantize_monomial(j, n - j, grid);
    return acc;
}

Eigen::MatrixXcd symmetrized_product_reference(int jq, int jp, const Grid& grid) {
    const Eigen::MatrixXcd q = position_matrix(grid);
    const Eigen::MatrixXcd p = momentum_matrix(grid);
    const int total = jq + jp;
    const int n = grid.n();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
    long count = 0;
    // Bitmask enumeration of factor orderings: bit set -> q factor.
    for (unsigned mask = 0; mask < (1u << total); ++mask) {
        if (__builtin_popcount(mask) != jq) continue;
        Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(n, n);
        for (int pos = 0; pos < total; ++pos)
            term = term * ((mask >> pos) & 1u ? q : p);
        acc += term;
        ++count;
    }
    if (count == 0) return Eigen::MatrixXcd::Identity(n, n);
    return acc / static_cast<double>(count);
}

}  // namespace qmeas
