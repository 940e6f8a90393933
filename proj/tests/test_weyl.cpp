#include "doctest.h"
#include "qmeas/rng.hpp"
#include "qmeas/weyl.hpp"

#include <cmath>
#include <memory>

using namespace qmeas;

namespace {
std::shared_ptr<const Grid> small_grid() {
    return std::make_shared<Grid>(GridSpec{64, -8.0, 8.0, 1.0});
}

Eigen::VectorXcd interior_state(const Grid& g, double center, double k0) {
    Eigen::VectorXcd v(g.n());
    for (int i = 0; i < g.n(); ++i) {
        const double d = g.x(i) - center;
        v(i) = std::exp(-d * d / (4.0 * 0.5)) * cplx(std::cos(k0 * d), std::sin(k0 * d));
    }
    v /= std::sqrt(v.squaredNorm() * g.dx());
    return v;
}

double applied_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                    const Eigen::VectorXcd& v, double dx) {
    return std::sqrt(((a - b) * v).squaredNorm() * dx);
}
}  // namespace

TEST_SUITE_BEGIN("weyl");

TEST_CASE("displacement moves the packet by (q0, p0)") {
    auto g = small_grid();
    auto psi = WaveFunction::gaussian(g, 0.0, 0.5, 0.0);
    weyl_operator_apply(psi, 2.5, 1.3);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(psi.position_mean() == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(psi.momentum_mean() == doctest::Approx(1.3).epsilon(1e-9));
}

TEST_CASE("composition law with the exchange phase") {
    // Wide box so that shifted packets keep negligible tails at the edges;
    // spectral translation is only exact for states confined to the grid.
    auto g = std::make_shared<Grid>(GridSpec{128, -16.0, 16.0, 1.0});
    auto base = WaveFunction::gaussian(g, 0.3, 0.5, 0.4);
    Rng rng(1234);
    auto draw = [&rng] { return 4.0 * rng.uniform01() - 2.0; };
    for (int trial = 0; trial < 20; ++trial) {
        const double q1 = draw(), p1 = draw();
        const double q2 = draw(), p2 = draw();

        auto lhs = base;
        weyl_operator_apply(lhs, q2, p2);
        weyl_operator_apply(lhs, q1, p1);

        auto rhs = base;
        weyl_operator_apply(rhs, q1 + q2, p1 + p2);
        const double ph = -(q1 * p2 - p1 * q2) / (2.0 * g->hbar());
        const cplx phase(std::cos(ph), std::sin(ph));
        double err2 = 0.0;
        for (int i = 0; i < g->n(); ++i)
            err2 += std::norm(lhs.amp()[i] - phase * rhs.amp()[i]);
        CHECK(std::sqrt(err2 * g->dx()) < 1e-8);
    }
}

TEST_CASE("characteristic function of a gaussian state") {
    auto g = small_grid();
    auto psi = WaveFunction::gaussian(g, 1.0, 1.0, 0.0);
    const double a = 0.7, b = -0.4;
    // Gaussian phase-space density: mean (1, 0), Var q = 1, Var p = 1/4.
    const cplx expected = std::exp(cplx(0.0, a * 1.0) -
                                   0.5 * cplx(a * a * 1.0 + b * b * 0.25, 0.0));
    const cplx got = weyl_char(psi, a, b);
    CHECK(std::abs(got - expected) < 1e-8);
}

TEST_CASE("quantized monomials match the all-orderings average") {
    auto gp = small_grid();
    const Grid& g = *gp;
    const auto v1 = interior_state(g, 0.4, 0.6);
    const auto v2 = interior_state(g, -0.8, -0.2);
    const int degs[][2] = {{1, 1}, {2, 1}, {1, 2}, {2, 2}, {3, 0}, {0, 3}};
    for (auto [jq, jp] : degs) {
        const auto mccoy = weyl_quantize_monomial(jq, jp, g);
        const auto avg = symmetrized_product_reference(jq, jp, g);
        CHECK(applied_diff(mccoy, avg, v1, g.dx()) < 1e-8);
        CHECK(applied_diff(mccoy, avg, v2, g.dx()) < 1e-8);
    }
}

TEST_CASE("q^2 p quantization equals the three-term symmetric form") {
    auto gp = small_grid();
    const Grid& g = *gp;
    const auto q = position_matrix(g);
    const auto p = momentum_matrix(g);
    const Eigen::MatrixXcd expected = (q * q * p + q * p * q + p * q * q) / 3.0;
    const auto got = weyl_quantize_monomial(2, 1, g);
    const auto v = interior_state(g, 0.0, 0.8);
    CHECK(applied_diff(got, expected, v, g.dx()) < 1e-8);
}

TEST_CASE("powers of a linear combination quantize to plain matrix powers") {
    auto gp = small_grid();
    const Grid& g = *gp;
    const auto q = position_matrix(g);
    const auto p = momentum_matrix(g);
    const auto v = interior_state(g, 0.5, -0.5);
    for (int n : {1, 2, 3}) {
        const double a = 0.8, b = -1.1;
        Eigen::MatrixXcd lin = a * q + b * p;
        Eigen::MatrixXcd direct = Eigen::MatrixXcd::Identity(g.n(), g.n());
        for (int k = 0; k < n; ++k) direct = direct * lin;
        const auto quant = weyl_linear_power(a, b, n, g);
        CHECK(applied_diff(quant, direct, v, g.dx()) < 1e-8);
    }
}

TEST_CASE("degree zero quantizes to the identity") {
    auto gp = small_grid();
    const auto got = weyl_quantize_monomial(0, 0, *gp);
    CHECK((got - Eigen::MatrixXcd::Identity(gp->n(), gp->n())).norm() < 1e-12);
}

TEST_SUITE_END();
