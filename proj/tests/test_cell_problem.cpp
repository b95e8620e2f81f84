#include <doctest.h>

#include "blochhom/cell_problem.hpp"
#include "oracles.hpp"

#include <random>

using namespace blochhom;

TEST_CASE("free bands are the folded parabola") {
    TorusGrid g(1, 21);
    const auto c = PeriodicPotential::zero(g);
    for (int i = 0; i < 32; ++i) {
        const double theta[1] = {i / 32.0};
        const auto ev = cell_spectrum(assemble_shifted_operator(c, theta, g), 5);
        for (int b = 1; b <= 5; ++b) CHECK(std::abs(ev[b - 1] - oracle::free_band(theta[0], b)) < 1e-10);
    }
}

TEST_CASE("Mathieu bands match the Sturm bisection oracle") {
    TorusGrid g(1, 41);
    const auto c = PeriodicPotential::mathieu(TorusGrid(1, 3), 1.0);
    for (double t : {0.0, 0.125, 0.25, 0.5, 0.8}) {
        const double theta[1] = {t};
        const auto ev = cell_spectrum(assemble_shifted_operator(c, theta, g), 6);
        for (int b = 1; b <= 6; ++b) CHECK(std::abs(ev[b - 1] - oracle::mathieu_band(1.0, t, b)) < 1e-9);
    }
}

TEST_CASE("eigenpairs are orthonormal, phase fixed and satisfy the cell equation") {
    TorusGrid g(1, 21);
    const auto c = PeriodicPotential::mathieu(TorusGrid(1, 3), 1.0);
    const double theta[1] = {0.3};
    const auto op = assemble_shifted_operator(c, theta, g);
    const auto pairs = solve_cell_problem(op, 4);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        CHECK(std::abs(l2_norm(p.psi) - 1.0) < 1e-12);
        CHECK((op.matrix * p.psi.coeffs - p.lambda * p.psi.coeffs).norm() < 1e-10);
        Eigen::Index top;
        p.psi.coeffs.cwiseAbs().maxCoeff(&top);
        CHECK(p.psi.coeffs[top].imag() == 0.0);
        CHECK(p.psi.coeffs[top].real() > 0.0);
        for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(inner_product(p.psi, pairs[j].psi)) < 1e-12);
        CHECK(!p.degenerate);
    }
    // ascending
    for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i].lambda > pairs[i - 1].lambda);
}

TEST_CASE("degeneracy and gaps") {
    TorusGrid g(1, 11);
    const auto c = PeriodicPotential::zero(g);
    const double half[1] = {0.5};
    const auto pairs = solve_cell_problem(assemble_shifted_operator(c, half, g), 2);
    CHECK(pairs[0].degenerate);
    CHECK(pairs[0].gap < 1e-12);
    const double zero[1] = {0.0};
    const auto p0 = bloch_eigenpair(c, g, zero, 1);
    CHECK(!p0.degenerate);
    CHECK(p0.gap == doctest::Approx(four_pi_sq));
}

TEST_CASE("phase convention tie breaking") {
    TorusGrid g(1, 3);
    CellFunction f{g, CellCoeffs(3)};
    f.coeffs << cxd(0.0, 1.0), cxd(0.0, 0.0), cxd(-1.0, 0.0);
    apply_phase_convention(f);
    CHECK(f.coeffs[0] == cxd(1.0, 0.0));
    CHECK(std::abs(f.coeffs[2] - cxd(0.0, 1.0)) < 1e-15);
}

TEST_CASE("2D operator is Hermitian and separable for a separable potential") {
    TorusGrid g(2, 7);
    const ModeCoefficient list[] = {{{1, 0}, 1.0}, {{-1, 0}, 1.0}};
    const auto c = PeriodicPotential::from_coefficients(TorusGrid(2, 3), list);
    const double theta[2] = {0.0, 0.25};
    const auto op = assemble_shifted_operator(c, theta, g);
    CHECK(op.hermiticity_defect() < 1e-14);
    const auto ev = cell_spectrum(op, 1);
    // lambda = Mathieu band 1 at 0 + free band 1 at 1/4
    CHECK(std::abs(ev[0] - (oracle::mathieu_band(1.0, 0.0, 1, 3) + four_pi_sq / 16)) < 1e-9);
}

TEST_CASE("input validation") {
    TorusGrid g(1, 5);
    const auto c = PeriodicPotential::zero(g);
    const double two[2] = {0.0, 0.0};
    CHECK_THROWS_AS(assemble_shifted_operator(c, two, g), ConfigError);
    const double t[1] = {0.0};
    CHECK_THROWS_AS(solve_cell_problem(assemble_shifted_operator(c, t, g), 6), ConfigError);
    auto op = assemble_shifted_operator(c, t, g);
    op.matrix(0, 1) = 1.0;
    CHECK_THROWS_AS(solve_cell_problem(op, 1), ConfigError);
}
