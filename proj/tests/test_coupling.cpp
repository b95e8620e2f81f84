#include <doctest.h>

#include "blochhom/coupling.hpp"
#include "oracles.hpp"

#include <random>

using namespace blochhom;

namespace {

const TorusGrid grid1(1, 31);
PeriodicPotential mathieu(double a = 1.0) { return PeriodicPotential::mathieu(TorusGrid(1, 3), a); }

BlochEigenpair plane_wave(const TorusGrid& g, int k, double theta) {
    BlochEigenpair p;
    p.theta = {theta};
    p.psi = {g, CellCoeffs::Zero(static_cast<Eigen::Index>(g.mode_count()))};
    p.psi.coeffs[static_cast<Eigen::Index>(*g.index_of({k, 0}))] = 1.0;
    return p;
}

BlochEigenpair pair_at(const PeriodicPotential& c, double theta, int band) {
    const double t[1] = {theta};
    return bloch_eigenpair(c, grid1, t, band);
}

cxd psi_value(const BlochEigenpair& p, double y) {
    cxd s{};
    for (std::size_t i = 0; i < p.psi.grid.mode_count(); ++i) {
        s += p.psi.coeffs[static_cast<Eigen::Index>(i)] * std::polar(1.0, 2 * oracle::pi * p.psi.grid.mode(i)[0] * y);
    }
    return s;
}

// (d/dy + 2 i pi theta) psi at y, summed mode by mode.
cxd dpsi_value(const BlochEigenpair& p, double y) {
    cxd s{};
    for (std::size_t i = 0; i < p.psi.grid.mode_count(); ++i) {
        const double k = p.psi.grid.mode(i)[0] + p.theta[0];
        s += cxd(0, 2 * oracle::pi * k) * p.psi.coeffs[static_cast<Eigen::Index>(i)] *
             std::polar(1.0, 2 * oracle::pi * p.psi.grid.mode(i)[0] * y);
    }
    return s;
}

PeriodicPotential random_potential(std::mt19937& rng) {
    std::normal_distribution<double> n;
    std::vector<ModeCoefficient> list;
    list.push_back({{0, 0}, n(rng)});
    for (int k = 1; k <= 2; ++k) {
        const cxd v{n(rng), n(rng)};
        list.push_back({{k, 0}, v});
        list.push_back({{-k, 0}, std::conj(v)});
    }
    return PeriodicPotential::from_coefficients(TorusGrid(1, 5), list);
}

}  // namespace

TEST_CASE("orthogonality: constant drive, same theta, different bands") {
    const auto c = mathieu();
    const auto q = PeriodicPotential::constant(TorusGrid(1, 3), 1.0);
    for (double t : {0.0, 0.3, 0.5}) {
        CHECK(std::abs(fermi_coupling_scalar(q, pair_at(c, t, 1), pair_at(c, t, 2)).value_y) < 1e-12);
        CHECK(std::abs(fermi_coupling_scalar(q, pair_at(c, t, 1), pair_at(c, t, 1)).value_y - 0.5) < 1e-12);
    }
}

TEST_CASE("plane waves with k_n - k_m = 1") {
    const auto d = fermi_coupling_scalar(mathieu(), plane_wave(grid1, 1, 0.0), plane_wave(grid1, 0, 0.0));
    CHECK(std::abs(d.value_y - 0.5) < 1e-12);
    CHECK(d.transition_probability() == doctest::Approx(0.25));
}

TEST_CASE("Mathieu coupling against quadrature") {
    const auto c = mathieu();
    const auto n = pair_at(c, 0.0, 1);
    const auto m = pair_at(c, 0.5, 2);
    const auto d = fermi_coupling_scalar(mathieu(), n, m);
    const cxd ref = 0.5 * oracle::periodic_quadrature(
                              [&](double y) { return 2 * std::cos(2 * oracle::pi * y) * std::conj(psi_value(n, y)) * psi_value(m, y); },
                              1024);
    CHECK(std::abs(d.value_y - ref) < 1e-10);
    CHECK(std::abs(d.value_y) > 0.1);
}

TEST_CASE("electromagnetic coupling") {
    const std::vector<PeriodicPotential> zero{PeriodicPotential::zero(TorusGrid(1, 3))};
    const auto c = mathieu();
    CHECK(std::abs(fermi_coupling_em(zero, pair_at(c, 0, 1), pair_at(c, 0.5, 2)).value_y) == 0.0);

    const double a0 = 0.8;
    const std::vector<PeriodicPotential> cst{PeriodicPotential::constant(TorusGrid(1, 3), a0)};
    for (int k : {-1, 0, 2}) {
        const double tn = 0.25, tm = 0.5;
        const auto d = fermi_coupling_em(cst, plane_wave(grid1, k, tn), plane_wave(grid1, k, tm));
        CHECK(std::abs(d.value_y - oracle::pi * a0 * (2 * k + tn + tm)) < 1e-12);
    }

    const std::vector<PeriodicPotential> a{mathieu()};
    const auto n = pair_at(c, 0.0, 1);
    const auto m = pair_at(c, 0.5, 2);
    const auto d = fermi_coupling_em(a, n, m);
    const cxd ref = oracle::periodic_quadrature(
        [&](double y) {
            const double av = 2 * std::cos(2 * oracle::pi * y);
            return cxd(0, 0.5) * (psi_value(m, y) * av * std::conj(dpsi_value(n, y)) -
                                  std::conj(psi_value(n, y)) * av * dpsi_value(m, y));
        },
        1024);
    CHECK(std::abs(d.value_y - ref) < 1e-10);
}

TEST_CASE("Hermiticity over randomized pairs") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> band(1, 4);
    for (int i = 0; i < 20; ++i) {
        const auto c = random_potential(rng);
        const auto q = random_potential(rng);
        const auto n = pair_at(c, u(rng), band(rng));
        const auto m = pair_at(c, u(rng), band(rng));
        const cxd dnm = fermi_coupling_scalar(q, n, m).value_y;
        const cxd dmn = fermi_coupling_scalar(q, m, n).value_y;
        CHECK(std::abs(dnm - std::conj(dmn)) < 1e-12);
        const std::vector<PeriodicPotential> a{q};
        const cxd enm = fermi_coupling_em(a, n, m).value_y;
        const cxd emn = fermi_coupling_em(a, m, n).value_y;
        CHECK(std::abs(enm - std::conj(emn)) < 1e-12);
    }
}

TEST_CASE("phase covariance and linearity") {
    const auto c = mathieu();
    auto n = pair_at(c, 0.0, 1);
    const auto m = pair_at(c, 0.5, 2);
    const auto q = mathieu(0.7);
    const cxd d = fermi_coupling_scalar(q, n, m).value_y;
    const double alpha = 0.9;
    n.psi.coeffs *= std::polar(1.0, alpha);
    const cxd rotated = fermi_coupling_scalar(q, n, m).value_y;
    CHECK(std::abs(rotated - std::polar(1.0, -alpha) * d) < 1e-13);
    CHECK(std::abs(std::abs(rotated) - std::abs(d)) < 1e-13);
    const cxd twice = fermi_coupling_scalar(mathieu(1.4), n, m).value_y;
    CHECK(std::abs(twice - 2.0 * rotated) < 1e-13);
}

TEST_CASE("resonant chain matrices") {
    const auto c = mathieu();
    const auto q = mathieu(0.5);
    std::vector<BlochEigenpair> chain{pair_at(c, 0.5, 2), pair_at(c, 0.0, 1), pair_at(c, 0.5, 3), pair_at(c, 0.0, 2)};
    CHECK_THROWS_AS(coupling_matrix_resonant(std::span(chain).first(1), q), ConfigError);
    for (std::size_t k = 2; k <= 4; ++k) {
        const auto d = coupling_matrix_resonant(std::span(chain).first(k), q);
        CHECK(d.rows() == static_cast<Eigen::Index>(k));
        CHECK(hermiticity_defect(d) == 0.0);
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            for (Eigen::Index j = 0; j < d.cols(); ++j) {
                if (std::abs(i - j) != 1) CHECK(d(i, j) == cxd{});
            }
        }
        CHECK(d(0, 1) == fermi_coupling_scalar(q, chain[0], chain[1]).value_y);
    }
}
