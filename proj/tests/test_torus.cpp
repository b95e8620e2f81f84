#include <doctest.h>

#include "blochhom/fft.hpp"
#include "blochhom/torus.hpp"
#include "oracles.hpp"

#include <random>

using namespace blochhom;

namespace {

CellFunction random_function(const TorusGrid& grid, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> n;
    CellFunction f{grid, CellCoeffs(static_cast<Eigen::Index>(grid.mode_count()))};
    for (Eigen::Index i = 0; i < f.coeffs.size(); ++i) f.coeffs[i] = {n(rng), n(rng)};
    return f;
}

}  // namespace

TEST_CASE("grid validation and mode ordering") {
    CHECK_THROWS_AS(TorusGrid(3, 5), ConfigError);
    CHECK_THROWS_AS(TorusGrid(1, 4), ConfigError);
    CHECK_THROWS_AS(TorusGrid(1, 5, 3), ConfigError);
    TorusGrid g(2, 3);
    CHECK(g.mode_count() == 9);
    CHECK(g.point_count() == 36);
    CHECK(g.mode(0) == Mode{-1, -1});
    CHECK(g.mode(1) == Mode{-1, 0});
    CHECK(g.mode(8) == Mode{1, 1});
    for (std::size_t i = 0; i < g.mode_count(); ++i) CHECK(*g.index_of(g.mode(i)) == i);
    CHECK(!g.index_of({2, 0}));
}

TEST_CASE("FFT matches the direct DFT") {
    std::mt19937 rng(7);
    std::normal_distribution<double> n;
    std::vector<cxd> x(24);
    for (auto& v : x) v = {n(rng), n(rng)};
    auto y = x;
    FftPlan plan({24});
    plan.forward(y);
    const auto ref = oracle::dft(x, -1);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(std::abs(y[k] - ref[k]) < 1e-12);
    plan.backward(y);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(std::abs(y[k] - x[k]) < 1e-13);
}

TEST_CASE("grid evaluation round trip and direct evaluation") {
    for (int dim : {1, 2}) {
        TorusGrid g(dim, 7);
        const auto f = random_function(g, 3);
        const auto values = evaluate_on_grid(f);
        for (std::size_t j = 0; j < g.point_count(); j += 5) {
            const auto p = g.point(j);
            CHECK(std::abs(values[j] - evaluate_at(f, p)) < 1e-11);
        }
        const auto back = project_from_grid(values, g);
        CHECK((back.coeffs - f.coeffs).norm() < 1e-12);
    }
}

TEST_CASE("multiplication by a potential matches pointwise products") {
    TorusGrid g(1, 9, 64);
    CellFunction f{g, CellCoeffs::Zero(9)};
    f.coeffs[4] = 1.0;  // k = 0
    f.coeffs[5] = {0.5, -0.25};
    const auto q = PeriodicPotential::mathieu(TorusGrid(1, 3), 1.5);
    const auto qf = multiply(q, f);
    for (double y : {0.1, 0.37, 0.8}) {
        const double yy[1] = {y};
        CHECK(std::abs(evaluate_at(qf, yy) - q.value_at(yy) * evaluate_at(f, yy)) < 1e-12);
    }
}

TEST_CASE("potentials") {
    TorusGrid g(1, 5);
    const ModeCoefficient bad[] = {{{1, 0}, {1.0, 0.0}}};
    CHECK_THROWS_AS(PeriodicPotential::from_coefficients(g, bad), ConfigError);  // not real
    const ModeCoefficient outside[] = {{{3, 0}, 1.0}, {{-3, 0}, 1.0}};
    CHECK_THROWS_AS(PeriodicPotential::from_coefficients(g, outside), ConfigError);
    const ModeCoefficient ok[] = {{{1, 0}, {0.5, 0.5}}, {{-1, 0}, {0.5, -0.5}}};
    const auto c = PeriodicPotential::from_coefficients(g, ok);
    CHECK(c.reality_defect() == 0.0);
    const double y[1] = {0.25};
    // 2 Re((0.5 + 0.5i) e^{i pi/2}) = -1
    CHECK(c.value_at(y) == doctest::Approx(-1.0));
    const auto big = PeriodicPotential::mathieu(TorusGrid(1, 9));
    CHECK_NOTHROW(big.on_grid(TorusGrid(1, 3)));
    const ModeCoefficient wide[] = {{{3, 0}, 1.0}, {{-3, 0}, 1.0}};
    CHECK_THROWS_AS(PeriodicPotential::from_coefficients(TorusGrid(1, 9), wide).on_grid(TorusGrid(1, 5)), ConfigError);
}

TEST_CASE("inner product and shifted derivative") {
    TorusGrid g(1, 5);
    const auto f = random_function(g, 11);
    const auto h = random_function(g, 12);
    // <f, h> = integral f conj(h), checked by quadrature
    const cxd ref = oracle::periodic_quadrature(
        [&](double y) {
            const double yy[1] = {y};
            return evaluate_at(f, yy) * std::conj(evaluate_at(h, yy));
        },
        64);
    CHECK(std::abs(inner_product(f, h) - ref) < 1e-12);
    const double theta[1] = {0.3};
    const auto d = shifted_derivative(f, theta, 0);
    const double y0[1] = {0.4}, yp[1] = {0.4 + 1e-6}, ym[1] = {0.4 - 1e-6};
    auto bloch = [&](const double* y) { return evaluate_at(f, std::span<const double>(y, 1)) * std::polar(1.0, two_pi * 0.3 * y[0]); };
    const cxd fd = (bloch(yp) - bloch(ym)) / 2e-6;
    CHECK(std::abs(evaluate_at(d, y0) * std::polar(1.0, two_pi * 0.3 * 0.4) - fd) < 1e-6);
    CHECK_THROWS_AS(inner_product(f, random_function(TorusGrid(1, 7), 1)), ConfigError);
}
