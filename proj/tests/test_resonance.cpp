#include <doctest.h>

#include "blochhom/resonance.hpp"
#include "oracles.hpp"

using namespace blochhom;

namespace {

const TorusGrid grid1(1, 31);

}  // namespace

TEST_CASE("free pair at 1/4 and 3/4 is resonant") {
    const auto c = PeriodicPotential::zero(grid1);
    const auto n = make_state(c, grid1, 1, BlochTheta::parse("1/4"));
    const auto m = make_state(c, grid1, 1, BlochTheta::parse("3/4"));
    const auto r = check_nonresonance(c, grid1, n, m);
    CHECK(!r.nonresonant);
    CHECK(r.margin < 1e-10);
    REQUIRE(r.chain);
    REQUIRE(r.chain->size() == 1);
    CHECK(r.chain->front().exact_theta->to_string() == "3/4");
    CHECK(std::abs(r.chain->front().lambda - pi * pi / 4) < 1e-10);
    CHECK(!r.warnings.empty());  // free states at 1/4 are not critical
    CHECK_THROWS_AS(find_resonance_chain(c, grid1, n, m, 4), AssumptionError);
}

TEST_CASE("target below the spectrum is nonresonant") {
    const auto c = PeriodicPotential::mathieu(TorusGrid(1, 3), 1.0);
    // 2 lambda_n - lambda_m far below lambda_1
    auto n = make_state(c, grid1, 1, BlochTheta::parse("0"));
    auto m = make_state(c, grid1, 4, BlochTheta::parse("0"));
    const auto r = check_nonresonance(c, grid1, n, m, 4);
    CHECK(r.nonresonant);
    const double target = 2 * n.lambda - m.lambda;
    CHECK(r.margin >= oracle::mathieu_band(1.0, 0.0, 1) - target - 1e-9);
    CHECK(!r.chain);
}

TEST_CASE("Mathieu edge pair is nonresonant with a certified tail") {
    const auto c = PeriodicPotential::mathieu(TorusGrid(1, 3), 1.0);
    const auto n = make_state(c, grid1, 1, BlochTheta::parse("0"));
    const auto m = make_state(c, grid1, 2, BlochTheta::parse("1/2"));
    const auto r = check_nonresonance(c, grid1, n, m, 12);
    CHECK(r.nonresonant);
    CHECK(r.levels.front().tail_certified);
    CHECK(r.levels.front().exact_theta->to_string() == "1/2");
    // oracle margin over the first 12 bands at theta = 1/2
    const double target = 2 * n.lambda - m.lambda;
    double margin = 1e300;
    for (int p = 1; p <= 12; ++p) margin = std::min(margin, std::abs(oracle::mathieu_band(1.0, 0.5, p) - target));
    CHECK(std::abs(r.margin - margin) < 1e-9);
    CHECK(r.margin > 1e-8);
    CHECK(r.warnings.empty());

    const auto chain = find_resonance_chain(c, grid1, n, m);
    REQUIRE(chain.chain);
    CHECK(chain.chain->size() == 2);
    CHECK(chain.nonresonant);
}

TEST_CASE("margin is monotone in p_max and the tail must certify") {
    const auto c = PeriodicPotential::mathieu(TorusGrid(1, 3), 1.0);
    const auto n = make_state(c, grid1, 1, BlochTheta::parse("0"));
    const auto m = make_state(c, grid1, 2, BlochTheta::parse("1/2"));
    double prev = 1e300;
    for (int p : {2, 4, 8, 16}) {
        const auto r = check_nonresonance(c, grid1, n, m, p);
        CHECK(r.margin <= prev);
        CHECK(r.nonresonant);
        prev = r.margin;
    }
    // swapped roles: the target 2 lambda_2(1/2) - lambda_1(0) lies above lambda_1(0),
    // so p_max = 1 cannot certify without extension
    CHECK_THROWS_AS(check_nonresonance(c, grid1, m, n, 1, {}, false), NumericalError);
    const auto ext = check_nonresonance(c, grid1, m, n, 1, {}, true);
    CHECK(ext.levels.front().bands_scanned > 1);
    CHECK(ext.levels.front().tail_certified);
}

TEST_CASE("engineered reflected pair") {
    // theta_m = -theta_n, lambda_m = lambda_n: level 1 sits at 3 theta_n with energy lambda_n.
    const auto c = PeriodicPotential::mathieu(TorusGrid(1, 3), 1.0);
    const auto n = make_state(c, grid1, 1, BlochTheta::parse("1/3"));
    const auto m = make_state(c, grid1, 1, BlochTheta::parse("2/3"));
    CHECK(std::abs(n.lambda - m.lambda) < 1e-10);
    const auto r = check_nonresonance(c, grid1, n, m);
    CHECK(r.levels.front().exact_theta->to_string() == "0");
    // lambda_1(1/3) lies strictly inside band 1, above lambda_1(0) and below lambda_2(0)
    CHECK(r.nonresonant);
    const double margin = std::min(std::abs(oracle::mathieu_band(1.0, 0, 1) - n.lambda),
                                   std::abs(oracle::mathieu_band(1.0, 0, 2) - n.lambda));
    CHECK(std::abs(r.margin - margin) < 1e-9);
}
