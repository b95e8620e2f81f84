#include <doctest.h>

#include "blochhom/rational.hpp"
#include "blochhom/common.hpp"

using namespace blochhom;

TEST_CASE("rational parsing and reduction") {
    CHECK(Rational::parse("2/4") == Rational(1, 2));
    CHECK(Rational::parse("-3/6") == Rational(-1, 2));
    CHECK(Rational::parse("3") == Rational(3, 1));
    CHECK(Rational::parse("1/-4") == Rational(-1, 4));
    CHECK(Rational(6, 4).to_string() == "3/2");
    CHECK(Rational(4, 2).to_string() == "2");
}

TEST_CASE("floating point quasi-momenta are rejected") {
    CHECK_THROWS_AS(Rational::parse("0.25"), ConfigError);
    CHECK_THROWS_AS(Rational::parse("1e-1"), ConfigError);
    CHECK_THROWS_AS(Rational::parse("1/0"), ConfigError);
    CHECK_THROWS_AS(Rational::parse("abc"), ConfigError);
    try {
        Rational::parse("0.25");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("\"1/4\"") != std::string::npos);
    }
}

TEST_CASE("mod1 and arithmetic") {
    CHECK(Rational(5, 4).mod1() == Rational(1, 4));
    CHECK(Rational(-1, 4).mod1() == Rational(3, 4));
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(1, 3) - Rational(1, 2) == Rational(-1, 6));
    CHECK(3 * Rational(1, 4) == Rational(3, 4));
}

TEST_CASE("snapping to rationals") {
    auto q = snap_to_rational(0.5 + 1e-12, 64, 1e-9);
    REQUIRE(q);
    CHECK(*q == Rational(1, 2));
    CHECK(!snap_to_rational(0.123456789, 64, 1e-9));
    auto z = snap_to_rational(1e-13, 64, 1e-9);
    REQUIRE(z);
    CHECK(*z == Rational(0, 1));
    auto t = snap_to_rational(1.0 / 3.0, 64, 1e-9);
    REQUIRE(t);
    CHECK(*t == Rational(1, 3));
}

TEST_CASE("bloch theta and chain momenta") {
    const auto a = BlochTheta::parse("1/4");
    const auto b = BlochTheta::parse("3/4");
    CHECK(chain_momentum(a, b, 1) == BlochTheta::parse("3/4"));
    CHECK(chain_momentum(a, b, 2) == BlochTheta::parse("1/4"));
    CHECK(chain_momentum(a, b, 0) == a);
    const auto c = BlochTheta::parse("5/4, -1/2");
    CHECK(c.dim() == 2);
    CHECK(c.to_string() == "1/4,1/2");
    CHECK(c.values()[1] == doctest::Approx(0.5));
}
