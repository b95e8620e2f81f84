#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace blochhom {

/// Reduced fraction num/den with den > 0.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    /// Accepts "p/q" or an integer "p". Anything with a decimal point or exponent
    /// is rejected so that quasi-momenta stay exactly commensurate.
    static Rational parse(std::string_view text);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// Representative in [0, 1).
    Rational mod1() const;

    std::string to_string() const;

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(std::int64_t k, const Rational& a);
    friend bool operator==(const Rational& a, const Rational& b) = default;

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Smallest-denominator p/q (q <= q_max) within tol of x, if any.
std::optional<Rational> snap_to_rational(double x, std::int64_t q_max, double tol);

/// Quasi-momentum on the unit torus, one exact rational per dimension, each in [0, 1).
class BlochTheta {
public:
    BlochTheta() = default;
    explicit BlochTheta(std::vector<Rational> components);

    /// Comma separated components, e.g. "1/2" or "1/2,0".
    static BlochTheta parse(std::string_view text);

    int dim() const { return static_cast<int>(components_.size()); }
    const std::vector<Rational>& components() const { return components_; }
    std::vector<double> values() const;
    std::string to_string() const;

    friend bool operator==(const BlochTheta& a, const BlochTheta& b) = default;

private:
    std::vector<Rational> components_;
};

/// (k+1) * a - k * b reduced mod 1, componentwise.
BlochTheta chain_momentum(const BlochTheta& a, const BlochTheta& b, int k);

}  // namespace blochhom
