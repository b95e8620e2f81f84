#include "blochhom/rational.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include "blochhom/common.hpp"

namespace blochhom {

namespace {

std::int64_t parse_int(std::string_view s, std::string_view whole) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("invalid rational '" + std::string(whole) +
                          "': write quasi-momenta as exact fractions such as \"1/4\"");
    }
    return v;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw ConfigError("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    num_ = num / (g == 0 ? 1 : g);
    den_ = den / (g == 0 ? 1 : g);
}

Rational Rational::parse(std::string_view text) {
    if (text.find_first_of(".eE") != std::string_view::npos) {
        throw ConfigError("invalid rational '" + std::string(text) +
                          "': floating-point quasi-momenta are not allowed, use the rational form \"1/4\"");
    }
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(parse_int(text, text));
    return Rational(parse_int(text.substr(0, slash), text), parse_int(text.substr(slash + 1), text));
}

Rational Rational::mod1() const {
    std::int64_t r = num_ % den_;
    if (r < 0) r += den_;
    return Rational(r, den_);
}

std::string Rational::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator*(std::int64_t k, const Rational& a) { return Rational(k * a.num_, a.den_); }

std::optional<Rational> snap_to_rational(double x, std::int64_t q_max, double tol) {
    for (std::int64_t q = 1; q <= q_max; ++q) {
        const double p = std::round(x * static_cast<double>(q));
        if (std::abs(x - p / static_cast<double>(q)) <= tol) {
            return Rational(static_cast<std::int64_t>(p), q);
        }
    }
    return std::nullopt;
}

BlochTheta::BlochTheta(std::vector<Rational> components) : components_(std::move(components)) {
    for (auto& c : components_) c = c.mod1();
}

BlochTheta BlochTheta::parse(std::string_view text) {
    std::vector<Rational> parts;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        parts.push_back(Rational::parse(text.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return BlochTheta(std::move(parts));
}

std::vector<double> BlochTheta::values() const {
    std::vector<double> v;
    v.reserve(components_.size());
    for (const auto& c : components_) v.push_back(c.to_double());
    return v;
}

std::string BlochTheta::to_string() const {
    std::string s;
    for (std::size_t i = 0; i < components_.size(); ++i) {
        if (i) s += ",";
        s += components_[i].to_string();
    }
    return s;
}

BlochTheta chain_momentum(const BlochTheta& a, const BlochTheta& b, int k) {
    if (a.dim() != b.dim()) throw ConfigError("quasi-momenta of different dimensions");
    std::vector<Rational> out;
    for (int j = 0; j < a.dim(); ++j) {
        out.push_back((k + 1) * a.components()[j] - static_cast<std::int64_t>(k) * b.components()[j]);
    }
    return BlochTheta(std::move(out));
}

}  // namespace blochhom
