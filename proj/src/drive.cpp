#include "blochhom/drive.hpp"

#include "blochhom/format.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

namespace blochhom {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view text) {
    text = trim(text);
    double v = 0.0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
        throw ConfigError("expected a number, got \"" + std::string(text) + "\"");
    }
    return v;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + shortest(v[i]);
    return s;
}

double component(const std::vector<double>& v, std::size_t j) { return v.size() == 1 ? v[0] : v.at(j); }

}  // namespace

std::pair<std::string, std::vector<double>> parse_call(std::string_view text) {
    text = trim(text);
    const auto open = text.find('(');
    if (open == std::string_view::npos) return {std::string(text), {}};
    if (text.back() != ')') throw ConfigError("unbalanced parentheses in \"" + std::string(text) + "\"");
    std::string name(trim(text.substr(0, open)));
    std::string_view body = text.substr(open + 1, text.size() - open - 2);
    std::vector<double> args;
    if (!trim(body).empty()) {
        std::size_t start = 0;
        while (true) {
            const auto comma = body.find(',', start);
            args.push_back(parse_number(body.substr(start, comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
    }
    return {name, args};
}

DriveEnvelope DriveEnvelope::constant(double amplitude) {
    DriveEnvelope e;
    e.amplitude_ = amplitude;
    return e;
}

DriveEnvelope DriveEnvelope::gaussian_pulse(double amplitude, double t0, double sigma_t, std::vector<double> x0,
                                            std::vector<double> sigma_x) {
    if (sigma_t <= 0.0) throw ConfigError("gaussian_pulse needs sigma_t > 0");
    if (x0.empty() || x0.size() != sigma_x.size()) throw ConfigError("gaussian_pulse needs matching x0 and sigma_x");
    for (double s : sigma_x) {
        if (s <= 0.0) throw ConfigError("gaussian_pulse needs sigma_x > 0");
    }
    DriveEnvelope e;
    e.kind_ = Kind::gaussian_pulse;
    e.amplitude_ = amplitude;
    e.t0_ = t0;
    e.sigma_t_ = sigma_t;
    e.x0_ = std::move(x0);
    e.sigma_x_ = std::move(sigma_x);
    return e;
}

DriveEnvelope DriveEnvelope::turn_on(double amplitude, double ramp) {
    if (ramp <= 0.0) throw ConfigError("turn_on needs ramp > 0");
    DriveEnvelope e;
    e.kind_ = Kind::turn_on;
    e.amplitude_ = amplitude;
    e.ramp_ = ramp;
    return e;
}

DriveEnvelope DriveEnvelope::parse(std::string_view text, double amplitude) {
    const auto [name, args] = parse_call(text);
    if (name == "const" || name == "constant") {
        if (!args.empty()) throw ConfigError("const takes no arguments");
        return constant(amplitude);
    }
    if (name == "gaussian_pulse") {
        if (args.size() == 4) return gaussian_pulse(amplitude, args[0], args[1], {args[2]}, {args[3]});
        if (args.size() == 6) return gaussian_pulse(amplitude, args[0], args[1], {args[2], args[3]}, {args[4], args[5]});
        throw ConfigError("gaussian_pulse takes (t0, sigma_t, x0, sigma_x) or (t0, sigma_t, x0_1, x0_2, sigma_1, sigma_2)");
    }
    if (name == "turn_on") {
        if (args.size() != 1) throw ConfigError("turn_on takes (ramp)");
        return turn_on(amplitude, args[0]);
    }
    throw ConfigError("unknown drive envelope \"" + name + "\"; expected const, gaussian_pulse or turn_on");
}

double DriveEnvelope::time_factor(double t) const {
    switch (kind_) {
        case Kind::constant: return 1.0;
        case Kind::gaussian_pulse: {
            const double s = (t - t0_) / sigma_t_;
            return std::exp(-0.5 * s * s);
        }
        case Kind::turn_on:
            if (t >= ramp_) return 1.0;
            if (t <= 0.0) return 0.0;
            return 0.5 * (1.0 - std::cos(pi * t / ramp_));
    }
    return 1.0;
}

double DriveEnvelope::space_factor(std::span<const double> x) const {
    if (kind_ != Kind::gaussian_pulse) return 1.0;
    double e = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double s = (x[j] - component(x0_, j)) / component(sigma_x_, j);
        e += s * s;
    }
    return std::exp(-0.5 * e);
}

std::string DriveEnvelope::to_string() const {
    switch (kind_) {
        case Kind::constant: return "const";
        case Kind::gaussian_pulse:
            return "gaussian_pulse(" + shortest(t0_) + ", " + shortest(sigma_t_) + ", " + join(x0_) + ", " +
                   join(sigma_x_) + ")";
        case Kind::turn_on: return "turn_on(" + shortest(ramp_) + ")";
    }
    return "const";
}

InitialEnvelope InitialEnvelope::gaussian(std::vector<double> center, double sigma) {
    if (sigma <= 0.0) throw ConfigError("gaussian envelope needs sigma > 0");
    if (center.empty()) throw ConfigError("gaussian envelope needs a center");
    InitialEnvelope e;
    e.kind_ = Kind::gaussian;
    e.center_ = std::move(center);
    e.sigma_ = sigma;
    return e;
}

InitialEnvelope InitialEnvelope::constant(double value) {
    InitialEnvelope e;
    e.kind_ = Kind::constant;
    e.value_ = value;
    return e;
}

InitialEnvelope InitialEnvelope::parse(std::string_view text) {
    const auto [name, args] = parse_call(text);
    if (name == "gaussian") {
        if (args.size() == 2) return gaussian({args[0]}, args[1]);
        if (args.size() == 3) return gaussian({args[0], args[1]}, args[2]);
        throw ConfigError("gaussian takes (x0, sigma) or (x0_1, x0_2, sigma)");
    }
    if (name == "constant" || name == "const") {
        if (args.size() > 1) throw ConfigError("constant takes (value)");
        return constant(args.empty() ? 1.0 : args[0]);
    }
    throw ConfigError("unknown initial envelope \"" + name + "\"; expected gaussian or constant");
}

double InitialEnvelope::operator()(std::span<const double> x) const {
    if (kind_ == Kind::constant) return value_;
    double e = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double s = x[j] - component(center_, j);
        e += s * s;
    }
    return std::exp(-e / (2.0 * sigma_ * sigma_));
}

std::string InitialEnvelope::to_string() const {
    if (kind_ == Kind::constant) return "constant(" + shortest(value_) + ")";
    return "gaussian(" + join(center_) + ", " + shortest(sigma_) + ")";
}

}  // namespace blochhom
