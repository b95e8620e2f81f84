#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blochhom/torus.hpp"

namespace blochhom {

/// Separable macroscopic factor g(t, x) = amplitude * time_factor(t) * space_factor(x).
///
/// Presets: "const", "gaussian_pulse(t0, sigma_t, x0, sigma_x)" and "turn_on(ramp)".
class DriveEnvelope {
public:
    enum class Kind { constant, gaussian_pulse, turn_on };

    DriveEnvelope() = default;
    static DriveEnvelope constant(double amplitude = 1.0);
    static DriveEnvelope gaussian_pulse(double amplitude, double t0, double sigma_t, std::vector<double> x0,
                                        std::vector<double> sigma_x);
    static DriveEnvelope turn_on(double amplitude, double ramp);
    /// Parses a preset expression; the amplitude is supplied separately.
    static DriveEnvelope parse(std::string_view text, double amplitude);

    Kind kind() const { return kind_; }
    double amplitude() const { return amplitude_; }
    double time_factor(double t) const;
    double space_factor(std::span<const double> x) const;
    double operator()(double t, std::span<const double> x) const {
        return amplitude_ * time_factor(t) * space_factor(x);
    }
    bool is_space_constant() const { return kind_ != Kind::gaussian_pulse; }
    const std::vector<double>& center() const { return x0_; }
    std::string to_string() const;

private:
    Kind kind_ = Kind::constant;
    double amplitude_ = 1.0;
    double t0_ = 0.0;
    double sigma_t_ = 1.0;
    std::vector<double> x0_;
    std::vector<double> sigma_x_;
    double ramp_ = 1.0;
};

/// d(t, x, y) = g(t, x) q(y).
struct ScalarDriveProfile {
    PeriodicPotential y_profile;
    DriveEnvelope macro_factor;
};

/// a(t, x, y) = g(t, x) (a_1(y), ..., a_N(y)).
struct VectorDriveProfile {
    std::vector<PeriodicPotential> y_profile;
    DriveEnvelope macro_factor;
};

/// Initial macroscopic profile v0(x): "gaussian(x0, sigma)" or "constant(value)".
class InitialEnvelope {
public:
    enum class Kind { gaussian, constant };

    InitialEnvelope() = default;
    static InitialEnvelope gaussian(std::vector<double> center, double sigma);
    static InitialEnvelope constant(double value);
    static InitialEnvelope parse(std::string_view text);

    Kind kind() const { return kind_; }
    const std::vector<double>& center() const { return center_; }
    double operator()(std::span<const double> x) const;
    std::string to_string() const;

private:
    Kind kind_ = Kind::gaussian;
    std::vector<double> center_{0.0};
    double sigma_ = 1.0;
    double value_ = 1.0;
};

/// Splits "name(a, b, c)" into the name and numeric arguments.
std::pair<std::string, std::vector<double>> parse_call(std::string_view text);

}  // namespace blochhom
