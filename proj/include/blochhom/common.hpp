#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace blochhom {

using cxd = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
inline constexpr double eight_pi_sq = 8.0 * std::numbers::pi * std::numbers::pi;
inline constexpr cxd imag_unit{0.0, 1.0};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input or inconsistent configuration (grid mismatch, malformed scenario).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (eigensolver, NaN, cross-check beyond tolerance).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A modelling hypothesis does not hold: simplicity, criticality, non-resonance.
class AssumptionError : public Error {
public:
    using Error::Error;
};

}  // namespace blochhom
