#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blochhom/bands.hpp"
#include "blochhom/drive.hpp"
#include "blochhom/fine.hpp"
#include "blochhom/homogenized.hpp"

namespace blochhom {

/// "free", "constant(v)", "mathieu", "mathieu(a)" or "custom([[k, re, im], ...])"
/// ("[[k1, k2, re, im], ...]" in 2D).
struct PotentialSpec {
    std::string preset = "free";
    int dim = 1;
    double amplitude = 1.0;
    std::vector<ModeCoefficient> coefficients;

    static PotentialSpec parse(const std::string& text, int dim);
    PeriodicPotential build(const TorusGrid& grid) const;
    std::string to_string() const;
};

/// "band @ theta", theta a rational vector "1/2" / "1/2,0", or "auto:min" / "auto:max"
/// (lowest / highest critical point of the band).
struct StateRequest {
    int band = 1;
    std::optional<BlochTheta> theta;
    enum class Auto { none, min, max } automatic = Auto::none;

    static StateRequest parse(const std::string& text, int dim);
    std::string to_string() const;
};

enum class DriveKind { none, scalar, em };

struct DriveSpec {
    DriveKind kind = DriveKind::none;
    std::vector<PotentialSpec> profile;  // one entry (scalar) or one per dimension (em)
    double amplitude = 1.0;
    std::string envelope = "constant";
};

struct MacroSpec {
    double box_length = 8.0;
    int points = 256;
    double T = 1.0;
    double dt = 1e-3;
    std::string initial;  // InitialEnvelope text; default gaussian centred in the box
    /// "auto" (corrector formula), "zero", or one value per state (1D only).
    std::string tensors = "auto";
    std::optional<double> coupling;  // overrides d* of the pair (two-state systems)
    int snapshot_every = 0;
};

struct FineSpec {
    std::vector<Rational> epsilons;
    int points_per_cell = 16;
    double dt_safety = 0.02;
    int samples = 10;
    bool reconstruct_with_corrector = false;
    bool linear_interpolation = true;
    FineSplitting splitting = FineSplitting::bloch;
};

struct ResonanceSpec {
    int p_max = 16;
    int k_max = 8;
    bool auto_extend = true;
};

struct Scenario {
    std::string name = "scenario";
    int dimension = 1;
    int modes = 31;
    PotentialSpec potential;
    int band_count = 0;  // 0: two more than the highest requested band, at least 4
    int theta_points = 32;
    BandTolerances tolerances;
    std::optional<StateRequest> initial;
    std::optional<StateRequest> target;
    ResonanceSpec resonance;
    DriveSpec drive;
    std::optional<MacroSpec> macro;
    std::optional<FineSpec> fine;
    std::string output_directory;

    TorusGrid grid() const { return TorusGrid(dimension, modes); }
    InitialEnvelope initial_envelope() const;

    /// Every key with its resolved value, in a fixed order.
    std::string canonical() const;
    /// SHA-256 of canonical().
    std::string hash() const;
};

/// Parses the sectioned key = value format. ConfigError carries the line and key.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
/// Reads, parses and validates. No numerical work happens here.
Scenario load_scenario(const std::filesystem::path& path);

/// Cross-reference and range checks; ConfigError naming the failing rule.
void validate_scenario(const Scenario& s);

}  // namespace blochhom
