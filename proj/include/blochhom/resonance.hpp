#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blochhom/bands.hpp"

namespace blochhom {

/// One level of the momentum/energy ladder (k+1) theta_n - k theta_m, (k+1) lambda_n - k lambda_m.
struct ResonanceLevel {
    int level = 1;
    std::vector<double> theta;
    std::optional<BlochTheta> exact_theta;
    double target_energy = 0.0;
    double margin = 0.0;         // min_p |lambda_p - target| over scanned bands
    int bands_scanned = 0;
    double tail_eigenvalue = 0.0;  // lambda at the last scanned band
    bool tail_certified = false;   // tail_eigenvalue > target + tol
    std::vector<int> resonant_bands;
};

struct ResonanceReport {
    StateSpec n;
    StateSpec m;
    bool nonresonant = true;
    double margin = 0.0;
    std::vector<ResonanceLevel> levels;
    /// Resonant states. From check_nonresonance: the level-1 states. From
    /// find_resonance_chain: the full chain ordered [m, n, 2n-m, ...].
    std::optional<std::vector<StateSpec>> chain;
    std::vector<std::string> warnings;
};

/// Scans one ladder level, extending the number of bands until the tail bound
/// certifies. Throws NumericalError if the basis is exhausted first.
ResonanceLevel scan_level(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& n,
                          const StateSpec& m, int level, int p_max, const BandTolerances& tol = {},
                          bool auto_extend = true);

/// Assumption (a2): momentum 2 theta_n - theta_m, energy 2 lambda_n - lambda_m.
ResonanceReport check_nonresonance(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& n,
                                   const StateSpec& m, int p_max = 16, const BandTolerances& tol = {},
                                   bool auto_extend = true);

/// Walks k = 1, 2, ... until a non-resonant level. Throws AssumptionError if
/// k_max levels are all resonant, or if a level resonates with more than one band.
ResonanceReport find_resonance_chain(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& n,
                                     const StateSpec& m, int k_max = 8, int p_max = 16,
                                     const BandTolerances& tol = {});

}  // namespace blochhom
