#include "blochhom/resonance.hpp"

#include "blochhom/format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blochhom {

namespace {

std::vector<double> ladder_theta(const StateSpec& n, const StateSpec& m, int level) {
    std::vector<double> t(n.theta.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
        const double v = (level + 1) * n.theta[j] - level * m.theta[j];
        t[j] = v - std::floor(v);
    }
    return t;
}

StateSpec level_state(const PeriodicPotential& c, const TorusGrid& grid, const ResonanceLevel& lv, int band,
                      const BandTolerances& tol) {
    if (lv.exact_theta) return make_state(c, grid, band, *lv.exact_theta, tol);
    return make_state(c, grid, band, lv.theta, tol);
}

void warn_if_not_a1(const StateSpec& s, std::vector<std::string>& warnings) {
    if (!s.a1_verified) {
        warnings.push_back(s.label() + " does not satisfy (a1): " + (s.simple ? "not critical" : "not simple") +
                           ", |grad| = " + shortest(s.grad_norm));
    }
}

}  // namespace

ResonanceLevel scan_level(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& n, const StateSpec& m,
                          int level, int p_max, const BandTolerances& tol, bool auto_extend) {
    if (p_max < 1) throw ConfigError("p_max must be positive");
    if (n.theta.size() != m.theta.size()) throw ConfigError("states have different dimensions");
    ResonanceLevel lv;
    lv.level = level;
    lv.theta = ladder_theta(n, m, level);
    if (n.exact_theta && m.exact_theta) lv.exact_theta = chain_momentum(*n.exact_theta, *m.exact_theta, level);
    lv.target_energy = (level + 1) * n.lambda - level * m.lambda;

    const Eigen::VectorXd spectrum = cell_spectrum(assemble_shifted_operator(c, lv.theta, grid));
    const int size = static_cast<int>(spectrum.size());
    int p = std::min(p_max, size);
    while (!(spectrum[p - 1] > lv.target_energy + tol.resonance)) {
        if (!auto_extend || p == size) {
            throw NumericalError("resonance scan at level " + std::to_string(level) + " cannot certify the tail: lambda_" +
                                 std::to_string(p) + " = " + shortest(spectrum[p - 1]) + " <= target " +
                                 shortest(lv.target_energy) + (auto_extend ? "; raise the mode count" : "; raise p_max"));
        }
        p = std::min(2 * p, size);
    }
    lv.bands_scanned = p;
    lv.tail_eigenvalue = spectrum[p - 1];
    lv.tail_certified = true;
    lv.margin = std::numeric_limits<double>::infinity();
    for (int b = 0; b < p; ++b) {
        const double d = std::abs(spectrum[b] - lv.target_energy);
        lv.margin = std::min(lv.margin, d);
        if (d <= tol.resonance) lv.resonant_bands.push_back(b + 1);
    }
    return lv;
}

ResonanceReport check_nonresonance(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& n,
                                   const StateSpec& m, int p_max, const BandTolerances& tol, bool auto_extend) {
    ResonanceReport r;
    r.n = n;
    r.m = m;
    warn_if_not_a1(n, r.warnings);
    warn_if_not_a1(m, r.warnings);
    const auto lv = scan_level(c, grid, n, m, 1, p_max, tol, auto_extend);
    r.margin = lv.margin;
    r.nonresonant = lv.resonant_bands.empty();
    if (!r.nonresonant) {
        std::vector<StateSpec> chain;
        for (int b : lv.resonant_bands) chain.push_back(level_state(c, grid, lv, b, tol));
        r.chain = std::move(chain);
    }
    r.levels.push_back(lv);
    return r;
}

ResonanceReport find_resonance_chain(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& n,
                                     const StateSpec& m, int k_max, int p_max, const BandTolerances& tol) {
    if (k_max < 1) throw ConfigError("k_max must be positive");
    ResonanceReport r;
    r.n = n;
    r.m = m;
    warn_if_not_a1(n, r.warnings);
    warn_if_not_a1(m, r.warnings);
    std::vector<StateSpec> chain{m, n};
    for (int k = 1; k <= k_max; ++k) {
        const auto lv = scan_level(c, grid, n, m, k, p_max, tol, true);
        r.levels.push_back(lv);
        if (k == 1) {
            r.margin = lv.margin;
            r.nonresonant = lv.resonant_bands.empty();
        }
        if (lv.resonant_bands.empty()) {
            r.chain = std::move(chain);
            return r;
        }
        if (lv.resonant_bands.size() > 1) {
            throw AssumptionError("level " + std::to_string(k) + " resonates with " +
                                  std::to_string(lv.resonant_bands.size()) +
                                  " bands; only a single resonance per level is supported");
        }
        StateSpec s = level_state(c, grid, lv, lv.resonant_bands.front(), tol);
        warn_if_not_a1(s, r.warnings);
        chain.push_back(std::move(s));
    }
    throw AssumptionError("resonance chain still resonant after k_max = " + std::to_string(k_max) +
                          " levels; refusing to truncate it");
}

}  // namespace blochhom
