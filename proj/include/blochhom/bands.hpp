#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "blochhom/cell_problem.hpp"

namespace blochhom {

/// Numerical thresholds of the band analysis.
struct BandTolerances {
    double gap_rel = 1e-6;         // simplicity: gap > gap_rel * max(1, |lambda|)
    double critical = 1e-8;        // |grad lambda| below this counts as critical
    double resonance = 1e-8;       // |lambda_p - target| below this counts as resonant
    double compatibility = 1e-9;   // Fredholm compatibility for zeta
    double compatibility_chi = 1e-8;
    int newton_max_iter = 50;
    std::int64_t q_max = 64;
    double snap = 1e-9;
    double fd_hessian_step = 1e-3;
    double effmass_rel = 1e-4;

    double gap_tol(double lambda) const;
};

struct BandSample {
    int band = 1;
    std::vector<std::vector<double>> thetas;
    std::vector<double> lambdas;
    std::vector<double> gaps;
};

/// Regular theta grid with `points_per_dim` points j / points per dimension.
std::vector<std::vector<double>> regular_theta_grid(int dim, int points_per_dim);

/// Bands first_band..last_band (1-based, inclusive) on a regular theta grid.
/// The eigensolves over theta run in parallel.
std::vector<BandSample> sample_bands(const PeriodicPotential& c, const TorusGrid& grid, int first_band,
                                     int last_band, int points_per_dim);

/// grad_theta lambda_n by first variation: 8 pi^2 sum_k (k + theta)_j |psi_k|^2.
/// Throws AssumptionError when the eigenvalue is not simple.
std::vector<double> group_velocity(const PeriodicPotential& c, const TorusGrid& grid, int band,
                                   std::span<const double> theta, const BandTolerances& tol = {});

/// Five-point (diagonal) / fourth-order cross (mixed) finite-difference Hessian of lambda_n.
Eigen::MatrixXd fd_hessian(const PeriodicPotential& c, const TorusGrid& grid, int band,
                           std::span<const double> theta, double h);

/// A selected Bloch state together with its verification of (a1).
struct StateSpec {
    int band = 1;
    std::vector<double> theta;
    std::optional<BlochTheta> exact_theta;  // set when theta is an exact rational
    double lambda = 0.0;
    double gap = 0.0;
    double grad_norm = 0.0;
    bool simple = false;
    bool critical = false;
    bool a1_verified = false;
    bool hessian_degenerate = false;
    int newton_iterations = 0;
    bool converged = true;

    std::string label() const;
};

StateSpec make_state(const PeriodicPotential& c, const TorusGrid& grid, int band,
                     std::span<const double> theta, const BandTolerances& tol = {});
StateSpec make_state(const PeriodicPotential& c, const TorusGrid& grid, int band, const BlochTheta& theta,
                     const BandTolerances& tol = {});

/// Eigenpair of a state, recomputed deterministically.
BlochEigenpair state_eigenpair(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& state);

/// Sign-change candidates refined by damped Newton on the group velocity, snapped
/// to rationals when close enough. Non-converged candidates are reported with
/// `converged == false`. Results are deduplicated and sorted by theta.
std::vector<StateSpec> find_critical_points(const BandSample& sample, const PeriodicPotential& c,
                                            const TorusGrid& grid, const BandTolerances& tol = {});

}  // namespace blochhom
