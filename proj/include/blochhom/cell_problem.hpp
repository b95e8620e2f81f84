#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "blochhom/rational.hpp"
#include "blochhom/torus.hpp"

namespace blochhom {

/// Matrix of -(div + 2 i pi theta)(grad + 2 i pi theta) + c(y) in the plane-wave basis.
/// Diagonal 4 pi^2 |k + theta|^2, off-diagonal entries c_{k - k'}.
struct CellOperator {
    TorusGrid grid;
    std::vector<double> theta;
    Eigen::MatrixXcd matrix;

    /// Largest |A - A^H| entry.
    double hermiticity_defect() const;
};

CellOperator assemble_shifted_operator(const PeriodicPotential& c, std::span<const double> theta,
                                       const TorusGrid& grid);
CellOperator assemble_shifted_operator(const PeriodicPotential& c, const BlochTheta& theta,
                                       const TorusGrid& grid);

struct BlochEigenpair {
    std::vector<double> theta;
    int band = 1;  // 1-based
    double lambda = 0.0;
    CellFunction psi;
    /// True when another computed eigenvalue lies within the degeneracy tolerance.
    bool degenerate = false;
    /// Distance to the nearest other computed eigenvalue (infinity if none).
    double gap = 0.0;
};

/// Fixes the phase so the largest-modulus coefficient is real positive. Coefficients
/// within a relative 1e-10 of the maximum count as ties; the smallest index wins.
void apply_phase_convention(CellFunction& f);

/// Lowest `n_bands` eigenpairs, ascending, with orthonormal phase-fixed eigenvectors.
/// `degeneracy_tol` is absolute; gaps below it set the `degenerate` flag.
std::vector<BlochEigenpair> solve_cell_problem(const CellOperator& op, int n_bands,
                                               double degeneracy_tol = 1e-6);

/// Eigenvalues only (all of them when n_bands <= 0).
Eigen::VectorXd cell_spectrum(const CellOperator& op, int n_bands = 0);

/// Convenience: assemble and solve, returning the requested band (1-based).
BlochEigenpair bloch_eigenpair(const PeriodicPotential& c, const TorusGrid& grid,
                               std::span<const double> theta, int band, double degeneracy_tol = 1e-6);

}  // namespace blochhom
