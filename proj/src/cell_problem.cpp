#include "blochhom/cell_problem.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace blochhom {

double CellOperator::hermiticity_defect() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }

CellOperator assemble_shifted_operator(const PeriodicPotential& c, std::span<const double> theta,
                                       const TorusGrid& grid) {
    if (static_cast<int>(theta.size()) != grid.dim()) throw ConfigError("theta dimension does not match the grid");
    if (c.grid.dim() != grid.dim()) throw ConfigError("potential dimension does not match the grid");
    // Coefficients beyond the target's mode set would be silently dropped.
    const PeriodicPotential pot = c.on_grid(grid);

    const auto n = static_cast<Eigen::Index>(grid.mode_count());
    CellOperator op{grid, std::vector<double>(theta.begin(), theta.end()), Eigen::MatrixXcd::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const Mode ki = grid.mode(static_cast<std::size_t>(i));
        double kinetic = 0.0;
        for (int j = 0; j < grid.dim(); ++j) {
            const double s = ki[static_cast<std::size_t>(j)] + theta[static_cast<std::size_t>(j)];
            kinetic += s * s;
        }
        for (Eigen::Index l = 0; l < n; ++l) {
            const Mode kl = grid.mode(static_cast<std::size_t>(l));
            op.matrix(i, l) = pot.coefficient({ki[0] - kl[0], ki[1] - kl[1]});
        }
        op.matrix(i, i) += four_pi_sq * kinetic;
    }
    return op;
}

CellOperator assemble_shifted_operator(const PeriodicPotential& c, const BlochTheta& theta, const TorusGrid& grid) {
    const auto values = theta.values();
    return assemble_shifted_operator(c, values, grid);
}

void apply_phase_convention(CellFunction& f) {
    const auto& v = f.coeffs;
    if (v.size() == 0) return;
    const double top = v.cwiseAbs().maxCoeff();
    if (top == 0.0) return;
    Eigen::Index pick = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) >= top * (1.0 - 1e-10)) {
            pick = i;
            break;
        }
    }
    const cxd phase = std::conj(v[pick]) / std::abs(v[pick]);
    f.coeffs *= phase;
    f.coeffs[pick] = std::abs(f.coeffs[pick]);
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eigensolve(const CellOperator& op, bool vectors) {
    const double defect = op.hermiticity_defect();
    if (defect > 1e-12 * std::max(1.0, op.matrix.cwiseAbs().maxCoeff())) {
        throw ConfigError("cell operator is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(op.matrix,
                                                           vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("cell eigensolver did not converge; raise the mode count or loosen the tolerance");
    }
    return solver;
}

}  // namespace

std::vector<BlochEigenpair> solve_cell_problem(const CellOperator& op, int n_bands, double degeneracy_tol) {
    const auto size = static_cast<int>(op.grid.mode_count());
    if (n_bands < 1 || n_bands > size) {
        throw ConfigError("requested " + std::to_string(n_bands) + " bands from a basis of size " + std::to_string(size));
    }
    const auto solver = eigensolve(op, true);
    const Eigen::VectorXd& evals = solver.eigenvalues();
    std::vector<BlochEigenpair> out;
    out.reserve(static_cast<std::size_t>(n_bands));
    for (int b = 0; b < n_bands; ++b) {
        BlochEigenpair pair;
        pair.theta = op.theta;
        pair.band = b + 1;
        pair.lambda = evals[b];
        pair.psi = CellFunction{op.grid, solver.eigenvectors().col(b)};
        pair.psi.coeffs.normalize();
        apply_phase_convention(pair.psi);
        double gap = std::numeric_limits<double>::infinity();
        if (b > 0) gap = std::min(gap, evals[b] - evals[b - 1]);
        if (b + 1 < size) gap = std::min(gap, evals[b + 1] - evals[b]);
        pair.gap = gap;
        pair.degenerate = gap <= degeneracy_tol;
        out.push_back(std::move(pair));
    }
    return out;
}

Eigen::VectorXd cell_spectrum(const CellOperator& op, int n_bands) {
    const auto solver = eigensolve(op, false);
    if (n_bands <= 0 || n_bands >= solver.eigenvalues().size()) return solver.eigenvalues();
    return solver.eigenvalues().head(n_bands);
}

BlochEigenpair bloch_eigenpair(const PeriodicPotential& c, const TorusGrid& grid, std::span<const double> theta,
                               int band, double degeneracy_tol) {
    auto pairs = solve_cell_problem(assemble_shifted_operator(c, theta, grid), band, degeneracy_tol);
    return std::move(pairs.back());
}

}  // namespace blochhom
