#include "blochhom/correctors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

namespace blochhom {

namespace {

double kshift(const TorusGrid& grid, std::span<const double> theta, std::size_t i, int direction) {
    return grid.mode(i)[static_cast<std::size_t>(direction)] + theta[static_cast<std::size_t>(direction)];
}

void require_valid_state(const StateSpec& state, const char* what) {
    if (!state.a1_verified) {
        throw AssumptionError(std::string(what) + ": state " + state.label() +
                              " does not satisfy (a1); simple critical point required");
    }
}

void check_direction(const TorusGrid& grid, int direction) {
    if (direction < 0 || direction >= grid.dim()) throw ConfigError("corrector direction out of range");
}

double relative(double value, const CellFunction& rhs) { return value / std::max(1.0, l2_norm(rhs)); }

}  // namespace

CellFunction zeta_rhs(const BlochEigenpair& psi, int direction) {
    const TorusGrid& grid = psi.psi.grid;
    check_direction(grid, direction);
    CellFunction out{grid, CellCoeffs(psi.psi.coeffs.size())};
    for (std::size_t i = 0; i < grid.mode_count(); ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        out.coeffs[ei] = 4.0 * pi * imag_unit * kshift(grid, psi.theta, i, direction) * psi.psi.coeffs[ei];
    }
    return out;
}

CellFunction solve_deflated(const CellOperator& op, const BlochEigenpair& psi, const CellFunction& rhs) {
    require_same_grid(op.grid, psi.psi.grid, "solve_deflated");
    require_same_grid(op.grid, rhs.grid, "solve_deflated");
    const auto n = static_cast<Eigen::Index>(op.grid.mode_count());
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    B.topLeftCorner(n, n) = op.matrix;
    B.topLeftCorner(n, n).diagonal().array() -= psi.lambda;
    B.block(0, n, n, 1) = psi.psi.coeffs;
    B.block(n, 0, 1, n) = psi.psi.coeffs.adjoint();
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n + 1);
    b.head(n) = rhs.coeffs;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(B);
    const Eigen::VectorXcd x = lu.solve(b);
    if (!x.allFinite()) throw NumericalError("bordered corrector system is singular; the eigenvalue is not simple");
    return {op.grid, x.head(n)};
}

namespace {

struct DeflatedResult {
    CellFunction x;
    double compatibility = 0.0;
    double residual = 0.0;
};

DeflatedResult deflated_with_diagnostics(const CellOperator& op, const BlochEigenpair& pair, const CellFunction& rhs) {
    DeflatedResult r;
    r.compatibility = relative(std::abs(inner_product(rhs, pair.psi)), rhs);
    r.x = solve_deflated(op, pair, rhs);
    CellCoeffs projected = rhs.coeffs - pair.psi.coeffs * pair.psi.coeffs.dot(rhs.coeffs);
    CellCoeffs applied = op.matrix * r.x.coeffs - pair.lambda * r.x.coeffs;
    r.residual = relative((applied - projected).norm(), rhs);
    return r;
}

}  // namespace

CorrectorZeta solve_corrector_zeta(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& state,
                                   int direction, const BandTolerances& tol) {
    require_valid_state(state, "solve_corrector_zeta");
    check_direction(grid, direction);
    const CellOperator op = assemble_shifted_operator(c, state.theta, grid);
    const auto pair = solve_cell_problem(op, state.band, 0.0)[static_cast<std::size_t>(state.band - 1)];
    const CellFunction rhs = zeta_rhs(pair, direction);
    auto r = deflated_with_diagnostics(op, pair, rhs);
    if (r.compatibility > tol.compatibility) {
        throw AssumptionError("zeta compatibility violated for " + state.label() + " (" +
                              std::to_string(r.compatibility) + "); the state is not critical");
    }
    if (r.residual > tol.compatibility) {
        throw NumericalError("zeta solve residual " + std::to_string(r.residual) + " for " + state.label() +
                             "; the problem is ill-conditioned near a degeneracy");
    }
    return {state, direction, std::move(r.x), r.compatibility, r.residual};
}

CorrectorChi solve_corrector_chi(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& state, int k,
                                 int l, std::span<const CorrectorZeta> zetas, double hessian_kl,
                                 const BandTolerances& tol) {
    require_valid_state(state, "solve_corrector_chi");
    check_direction(grid, k);
    check_direction(grid, l);
    const CellFunction* zk = nullptr;
    const CellFunction* zl = nullptr;
    for (const auto& z : zetas) {
        if (z.direction == k) zk = &z.zeta;
        if (z.direction == l) zl = &z.zeta;
    }
    if (!zk || !zl) throw ConfigError("solve_corrector_chi needs zeta for both directions");

    const CellOperator op = assemble_shifted_operator(c, state.theta, grid);
    const auto pair = solve_cell_problem(op, state.band, 0.0)[static_cast<std::size_t>(state.band - 1)];
    CellFunction rhs{grid, CellCoeffs(pair.psi.coeffs.size())};
    const double delta = k == l ? 2.0 : 0.0;
    for (std::size_t i = 0; i < grid.mode_count(); ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        rhs.coeffs[ei] = 4.0 * pi * imag_unit *
                             (kshift(grid, state.theta, i, k) * zl->coeffs[ei] +
                              kshift(grid, state.theta, i, l) * zk->coeffs[ei]) +
                         (delta - hessian_kl / four_pi_sq) * pair.psi.coeffs[ei];
    }
    auto r = deflated_with_diagnostics(op, pair, rhs);
    if (r.compatibility > tol.compatibility_chi) {
        throw AssumptionError("chi compatibility violated for " + state.label() + " (" +
                              std::to_string(r.compatibility) + "); the Hessian entry is inconsistent");
    }
    if (r.residual > tol.compatibility_chi) {
        throw NumericalError("chi solve residual " + std::to_string(r.residual) + " for " + state.label());
    }
    return {state, k, l, std::move(r.x), r.compatibility, r.residual};
}

Eigen::MatrixXcd effective_mass_integral(const BlochEigenpair& psi, std::span<const CellFunction> zetas) {
    const TorusGrid& grid = psi.psi.grid;
    const int dim = grid.dim();
    if (static_cast<int>(zetas.size()) != dim) throw ConfigError("effective mass needs one zeta per direction");
    for (const auto& z : zetas) require_same_grid(grid, z.grid, "effective_mass_integral");

    // T(j, k) = 4 i pi sum_k (k + theta)_j psi conj(zeta^k)
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(dim, dim);
    for (int j = 0; j < dim; ++j) {
        for (int kk = 0; kk < dim; ++kk) {
            cxd s = 0.0;
            for (std::size_t i = 0; i < grid.mode_count(); ++i) {
                const auto ei = static_cast<Eigen::Index>(i);
                s += kshift(grid, psi.theta, i, j) * psi.psi.coeffs[ei] *
                     std::conj(zetas[static_cast<std::size_t>(kk)].coeffs[ei]);
            }
            T(j, kk) = 4.0 * pi * imag_unit * s;
        }
    }
    Eigen::MatrixXcd two_a = 2.0 * Eigen::MatrixXcd::Identity(dim, dim);
    two_a -= T + T.transpose();
    return two_a;
}

EffectiveMassTensor effective_mass_tensor(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& state,
                                          std::span<const CorrectorZeta> zetas, const BandTolerances& tol) {
    require_valid_state(state, "effective_mass_tensor");
    const int dim = grid.dim();
    std::vector<CellFunction> ordered(static_cast<std::size_t>(dim));
    std::vector<bool> seen(static_cast<std::size_t>(dim), false);
    for (const auto& z : zetas) {
        check_direction(grid, z.direction);
        ordered[static_cast<std::size_t>(z.direction)] = z.zeta;
        seen[static_cast<std::size_t>(z.direction)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw ConfigError("effective_mass_tensor needs zeta for every direction");
    }

    const auto pair = state_eigenpair(c, grid, state);
    const Eigen::MatrixXcd two_a = effective_mass_integral(pair, ordered);
    const Eigen::MatrixXd a = 0.5 * two_a.real();

    EffectiveMassTensor out;
    out.state = state;
    out.imaginary_part = 0.5 * two_a.imag().cwiseAbs().maxCoeff();
    out.asymmetry = (a - a.transpose()).cwiseAbs().maxCoeff();
    out.a_star = 0.5 * (a + a.transpose());
    out.a_star_fd = fd_hessian(c, grid, state.band, state.theta, tol.fd_hessian_step) / eight_pi_sq;
    const double scale = std::max(1.0, out.a_star_fd.cwiseAbs().maxCoeff());
    out.fd_rel_delta = (out.a_star - out.a_star_fd).cwiseAbs().maxCoeff() / scale;
    if (out.fd_rel_delta > tol.effmass_rel) {
        throw NumericalError("effective mass of " + state.label() + " disagrees with the finite-difference Hessian (" +
                             std::to_string(out.fd_rel_delta) + "); raise the mode count");
    }
    return out;
}

EffectiveMassTensor compute_effective_mass(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& state,
                                           const BandTolerances& tol) {
    std::vector<CorrectorZeta> zetas(static_cast<std::size_t>(grid.dim()));
    for (int k = 0; k < grid.dim(); ++k) {
        zetas[static_cast<std::size_t>(k)] = solve_corrector_zeta(c, grid, state, k, tol);
    }
    return effective_mass_tensor(c, grid, state, zetas, tol);
}

}  // namespace blochhom
