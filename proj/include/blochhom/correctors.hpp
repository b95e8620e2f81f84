#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "blochhom/bands.hpp"

namespace blochhom {

struct CorrectorZeta {
    StateSpec state;
    int direction = 0;  // 0-based
    CellFunction zeta;
    double compatibility = 0.0;  // |<rhs, psi>| / max(1, |rhs|)
    double residual = 0.0;       // |A zeta - P rhs| / max(1, |rhs|)
};

struct CorrectorChi {
    StateSpec state;
    int k = 0;
    int l = 0;
    CellFunction chi;
    double compatibility = 0.0;
    double residual = 0.0;
};

struct EffectiveMassTensor {
    StateSpec state;
    Eigen::MatrixXd a_star;       // from the corrector formula, symmetrised
    Eigen::MatrixXd a_star_fd;    // Hessian / 8 pi^2 by finite differences
    double asymmetry = 0.0;       // max |A_jk - A_kj| before symmetrising
    double imaginary_part = 0.0;  // max |Im 2A_jk|, should vanish
    double fd_rel_delta = 0.0;    // max |A - A_fd| / max(|A_fd|_max, 1)
};

/// Right-hand side of the zeta problem: e_k.(grad + 2i pi theta) psi + (div + 2i pi theta)(e_k psi).
CellFunction zeta_rhs(const BlochEigenpair& psi, int direction);

/// Solves A_n(theta) x = rhs on psi-perp through the bordered system [[A, psi], [psi^H, 0]].
/// Returns x with <psi, x> = 0.
CellFunction solve_deflated(const CellOperator& op, const BlochEigenpair& psi, const CellFunction& rhs);

/// Throws AssumptionError if the state is not simple or the right-hand side
/// violates the Fredholm compatibility beyond tol.compatibility.
CorrectorZeta solve_corrector_zeta(const PeriodicPotential& c, const TorusGrid& grid,
                                   const StateSpec& state, int direction, const BandTolerances& tol = {});

/// Second-order corrector. `hessian_kl` is d^2 lambda / d theta_k d theta_l at the state.
CorrectorChi solve_corrector_chi(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& state,
                                 int k, int l, std::span<const CorrectorZeta> zetas, double hessian_kl,
                                 const BandTolerances& tol = {});

/// 2 A_jk from psi and the correctors (six-term integral). Complex before symmetrising.
Eigen::MatrixXcd effective_mass_integral(const BlochEigenpair& psi, std::span<const CellFunction> zetas);

/// Corrector formula, symmetrised and cross-checked against the FD Hessian.
/// Throws NumericalError when the cross-check exceeds tol.effmass_rel.
EffectiveMassTensor effective_mass_tensor(const PeriodicPotential& c, const TorusGrid& grid,
                                          const StateSpec& state, std::span<const CorrectorZeta> zetas,
                                          const BandTolerances& tol = {});

/// Solves all zetas and returns the tensor.
EffectiveMassTensor compute_effective_mass(const PeriodicPotential& c, const TorusGrid& grid,
                                           const StateSpec& state, const BandTolerances& tol = {});

}  // namespace blochhom
