#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "blochhom/cell_problem.hpp"

namespace blochhom {

enum class CouplingKind { scalar, em };

/// y-integral factor of the golden-rule coupling d*_nm(t, x) = g(t, x) * value_y.
struct CouplingCoefficient {
    int band_n = 0;
    int band_m = 0;
    std::vector<double> theta_n;
    std::vector<double> theta_m;
    CouplingKind kind = CouplingKind::scalar;
    cxd value_y;

    double transition_probability() const { return std::norm(value_y); }
};

/// (1/2) integral of q conj(psi_n) psi_m over the torus.
CouplingCoefficient fermi_coupling_scalar(const PeriodicPotential& q, const BlochEigenpair& n,
                                          const BlochEigenpair& m);

/// (i/2) int psi_m a.(grad - 2i pi theta_n) conj(psi_n) - (i/2) int conj(psi_n) a.(grad + 2i pi theta_m) psi_m.
CouplingCoefficient fermi_coupling_em(std::span<const PeriodicPotential> a, const BlochEigenpair& n,
                                      const BlochEigenpair& m);

/// Hermitian chain matrix with zero diagonal and one off-diagonal band; entry
/// (i, i+1) is the scalar coupling between consecutive chain states.
Eigen::MatrixXcd coupling_matrix_resonant(std::span<const BlochEigenpair> chain, const PeriodicPotential& q);

/// Largest |D - D^H| entry.
double hermiticity_defect(const Eigen::MatrixXcd& d);

}  // namespace blochhom
