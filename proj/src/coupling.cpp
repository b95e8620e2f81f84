#include "blochhom/coupling.hpp"

namespace blochhom {

CouplingCoefficient fermi_coupling_scalar(const PeriodicPotential& q, const BlochEigenpair& n,
                                          const BlochEigenpair& m) {
    require_same_grid(n.psi.grid, m.psi.grid, "fermi_coupling_scalar");
    if (q.grid.dim() != n.psi.grid.dim()) throw ConfigError("fermi_coupling_scalar: drive dimension mismatch");
    const CellFunction qm = multiply(q, m.psi);
    return {n.band, m.band, n.theta, m.theta, CouplingKind::scalar, 0.5 * inner_product(qm, n.psi)};
}

CouplingCoefficient fermi_coupling_em(std::span<const PeriodicPotential> a, const BlochEigenpair& n,
                                      const BlochEigenpair& m) {
    require_same_grid(n.psi.grid, m.psi.grid, "fermi_coupling_em");
    const int dim = n.psi.grid.dim();
    if (static_cast<int>(a.size()) != dim) throw ConfigError("fermi_coupling_em: vector potential needs one component per dimension");
    cxd sum = 0.0;
    for (int j = 0; j < dim; ++j) {
        const auto& aj = a[static_cast<std::size_t>(j)];
        const CellFunction dn = shifted_derivative(n.psi, n.theta, j);
        const CellFunction dm = shifted_derivative(m.psi, m.theta, j);
        sum += inner_product(multiply(aj, m.psi), dn) - inner_product(multiply(aj, dm), n.psi);
    }
    return {n.band, m.band, n.theta, m.theta, CouplingKind::em, 0.5 * imag_unit * sum};
}

Eigen::MatrixXcd coupling_matrix_resonant(std::span<const BlochEigenpair> chain, const PeriodicPotential& q) {
    if (chain.size() < 2) throw ConfigError("a coupling chain needs at least two states");
    const auto k = static_cast<Eigen::Index>(chain.size());
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(k, k);
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
        const cxd v = fermi_coupling_scalar(q, chain[static_cast<std::size_t>(i)], chain[static_cast<std::size_t>(i + 1)]).value_y;
        d(i, i + 1) = v;
        d(i + 1, i) = std::conj(v);
    }
    return d;
}

double hermiticity_defect(const Eigen::MatrixXcd& d) {
    if (d.size() == 0) return 0.0;
    return (d - d.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace blochhom
