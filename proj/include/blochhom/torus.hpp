#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "blochhom/common.hpp"

namespace blochhom {

using Mode = std::array<int, 2>;
using CellCoeffs = Eigen::VectorXcd;

/// Truncated plane-wave basis on the unit torus T^dim.
///
/// Modes k with |k_j| <= (M-1)/2 are stored in lexicographic order, so a smaller
/// storage index always means a lexicographically smaller mode. The collocation
/// grid has `points_per_dim` equispaced points y_j = j / R per dimension.
class TorusGrid {
public:
    TorusGrid() = default;
    TorusGrid(int dim, int modes_per_dim, int points_per_dim = 0);

    int dim() const { return dim_; }
    int modes_per_dim() const { return modes_; }
    int max_mode() const { return (modes_ - 1) / 2; }
    int points_per_dim() const { return points_; }

    std::size_t mode_count() const;
    std::size_t point_count() const;

    Mode mode(std::size_t index) const;
    std::optional<std::size_t> index_of(const Mode& k) const;

    /// Collocation point coordinates (second component 0 in 1D).
    std::array<double, 2> point(std::size_t index) const;

    friend bool operator==(const TorusGrid&, const TorusGrid&) = default;

private:
    int dim_ = 1;
    int modes_ = 3;
    int points_ = 3;
};

/// A periodic function given by its Fourier coefficients on a grid,
/// f(y) = sum_k f_k exp(2 i pi k.y).
struct CellFunction {
    TorusGrid grid;
    CellCoeffs coeffs;
};

struct ModeCoefficient {
    Mode k{0, 0};
    cxd value;
};

/// Real periodic potential stored by Fourier coefficients.
struct PeriodicPotential {
    TorusGrid grid;
    CellCoeffs coeffs;

    static PeriodicPotential zero(const TorusGrid& grid);
    static PeriodicPotential constant(const TorusGrid& grid, double value);
    /// amplitude * 2 cos(2 pi y_1)
    static PeriodicPotential mathieu(const TorusGrid& grid, double amplitude = 1.0);
    /// Throws ConfigError if a mode falls outside the grid or the list is not real.
    static PeriodicPotential from_coefficients(const TorusGrid& grid,
                                               std::span<const ModeCoefficient> list);

    /// Coefficient of mode k, zero outside the stored support.
    cxd coefficient(const Mode& k) const;
    double value_at(std::span<const double> y) const;
    /// Largest |c(-k) - conj c(k)|.
    double reality_defect() const;
    /// Moves the coefficients onto another grid; ConfigError if support is lost.
    PeriodicPotential on_grid(const TorusGrid& target) const;
    CellFunction as_function() const { return {grid, coeffs}; }
};

/// L2(T^N) pairing: integral of f * conj(g).
cxd inner_product(const CellFunction& f, const CellFunction& g);
double l2_norm(const CellFunction& f);

/// Values at the collocation points via inverse FFT.
std::vector<cxd> evaluate_on_grid(const CellFunction& f);
/// Inverse of evaluate_on_grid for band-limited data.
CellFunction project_from_grid(std::span<const cxd> values, const TorusGrid& grid);
/// Direct summation at an arbitrary point.
cxd evaluate_at(const CellFunction& f, std::span<const double> y);

/// Product q * f truncated to f's grid. Exact for every coefficient that survives.
CellFunction multiply(const PeriodicPotential& q, const CellFunction& f);
/// (d/dy_j + 2 i pi theta_j) f, i.e. coefficients 2 i pi (k_j + theta_j) f_k.
CellFunction shifted_derivative(const CellFunction& f, std::span<const double> theta, int direction);

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* where);

}  // namespace blochhom
