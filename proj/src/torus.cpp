#include "blochhom/torus.hpp"

#include <cmath>
#include <string>

#include "blochhom/fft.hpp"

namespace blochhom {

TorusGrid::TorusGrid(int dim, int modes_per_dim, int points_per_dim)
    : dim_(dim), modes_(modes_per_dim), points_(points_per_dim == 0 ? 2 * modes_per_dim : points_per_dim) {
    if (dim_ != 1 && dim_ != 2) throw ConfigError("torus dimension must be 1 or 2");
    if (modes_ < 3 || modes_ % 2 == 0) throw ConfigError("modes per dimension must be odd and >= 3");
    if (points_ < modes_) throw ConfigError("collocation points per dimension must be >= modes per dimension");
}

std::size_t TorusGrid::mode_count() const {
    return dim_ == 1 ? static_cast<std::size_t>(modes_) : static_cast<std::size_t>(modes_) * modes_;
}

std::size_t TorusGrid::point_count() const {
    return dim_ == 1 ? static_cast<std::size_t>(points_) : static_cast<std::size_t>(points_) * points_;
}

Mode TorusGrid::mode(std::size_t index) const {
    const int K = max_mode();
    if (dim_ == 1) return {static_cast<int>(index) - K, 0};
    return {static_cast<int>(index / modes_) - K, static_cast<int>(index % modes_) - K};
}

std::optional<std::size_t> TorusGrid::index_of(const Mode& k) const {
    const int K = max_mode();
    if (std::abs(k[0]) > K) return std::nullopt;
    if (dim_ == 1) {
        if (k[1] != 0) return std::nullopt;
        return static_cast<std::size_t>(k[0] + K);
    }
    if (std::abs(k[1]) > K) return std::nullopt;
    return static_cast<std::size_t>(k[0] + K) * modes_ + static_cast<std::size_t>(k[1] + K);
}

std::array<double, 2> TorusGrid::point(std::size_t index) const {
    const double r = static_cast<double>(points_);
    if (dim_ == 1) return {static_cast<double>(index) / r, 0.0};
    return {static_cast<double>(index / points_) / r, static_cast<double>(index % points_) / r};
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* where) {
    if (!(a == b)) throw ConfigError(std::string("grid mismatch in ") + where);
}

PeriodicPotential PeriodicPotential::zero(const TorusGrid& grid) {
    return {grid, CellCoeffs::Zero(static_cast<Eigen::Index>(grid.mode_count()))};
}

PeriodicPotential PeriodicPotential::constant(const TorusGrid& grid, double value) {
    auto p = zero(grid);
    p.coeffs[static_cast<Eigen::Index>(*grid.index_of({0, 0}))] = value;
    return p;
}

PeriodicPotential PeriodicPotential::mathieu(const TorusGrid& grid, double amplitude) {
    const ModeCoefficient list[] = {{{1, 0}, amplitude}, {{-1, 0}, amplitude}};
    return from_coefficients(grid, list);
}

PeriodicPotential PeriodicPotential::from_coefficients(const TorusGrid& grid, std::span<const ModeCoefficient> list) {
    auto p = zero(grid);
    for (const auto& entry : list) {
        const auto idx = grid.index_of(entry.k);
        if (!idx) {
            throw ConfigError("potential mode (" + std::to_string(entry.k[0]) + "," + std::to_string(entry.k[1]) +
                              ") lies outside the grid's mode set");
        }
        p.coeffs[static_cast<Eigen::Index>(*idx)] += entry.value;
    }
    const double defect = p.reality_defect();
    if (defect > 1e-14 * std::max(1.0, p.coeffs.cwiseAbs().maxCoeff())) {
        throw ConfigError("potential is not real: c(-k) must equal conj(c(k)) for every listed mode");
    }
    return p;
}

cxd PeriodicPotential::coefficient(const Mode& k) const {
    const auto idx = grid.index_of(k);
    return idx ? coeffs[static_cast<Eigen::Index>(*idx)] : cxd{};
}

double PeriodicPotential::value_at(std::span<const double> y) const { return evaluate_at(as_function(), y).real(); }

double PeriodicPotential::reality_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.mode_count(); ++i) {
        const Mode k = grid.mode(i);
        const cxd mirror = coefficient({-k[0], -k[1]});
        worst = std::max(worst, std::abs(mirror - std::conj(coeffs[static_cast<Eigen::Index>(i)])));
    }
    return worst;
}

PeriodicPotential PeriodicPotential::on_grid(const TorusGrid& target) const {
    if (target.dim() != grid.dim()) throw ConfigError("potential and grid dimensions differ");
    auto out = zero(target);
    for (std::size_t i = 0; i < grid.mode_count(); ++i) {
        const cxd v = coeffs[static_cast<Eigen::Index>(i)];
        if (v == cxd{}) continue;
        const auto idx = target.index_of(grid.mode(i));
        if (!idx) throw ConfigError("mode-set overflow: potential has coefficients outside the target grid");
        out.coeffs[static_cast<Eigen::Index>(*idx)] = v;
    }
    return out;
}

cxd inner_product(const CellFunction& f, const CellFunction& g) {
    require_same_grid(f.grid, g.grid, "inner_product");
    return g.coeffs.dot(f.coeffs);  // Eigen's dot conjugates the left operand
}

double l2_norm(const CellFunction& f) { return f.coeffs.norm(); }

namespace {

std::size_t bin_of(const TorusGrid& grid, const Mode& k) {
    const int r = grid.points_per_dim();
    auto wrap = [r](int m) { return static_cast<std::size_t>(((m % r) + r) % r); };
    if (grid.dim() == 1) return wrap(k[0]);
    return wrap(k[0]) * static_cast<std::size_t>(r) + wrap(k[1]);
}

std::vector<int> fft_shape(const TorusGrid& grid) {
    return grid.dim() == 1 ? std::vector<int>{grid.points_per_dim()}
                           : std::vector<int>{grid.points_per_dim(), grid.points_per_dim()};
}

}  // namespace

std::vector<cxd> evaluate_on_grid(const CellFunction& f) {
    const TorusGrid& grid = f.grid;
    std::vector<cxd> data(grid.point_count());
    for (std::size_t i = 0; i < grid.mode_count(); ++i) data[bin_of(grid, grid.mode(i))] = f.coeffs[static_cast<Eigen::Index>(i)];
    FftPlan plan(fft_shape(grid));
    plan.backward(data);
    const double n = static_cast<double>(data.size());
    for (auto& v : data) v *= n;
    return data;
}

CellFunction project_from_grid(std::span<const cxd> values, const TorusGrid& grid) {
    if (values.size() != grid.point_count()) throw ConfigError("grid mismatch in project_from_grid");
    std::vector<cxd> data(values.begin(), values.end());
    FftPlan plan(fft_shape(grid));
    plan.forward(data);
    const double n = static_cast<double>(data.size());
    CellFunction out{grid, CellCoeffs::Zero(static_cast<Eigen::Index>(grid.mode_count()))};
    for (std::size_t i = 0; i < grid.mode_count(); ++i) {
        out.coeffs[static_cast<Eigen::Index>(i)] = data[bin_of(grid, grid.mode(i))] / n;
    }
    return out;
}

cxd evaluate_at(const CellFunction& f, std::span<const double> y) {
    const TorusGrid& grid = f.grid;
    if (static_cast<int>(y.size()) < grid.dim()) throw ConfigError("point dimension below grid dimension");
    cxd sum{};
    for (std::size_t i = 0; i < grid.mode_count(); ++i) {
        const cxd c = f.coeffs[static_cast<Eigen::Index>(i)];
        if (c == cxd{}) continue;
        const Mode k = grid.mode(i);
        double arg = k[0] * y[0];
        if (grid.dim() == 2) arg += k[1] * y[1];
        sum += c * std::polar(1.0, two_pi * arg);
    }
    return sum;
}

CellFunction multiply(const PeriodicPotential& q, const CellFunction& f) {
    if (q.grid.dim() != f.grid.dim()) throw ConfigError("grid mismatch in multiply");
    const TorusGrid& grid = f.grid;
    CellFunction out{grid, CellCoeffs::Zero(f.coeffs.size())};
    std::vector<std::pair<Mode, cxd>> support;
    for (std::size_t i = 0; i < q.grid.mode_count(); ++i) {
        const cxd v = q.coeffs[static_cast<Eigen::Index>(i)];
        if (v != cxd{}) support.emplace_back(q.grid.mode(i), v);
    }
    for (std::size_t i = 0; i < grid.mode_count(); ++i) {
        const Mode k = grid.mode(i);
        cxd acc{};
        for (const auto& [s, v] : support) {
            const auto j = grid.index_of({k[0] - s[0], k[1] - s[1]});
            if (j) acc += v * f.coeffs[static_cast<Eigen::Index>(*j)];
        }
        out.coeffs[static_cast<Eigen::Index>(i)] = acc;
    }
    return out;
}

CellFunction shifted_derivative(const CellFunction& f, std::span<const double> theta, int direction) {
    const TorusGrid& grid = f.grid;
    if (direction < 0 || direction >= grid.dim()) throw ConfigError("derivative direction out of range");
    CellFunction out{grid, CellCoeffs(f.coeffs.size())};
    for (std::size_t i = 0; i < grid.mode_count(); ++i) {
        const double kt = grid.mode(i)[static_cast<std::size_t>(direction)] + theta[static_cast<std::size_t>(direction)];
        out.coeffs[static_cast<Eigen::Index>(i)] = imag_unit * (two_pi * kt) * f.coeffs[static_cast<Eigen::Index>(i)];
    }
    return out;
}

}  // namespace blochhom
