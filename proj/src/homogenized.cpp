#include "blochhom/homogenized.hpp"

#include "blochhom/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace blochhom {

std::size_t MacroGrid::size() const {
    const auto n = static_cast<std::size_t>(points);
    return dim == 1 ? n : n * n;
}

double MacroGrid::cell_volume() const { return std::pow(spacing(), dim); }

std::array<double, 2> MacroGrid::coordinate(std::size_t index) const {
    const double h = spacing();
    if (dim == 1) return {static_cast<double>(index) * h, 0.0};
    const auto n = static_cast<std::size_t>(points);
    return {static_cast<double>(index / n) * h, static_cast<double>(index % n) * h};
}

void MacroGrid::validate() const {
    if (dim != 1 && dim != 2) throw ConfigError("macro grid dimension must be 1 or 2");
    if (!(box_length > 0.0)) throw ConfigError("macro box_length must be positive");
    if (points < 2 || (points & (points - 1)) != 0) throw ConfigError("macro points must be a power of two >= 2");
}

namespace {

double matrix_scale(const Eigen::MatrixXcd& d) { return d.size() ? std::max(1.0, d.cwiseAbs().maxCoeff()) : 1.0; }

void check_coupling_matrix(const Eigen::MatrixXcd& d, std::size_t k) {
    if (static_cast<std::size_t>(d.rows()) != k || static_cast<std::size_t>(d.cols()) != k) {
        throw ConfigError("coupling matrix must be " + std::to_string(k) + "x" + std::to_string(k));
    }
    const double scale = matrix_scale(d);
    if ((d - d.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw ConfigError("coupling matrix is not Hermitian");
    if (d.diagonal().cwiseAbs().maxCoeff() > 1e-12 * scale) throw ConfigError("coupling matrix must have a zero diagonal");
}

std::vector<int> fft_shape(const MacroGrid& g) {
    return g.dim == 1 ? std::vector<int>{g.points} : std::vector<int>{g.points, g.points};
}

}  // namespace

void HomogenizedSystem::validate() const {
    grid.validate();
    if (tensors.empty()) throw ConfigError("homogenized system needs at least one state");
    for (const auto& a : tensors) {
        if (a.rows() != grid.dim || a.cols() != grid.dim) throw ConfigError("effective mass tensor has the wrong shape");
        if (!a.allFinite()) throw ConfigError("effective mass tensor is not finite");
        if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
            throw ConfigError("effective mass tensor is not symmetric");
        }
    }
    if (!coupling.pointwise) check_coupling_matrix(coupling.base, state_count());
}

AmplitudeState initial_amplitudes(const MacroGrid& grid, std::size_t state_count, const InitialEnvelope& v0,
                                  std::size_t initial_index) {
    grid.validate();
    if (initial_index >= state_count) throw ConfigError("initial state index out of range");
    AmplitudeState s;
    s.fields.assign(state_count, std::vector<cxd>(grid.size(), cxd{}));
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto x = grid.coordinate(j);
        s.fields[initial_index][j] = v0(std::span<const double>(x.data(), static_cast<std::size_t>(grid.dim)));
    }
    return s;
}

std::vector<cxd> dispersion_phase(const Eigen::MatrixXd& a_star, const MacroGrid& grid, double dt) {
    std::vector<cxd> out(grid.size());
    const int n = grid.points;
    const double L = grid.box_length;
    for (std::size_t j = 0; j < out.size(); ++j) {
        double quad = 0.0;
        if (grid.dim == 1) {
            const double xi = fft_frequency(static_cast<int>(j), n) / L;
            quad = a_star(0, 0) * xi * xi;
        } else {
            const double x1 = fft_frequency(static_cast<int>(j / static_cast<std::size_t>(n)), n) / L;
            const double x2 = fft_frequency(static_cast<int>(j % static_cast<std::size_t>(n)), n) / L;
            quad = a_star(0, 0) * x1 * x1 + (a_star(0, 1) + a_star(1, 0)) * x1 * x2 + a_star(1, 1) * x2 * x2;
        }
        out[j] = std::polar(1.0, four_pi_sq * quad * dt);
    }
    return out;
}

std::vector<double> band_masses(const AmplitudeState& state, const MacroGrid& grid) {
    std::vector<double> out;
    const double w = grid.cell_volume();
    for (const auto& f : state.fields) {
        double s = 0.0;
        for (const cxd& v : f) s += std::norm(v);
        out.push_back(w * s);
    }
    return out;
}

double total_mass(const AmplitudeState& state, const MacroGrid& grid) {
    double s = 0.0;
    for (double m : band_masses(state, grid)) s += m;
    return s;
}

HomogenizedSolver::HomogenizedSolver(HomogenizedSystem system) : system_(std::move(system)), fft_(fft_shape(system_.grid)) {
    system_.validate();
    const MacroGrid& g = system_.grid;
    if (!system_.coupling.pointwise) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(system_.coupling.base);
        if (es.info() != Eigen::Success) throw NumericalError("coupling eigendecomposition failed");
        eigenvectors_ = es.eigenvectors();
        eigenvalues_ = es.eigenvalues();
        space_factor_.resize(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) {
            const auto x = g.coordinate(j);
            space_factor_[j] = system_.coupling.envelope.space_factor(std::span<const double>(x.data(), static_cast<std::size_t>(g.dim)));
        }
        envelope_.resize(g.size());
    }
}

void HomogenizedSolver::couple(AmplitudeState& state, double t_mid, double tau) const {
    const MacroGrid& g = system_.grid;
    const std::size_t k = system_.state_count();
    if (k < 2) return;
    const auto& cf = system_.coupling;
    if (cf.pointwise) {
        std::vector<Eigen::MatrixXcd> d(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) {
            const auto x = g.coordinate(j);
            d[j] = cf.pointwise(t_mid, std::span<const double>(x.data(), static_cast<std::size_t>(g.dim)));
            check_coupling_matrix(d[j], k);
        }
        const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for if (n > 2048)
        for (std::ptrdiff_t jj = 0; jj < n; ++jj) {
            const auto j = static_cast<std::size_t>(jj);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d[j]);
            Eigen::VectorXcd v(static_cast<Eigen::Index>(k));
            for (std::size_t p = 0; p < k; ++p) v[static_cast<Eigen::Index>(p)] = state.fields[p][j];
            Eigen::VectorXcd w = es.eigenvectors().adjoint() * v;
            for (Eigen::Index p = 0; p < w.size(); ++p) w[p] *= std::polar(1.0, tau * es.eigenvalues()[p]);
            v = es.eigenvectors() * w;
            for (std::size_t p = 0; p < k; ++p) state.fields[p][j] = v[static_cast<Eigen::Index>(p)];
        }
        return;
    }
    if (cf.base.cwiseAbs().maxCoeff() == 0.0) return;
    const double gt = cf.envelope.amplitude() * cf.envelope.time_factor(t_mid);
    for (std::size_t j = 0; j < envelope_.size(); ++j) envelope_[j] = gt * space_factor_[j];
    if (k == 2) {
        kernels::parallel::rabi_rotate(state.fields[0], state.fields[1], envelope_, cf.base(0, 1), tau);
    } else {
        std::vector<std::span<cxd>> spans(state.fields.begin(), state.fields.end());
        kernels::parallel::eigen_rotate(spans, envelope_, eigenvectors_, eigenvalues_, tau);
    }
}

void HomogenizedSolver::disperse(AmplitudeState& state, double dt) const {
    const std::size_t k = system_.state_count();
    if (cached_phase_.size() != k || cached_dt_ != dt) {
        cached_phase_.clear();
        for (const auto& a : system_.tensors) cached_phase_.push_back(dispersion_phase(a, system_.grid, dt));
        cached_dt_ = dt;
    }
    for (std::size_t p = 0; p < k; ++p) {
        if (system_.tensors[p].cwiseAbs().maxCoeff() == 0.0) continue;
        auto& f = state.fields[p];
        fft_.forward(f);
        kernels::parallel::multiply(f, cached_phase_[p]);
        fft_.backward(f);
    }
}

void HomogenizedSolver::step(AmplitudeState& state, double dt) const {
    if (state.fields.size() != system_.state_count()) throw ConfigError("amplitude state has the wrong number of fields");
    const double t_mid = state.time + 0.5 * dt;
    couple(state, t_mid, 0.5 * dt);
    disperse(state, dt);
    couple(state, t_mid, 0.5 * dt);
    state.time += dt;
}

AmplitudeState step_strang(const HomogenizedSystem& system, const AmplitudeState& state, double dt) {
    HomogenizedSolver solver(system);
    AmplitudeState out = state;
    solver.step(out, dt);
    return out;
}

long steps_for(double T, double dt) {
    if (!(T >= 0.0)) throw ConfigError("final time must be non-negative");
    if (T == 0.0) return 0;
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    const double ratio = T / dt;
    const long n = std::lround(ratio);
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError("time step must divide the final time");
    }
    return n;
}

Trajectory run_homogenized(const HomogenizedSystem& system, const AmplitudeState& init, double T, double dt,
                           int snapshot_every) {
    const long n = steps_for(T, dt);
    HomogenizedSolver solver(system);
    const MacroGrid& g = system.grid;
    Trajectory tr;
    AmplitudeState s = init;
    auto record = [&](const AmplitudeState& st) {
        MassRecord r;
        r.time = st.time;
        r.masses = band_masses(st, g);
        for (double m : r.masses) r.total += m;
        tr.norms.push_back(std::move(r));
    };
    record(s);
    const double m0 = tr.norms.front().total;
    if (snapshot_every > 0) tr.snapshots.push_back(s);
    for (long i = 1; i <= n; ++i) {
        solver.step(s, dt);
        s.time = init.time + static_cast<double>(i) * dt;
        record(s);
        const double total = tr.norms.back().total;
        if (!std::isfinite(total)) throw NumericalError("homogenized run produced NaN at step " + std::to_string(i));
        const double dev = std::abs(total - m0) / std::max(m0, std::numeric_limits<double>::min());
        tr.max_relative_mass_deviation = std::max(tr.max_relative_mass_deviation, dev);
        if (snapshot_every > 0 && i % snapshot_every == 0) tr.snapshots.push_back(s);
    }
    tr.final_state = std::move(s);
    return tr;
}

}  // namespace blochhom
