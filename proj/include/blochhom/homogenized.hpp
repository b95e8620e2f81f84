#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "blochhom/drive.hpp"
#include "blochhom/fft.hpp"

namespace blochhom {

/// Periodic box [0, L)^dim sampled with `points` points per dimension.
struct MacroGrid {
    int dim = 1;
    double box_length = 1.0;
    int points = 64;

    std::size_t size() const;
    double spacing() const { return box_length / points; }
    double cell_volume() const;
    std::array<double, 2> coordinate(std::size_t index) const;
    void validate() const;
};

/// Coupling field D(t, x) = g(t, x) * base, or an arbitrary Hermitian matrix per point.
struct CouplingField {
    Eigen::MatrixXcd base;
    DriveEnvelope envelope;
    /// Optional general form; when set it replaces base * envelope.
    std::function<Eigen::MatrixXcd(double t, std::span<const double> x)> pointwise;
};

/// i d_t v_p - div(A_p grad v_p) + sum_q d*_pq v_q = 0 for every state p.
struct HomogenizedSystem {
    MacroGrid grid;
    std::vector<Eigen::MatrixXd> tensors;
    CouplingField coupling;

    std::size_t state_count() const { return tensors.size(); }
    /// ConfigError on shape problems or a non-Hermitian / non-zero-diagonal coupling.
    void validate() const;
};

struct AmplitudeState {
    double time = 0.0;
    std::vector<std::vector<cxd>> fields;
};

/// v_0 on state `initial_index`, zero on the others.
AmplitudeState initial_amplitudes(const MacroGrid& grid, std::size_t state_count,
                                  const InitialEnvelope& v0, std::size_t initial_index = 0);

/// Unit-modulus multipliers exp(+i 4 pi^2 xi.A xi dt) in FFT bin order, xi = m / L.
std::vector<cxd> dispersion_phase(const Eigen::MatrixXd& a_star, const MacroGrid& grid, double dt);

/// Per-state squared L2 norms with quadrature weight (L / points)^dim.
std::vector<double> band_masses(const AmplitudeState& state, const MacroGrid& grid);
double total_mass(const AmplitudeState& state, const MacroGrid& grid);

/// Strang splitting: half coupling, full dispersion, half coupling. The coupling
/// is evaluated at the step midpoint and applied as the exact pointwise unitary.
class HomogenizedSolver {
public:
    explicit HomogenizedSolver(HomogenizedSystem system);

    const HomogenizedSystem& system() const { return system_; }
    /// dt may be negative (time reversal).
    void step(AmplitudeState& state, double dt) const;

private:
    void couple(AmplitudeState& state, double t_mid, double tau) const;
    void disperse(AmplitudeState& state, double dt) const;

    HomogenizedSystem system_;
    FftPlan fft_;
    Eigen::MatrixXcd eigenvectors_;
    Eigen::VectorXd eigenvalues_;
    std::vector<double> space_factor_;
    mutable std::vector<double> envelope_;
    mutable double cached_dt_ = 0.0;
    mutable std::vector<std::vector<cxd>> cached_phase_;
};

AmplitudeState step_strang(const HomogenizedSystem& system, const AmplitudeState& state, double dt);

struct MassRecord {
    double time = 0.0;
    std::vector<double> masses;
    double total = 0.0;
};

struct Trajectory {
    std::vector<MassRecord> norms;
    AmplitudeState final_state;
    std::vector<AmplitudeState> snapshots;
    double max_relative_mass_deviation = 0.0;
};

/// Integrates to T with fixed dt (dt must divide T). Snapshots every
/// `snapshot_every` steps when positive, plus the initial state.
Trajectory run_homogenized(const HomogenizedSystem& system, const AmplitudeState& init, double T, double dt,
                           int snapshot_every = 0);

/// Number of steps n with n * dt == T; ConfigError otherwise.
long steps_for(double T, double dt);

}  // namespace blochhom
