#pragma once

#include <optional>
#include <span>
#include <vector>

#include "blochhom/bands.hpp"
#include "blochhom/drive.hpp"
#include "blochhom/fft.hpp"
#include "blochhom/homogenized.hpp"

namespace blochhom {

/// 1D periodic box [0, L) of L * M cells of size eps = 1 / M, P points per cell.
struct FineGeometry {
    int cells_per_unit = 8;  // M = 1 / eps
    int box_length = 1;      // L
    int points_per_cell = 16;

    double eps() const { return 1.0 / cells_per_unit; }
    int cells() const { return box_length * cells_per_unit; }
    std::size_t points() const { return static_cast<std::size_t>(cells()) * points_per_cell; }
    double spacing() const { return eps() / points_per_cell; }
    double x(std::size_t j) const { return static_cast<double>(j) * spacing(); }
};

/// A resolved state: verification record plus its cell eigenpair.
struct BlochState {
    StateSpec spec;
    BlochEigenpair pair;
};

enum class FineSplitting {
    /// Exact propagator of -Delta + eps^-2 c on each quasi-momentum block; only d_eps is split.
    bloch,
    /// Strang splitting of -Delta against the full potential eps^-2 c + d_eps.
    full_potential,
};

struct EpsilonScenario {
    FineGeometry geometry;
    PeriodicPotential potential;
    /// states[0] is the initial state n; states[1], if present, the target m.
    std::vector<BlochState> states;
    std::optional<ScalarDriveProfile> drive;
    double T = 0.0;
    double dt = 0.0;  // 0 means "use the default rule"
    double dt_safety = 0.02;
    FineSplitting splitting = FineSplitting::bloch;

    /// min(dt_safety / |lambda_m - lambda_n|, 0.01) * eps^2.
    double max_dt() const;
    /// Commensurability and time-step checks; ConfigError on violation.
    void validate() const;
};

struct FineField {
    double time = 0.0;
    std::vector<cxd> u;
};

struct WavepacketReport {
    double norm = 0.0;
    double eps_gradient = 0.0;
    double tail_fraction = 0.0;
};

struct BandAmplitude {
    int state_index = 0;
    double time = 0.0;
    std::vector<cxd> v;  // one value per cell, constant over each projection window
    int window = 1;      // cells per projection window
    double mass(const FineGeometry& g) const;
};

/// Split-step propagator for i u_t - u_xx + (eps^-2 c(x/eps) + d_eps(t, x)) u = 0.
class FineSolver {
public:
    explicit FineSolver(EpsilonScenario scenario);

    const EpsilonScenario& scenario() const { return scenario_; }
    const FineGeometry& geometry() const { return scenario_.geometry; }
    double dt() const { return dt_; }

    /// eps^-2 c(x/eps) + Re(exp(i (lambda_m - lambda_n) t / eps^2) exp(2 i pi (theta_m - theta_n) x / eps)) d(t, x, x/eps).
    std::vector<double> potential(double t) const;

    /// psi_n(x/eps) exp(2 i pi theta_n x / eps) v0(x). Throws ConfigError if the
    /// envelope has more than 1e-8 of its mass in the outer 5% of the box.
    FineField initial_wavepacket(const InitialEnvelope& v0, WavepacketReport* report = nullptr) const;

    /// Advances to `until` with steps no larger than dt().
    void evolve(FineField& field, double until) const;

    double norm(const FineField& field) const;
    /// eps * ||u_x|| with a spectral derivative.
    double eps_gradient(const FineField& field) const;

private:
    EpsilonScenario scenario_;
    double dt_ = 0.0;
    FftPlan fft_;
    std::vector<double> base_;
    std::vector<cxd> drive_phase_;
    std::vector<double> drive_profile_;
    std::vector<double> wavenumber_sq_;
    // bloch splitting: per-class eigenvectors (row-major P x P) and eigenvalues
    std::vector<cxd> block_vectors_;
    std::vector<double> block_values_;

    std::vector<cxd> block_propagators(double h) const;
};

/// Smallest number of cells over which every state's phase exp(2 i pi theta x / eps)
/// is periodic (lcm of the theta denominators).
int projection_window(std::span<const BlochState> states, const FineGeometry& geometry);

/// Modulated projection onto psi_p over windows of `window` cells:
/// (1/(window eps)) int_W u exp(-i lambda_p t / eps^2) exp(-2 i pi theta_p x / eps) conj(psi_p(x/eps)) dx.
/// With window = projection_window(states), Bloch waves at different theta are exactly orthogonal.
BandAmplitude extract_band_amplitude(const FineField& field, const BlochState& state, int state_index,
                                     const FineGeometry& geometry, int window = 1);

struct ReconstructionOptions {
    bool linear_interpolation = false;
    /// Adds eps * v'(x) zeta_p(x/eps); zetas are indexed like the states.
    std::vector<CellFunction> zetas;
};

/// || u - sum_p exp(i lambda_p t / eps^2) exp(2 i pi theta_p x / eps) psi_p(x/eps) v_p ||.
double remainder_norm(const FineField& field, std::span<const BandAmplitude> amplitudes,
                      std::span<const BlochState> states, const FineGeometry& geometry,
                      const ReconstructionOptions& options = {});

struct FineSample {
    double time = 0.0;
    double norm = 0.0;
    double eps_gradient = 0.0;
    std::vector<double> masses;
    double remainder = 0.0;
    std::vector<double> predicted_masses;
};

struct FineRun {
    FineGeometry geometry;
    double dt = 0.0;
    WavepacketReport initial;
    std::vector<FineSample> samples;
    double max_norm_deviation = 0.0;   // relative
    double gradient_ratio = 0.0;       // max_t eps|u_x| / (|u0| + eps|u0_x|)
    double integrated_remainder = 0.0; // int_0^T |r|^2 dt (trapezoid over samples)
    double mass_deviation = 0.0;       // max over samples/states of |M_fine - M_hom| / |v0|^2
};

/// Runs one member: evolves, samples `samples + 1` equispaced times on [0, T],
/// and compares with the homogenized prediction when `prediction` is given.
FineRun run_fine(const EpsilonScenario& scenario, const InitialEnvelope& v0, int samples,
                 const HomogenizedSystem* prediction = nullptr, double prediction_dt = 0.0,
                 const ReconstructionOptions& options = {});

struct ConvergenceRow {
    Rational epsilon;
    FineRun run;
    double wall_seconds = 0.0;
};

/// Runs every eps of the ladder (in parallel) on the same box, states and drive.
/// Rows are sorted by decreasing eps.
std::vector<ConvergenceRow> convergence_study(const EpsilonScenario& base, std::span<const Rational> eps_list,
                                              const InitialEnvelope& v0, int samples,
                                              const HomogenizedSystem* prediction, double prediction_dt,
                                              const ReconstructionOptions& options = {});

/// Builds the scenario for a different eps, keeping every other setting.
EpsilonScenario with_epsilon(const EpsilonScenario& base, const Rational& eps);

}  // namespace blochhom
