#include "blochhom/fine.hpp"

#include "blochhom/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>

namespace blochhom {

namespace {

bool commensurate(const StateSpec& s, const FineGeometry& g) {
    const std::int64_t lm = static_cast<std::int64_t>(g.box_length) * g.cells_per_unit;
    if (s.exact_theta) {
        for (const auto& q : s.exact_theta->components()) {
            if ((q.num() * lm) % q.den() != 0) return false;
        }
        return true;
    }
    for (double t : s.theta) {
        const double v = t * static_cast<double>(lm);
        if (std::abs(v - std::round(v)) > 1e-9) return false;
    }
    return true;
}

/// psi_p(j / P) for j = 0..P-1.
std::vector<cxd> cell_values(const CellFunction& f, int P) {
    std::vector<cxd> out(static_cast<std::size_t>(P));
    for (int j = 0; j < P; ++j) {
        const double y[1] = {static_cast<double>(j) / P};
        out[static_cast<std::size_t>(j)] = evaluate_at(f, y);
    }
    return out;
}

double unresolved_fraction(const CellFunction& f, int P) {
    double outside = 0.0;
    for (std::size_t i = 0; i < f.grid.mode_count(); ++i) {
        if (2 * std::abs(f.grid.mode(i)[0]) >= P) outside += std::norm(f.coeffs[static_cast<Eigen::Index>(i)]);
    }
    return std::sqrt(outside) / std::max(l2_norm(f), std::numeric_limits<double>::min());
}

double theta1(const BlochState& s) { return s.pair.theta.at(0); }

}  // namespace

double EpsilonScenario::max_dt() const {
    double factor = 0.01;
    if (states.size() >= 2) {
        const double gap = std::abs(states[1].pair.lambda - states[0].pair.lambda);
        if (gap > 0.0) factor = std::min(dt_safety / gap, 0.01);
    }
    const double eps = geometry.eps();
    return factor * eps * eps;
}

void EpsilonScenario::validate() const {
    const auto& g = geometry;
    if (g.cells_per_unit < 1 || g.box_length < 1) throw ConfigError("fine geometry needs positive cells_per_unit and box_length");
    if (g.points_per_cell < 4) throw ConfigError("points_per_cell must be at least 4");
    if (potential.grid.dim() != 1) throw ConfigError("the fine solver is one-dimensional");
    if (states.empty()) throw ConfigError("fine scenario needs at least the initial state");
    if (!(dt_safety > 0.0)) throw ConfigError("dt_safety must be positive");
    if (!(T >= 0.0)) throw ConfigError("fine T must be non-negative");
    for (const auto& s : states) {
        if (s.pair.psi.grid.dim() != 1) throw ConfigError("fine states must be one-dimensional");
        if (!commensurate(s.spec, g)) {
            throw ConfigError("commensurability violated: theta = " + s.spec.label() + " times L/eps = " +
                              std::to_string(g.box_length * g.cells_per_unit) + " is not an integer");
        }
        const double miss = unresolved_fraction(s.pair.psi, g.points_per_cell);
        if (miss > 1e-10) {
            throw ConfigError("points_per_cell = " + std::to_string(g.points_per_cell) + " does not resolve " +
                              s.spec.label() + " (unresolved fraction " + std::to_string(miss) + ")");
        }
    }
    if (dt < 0.0) throw ConfigError("fine dt must be non-negative");
    if (dt > 0.0 && dt > max_dt() * (1.0 + 1e-12)) {
        throw ConfigError("fine dt " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(max_dt()));
    }
}

double BandAmplitude::mass(const FineGeometry& g) const {
    double s = 0.0;
    for (const cxd& x : v) s += std::norm(x);
    return g.eps() * s;
}

FineSolver::FineSolver(EpsilonScenario scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    const FineGeometry& g = scenario_.geometry;
    dt_ = scenario_.dt > 0.0 ? scenario_.dt : scenario_.max_dt();
    const std::size_t n = g.points();
    const int P = g.points_per_cell;
    fft_ = FftPlan({static_cast<int>(n)});

    const double eps = g.eps();
    std::vector<double> c_cell(static_cast<std::size_t>(P));
    for (int j = 0; j < P; ++j) {
        const double y[1] = {static_cast<double>(j) / P};
        c_cell[static_cast<std::size_t>(j)] = scenario_.potential.value_at(y);
    }
    base_.resize(n);
    for (std::size_t j = 0; j < n; ++j) base_[j] = c_cell[j % static_cast<std::size_t>(P)] / (eps * eps);

    wavenumber_sq_.resize(n);
    const double L = g.box_length;
    for (std::size_t j = 0; j < n; ++j) {
        const double xi = fft_frequency(static_cast<int>(j), static_cast<int>(n)) / L;
        wavenumber_sq_[j] = four_pi_sq * xi * xi;
    }

    if (scenario_.splitting == FineSplitting::bloch) {
        // mode f couples to f + k L M through c; class r holds indices r + j L M, j < P
        const std::size_t classes = static_cast<std::size_t>(g.cells());
        const auto Pz = static_cast<std::size_t>(P);
        std::vector<cxd> c_hat(Pz);
        for (std::size_t k = 0; k < Pz; ++k) {
            cxd acc{};
            for (std::size_t s = 0; s < Pz; ++s) acc += c_cell[s] * std::polar(1.0, -two_pi * static_cast<double>(s * k) / P);
            c_hat[k] = acc / static_cast<double>(P);
        }
        block_vectors_.resize(classes * Pz * Pz);
        block_values_.resize(classes * Pz);
        Eigen::MatrixXcd H(P, P);
        for (std::size_t r = 0; r < classes; ++r) {
            for (std::size_t j = 0; j < Pz; ++j) {
                for (std::size_t k = 0; k < Pz; ++k) {
                    H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = c_hat[(j + Pz - k) % Pz] / (eps * eps);
                }
                H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += wavenumber_sq_[r + j * classes];
            }
            H = 0.5 * (H + H.adjoint()).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
            for (std::size_t j = 0; j < Pz; ++j) {
                block_values_[r * Pz + j] = es.eigenvalues()[static_cast<Eigen::Index>(j)];
                for (std::size_t k = 0; k < Pz; ++k) {
                    block_vectors_[(r * Pz + j) * Pz + k] = es.eigenvectors()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
                }
            }
        }
    }

    if (scenario_.drive && scenario_.states.size() >= 2) {
        const auto& drive = *scenario_.drive;
        const double dtheta = theta1(scenario_.states[1]) - theta1(scenario_.states[0]);
        std::vector<double> q_cell(static_cast<std::size_t>(P));
        for (int j = 0; j < P; ++j) {
            const double y[1] = {static_cast<double>(j) / P};
            q_cell[static_cast<std::size_t>(j)] = drive.y_profile.value_at(y);
        }
        drive_phase_.resize(n);
        drive_profile_.resize(n);
        const std::int64_t period = static_cast<std::int64_t>(g.cells()) * P;
        for (std::size_t j = 0; j < n; ++j) {
            // x / eps = j / P; reduce the phase argument exactly on the periodic index.
            const double arg = two_pi * dtheta * static_cast<double>(static_cast<std::int64_t>(j) % period) / P;
            drive_phase_[j] = std::polar(1.0, arg);
            const double x[1] = {g.x(j)};
            drive_profile_[j] = drive.macro_factor.space_factor(x) * q_cell[j % static_cast<std::size_t>(P)];
        }
    }
}

namespace {

kernels::FinePotentialTerms terms_at(const EpsilonScenario& sc, std::span<const double> base,
                                     std::span<const cxd> phase, std::span<const double> profile, double t) {
    kernels::FinePotentialTerms terms;
    terms.base = base;
    if (!phase.empty()) {
        const double eps = sc.geometry.eps();
        const double dl = sc.states[1].pair.lambda - sc.states[0].pair.lambda;
        terms.drive_phase = phase;
        terms.drive_profile = profile;
        terms.time_phase = std::polar(1.0, dl * t / (eps * eps));
        const auto& env = sc.drive->macro_factor;
        terms.drive_scale = env.amplitude() * env.time_factor(t);
    }
    return terms;
}

}  // namespace

std::vector<double> FineSolver::potential(double t) const {
    std::vector<double> out(base_.size());
    kernels::parallel::fine_potential_values(out, terms_at(scenario_, base_, drive_phase_, drive_profile_, t));
    return out;
}

FineField FineSolver::initial_wavepacket(const InitialEnvelope& v0, WavepacketReport* report) const {
    const FineGeometry& g = scenario_.geometry;
    const BlochState& s = scenario_.states.front();
    const int P = g.points_per_cell;
    const auto psi = cell_values(s.pair.psi, P);
    const double theta = theta1(s);
    const std::int64_t period = static_cast<std::int64_t>(g.cells()) * P;
    FineField f;
    f.u.resize(g.points());
    double total = 0.0, tail = 0.0;
    const double L = g.box_length;
    for (std::size_t j = 0; j < f.u.size(); ++j) {
        const double x[1] = {g.x(j)};
        const double env = v0(x);
        const double arg = two_pi * theta * static_cast<double>(static_cast<std::int64_t>(j) % period) / P;
        f.u[j] = psi[j % static_cast<std::size_t>(P)] * std::polar(1.0, arg) * env;
        total += env * env;
        if (x[0] < 0.05 * L || x[0] > 0.95 * L) tail += env * env;
    }
    const double tail_fraction = total > 0.0 ? tail / total : 0.0;
    if (v0.kind() != InitialEnvelope::Kind::constant && tail_fraction > 1e-8) {
        throw ConfigError("initial envelope has " + std::to_string(tail_fraction) +
                          " of its mass in the outer 5% of the box; enlarge box_length");
    }
    if (report) {
        report->norm = norm(f);
        report->eps_gradient = eps_gradient(f);
        report->tail_fraction = tail_fraction;
    }
    return f;
}

std::vector<cxd> FineSolver::block_propagators(double h) const {
    using lcx = std::complex<long double>;
    const std::size_t Pz = static_cast<std::size_t>(scenario_.geometry.points_per_cell);
    const std::size_t classes = block_values_.size() / Pz;
    std::vector<cxd> out(block_vectors_.size());
    std::vector<lcx> V(Pz * Pz), phase(Pz);
    for (std::size_t r = 0; r < classes; ++r) {
        // re-orthonormalise in extended precision before forming the propagator
        for (std::size_t i = 0; i < Pz * Pz; ++i) V[i] = lcx(block_vectors_[r * Pz * Pz + i]);
        for (std::size_t q = 0; q < Pz; ++q) {
            for (std::size_t p = 0; p < q; ++p) {
                lcx dot{};
                for (std::size_t j = 0; j < Pz; ++j) dot += std::conj(V[j * Pz + p]) * V[j * Pz + q];
                for (std::size_t j = 0; j < Pz; ++j) V[j * Pz + q] -= dot * V[j * Pz + p];
            }
            long double nrm = 0.0L;
            for (std::size_t j = 0; j < Pz; ++j) nrm += std::norm(V[j * Pz + q]);
            nrm = std::sqrt(nrm);
            for (std::size_t j = 0; j < Pz; ++j) V[j * Pz + q] /= nrm;
        }
        for (std::size_t q = 0; q < Pz; ++q) {
            const long double a = static_cast<long double>(block_values_[r * Pz + q]) * h;
            phase[q] = lcx(std::cos(a), std::sin(a));
        }
        cxd* U = out.data() + r * Pz * Pz;
        // U = V diag(phase) V^*
        for (std::size_t j = 0; j < Pz; ++j) {
            for (std::size_t k = 0; k < Pz; ++k) {
                lcx acc{};
                for (std::size_t q = 0; q < Pz; ++q) acc += V[j * Pz + q] * phase[q] * std::conj(V[k * Pz + q]);
                U[j * Pz + k] = cxd(acc);
            }
        }
    }
    return out;
}

void FineSolver::evolve(FineField& field, double until) const {
    const double span = until - field.time;
    if (span < 0.0) throw ConfigError("evolve cannot go backwards in time");
    if (span == 0.0) return;
    const long steps = std::max(1L, static_cast<long>(std::ceil(span / dt_ * (1.0 - 1e-12))));
    const double h = span / static_cast<double>(steps);
    const double t0 = field.time;
    if (scenario_.splitting == FineSplitting::full_potential) {
        std::vector<cxd> kinetic(wavenumber_sq_.size());
        for (std::size_t j = 0; j < kinetic.size(); ++j) kinetic[j] = std::polar(1.0, wavenumber_sq_[j] * h);
        for (long i = 0; i < steps; ++i) {
            const double t_mid = t0 + (static_cast<double>(i) + 0.5) * h;
            const auto terms = terms_at(scenario_, base_, drive_phase_, drive_profile_, t_mid);
            kernels::parallel::fine_potential_phase(field.u, terms, 0.5 * h);
            fft_.forward(field.u);
            kernels::parallel::multiply(field.u, kinetic);
            fft_.backward(field.u);
            kernels::parallel::fine_potential_phase(field.u, terms, 0.5 * h);
        }
    } else {
        const std::size_t Pz = static_cast<std::size_t>(scenario_.geometry.points_per_cell);
        const std::size_t classes = block_values_.size() / Pz;
        const bool driven = !drive_phase_.empty();
        // undriven: the periodic propagator is exact, one step covers the span
        const long n = driven ? steps : 1;
        const auto blocks = block_propagators(driven ? h : span);
        for (long i = 0; i < n; ++i) {
            const double t_mid = t0 + (static_cast<double>(i) + 0.5) * h;
            const auto terms = terms_at(scenario_, {}, drive_phase_, drive_profile_, t_mid);
            if (driven) kernels::parallel::fine_potential_phase(field.u, terms, 0.5 * h);
            fft_.forward(field.u);
            kernels::parallel::block_apply(field.u, blocks, classes, Pz);
            fft_.backward(field.u);
            if (driven) kernels::parallel::fine_potential_phase(field.u, terms, 0.5 * h);
        }
    }
    if (!std::isfinite(norm(field))) throw NumericalError("fine solver produced NaN before t = " + std::to_string(until));
    field.time = until;
}

double FineSolver::norm(const FineField& field) const {
    double s = 0.0;
    for (const cxd& v : field.u) s += std::norm(v);
    return std::sqrt(s * scenario_.geometry.spacing());
}

double FineSolver::eps_gradient(const FineField& field) const {
    std::vector<cxd> w = field.u;
    fft_.forward(w);
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += wavenumber_sq_[j] * std::norm(w[j]);
    // Parseval with an unnormalised forward transform.
    const double n = static_cast<double>(w.size());
    return scenario_.geometry.eps() * std::sqrt(s * scenario_.geometry.spacing() / n);
}

int projection_window(std::span<const BlochState> states, const FineGeometry& geometry) {
    const std::int64_t lm = static_cast<std::int64_t>(geometry.box_length) * geometry.cells_per_unit;
    std::int64_t window = 1;
    for (const auto& s : states) {
        for (double t : s.pair.theta) {
            const auto q = snap_to_rational(t - std::floor(t), lm, 1e-9);
            if (!q) throw ConfigError("theta of " + s.spec.label() + " is not commensurate with the fine box");
            window = std::lcm(window, q->den());
        }
    }
    return static_cast<int>(window);
}

BandAmplitude extract_band_amplitude(const FineField& field, const BlochState& state, int state_index,
                                     const FineGeometry& geometry, int window) {
    const int P = geometry.points_per_cell;
    if (window < 1 || geometry.cells() % window != 0) throw ConfigError("projection window must divide the number of cells");
    if (field.u.size() != geometry.points()) throw ConfigError("field does not match the fine geometry");
    const auto psi = cell_values(state.pair.psi, P);
    const double theta = theta1(state);
    std::vector<cxd> weights(static_cast<std::size_t>(P));
    for (int j = 0; j < P; ++j) {
        weights[static_cast<std::size_t>(j)] =
            std::conj(psi[static_cast<std::size_t>(j)]) * std::polar(1.0, -two_pi * theta * j / P);
    }
    const double eps = geometry.eps();
    const double time_arg = -state.pair.lambda * field.time / (eps * eps);
    std::vector<cxd> cell_phase(static_cast<std::size_t>(geometry.cells()));
    for (std::size_t c = 0; c < cell_phase.size(); ++c) {
        const double frac = theta * static_cast<double>(c) - std::floor(theta * static_cast<double>(c));
        cell_phase[c] = std::polar(1.0, time_arg - two_pi * frac);
    }
    BandAmplitude out{state_index, field.time, std::vector<cxd>(cell_phase.size()), window};
    kernels::parallel::cell_projection(field.u, weights, cell_phase, out.v);
    if (window > 1) {
        const auto w = static_cast<std::size_t>(window);
        for (std::size_t b = 0; b < out.v.size(); b += w) {
            cxd mean{};
            for (std::size_t c = b; c < b + w; ++c) mean += out.v[c];
            mean /= static_cast<double>(window);
            for (std::size_t c = b; c < b + w; ++c) out.v[c] = mean;
        }
    }
    return out;
}

double remainder_norm(const FineField& field, std::span<const BandAmplitude> amplitudes,
                      std::span<const BlochState> states, const FineGeometry& geometry,
                      const ReconstructionOptions& options) {
    if (amplitudes.size() != states.size()) throw ConfigError("remainder_norm needs one amplitude per state");
    const int P = geometry.points_per_cell;
    const std::size_t cells = static_cast<std::size_t>(geometry.cells());
    const double eps = geometry.eps();
    std::vector<cxd> r = field.u;
    for (std::size_t p = 0; p < states.size(); ++p) {
        const auto& st = states[p];
        const auto& v = amplitudes[p].v;
        if (v.size() != cells) throw ConfigError("amplitude does not match the fine geometry");
        const auto psi = cell_values(st.pair.psi, P);
        std::vector<cxd> zeta;
        const bool with_zeta = p < options.zetas.size();
        if (with_zeta) zeta = cell_values(options.zetas[p], P);
        const double theta = theta1(st);
        const double time_arg = st.pair.lambda * field.time / (eps * eps);
        const auto w = static_cast<std::size_t>(amplitudes[p].window);
        for (std::size_t c = 0; c < cells; ++c) {
            const double frac = theta * static_cast<double>(c) - std::floor(theta * static_cast<double>(c));
            const cxd cell_phase = std::polar(1.0, time_arg + two_pi * frac);
            const cxd vl = v[(c + cells - w) % cells];
            const cxd vr = v[(c + w) % cells];
            const double width = static_cast<double>(w) * eps;
            const cxd slope = (vr - vl) / (2.0 * width);
            const double centre = (static_cast<double>(c / w * w) + 0.5 * static_cast<double>(w)) * eps;
            for (int j = 0; j < P; ++j) {
                const double x = (static_cast<double>(c) + (static_cast<double>(j) + 0.5) / P) * eps;
                cxd value = v[c];
                if (options.linear_interpolation) value += slope * (x - centre);
                cxd shape = psi[static_cast<std::size_t>(j)] * value;
                if (with_zeta) shape += eps * slope * zeta[static_cast<std::size_t>(j)];
                r[c * static_cast<std::size_t>(P) + static_cast<std::size_t>(j)] -=
                    cell_phase * std::polar(1.0, two_pi * theta * j / P) * shape;
            }
        }
    }
    double s = 0.0;
    for (const cxd& x : r) s += std::norm(x);
    return std::sqrt(s * geometry.spacing());
}

FineRun run_fine(const EpsilonScenario& scenario, const InitialEnvelope& v0, int samples,
                 const HomogenizedSystem* prediction, double prediction_dt, const ReconstructionOptions& options) {
    if (samples < 1) throw ConfigError("fine run needs at least one sample interval");
    FineSolver solver(scenario);
    const FineGeometry& g = solver.geometry();
    FineRun run;
    run.geometry = g;
    run.dt = solver.dt();
    FineField u = solver.initial_wavepacket(v0, &run.initial);
    const int window = projection_window(scenario.states, g);
    const double n0 = run.initial.norm;
    const double bound = run.initial.norm + run.initial.eps_gradient;

    std::optional<HomogenizedSolver> hom;
    AmplitudeState hstate;
    double hmass0 = 0.0;
    long steps_per_sample = 0;
    if (prediction) {
        if (prediction->state_count() != scenario.states.size()) {
            throw ConfigError("homogenized prediction has a different number of states");
        }
        hom.emplace(*prediction);
        hstate = initial_amplitudes(prediction->grid, prediction->state_count(), v0, 0);
        hmass0 = total_mass(hstate, prediction->grid);
        steps_per_sample = samples > 0 && scenario.T > 0.0 ? steps_for(scenario.T / samples, prediction_dt) : 0;
    }

    for (int i = 0; i <= samples; ++i) {
        const double t = scenario.T * i / samples;
        solver.evolve(u, t);
        FineSample s;
        s.time = t;
        s.norm = solver.norm(u);
        s.eps_gradient = solver.eps_gradient(u);
        std::vector<BandAmplitude> amps;
        for (std::size_t p = 0; p < scenario.states.size(); ++p) {
            amps.push_back(extract_band_amplitude(u, scenario.states[p], static_cast<int>(p), g, window));
            s.masses.push_back(amps.back().mass(g));
        }
        s.remainder = remainder_norm(u, amps, scenario.states, g, options);
        if (hom) {
            if (i > 0) {
                for (long k = 0; k < steps_per_sample; ++k) hom->step(hstate, prediction_dt);
            }
            hstate.time = t;
            s.predicted_masses = band_masses(hstate, prediction->grid);
            for (std::size_t p = 0; p < s.masses.size(); ++p) {
                run.mass_deviation = std::max(run.mass_deviation, std::abs(s.masses[p] - s.predicted_masses[p]) / hmass0);
            }
        }
        run.max_norm_deviation = std::max(run.max_norm_deviation, std::abs(s.norm - n0) / n0);
        run.gradient_ratio = std::max(run.gradient_ratio, s.eps_gradient / bound);
        run.samples.push_back(std::move(s));
    }
    for (std::size_t i = 1; i < run.samples.size(); ++i) {
        const auto& a = run.samples[i - 1];
        const auto& b = run.samples[i];
        run.integrated_remainder += 0.5 * (b.time - a.time) * (a.remainder * a.remainder + b.remainder * b.remainder);
    }
    return run;
}

EpsilonScenario with_epsilon(const EpsilonScenario& base, const Rational& eps) {
    if (eps.num() != 1 || eps.den() < 1) throw ConfigError("epsilon must be of the form 1/M, got " + eps.to_string());
    EpsilonScenario s = base;
    s.geometry.cells_per_unit = static_cast<int>(eps.den());
    s.dt = 0.0;
    return s;
}

std::vector<ConvergenceRow> convergence_study(const EpsilonScenario& base, std::span<const Rational> eps_list,
                                              const InitialEnvelope& v0, int samples,
                                              const HomogenizedSystem* prediction, double prediction_dt,
                                              const ReconstructionOptions& options) {
    if (eps_list.empty()) throw ConfigError("convergence study needs at least one epsilon");
    std::vector<ConvergenceRow> rows(eps_list.size());
    std::vector<std::string> failures(eps_list.size());
    const auto n = static_cast<std::ptrdiff_t>(eps_list.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const auto start = std::chrono::steady_clock::now();
            rows[k].epsilon = eps_list[k];
            rows[k].run = run_fine(with_epsilon(base, eps_list[k]), v0, samples, prediction, prediction_dt, options);
            rows[k].wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        } catch (const std::exception& e) {
            failures[k] = e.what();
        }
    }
    std::string message;
    for (std::size_t k = 0; k < failures.size(); ++k) {
        if (!failures[k].empty()) message += " eps=" + eps_list[k].to_string() + ": " + failures[k] + ";";
    }
    if (!message.empty()) throw NumericalError("convergence study member failed:" + message);
    std::sort(rows.begin(), rows.end(), [](const ConvergenceRow& a, const ConvergenceRow& b) {
        return a.epsilon.to_double() > b.epsilon.to_double();
    });
    return rows;
}

}  // namespace blochhom
