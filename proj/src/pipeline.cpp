#include "blochhom/pipeline.hpp"

#include "blochhom/correctors.hpp"
#include "blochhom/coupling.hpp"
#include "blochhom/format.hpp"
#include "blochhom/io.hpp"
#include "blochhom/resonance.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <set>

namespace blochhom {

namespace fs = std::filesystem;

namespace {

Json cx(cxd z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

Json matrix(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json r = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

Json state_json(const StateSpec& s) {
    Json j;
    j["label"] = s.label();
    j["band"] = s.band;
    j["theta"] = s.theta;
    j["theta_exact"] = s.exact_theta ? Json(s.exact_theta->to_string()) : Json(nullptr);
    j["lambda"] = s.lambda;
    j["gap"] = s.gap;
    j["grad_norm"] = s.grad_norm;
    j["simple"] = s.simple;
    j["critical"] = s.critical;
    j["a1_verified"] = s.a1_verified;
    j["hessian_degenerate"] = s.hessian_degenerate;
    j["newton_iterations"] = s.newton_iterations;
    j["converged"] = s.converged;
    return j;
}

Json level_json(const ResonanceLevel& l) {
    Json j;
    j["level"] = l.level;
    j["theta"] = l.theta;
    j["theta_exact"] = l.exact_theta ? Json(l.exact_theta->to_string()) : Json(nullptr);
    j["target_energy"] = l.target_energy;
    j["margin"] = l.margin;
    j["bands_scanned"] = l.bands_scanned;
    j["tail_eigenvalue"] = l.tail_eigenvalue;
    j["tail_certified"] = l.tail_certified;
    j["resonant_bands"] = l.resonant_bands;
    return j;
}

Json report_json(const ResonanceReport& r) {
    Json j;
    j["nonresonant"] = r.nonresonant;
    j["margin"] = r.margin;
    Json levels = Json::array();
    for (const auto& l : r.levels) levels.push_back(level_json(l));
    j["levels"] = levels;
    if (r.chain) {
        Json chain = Json::array();
        for (const auto& s : *r.chain) chain.push_back(state_json(s));
        j["chain"] = chain;
    } else {
        j["chain"] = nullptr;
    }
    j["warnings"] = r.warnings;
    return j;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "validation";
    if (dynamic_cast<const AssumptionError*>(&e)) return "assumption";
    if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
    return "internal";
}

int band_count(const Scenario& s) {
    if (s.band_count != 0) return s.band_count;
    int highest = 1;
    if (s.initial) highest = std::max(highest, s.initial->band);
    if (s.target) highest = std::max(highest, s.target->band);
    return std::max(4, highest + 2);
}

class Artifacts {
public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& content) {
        write_file(dir_ / name, content);
        names_.push_back(name);
    }
    const std::vector<std::string>& names() const { return names_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

void remove_previous(const fs::path& dir) {
    const fs::path manifest = dir / "manifest.json";
    if (!fs::exists(manifest)) return;
    const auto old = Json::parse(read_file(manifest), nullptr, false);
    if (!old.is_discarded() && old.contains("artifacts") && old["artifacts"].is_array()) {
        for (const auto& a : old["artifacts"]) {
            if (!a.contains("file") || !a["file"].is_string()) continue;
            if (a.value("origin", "generated") != "generated") continue;
            const fs::path rel = a["file"].get<std::string>();
            if (rel.is_absolute() || rel.empty() || *rel.begin() == "..") continue;
            fs::remove(dir / rel);
        }
    }
    fs::remove(manifest);
}

struct Stage {
    std::string name;
    double seconds = 0.0;
};

/// Everything the stages share.
class Run {
public:
    Run(const Scenario& s, Command cmd, Artifacts& out) : s_(s), cmd_(cmd), out_(out) {}

    void execute(std::vector<Stage>& timing, std::vector<std::string>& lines);

    Json verification = Json::object();
    Json volatile_info = Json::object();
    std::vector<std::string> state_labels;

private:
    bool wants(Command c) const { return cmd_ == c; }
    bool full() const { return cmd_ == Command::all; }

    void stage_bands();
    void stage_states();
    void stage_resonance(bool required);
    void stage_effmass(const std::vector<StateSpec>& states);
    void stage_coupling();
    void stage_homogenize();
    void stage_fine();

    void require_a1(const StateSpec& s) const {
        if (!s.a1_verified) {
            throw AssumptionError("state " + s.label() + " violates (a1): simple=" + (s.simple ? "yes" : "no") +
                                  ", |grad lambda|=" + shortest(s.grad_norm));
        }
    }
    StateSpec resolve(const StateRequest& r) const;
    PeriodicPotential drive_profile(std::size_t i) const { return s_.drive.profile.at(i).build(grid_); }

    const Scenario& s_;
    Command cmd_;
    Artifacts& out_;
    TorusGrid grid_;
    PeriodicPotential c_;
    std::vector<BandSample> samples_;
    std::vector<std::vector<StateSpec>> critical_;
    std::optional<StateSpec> n_, m_;
    // homogenized ordering: [n, m, further chain states]
    std::vector<StateSpec> hom_;
    std::vector<BlochEigenpair> pairs_;
    std::vector<EffectiveMassTensor> tensors_;
    Eigen::MatrixXcd coupling_;
    std::optional<HomogenizedSystem> system_;
    std::vector<std::string>* lines_ = nullptr;
};

StateSpec Run::resolve(const StateRequest& r) const {
    if (r.theta) return make_state(c_, grid_, r.band, *r.theta, s_.tolerances);
    const auto& cands = critical_.at(static_cast<std::size_t>(r.band - 1));
    const StateSpec* best = nullptr;
    for (const auto& c : cands) {
        if (!c.a1_verified) continue;
        const bool better = !best || (r.automatic == StateRequest::Auto::min ? c.lambda < best->lambda : c.lambda > best->lambda);
        if (better) best = &c;
    }
    if (!best) throw AssumptionError("band " + std::to_string(r.band) + " has no critical point satisfying (a1)");
    return *best;
}

void Run::stage_bands() {
    grid_ = s_.grid();
    c_ = s_.potential.build(grid_);
    const int B = band_count(s_);
    samples_ = sample_bands(c_, grid_, 1, B, s_.theta_points);
    std::vector<std::string> header;
    if (s_.dimension == 1) header.push_back("theta");
    else header.insert(header.end(), {"theta1", "theta2"});
    std::vector<std::string> plot_cols = header;
    for (int b = 1; b <= B; ++b) header.push_back("lambda" + std::to_string(b));
    for (int b = 1; b <= B; ++b) plot_cols.push_back("lambda" + std::to_string(b));
    for (int b = 1; b <= B; ++b) header.push_back("gap" + std::to_string(b));
    CsvTable csv(header);
    std::vector<std::vector<double>> plot_rows;
    const auto& thetas = samples_.front().thetas;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        std::vector<double> row = thetas[i];
        std::vector<double> prow = thetas[i];
        for (const auto& b : samples_) {
            row.push_back(b.lambdas[i]);
            prow.push_back(b.lambdas[i]);
        }
        for (const auto& b : samples_) row.push_back(b.gaps[i]);
        csv.add_row(row);
        plot_rows.push_back(prow);
    }
    out_.write("bands.csv", csv.str());
    out_.write("band_diagram.dat",
               plot_data({"band diagram of " + s_.name, "potential " + s_.potential.to_string()}, plot_cols, plot_rows));
}

void Run::stage_states() {
    critical_.clear();
    for (const auto& b : samples_) critical_.push_back(find_critical_points(b, c_, grid_, s_.tolerances));
    if (s_.initial) n_ = resolve(*s_.initial);
    if (s_.target) m_ = resolve(*s_.target);
    if (n_ && m_ && n_->band == m_->band && n_->theta == m_->theta) {
        throw ConfigError("initial and target resolve to the same state " + n_->label());
    }
    Json j;
    Json crit = Json::array();
    for (std::size_t b = 0; b < critical_.size(); ++b) {
        Json band;
        band["band"] = static_cast<int>(b) + 1;
        Json list = Json::array();
        for (const auto& c : critical_[b]) list.push_back(state_json(c));
        band["critical_points"] = list;
        crit.push_back(band);
    }
    j["initial"] = n_ ? state_json(*n_) : Json(nullptr);
    j["target"] = m_ ? state_json(*m_) : Json(nullptr);
    j["bands"] = crit;
    out_.write("states.json", dump_json(j));
    Json a1;
    if (n_) a1[n_->label()] = n_->a1_verified;
    if (m_) a1[m_->label()] = m_->a1_verified;
    verification["a1"] = a1;
    if (n_) hom_.push_back(*n_);
    if (m_) hom_.push_back(*m_);
}

void Run::stage_resonance(bool required) {
    const auto& r = s_.resonance;
    auto report = check_nonresonance(c_, grid_, *n_, *m_, r.p_max, s_.tolerances, r.auto_extend);
    Json j;
    j["n"] = state_json(*n_);
    j["m"] = state_json(*m_);
    j["a2"] = report_json(report);
    Json v;
    v["nonresonant"] = report.nonresonant;
    v["margin"] = report.margin;
    std::optional<AssumptionError> failure;
    if (!report.nonresonant) {
        Json search;
        try {
            const auto chain = find_resonance_chain(c_, grid_, *n_, *m_, r.k_max, r.p_max, s_.tolerances);
            search = report_json(chain);
            search["terminated"] = true;
            // chain is [m, n, 2n - m, ...]
            hom_ = {*n_, *m_};
            for (std::size_t i = 2; i < chain.chain->size(); ++i) hom_.push_back((*chain.chain)[i]);
            v["chain_length"] = chain.chain->size();
        } catch (const AssumptionError& e) {
            search["terminated"] = false;
            search["error"] = e.what();
            failure = e;
        }
        j["a2b"] = search;
        v["a2b"] = !failure;
    }
    out_.write("resonance.json", dump_json(j));
    verification["resonance"] = v;
    lines_->push_back(std::string("pair ") + (report.nonresonant ? "non-resonant" : "resonant") + ", margin " +
                      shortest(report.margin));
    if (failure && required) throw *failure;
}

void Run::stage_effmass(const std::vector<StateSpec>& states) {
    tensors_.clear();
    Json list = Json::array();
    double worst = 0.0;
    for (const auto& st : states) {
        require_a1(st);
        tensors_.push_back(compute_effective_mass(c_, grid_, st, s_.tolerances));
        const auto& t = tensors_.back();
        Json j;
        j["state"] = state_json(st);
        j["a_star"] = matrix(t.a_star);
        j["a_star_fd"] = matrix(t.a_star_fd);
        j["hessian"] = matrix(eight_pi_sq * t.a_star);
        j["fd_rel_delta"] = t.fd_rel_delta;
        j["asymmetry"] = t.asymmetry;
        j["imaginary_part"] = t.imaginary_part;
        list.push_back(j);
        worst = std::max(worst, t.fd_rel_delta);
    }
    out_.write("effmass.json", dump_json(Json{{"tensors", list}}));
    verification["effmass_max_fd_rel_delta"] = worst;
}

void Run::stage_coupling() {
    const std::size_t K = hom_.size();
    pairs_.clear();
    for (const auto& st : hom_) {
        require_a1(st);
        pairs_.push_back(state_eigenpair(c_, grid_, st));
    }
    coupling_ = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
    // chain neighbours in [n, m, l...] order: (m, n), (n, l), (l, l'), ...
    std::vector<std::pair<std::size_t, std::size_t>> links;
    if (K >= 2) links.emplace_back(0, 1);
    for (std::size_t i = 2; i < K; ++i) links.emplace_back(i == 2 ? 0 : i - 1, i);
    Json pairs = Json::array();
    for (const auto& [a, b] : links) {
        CouplingCoefficient cc;
        if (s_.drive.kind == DriveKind::em) {
            std::vector<PeriodicPotential> prof;
            for (std::size_t i = 0; i < s_.drive.profile.size(); ++i) prof.push_back(drive_profile(i));
            cc = fermi_coupling_em(prof, pairs_[a], pairs_[b]);
        } else {
            cc = fermi_coupling_scalar(drive_profile(0), pairs_[a], pairs_[b]);
        }
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        coupling_(ia, ib) = cc.value_y;
        coupling_(ib, ia) = std::conj(cc.value_y);
        Json j;
        j["bands"] = {cc.band_n, cc.band_m};
        j["thetas"] = {cc.theta_n, cc.theta_m};
        j["kind"] = cc.kind == CouplingKind::scalar ? "scalar" : "em";
        j["value_y"] = cx(cc.value_y);
        j["abs_value_y"] = std::abs(cc.value_y);
        j["transition_probability"] = cc.transition_probability();
        pairs.push_back(j);
    }
    Json m = Json::array();
    for (Eigen::Index i = 0; i < coupling_.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < coupling_.cols(); ++k) row.push_back(cx(coupling_(i, k)));
        m.push_back(row);
    }
    Json j;
    Json drive;
    drive["kind"] = s_.drive.kind == DriveKind::em ? "em" : "scalar";
    Json prof = Json::array();
    for (const auto& p : s_.drive.profile) prof.push_back(p.to_string());
    drive["profile"] = prof;
    drive["amplitude"] = s_.drive.amplitude;
    drive["envelope"] = DriveEnvelope::parse(s_.drive.envelope, s_.drive.amplitude).to_string();
    j["drive"] = drive;
    j["states"] = state_labels;
    j["pairs"] = pairs;
    j["matrix"] = m;
    j["hermiticity_defect"] = hermiticity_defect(coupling_);
    out_.write("coupling.json", dump_json(j));
    verification["coupling_hermiticity_defect"] = hermiticity_defect(coupling_);
}

void Run::stage_homogenize() {
    const auto& mac = *s_.macro;
    const std::size_t K = hom_.size();
    HomogenizedSystem sys;
    sys.grid = {s_.dimension, mac.box_length, mac.points};
    if (mac.tensors == "auto") {
        for (const auto& t : tensors_) sys.tensors.push_back(t.a_star);
    } else if (mac.tensors == "zero") {
        sys.tensors.assign(K, Eigen::MatrixXd::Zero(s_.dimension, s_.dimension));
    } else {
        std::size_t start = 0;
        const std::string& list = mac.tensors;
        while (true) {
            const auto comma = list.find(',', start);
            sys.tensors.push_back(Eigen::MatrixXd::Constant(1, 1, std::stod(list.substr(start, comma - start))));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (sys.tensors.size() != K) throw ConfigError("[macro] tensors lists " + std::to_string(sys.tensors.size()) +
                                                      " values for " + std::to_string(K) + " states");
    }
    if (K >= 2 && s_.drive.kind != DriveKind::none) {
        sys.coupling.base = coupling_;
        sys.coupling.envelope = DriveEnvelope::parse(s_.drive.envelope, s_.drive.amplitude);
    } else {
        sys.coupling.base = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
    }
    if (mac.coupling) {
        if (K != 2) throw ConfigError("[macro] coupling override needs exactly two states");
        sys.coupling.base = Eigen::MatrixXcd::Zero(2, 2);
        sys.coupling.base(0, 1) = sys.coupling.base(1, 0) = *mac.coupling;
        if (s_.drive.kind == DriveKind::none) sys.coupling.envelope = DriveEnvelope::constant(1.0);
    }
    sys.validate();
    system_ = sys;

    const auto v0 = s_.initial_envelope();
    const auto init = initial_amplitudes(sys.grid, K, v0, 0);
    const auto traj = run_homogenized(sys, init, mac.T, mac.dt, mac.snapshot_every);

    std::vector<std::string> header{"t"};
    for (std::size_t p = 1; p <= K; ++p) header.push_back("mass_" + std::to_string(p));
    header.push_back("total");
    CsvTable csv(header);
    std::vector<std::vector<double>> rows;
    for (const auto& r : traj.norms) {
        std::vector<double> row{r.time};
        row.insert(row.end(), r.masses.begin(), r.masses.end());
        row.push_back(r.total);
        csv.add_row(row);
        rows.push_back(row);
    }
    out_.write("trajectory_norms.csv", csv.str());
    std::vector<std::string> comments{"homogenized band masses of " + s_.name};
    for (std::size_t p = 0; p < K; ++p) comments.push_back("mass_" + std::to_string(p + 1) + " = " + hom_[p].label());
    out_.write("rabi_masses.dat", plot_data(comments, header, rows));

    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        const auto& snap = traj.snapshots[i];
        for (std::size_t p = 0; p < K; ++p) {
            std::vector<std::string> h = s_.dimension == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x1", "x2"};
            h.insert(h.end(), {"re", "im"});
            CsvTable v(h);
            for (std::size_t j = 0; j < sys.grid.size(); ++j) {
                const auto x = sys.grid.coordinate(j);
                std::vector<double> row(x.begin(), x.begin() + s_.dimension);
                row.push_back(snap.fields[p][j].real());
                row.push_back(snap.fields[p][j].imag());
                v.add_row(row);
            }
            out_.write("v_" + std::to_string(p + 1) + "_t" + std::to_string(i) + ".csv", v.str());
        }
    }
    Json h;
    h["max_relative_mass_deviation"] = traj.max_relative_mass_deviation;
    h["conserved_1e-10"] = traj.max_relative_mass_deviation < 1e-10;
    h["final_masses"] = traj.norms.back().masses;
    h["steps"] = traj.norms.size() - 1;
    verification["homogenized"] = h;
    lines_->push_back("homogenized run: max relative mass deviation " + shortest(traj.max_relative_mass_deviation));
}

void Run::stage_fine() {
    const auto& f = *s_.fine;
    const auto& mac = *s_.macro;
    EpsilonScenario base;
    base.geometry = {static_cast<int>(f.epsilons.front().den()), static_cast<int>(mac.box_length), f.points_per_cell};
    base.potential = c_;
    for (std::size_t p = 0; p < hom_.size(); ++p) {
        base.states.push_back({hom_[p], pairs_.size() > p ? pairs_[p] : state_eigenpair(c_, grid_, hom_[p])});
    }
    if (s_.drive.kind == DriveKind::scalar && hom_.size() >= 2) {
        base.drive = ScalarDriveProfile{drive_profile(0), DriveEnvelope::parse(s_.drive.envelope, s_.drive.amplitude)};
    }
    base.T = mac.T;
    base.dt_safety = f.dt_safety;
    base.splitting = f.splitting;
    ReconstructionOptions opt;
    opt.linear_interpolation = f.linear_interpolation;
    if (f.reconstruct_with_corrector) {
        for (const auto& st : hom_) opt.zetas.push_back(solve_corrector_zeta(c_, grid_, st, 0, s_.tolerances).zeta);
    }
    const auto rows = convergence_study(base, f.epsilons, s_.initial_envelope(), f.samples, &*system_, mac.dt, opt);

    const std::size_t K = hom_.size();
    std::vector<std::string> header{"eps", "t", "norm", "eps_gradient"};
    for (std::size_t p = 1; p <= K; ++p) header.push_back("mass_" + std::to_string(p));
    header.push_back("remainder");
    for (std::size_t p = 1; p <= K; ++p) header.push_back("predicted_mass_" + std::to_string(p));
    CsvTable run_csv(header);
    CsvTable conv({"eps", "integrated_remainder", "mass_deviation", "max_norm_deviation", "gradient_ratio"});
    std::vector<std::vector<double>> plot;
    Json walls = Json::array();
    Json per = Json::array();
    for (const auto& r : rows) {
        const double eps = r.epsilon.to_double();
        for (const auto& smp : r.run.samples) {
            std::vector<double> row{eps, smp.time, smp.norm, smp.eps_gradient};
            row.insert(row.end(), smp.masses.begin(), smp.masses.end());
            row.push_back(smp.remainder);
            row.insert(row.end(), smp.predicted_masses.begin(), smp.predicted_masses.end());
            run_csv.add_row(row);
        }
        conv.add_row({eps, r.run.integrated_remainder, r.run.mass_deviation, r.run.max_norm_deviation, r.run.gradient_ratio});
        plot.push_back({eps, r.run.integrated_remainder, r.run.mass_deviation});
        walls.push_back(Json{{"eps", r.epsilon.to_string()}, {"seconds", r.wall_seconds}});
        Json e;
        e["eps"] = r.epsilon.to_string();
        e["integrated_remainder"] = r.run.integrated_remainder;
        e["mass_deviation"] = r.run.mass_deviation;
        e["max_norm_deviation"] = r.run.max_norm_deviation;
        e["gradient_ratio"] = r.run.gradient_ratio;
        e["dt"] = r.run.dt;
        e["final_masses"] = r.run.samples.back().masses;
        e["final_predicted_masses"] = r.run.samples.back().predicted_masses;
        per.push_back(e);
    }
    out_.write("fine_run.csv", run_csv.str());
    out_.write("convergence.csv", conv.str());
    out_.write("remainder_vs_eps.dat",
               plot_data({"fine-scale remainder against eps for " + s_.name, "raw values, no logarithm applied"},
                         {"eps", "integrated_remainder", "mass_deviation"}, plot));
    volatile_info["convergence_wall_seconds"] = walls;

    bool rem_dec = true, mass_dec = true;
    double worst_norm = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        worst_norm = std::max(worst_norm, rows[i].run.max_norm_deviation);
        if (i > 0) {
            rem_dec = rem_dec && rows[i].run.integrated_remainder < rows[i - 1].run.integrated_remainder;
            mass_dec = mass_dec && rows[i].run.mass_deviation < rows[i - 1].run.mass_deviation;
        }
    }
    Json v;
    v["per_eps"] = per;
    v["remainder_strictly_decreasing"] = rem_dec;
    v["mass_deviation_strictly_decreasing"] = mass_dec;
    v["max_norm_deviation"] = worst_norm;
    v["norm_conserved_1e-10"] = worst_norm < 1e-10;
    verification["fine"] = v;
    lines_->push_back("fine validation: remainder " + std::string(rem_dec ? "decreasing" : "NOT decreasing") +
                      ", mass deviation " + (mass_dec ? "decreasing" : "NOT decreasing"));
}

void Run::execute(std::vector<Stage>& timing, std::vector<std::string>& lines) {
    lines_ = &lines;
    auto timed = [&](const std::string& name, const std::function<void()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        timing.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    };
    const bool has_pair = s_.initial && s_.target;
    const bool homogenize = wants(Command::homogenize) || wants(Command::validate) || (full() && s_.macro);
    const bool fine = wants(Command::validate) || (full() && s_.fine);
    const bool auto_tensors = !s_.macro || s_.macro->tensors == "auto";
    const bool effmass = wants(Command::effmass) || (homogenize && auto_tensors) || (full() && s_.initial && auto_tensors);
    const bool resonance = has_pair && (wants(Command::resonant) || homogenize || full());
    const bool coupling =
        has_pair && s_.drive.kind != DriveKind::none && (wants(Command::coupling) || homogenize || full());

    timed("bands", [&] { stage_bands(); });
    timed("states", [&] { stage_states(); });
    auto label = [&] {
        state_labels.clear();
        for (const auto& st : hom_) state_labels.push_back(st.label());
    };
    label();
    if (resonance) timed("resonance", [&] { stage_resonance(homogenize || wants(Command::resonant) || full()); });
    label();
    if (effmass) timed("effmass", [&] { stage_effmass(hom_); });
    if (coupling) timed("coupling", [&] { stage_coupling(); });
    if (homogenize) timed("homogenize", [&] { stage_homogenize(); });
    if (fine) timed("fine", [&] { stage_fine(); });
}

}  // namespace

Command parse_command(std::string_view name) {
    static const std::pair<std::string_view, Command> table[] = {
        {"bands", Command::bands},       {"states", Command::states},         {"effmass", Command::effmass},
        {"coupling", Command::coupling}, {"homogenize", Command::homogenize}, {"validate", Command::validate},
        {"resonant", Command::resonant}, {"all", Command::all},
    };
    for (const auto& [n, c] : table) {
        if (n == name) return c;
    }
    throw ConfigError("unknown command \"" + std::string(name) + "\"");
}

std::string command_name(Command c) {
    switch (c) {
        case Command::bands: return "bands";
        case Command::states: return "states";
        case Command::effmass: return "effmass";
        case Command::coupling: return "coupling";
        case Command::homogenize: return "homogenize";
        case Command::validate: return "validate";
        case Command::resonant: return "resonant";
        case Command::all: return "all";
    }
    return "all";
}

void check_command(const Scenario& s, Command c) {
    switch (c) {
        case Command::bands:
        case Command::states:
        case Command::all:
            return;
        case Command::effmass:
            if (!s.initial) throw ConfigError("effmass needs [states] initial");
            return;
        case Command::coupling:
            if (!s.target) throw ConfigError("coupling needs [states] initial and target");
            if (s.drive.kind == DriveKind::none) throw ConfigError("coupling needs a [drive] section");
            return;
        case Command::resonant:
            if (!s.target) throw ConfigError("resonant needs [states] initial and target");
            return;
        case Command::homogenize:
            if (!s.macro) throw ConfigError("homogenize needs a [macro] section");
            return;
        case Command::validate:
            if (!s.fine) throw ConfigError("validate needs a [fine] section");
            if (s.drive.kind == DriveKind::em) throw ConfigError("validate supports scalar drives only");
            return;
    }
}

AssumptionCheck check_assumptions(const Scenario& s) {
    AssumptionCheck out;
    if (!s.initial) {
        out.lines.push_back("no states requested; nothing to check");
        return out;
    }
    const TorusGrid grid = s.grid();
    const auto c = s.potential.build(grid);
    auto resolve = [&](const StateRequest& r) -> std::optional<StateSpec> {
        if (r.theta) return make_state(c, grid, r.band, *r.theta, s.tolerances);
        const auto samples = sample_bands(c, grid, r.band, r.band, s.theta_points);
        const StateSpec* best = nullptr;
        const auto cands = find_critical_points(samples.front(), c, grid, s.tolerances);
        for (const auto& cand : cands) {
            if (!cand.a1_verified) continue;
            if (!best || (r.automatic == StateRequest::Auto::min ? cand.lambda < best->lambda : cand.lambda > best->lambda)) best = &cand;
        }
        if (!best) return std::nullopt;
        return *best;
    };
    std::optional<StateSpec> n = resolve(*s.initial);
    std::optional<StateSpec> m = s.target ? resolve(*s.target) : std::nullopt;
    for (const auto& [role, st, req] : {std::tuple{"initial", &n, &*s.initial}, std::tuple{"target", &m, s.target ? &*s.target : nullptr}}) {
        if (!req) continue;
        if (!*st) {
            out.satisfied = false;
            out.lines.push_back(std::string("a1 ") + role + " " + req->to_string() + ": no critical point satisfies (a1)");
            continue;
        }
        const auto& x = **st;
        out.lines.push_back(std::string("a1 ") + role + " " + x.label() + ": " + (x.a1_verified ? "ok" : "FAILED") +
                            " (simple " + (x.simple ? "yes" : "no") + ", |grad| " + shortest(x.grad_norm) + ")");
        out.satisfied = out.satisfied && x.a1_verified;
    }
    if (n && m && n->a1_verified && m->a1_verified) {
        const auto rep = check_nonresonance(c, grid, *n, *m, s.resonance.p_max, s.tolerances, s.resonance.auto_extend);
        out.lines.push_back(std::string("a2: ") + (rep.nonresonant ? "non-resonant" : "resonant") + ", margin " +
                            shortest(rep.margin));
        for (const auto& w : rep.warnings) out.lines.push_back("warning: " + w);
        if (!rep.nonresonant) {
            try {
                const auto chain = find_resonance_chain(c, grid, *n, *m, s.resonance.k_max, s.resonance.p_max, s.tolerances);
                out.lines.push_back("a2b: chain of " + std::to_string(chain.chain->size()) + " states, terminating margin " +
                                    shortest(chain.levels.back().margin));
            } catch (const AssumptionError& e) {
                out.satisfied = false;
                out.lines.push_back(std::string("a2b: FAILED: ") + e.what());
            }
        }
    }
    return out;
}

RunSummary run_pipeline(const Scenario& s, Command command, const fs::path& out_dir, const std::string& scenario_path) {
    check_command(s, command);
    fs::create_directories(out_dir);
    remove_previous(out_dir);

    Artifacts out(out_dir);
    Run run(s, command, out);
    std::vector<Stage> timing;
    RunSummary summary;
    summary.out_dir = out_dir;
    std::optional<std::exception_ptr> failure;
    Json error;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        run.execute(timing, summary.lines);
    } catch (const std::exception& e) {
        failure = std::current_exception();
        error["kind"] = error_kind(e);
        error["message"] = e.what();
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    Json manifest;
    manifest["format"] = "blochhom-manifest/1";
    manifest["status"] = failure ? "failed" : "complete";
    manifest["command"] = command_name(command);
    Json sc;
    sc["name"] = s.name;
    sc["hash"] = s.hash();
    sc["canonical"] = s.canonical();
    manifest["scenario"] = sc;
    if (failure) manifest["error"] = error;
    manifest["states"] = run.state_labels;

    const std::set<std::string> generated(out.names().begin(), out.names().end());
    Json artifacts = Json::array();
    std::vector<std::string> present;
    for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), out_dir).generic_string();
        if (rel == "manifest.json") continue;
        present.push_back(rel);
    }
    std::ranges::sort(present);
    for (const auto& rel : present) {
        Json a;
        a["file"] = rel;
        a["sha256"] = sha256_file(out_dir / rel);
        a["bytes"] = fs::file_size(out_dir / rel);
        a["origin"] = generated.contains(rel) ? "generated" : "external";
        artifacts.push_back(a);
    }
    manifest["artifacts"] = artifacts;
    manifest["verification"] = run.verification;

    Json vol = run.volatile_info;
    vol["scenario_path"] = scenario_path;
    vol["threads"] = omp_get_max_threads();
    Json walls;
    for (const auto& st : timing) walls[st.name] = st.seconds;
    walls["total"] = total;
    vol["wall_seconds"] = walls;
    manifest["volatile"] = vol;
    write_file(out_dir / "manifest.json", dump_json(manifest));

    summary.artifacts = out.names();
    if (failure) std::rethrow_exception(*failure);
    return summary;
}

}  // namespace blochhom
