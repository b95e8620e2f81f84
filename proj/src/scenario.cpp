#include "blochhom/scenario.hpp"

#include "blochhom/format.hpp"
#include "blochhom/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace blochhom {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double to_real(const std::string& text) {
    double v = 0.0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ConfigError("expected a real number, got \"" + text + "\"");
    }
    return v;
}

int to_int(const std::string& text) {
    int v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
        throw ConfigError("expected an integer, got \"" + text + "\"");
    }
    return v;
}

bool to_bool(const std::string& text) {
    const auto t = lower(text);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    throw ConfigError("expected true or false, got \"" + text + "\"");
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.push_back(trim(std::string_view(text).substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"", {"name"}},
        {"potential", {"dimension", "modes", "preset", "amplitude", "coefficients"}},
        {"bands", {"count", "theta_points"}},
        {"tolerances",
         {"gap_rel", "critical", "resonance", "compatibility", "compatibility_chi", "newton_max_iter", "q_max", "snap",
          "fd_hessian_step", "effmass_rel"}},
        {"states", {"initial", "target"}},
        {"resonance", {"p_max", "k_max", "auto_extend"}},
        {"drive", {"kind", "profile", "amplitude", "envelope"}},
        {"macro", {"box_length", "points", "T", "dt", "steps", "initial", "tensors", "coupling", "snapshot_every"}},
        {"fine",
         {"epsilons", "points_per_cell", "dt_safety", "samples", "reconstruct_with_corrector", "linear_interpolation",
          "splitting"}},
        {"outputs", {"directory"}},
    };
    return keys;
}

struct Entry {
    std::string value;
    int line = 0;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

class Reader {
public:
    Reader(const Sections& s, std::string origin) : sections_(s), origin_(std::move(origin)) {}

    bool has_section(const std::string& sec) const { return sections_.contains(sec); }

    template <typename F>
    void with(const std::string& sec, const std::string& key, F&& apply) const {
        const auto s = sections_.find(sec);
        if (s == sections_.end()) return;
        const auto e = s->second.find(key);
        if (e == s->second.end()) return;
        try {
            apply(e->second.value);
        } catch (const Error& err) {
            throw ConfigError(origin_ + ":" + std::to_string(e->second.line) + ": [" + sec + "] " + key + ": " +
                              err.what());
        }
    }

private:
    const Sections& sections_;
    std::string origin_;
};

double envelope_tail_fraction(const InitialEnvelope& v0, double L, int dim) {
    const int n = dim == 1 ? 4096 : 256;
    double total = 0.0, tail = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < (dim == 1 ? 1 : n); ++j) {
            const double x[2] = {L * (i + 0.5) / n, L * (j + 0.5) / n};
            const double w = std::pow(v0(std::span(x, static_cast<std::size_t>(dim))), 2);
            total += w;
            bool outer = false;
            for (int d = 0; d < dim; ++d) outer = outer || x[d] < 0.05 * L || x[d] > 0.95 * L;
            if (outer) tail += w;
        }
    }
    return total > 0.0 ? tail / total : 0.0;
}

}  // namespace

PotentialSpec PotentialSpec::parse(const std::string& text, int dim) {
    PotentialSpec p;
    p.dim = dim;
    const std::string t = trim(text);
    if (t.starts_with("custom")) {
        const auto open = t.find('(');
        if (open == std::string::npos || t.back() != ')') throw ConfigError("custom potential needs custom([[k, re, im], ...])");
        p.preset = "custom";
        const auto list = nlohmann::json::parse(t.substr(open + 1, t.size() - open - 2), nullptr, false);
        if (list.is_discarded() || !list.is_array()) throw ConfigError("custom coefficient list is not a valid list");
        for (const auto& item : list) {
            const std::size_t width = static_cast<std::size_t>(dim) + 2;
            if (!item.is_array() || item.size() != width) {
                throw ConfigError("each custom coefficient needs " + std::to_string(width) + " entries [k..., re, im]");
            }
            ModeCoefficient mc;
            for (int d = 0; d < dim; ++d) {
                if (!item[static_cast<std::size_t>(d)].is_number_integer()) throw ConfigError("mode indices must be integers");
                mc.k[static_cast<std::size_t>(d)] = item[static_cast<std::size_t>(d)].get<int>();
            }
            mc.value = {item[width - 2].get<double>(), item[width - 1].get<double>()};
            p.coefficients.push_back(mc);
        }
        return p;
    }
    const auto [name, args] = parse_call(t);
    p.preset = lower(name);
    if (p.preset == "free") {
        if (!args.empty()) throw ConfigError("free takes no arguments");
    } else if (p.preset == "mathieu" || p.preset == "constant") {
        if (args.size() > 1) throw ConfigError(p.preset + " takes at most one argument");
        if (!args.empty()) p.amplitude = args[0];
    } else {
        throw ConfigError("unknown potential preset \"" + name + "\" (free, constant, mathieu, custom)");
    }
    return p;
}

PeriodicPotential PotentialSpec::build(const TorusGrid& grid) const {
    if (preset == "free") return PeriodicPotential::zero(grid);
    if (preset == "constant") return PeriodicPotential::constant(grid, amplitude);
    if (preset == "mathieu") return PeriodicPotential::mathieu(grid, amplitude);
    return PeriodicPotential::from_coefficients(grid, coefficients);
}

std::string PotentialSpec::to_string() const {
    if (preset == "free") return "free";
    if (preset != "custom") return preset + "(" + shortest(amplitude) + ")";
    std::string s = "custom([";
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        const auto& c = coefficients[i];
        s += (i ? ", [" : "[") + std::to_string(c.k[0]) + ", ";
        if (dim == 2) s += std::to_string(c.k[1]) + ", ";
        s += shortest(c.value.real()) + ", " + shortest(c.value.imag()) + "]";
    }
    return s + "])";
}

StateRequest StateRequest::parse(const std::string& text, int dim) {
    const auto at = text.find('@');
    if (at == std::string::npos) throw ConfigError("state must read \"band @ theta\", e.g. \"1 @ 0\" or \"2 @ auto:min\"");
    StateRequest r;
    r.band = to_int(trim(std::string_view(text).substr(0, at)));
    if (r.band < 1) throw ConfigError("band indices start at 1");
    const std::string th = trim(std::string_view(text).substr(at + 1));
    if (th == "auto:min" || th == "auto") {
        r.automatic = Auto::min;
    } else if (th == "auto:max") {
        r.automatic = Auto::max;
    } else {
        r.theta = BlochTheta::parse(th);
        if (r.theta->dim() != dim) {
            throw ConfigError("theta \"" + th + "\" has " + std::to_string(r.theta->dim()) + " components, dimension is " +
                              std::to_string(dim));
        }
    }
    return r;
}

std::string StateRequest::to_string() const {
    std::string s = std::to_string(band) + " @ ";
    if (automatic == Auto::min) return s + "auto:min";
    if (automatic == Auto::max) return s + "auto:max";
    return s + theta->to_string();
}

InitialEnvelope Scenario::initial_envelope() const {
    if (!macro) return InitialEnvelope::constant(1.0);
    if (!macro->initial.empty()) return InitialEnvelope::parse(macro->initial);
    const double c = macro->box_length / 2;
    return InitialEnvelope::gaussian(std::vector<double>(static_cast<std::size_t>(dimension), c), macro->box_length / 16);
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    Sections sections;
    sections[""];
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    auto fail = [&](const std::string& msg) { return ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg); };
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw fail("malformed section header \"" + line + "\"");
            current = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!known_keys().contains(current) || current.empty()) throw fail("unknown section [" + current + "]");
            if (sections.contains(current)) throw fail("section [" + current + "] appears twice");
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw fail("expected key = value, got \"" + line + "\"");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        const auto& allowed = known_keys().at(current);
        if (!allowed.contains(key)) {
            throw fail("unknown key \"" + key + "\"" + (current.empty() ? "" : " in [" + current + "]"));
        }
        if (value.empty()) throw fail("key \"" + key + "\" has no value");
        auto& sec = sections[current];
        if (sec.contains(key)) throw fail("key \"" + key + "\" given twice");
        sec[key] = {value, line_no};
    }

    const Reader r(sections, origin);
    Scenario s;
    r.with("", "name", [&](const std::string& v) { s.name = v; });
    r.with("potential", "dimension", [&](const std::string& v) { s.dimension = to_int(v); });
    if (s.dimension != 1 && s.dimension != 2) {
        r.with("potential", "dimension", [](const std::string&) { throw ConfigError("dimension must be 1 or 2"); });
    }
    r.with("potential", "modes", [&](const std::string& v) { s.modes = to_int(v); });
    std::string preset = "free";
    r.with("potential", "preset", [&](const std::string& v) {
        preset = lower(v);
        if (preset != "free" && preset != "mathieu" && preset != "custom" && preset != "constant") {
            throw ConfigError("unknown preset \"" + v + "\" (free, mathieu, custom)");
        }
    });
    s.potential.preset = preset == "custom" ? "free" : preset;
    s.potential.dim = s.dimension;
    r.with("potential", "amplitude", [&](const std::string& v) {
        if (preset != "mathieu" && preset != "constant") throw ConfigError("amplitude applies to the mathieu and constant presets");
        s.potential.amplitude = to_real(v);
    });
    r.with("potential", "coefficients", [&](const std::string& v) {
        if (preset != "custom") throw ConfigError("coefficients need preset = custom");
        s.potential = PotentialSpec::parse("custom(" + v + ")", s.dimension);
    });
    if (preset == "custom" && s.potential.preset != "custom") {
        throw ConfigError(origin + ": [potential] preset = custom needs a coefficients list");
    }

    r.with("bands", "count", [&](const std::string& v) { s.band_count = to_int(v); });
    r.with("bands", "theta_points", [&](const std::string& v) { s.theta_points = to_int(v); });

    auto& tol = s.tolerances;
    r.with("tolerances", "gap_rel", [&](const std::string& v) { tol.gap_rel = to_real(v); });
    r.with("tolerances", "critical", [&](const std::string& v) { tol.critical = to_real(v); });
    r.with("tolerances", "resonance", [&](const std::string& v) { tol.resonance = to_real(v); });
    r.with("tolerances", "compatibility", [&](const std::string& v) { tol.compatibility = to_real(v); });
    r.with("tolerances", "compatibility_chi", [&](const std::string& v) { tol.compatibility_chi = to_real(v); });
    r.with("tolerances", "newton_max_iter", [&](const std::string& v) { tol.newton_max_iter = to_int(v); });
    r.with("tolerances", "q_max", [&](const std::string& v) { tol.q_max = to_int(v); });
    r.with("tolerances", "snap", [&](const std::string& v) { tol.snap = to_real(v); });
    r.with("tolerances", "fd_hessian_step", [&](const std::string& v) { tol.fd_hessian_step = to_real(v); });
    r.with("tolerances", "effmass_rel", [&](const std::string& v) { tol.effmass_rel = to_real(v); });

    r.with("states", "initial", [&](const std::string& v) { s.initial = StateRequest::parse(v, s.dimension); });
    r.with("states", "target", [&](const std::string& v) { s.target = StateRequest::parse(v, s.dimension); });

    r.with("resonance", "p_max", [&](const std::string& v) { s.resonance.p_max = to_int(v); });
    r.with("resonance", "k_max", [&](const std::string& v) { s.resonance.k_max = to_int(v); });
    r.with("resonance", "auto_extend", [&](const std::string& v) { s.resonance.auto_extend = to_bool(v); });

    if (r.has_section("drive")) s.drive.kind = DriveKind::scalar;
    r.with("drive", "kind", [&](const std::string& v) {
        const auto k = lower(v);
        if (k == "none") s.drive.kind = DriveKind::none;
        else if (k == "scalar") s.drive.kind = DriveKind::scalar;
        else if (k == "em") s.drive.kind = DriveKind::em;
        else throw ConfigError("drive kind must be none, scalar or em");
    });
    r.with("drive", "profile", [&](const std::string& v) {
        for (const auto& part : split(v, ';')) s.drive.profile.push_back(PotentialSpec::parse(part, s.dimension));
    });
    r.with("drive", "amplitude", [&](const std::string& v) { s.drive.amplitude = to_real(v); });
    r.with("drive", "envelope", [&](const std::string& v) {
        DriveEnvelope::parse(v, 1.0);
        s.drive.envelope = v;
    });

    if (r.has_section("macro")) {
        MacroSpec m;
        r.with("macro", "box_length", [&](const std::string& v) { m.box_length = to_real(v); });
        r.with("macro", "points", [&](const std::string& v) { m.points = to_int(v); });
        r.with("macro", "T", [&](const std::string& v) { m.T = to_real(v); });
        bool have_dt = false;
        r.with("macro", "dt", [&](const std::string& v) {
            m.dt = to_real(v);
            have_dt = true;
        });
        r.with("macro", "steps", [&](const std::string& v) {
            if (have_dt) throw ConfigError("give either dt or steps, not both");
            const int n = to_int(v);
            if (n < 1) throw ConfigError("steps must be positive");
            m.dt = m.T / n;
        });
        r.with("macro", "initial", [&](const std::string& v) {
            InitialEnvelope::parse(v);
            m.initial = v;
        });
        r.with("macro", "tensors", [&](const std::string& v) { m.tensors = lower(v); });
        r.with("macro", "coupling", [&](const std::string& v) {
            if (lower(v) != "auto") m.coupling = to_real(v);
        });
        r.with("macro", "snapshot_every", [&](const std::string& v) { m.snapshot_every = to_int(v); });
        s.macro = m;
    }

    if (r.has_section("fine")) {
        FineSpec f;
        f.epsilons = {Rational(1, 8), Rational(1, 16), Rational(1, 32)};
        r.with("fine", "epsilons", [&](const std::string& v) {
            f.epsilons.clear();
            for (const auto& part : split(v, ',')) f.epsilons.push_back(Rational::parse(part));
        });
        r.with("fine", "points_per_cell", [&](const std::string& v) { f.points_per_cell = to_int(v); });
        r.with("fine", "dt_safety", [&](const std::string& v) { f.dt_safety = to_real(v); });
        r.with("fine", "samples", [&](const std::string& v) { f.samples = to_int(v); });
        r.with("fine", "reconstruct_with_corrector", [&](const std::string& v) { f.reconstruct_with_corrector = to_bool(v); });
        r.with("fine", "linear_interpolation", [&](const std::string& v) { f.linear_interpolation = to_bool(v); });
        r.with("fine", "splitting", [&](const std::string& v) {
            const auto k = lower(v);
            if (k == "bloch") f.splitting = FineSplitting::bloch;
            else if (k == "full_potential") f.splitting = FineSplitting::full_potential;
            else throw ConfigError("splitting must be bloch or full_potential");
        });
        s.fine = f;
    }

    s.output_directory = "out/" + s.name;
    r.with("outputs", "directory", [&](const std::string& v) { s.output_directory = v; });
    return s;
}

void validate_scenario(const Scenario& s) {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos) fail("name must be a plain identifier");
    const TorusGrid grid = s.grid();
    s.potential.build(grid);
    if (s.theta_points < 8) fail("[bands] theta_points must be >= 8");
    const int basis = static_cast<int>(grid.mode_count());
    int highest = 1;
    if (s.initial) highest = std::max(highest, s.initial->band);
    if (s.target) highest = std::max(highest, s.target->band);
    if (s.band_count != 0 && s.band_count < highest) {
        fail("[bands] count = " + std::to_string(s.band_count) + " is below the requested band " + std::to_string(highest));
    }
    const int bands = s.band_count != 0 ? s.band_count : std::max(4, highest + 2);
    if (bands >= basis) fail("[bands] count must stay below the plane-wave basis size " + std::to_string(basis));

    if (s.target && !s.initial) fail("[states] target needs an initial state");
    if (s.initial && s.target && s.initial->automatic == StateRequest::Auto::none &&
        s.target->automatic == StateRequest::Auto::none && s.initial->band == s.target->band &&
        *s.initial->theta == *s.target->theta) {
        fail("[states] initial and target are the same state");
    }

    if (s.drive.kind != DriveKind::none) {
        if (!s.target) fail("[drive] needs a target state");
        const std::size_t want = s.drive.kind == DriveKind::scalar ? 1 : static_cast<std::size_t>(s.dimension);
        if (s.drive.profile.size() != want) {
            fail("[drive] profile needs " + std::to_string(want) + " component(s) separated by ';'");
        }
        for (const auto& p : s.drive.profile) p.build(grid);
        const auto env = DriveEnvelope::parse(s.drive.envelope, s.drive.amplitude);
        if (env.kind() == DriveEnvelope::Kind::gaussian_pulse && env.center().size() != static_cast<std::size_t>(s.dimension)) {
            fail("[drive] envelope centre has the wrong dimension");
        }
    }

    if (s.macro) {
        const auto& m = *s.macro;
        if (!s.initial) fail("[macro] needs an initial state");
        MacroGrid{s.dimension, m.box_length, m.points}.validate();
        if (m.T < 0.0) fail("[macro] T must be >= 0");
        if (!(m.dt > 0.0)) fail("[macro] dt must be positive");
        steps_for(m.T, m.dt);
        const auto v0 = s.initial_envelope();
        if (v0.kind() == InitialEnvelope::Kind::gaussian && v0.center().size() != static_cast<std::size_t>(s.dimension)) {
            fail("[macro] initial envelope centre has the wrong dimension");
        }
        if (m.tensors != "auto" && m.tensors != "zero") {
            const auto parts = split(m.tensors, ',');
            if (s.dimension != 1) fail("[macro] explicit tensors are 1D only; use auto or zero");
            if (parts.size() != (s.target ? 2u : 1u)) fail("[macro] tensors needs one value per state");
            for (const auto& p : parts) to_real(p);
        }
        if (m.coupling && !s.target) fail("[macro] coupling override needs a target state");
        if (m.snapshot_every < 0) fail("[macro] snapshot_every must be >= 0");
    }

    if (s.fine) {
        const auto& f = *s.fine;
        if (!s.macro) fail("[fine] needs a [macro] section (box, T, initial envelope)");
        if (s.dimension != 1) fail("[fine] runs are 1D only");
        const auto& m = *s.macro;
        if (m.box_length != std::round(m.box_length)) fail("[fine] needs an integer [macro] box_length");
        if (f.epsilons.empty()) fail("[fine] epsilons must not be empty");
        std::set<std::int64_t> seen;
        for (const auto& e : f.epsilons) {
            if (e.num() != 1 || e.den() < 1) fail("[fine] epsilon " + e.to_string() + " is not of the form 1/M");
            if (!seen.insert(e.den()).second) fail("[fine] epsilon " + e.to_string() + " listed twice");
        }
        if (f.points_per_cell < 4) fail("[fine] points_per_cell must be >= 4");
        if (!(f.dt_safety > 0.0)) fail("[fine] dt_safety must be positive");
        if (f.samples < 1) fail("[fine] samples must be >= 1");
        if (m.T > 0.0) steps_for(m.T / f.samples, m.dt);
        if (m.coupling) fail("[fine] cannot be combined with a [macro] coupling override");
        if (m.tensors != "auto") fail("[fine] needs [macro] tensors = auto");
        const auto L = static_cast<std::int64_t>(m.box_length);
        for (const auto* req : {s.initial ? &*s.initial : nullptr, s.target ? &*s.target : nullptr}) {
            if (!req || !req->theta) continue;
            for (const auto& q : req->theta->components()) {
                for (const auto& e : f.epsilons) {
                    if ((q.num() * L * e.den()) % q.den() != 0) {
                        fail("[fine] theta " + q.to_string() + " is not commensurate with box " + std::to_string(L) +
                             " at eps " + e.to_string());
                    }
                }
            }
        }
        const auto v0 = s.initial_envelope();
        if (v0.kind() != InitialEnvelope::Kind::constant) {
            const double tail = envelope_tail_fraction(v0, m.box_length, s.dimension);
            if (tail > 1e-8) fail("[macro] initial envelope leaves " + shortest(tail) + " of its mass in the outer 5% of the box");
        }
    }
}

std::string Scenario::canonical() const {
    std::ostringstream o;
    o << "name = " << name << "\n\n[potential]\n";
    o << "dimension = " << dimension << "\nmodes = " << modes << "\n";
    o << "preset = " << potential.preset << "\n";
    if (potential.preset == "mathieu" || potential.preset == "constant") o << "amplitude = " << shortest(potential.amplitude) << "\n";
    if (potential.preset == "custom") {
        const auto s = potential.to_string();
        o << "coefficients = " << s.substr(7, s.size() - 8) << "\n";
    }
    int highest = 1;
    if (initial) highest = std::max(highest, initial->band);
    if (target) highest = std::max(highest, target->band);
    o << "\n[bands]\ncount = " << (band_count != 0 ? band_count : std::max(4, highest + 2)) << "\n";
    o << "theta_points = " << theta_points << "\n";
    const auto& t = tolerances;
    o << "\n[tolerances]\ngap_rel = " << shortest(t.gap_rel) << "\ncritical = " << shortest(t.critical)
      << "\nresonance = " << shortest(t.resonance) << "\ncompatibility = " << shortest(t.compatibility)
      << "\ncompatibility_chi = " << shortest(t.compatibility_chi) << "\nnewton_max_iter = " << t.newton_max_iter
      << "\nq_max = " << t.q_max << "\nsnap = " << shortest(t.snap) << "\nfd_hessian_step = " << shortest(t.fd_hessian_step)
      << "\neffmass_rel = " << shortest(t.effmass_rel) << "\n";
    o << "\n[states]\n";
    if (initial) o << "initial = " << initial->to_string() << "\n";
    if (target) o << "target = " << target->to_string() << "\n";
    o << "\n[resonance]\np_max = " << resonance.p_max << "\nk_max = " << resonance.k_max
      << "\nauto_extend = " << (resonance.auto_extend ? "true" : "false") << "\n";
    o << "\n[drive]\nkind = " << (drive.kind == DriveKind::none ? "none" : drive.kind == DriveKind::scalar ? "scalar" : "em")
      << "\n";
    if (drive.kind != DriveKind::none) {
        o << "profile = ";
        for (std::size_t i = 0; i < drive.profile.size(); ++i) o << (i ? "; " : "") << drive.profile[i].to_string();
        o << "\namplitude = " << shortest(drive.amplitude) << "\nenvelope = "
          << DriveEnvelope::parse(drive.envelope, drive.amplitude).to_string() << "\n";
    }
    if (macro) {
        const auto& m = *macro;
        o << "\n[macro]\nbox_length = " << shortest(m.box_length) << "\npoints = " << m.points << "\nT = " << shortest(m.T)
          << "\ndt = " << shortest(m.dt) << "\ninitial = " << initial_envelope().to_string() << "\ntensors = " << m.tensors
          << "\ncoupling = " << (m.coupling ? shortest(*m.coupling) : std::string("auto"))
          << "\nsnapshot_every = " << m.snapshot_every << "\n";
    }
    if (fine) {
        const auto& f = *fine;
        o << "\n[fine]\nepsilons = ";
        for (std::size_t i = 0; i < f.epsilons.size(); ++i) o << (i ? ", " : "") << f.epsilons[i].to_string();
        o << "\npoints_per_cell = " << f.points_per_cell << "\ndt_safety = " << shortest(f.dt_safety)
          << "\nsamples = " << f.samples << "\nreconstruct_with_corrector = " << (f.reconstruct_with_corrector ? "true" : "false")
          << "\nlinear_interpolation = " << (f.linear_interpolation ? "true" : "false")
          << "\nsplitting = " << (f.splitting == FineSplitting::bloch ? "bloch" : "full_potential") << "\n";
    }
    o << "\n[outputs]\ndirectory = " << output_directory << "\n";
    return o.str();
}

std::string Scenario::hash() const { return sha256_hex(canonical()); }

Scenario load_scenario(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw ConfigError("scenario file " + path.string() + " does not exist");
    Scenario s = parse_scenario(read_file(path), path.string());
    validate_scenario(s);
    return s;
}

}  // namespace blochhom
