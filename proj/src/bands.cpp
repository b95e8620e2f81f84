#include "blochhom/bands.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

namespace blochhom {

double BandTolerances::gap_tol(double lambda) const { return gap_rel * std::max(1.0, std::abs(lambda)); }

std::vector<std::vector<double>> regular_theta_grid(int dim, int points_per_dim) {
    if (points_per_dim < 1) throw ConfigError("theta grid needs at least one point per dimension");
    std::vector<std::vector<double>> out;
    const double r = points_per_dim;
    if (dim == 1) {
        for (int i = 0; i < points_per_dim; ++i) out.push_back({i / r});
    } else {
        for (int i = 0; i < points_per_dim; ++i)
            for (int j = 0; j < points_per_dim; ++j) out.push_back({i / r, j / r});
    }
    return out;
}

namespace {

std::string theta_string(std::span<const double> theta) {
    std::ostringstream s;
    s.precision(17);
    for (std::size_t i = 0; i < theta.size(); ++i) s << (i ? "," : "") << theta[i];
    return s.str();
}

double band_energy(const PeriodicPotential& c, const TorusGrid& grid, int band, std::span<const double> theta) {
    return cell_spectrum(assemble_shifted_operator(c, theta, grid), band)[band - 1];
}

// Distance on the circle, componentwise max.
double torus_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double x = std::abs(a[j] - b[j]);
        x -= std::floor(x);
        d = std::max(d, std::min(x, 1.0 - x));
    }
    return d;
}

}  // namespace

std::vector<BandSample> sample_bands(const PeriodicPotential& c, const TorusGrid& grid, int first_band, int last_band,
                                     int points_per_dim) {
    if (first_band < 1 || last_band < first_band) throw ConfigError("invalid band range");
    if (points_per_dim < 8) throw ConfigError("band sampling needs at least 8 theta points per dimension");
    if (last_band >= static_cast<int>(grid.mode_count())) throw ConfigError("band range exceeds the basis size");
    const auto thetas = regular_theta_grid(grid.dim(), points_per_dim);
    const auto n = static_cast<std::ptrdiff_t>(thetas.size());
    const int nb = last_band - first_band + 1;

    std::vector<Eigen::VectorXd> spectra(thetas.size());
    std::vector<std::string> failures(thetas.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        try {
            spectra[ui] = cell_spectrum(assemble_shifted_operator(c, thetas[ui], grid), last_band + 1);
        } catch (const std::exception& e) {
            failures[ui] = e.what();
        }
    }
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        if (!failures[i].empty()) throw NumericalError("band sampling failed at theta=" + theta_string(thetas[i]) + ": " + failures[i]);
    }

    std::vector<BandSample> out(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) {
        auto& s = out[static_cast<std::size_t>(b)];
        s.band = first_band + b;
        s.thetas = thetas;
        for (const auto& ev : spectra) {
            const int idx = s.band - 1;
            double gap = ev[idx + 1] - ev[idx];
            if (idx > 0) gap = std::min(gap, ev[idx] - ev[idx - 1]);
            s.lambdas.push_back(ev[idx]);
            s.gaps.push_back(std::max(gap, 0.0));
        }
    }
    return out;
}

std::vector<double> group_velocity(const PeriodicPotential& c, const TorusGrid& grid, int band,
                                   std::span<const double> theta, const BandTolerances& tol) {
    const auto pair = bloch_eigenpair(c, grid, theta, band, 0.0);
    if (pair.gap <= tol.gap_tol(pair.lambda)) {
        throw AssumptionError("band " + std::to_string(band) + " is degenerate at theta=" + theta_string(theta) +
                              "; the eigenvalue is not differentiable there");
    }
    std::vector<double> g(static_cast<std::size_t>(grid.dim()), 0.0);
    for (std::size_t i = 0; i < grid.mode_count(); ++i) {
        const Mode k = grid.mode(i);
        const double w = std::norm(pair.psi.coeffs[static_cast<Eigen::Index>(i)]);
        for (int j = 0; j < grid.dim(); ++j) {
            g[static_cast<std::size_t>(j)] += (k[static_cast<std::size_t>(j)] + theta[static_cast<std::size_t>(j)]) * w;
        }
    }
    for (auto& v : g) v *= eight_pi_sq;
    return g;
}

Eigen::MatrixXd fd_hessian(const PeriodicPotential& c, const TorusGrid& grid, int band, std::span<const double> theta,
                           double h) {
    const int dim = grid.dim();
    std::vector<double> t(theta.begin(), theta.end());
    auto at = [&](int j, double dj, int l = -1, double dl = 0.0) {
        std::vector<double> p = t;
        p[static_cast<std::size_t>(j)] += dj;
        if (l >= 0) p[static_cast<std::size_t>(l)] += dl;
        return band_energy(c, grid, band, p);
    };
    const double f0 = band_energy(c, grid, band, t);
    Eigen::MatrixXd H(dim, dim);
    for (int j = 0; j < dim; ++j) {
        H(j, j) = (-at(j, 2 * h) + 16 * at(j, h) - 30 * f0 + 16 * at(j, -h) - at(j, -2 * h)) / (12 * h * h);
    }
    if (dim == 2) {
        auto mixed = [&](double s) {
            return (at(0, s, 1, s) - at(0, s, 1, -s) - at(0, -s, 1, s) + at(0, -s, 1, -s)) / (4 * s * s);
        };
        H(0, 1) = H(1, 0) = (4 * mixed(h) - mixed(2 * h)) / 3;
    }
    return H;
}

std::string StateSpec::label() const {
    std::string s = "band " + std::to_string(band) + " @ ";
    if (exact_theta) return s + exact_theta->to_string();
    return s + theta_string(theta);
}

StateSpec make_state(const PeriodicPotential& c, const TorusGrid& grid, int band, std::span<const double> theta,
                     const BandTolerances& tol) {
    StateSpec s;
    s.band = band;
    s.theta.assign(theta.begin(), theta.end());
    const auto pair = bloch_eigenpair(c, grid, theta, band, 0.0);
    s.lambda = pair.lambda;
    s.gap = pair.gap;
    s.simple = pair.gap > tol.gap_tol(pair.lambda);
    if (s.simple) {
        const auto g = group_velocity(c, grid, band, theta, tol);
        double sq = 0.0;
        for (double v : g) sq += v * v;
        s.grad_norm = std::sqrt(sq);
        s.critical = s.grad_norm < tol.critical;
    } else {
        s.grad_norm = std::numeric_limits<double>::quiet_NaN();
    }
    s.a1_verified = s.simple && s.critical;
    return s;
}

StateSpec make_state(const PeriodicPotential& c, const TorusGrid& grid, int band, const BlochTheta& theta,
                     const BandTolerances& tol) {
    const auto values = theta.values();
    StateSpec s = make_state(c, grid, band, values, tol);
    s.exact_theta = theta;
    return s;
}

BlochEigenpair state_eigenpair(const PeriodicPotential& c, const TorusGrid& grid, const StateSpec& state) {
    return bloch_eigenpair(c, grid, state.theta, state.band, 0.0);
}

std::vector<StateSpec> find_critical_points(const BandSample& sample, const PeriodicPotential& c, const TorusGrid& grid,
                                            const BandTolerances& tol) {
    const int dim = grid.dim();
    const std::size_t count = sample.thetas.size();
    const int r = dim == 1 ? static_cast<int>(count) : static_cast<int>(std::lround(std::sqrt(static_cast<double>(count))));
    auto idx = [&](int i, int j) { return dim == 1 ? static_cast<std::size_t>(i) : static_cast<std::size_t>(i) * r + j; };
    auto wrap = [r](int i) { return ((i % r) + r) % r; };

    std::vector<std::size_t> candidates;
    for (std::size_t p = 0; p < count; ++p) {
        const int i = dim == 1 ? static_cast<int>(p) : static_cast<int>(p) / r;
        const int j = dim == 1 ? 0 : static_cast<int>(p) % r;
        bool all_dims = true;
        for (int d = 0; d < dim && all_dims; ++d) {
            const std::size_t fwd = d == 0 ? idx(wrap(i + 1), j) : idx(i, wrap(j + 1));
            const std::size_t bwd = d == 0 ? idx(wrap(i - 1), j) : idx(i, wrap(j - 1));
            const double df = sample.lambdas[fwd] - sample.lambdas[p];
            const double db = sample.lambdas[p] - sample.lambdas[bwd];
            all_dims = (df * db <= 0.0);
        }
        if (all_dims) candidates.push_back(p);
    }

    std::vector<StateSpec> found;
    for (std::size_t p : candidates) {
        std::vector<double> theta = sample.thetas[p];
        int iterations = 0;
        bool converged = false;
        bool simple = true;
        try {
            auto g = group_velocity(c, grid, sample.band, theta, tol);
            auto norm = [](const std::vector<double>& v) {
                double s = 0.0;
                for (double x : v) s += x * x;
                return std::sqrt(s);
            };
            double gn = norm(g);
            const double h = 1e-5;
            while (gn >= tol.critical && iterations < tol.newton_max_iter) {
                ++iterations;
                Eigen::MatrixXd H(dim, dim);
                for (int l = 0; l < dim; ++l) {
                    auto tp = theta, tm = theta;
                    tp[static_cast<std::size_t>(l)] += h;
                    tm[static_cast<std::size_t>(l)] -= h;
                    const auto gp = group_velocity(c, grid, sample.band, tp, tol);
                    const auto gm = group_velocity(c, grid, sample.band, tm, tol);
                    for (int k = 0; k < dim; ++k) H(k, l) = (gp[static_cast<std::size_t>(k)] - gm[static_cast<std::size_t>(k)]) / (2 * h);
                }
                H = 0.5 * (H + H.transpose()).eval();
                Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(g.data(), dim);
                Eigen::VectorXd step = H.completeOrthogonalDecomposition().solve(gv);
                double damping = 1.0;
                bool improved = false;
                for (int tries = 0; tries < 12; ++tries) {
                    auto trial = theta;
                    for (int k = 0; k < dim; ++k) trial[static_cast<std::size_t>(k)] -= damping * step[k];
                    const auto gt = group_velocity(c, grid, sample.band, trial, tol);
                    if (norm(gt) < gn) {
                        theta = trial;
                        g = gt;
                        gn = norm(gt);
                        improved = true;
                        break;
                    }
                    damping *= 0.5;
                }
                if (!improved) break;
            }
            converged = gn < tol.critical;
        } catch (const AssumptionError&) {
            simple = false;
        }

        for (auto& t : theta) t -= std::floor(t);
        std::optional<BlochTheta> exact;
        {
            std::vector<Rational> comps;
            for (double t : theta) {
                auto q = snap_to_rational(t, tol.q_max, tol.snap);
                if (!q) break;
                comps.push_back(*q);
            }
            if (comps.size() == theta.size()) exact = BlochTheta(comps);
        }
        StateSpec s = exact ? make_state(c, grid, sample.band, *exact, tol) : make_state(c, grid, sample.band, theta, tol);
        s.newton_iterations = iterations;
        s.converged = simple && (converged || s.critical);
        if (s.simple) {
            const Eigen::MatrixXd H = fd_hessian(c, grid, sample.band, s.theta, tol.fd_hessian_step);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
            const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
            s.hessian_degenerate = es.eigenvalues().cwiseAbs().minCoeff() < 1e-6 * scale;
        }

        const bool duplicate = std::any_of(found.begin(), found.end(), [&](const StateSpec& o) {
            return torus_distance(o.theta, s.theta) < 1e-7;
        });
        if (!duplicate) found.push_back(std::move(s));
    }
    std::sort(found.begin(), found.end(), [](const StateSpec& a, const StateSpec& b) { return a.theta < b.theta; });
    return found;
}

}  // namespace blochhom
