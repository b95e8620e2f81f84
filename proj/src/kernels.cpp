#include "blochhom/kernels.hpp"

#include <cstddef>
#include <vector>

namespace blochhom::kernels {

namespace {

// Below this many points the thread start-up costs more than the loop.
constexpr std::ptrdiff_t parallel_threshold = 2048;

inline void rabi_point(cxd& a, cxd& b, double g, cxd d, double r, double tau) {
    const double angle = tau * g * r;
    const double c = std::cos(angle);
    const cxd s = imag_unit * (std::sin(angle) / r);
    const cxd na = c * a + s * d * b;
    const cxd nb = c * b + s * std::conj(d) * a;
    a = na;
    b = nb;
}

inline double fine_potential_point(const FinePotentialTerms& t, std::size_t j) {
    double v = t.base.empty() ? 0.0 : t.base[j];
    if (!t.drive_phase.empty()) v += t.drive_scale * (t.time_phase * t.drive_phase[j]).real() * t.drive_profile[j];
    return v;
}

inline void block_apply_one(std::span<cxd> uhat, std::span<const cxd> blocks, std::size_t classes, std::size_t P,
                            std::size_t r, std::vector<cxd>& in) {
    for (std::size_t k = 0; k < P; ++k) in[k] = uhat[r + k * classes];
    const cxd* b = blocks.data() + r * P * P;
    for (std::size_t j = 0; j < P; ++j) {
        cxd acc{};
        for (std::size_t k = 0; k < P; ++k) acc += b[j * P + k] * in[k];
        uhat[r + j * classes] = acc;
    }
}

template <bool Parallel>
void eigen_rotate_impl(std::span<const std::span<cxd>> fields, std::span<const double> envelope,
                       const Eigen::MatrixXcd& U, const Eigen::VectorXd& evals, double tau) {
    const auto K = static_cast<Eigen::Index>(fields.size());
    const auto n = static_cast<std::ptrdiff_t>(envelope.size());
#pragma omp parallel if (Parallel && n > parallel_threshold)
    {
        Eigen::VectorXcd v(K), w(K);
#pragma omp for
        for (std::ptrdiff_t j = 0; j < n; ++j) {
            for (Eigen::Index p = 0; p < K; ++p) v[p] = fields[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)];
            w.noalias() = U.adjoint() * v;
            for (Eigen::Index p = 0; p < K; ++p) w[p] *= std::polar(1.0, tau * envelope[static_cast<std::size_t>(j)] * evals[p]);
            v.noalias() = U * w;
            for (Eigen::Index p = 0; p < K; ++p) fields[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)] = v[p];
        }
    }
}

}  // namespace

namespace serial {

void multiply(std::span<cxd> u, std::span<const cxd> factor) {
    for (std::size_t j = 0; j < u.size(); ++j) u[j] *= factor[j];
}

void phase_rotate(std::span<cxd> u, std::span<const double> potential, double tau) {
    for (std::size_t j = 0; j < u.size(); ++j) u[j] *= std::polar(1.0, tau * potential[j]);
}

void rabi_rotate(std::span<cxd> a, std::span<cxd> b, std::span<const double> envelope, cxd coupling, double tau) {
    const double r = std::abs(coupling);
    if (r == 0.0) return;
    for (std::size_t j = 0; j < a.size(); ++j) rabi_point(a[j], b[j], envelope[j], coupling, r, tau);
}

void eigen_rotate(std::span<const std::span<cxd>> fields, std::span<const double> envelope,
                  const Eigen::MatrixXcd& eigenvectors, const Eigen::VectorXd& eigenvalues, double tau) {
    eigen_rotate_impl<false>(fields, envelope, eigenvectors, eigenvalues, tau);
}

void fine_potential_phase(std::span<cxd> u, const FinePotentialTerms& terms, double tau) {
    for (std::size_t j = 0; j < u.size(); ++j) u[j] *= std::polar(1.0, tau * fine_potential_point(terms, j));
}

void fine_potential_values(std::span<double> out, const FinePotentialTerms& terms) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = fine_potential_point(terms, j);
}

void cell_projection(std::span<const cxd> u, std::span<const cxd> cell_weights, std::span<const cxd> cell_phase,
                     std::span<cxd> out) {
    const std::size_t P = cell_weights.size();
    const double inv = 1.0 / static_cast<double>(P);
    for (std::size_t c = 0; c < out.size(); ++c) {
        cxd acc{};
        for (std::size_t j = 0; j < P; ++j) acc += u[c * P + j] * cell_weights[j];
        out[c] = cell_phase[c] * acc * inv;
    }
}

void block_apply(std::span<cxd> uhat, std::span<const cxd> blocks, std::size_t classes, std::size_t P) {
    std::vector<cxd> in(P);
    for (std::size_t r = 0; r < classes; ++r) block_apply_one(uhat, blocks, classes, P, r, in);
}

}  // namespace serial

namespace parallel {

void multiply(std::span<cxd> u, std::span<const cxd> factor) {
    const auto n = static_cast<std::ptrdiff_t>(u.size());
#pragma omp parallel for if (n > parallel_threshold)
    for (std::ptrdiff_t j = 0; j < n; ++j) u[static_cast<std::size_t>(j)] *= factor[static_cast<std::size_t>(j)];
}

void phase_rotate(std::span<cxd> u, std::span<const double> potential, double tau) {
    const auto n = static_cast<std::ptrdiff_t>(u.size());
#pragma omp parallel for if (n > parallel_threshold)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        const auto i = static_cast<std::size_t>(j);
        u[i] *= std::polar(1.0, tau * potential[i]);
    }
}

void rabi_rotate(std::span<cxd> a, std::span<cxd> b, std::span<const double> envelope, cxd coupling, double tau) {
    const double r = std::abs(coupling);
    if (r == 0.0) return;
    const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for if (n > parallel_threshold)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        const auto i = static_cast<std::size_t>(j);
        rabi_point(a[i], b[i], envelope[i], coupling, r, tau);
    }
}

void eigen_rotate(std::span<const std::span<cxd>> fields, std::span<const double> envelope,
                  const Eigen::MatrixXcd& eigenvectors, const Eigen::VectorXd& eigenvalues, double tau) {
    eigen_rotate_impl<true>(fields, envelope, eigenvectors, eigenvalues, tau);
}

void fine_potential_phase(std::span<cxd> u, const FinePotentialTerms& terms, double tau) {
    const auto n = static_cast<std::ptrdiff_t>(u.size());
#pragma omp parallel for if (n > parallel_threshold)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        const auto i = static_cast<std::size_t>(j);
        u[i] *= std::polar(1.0, tau * fine_potential_point(terms, i));
    }
}

void fine_potential_values(std::span<double> out, const FinePotentialTerms& terms) {
    const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for if (n > parallel_threshold)
    for (std::ptrdiff_t j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = fine_potential_point(terms, static_cast<std::size_t>(j));
}

void cell_projection(std::span<const cxd> u, std::span<const cxd> cell_weights, std::span<const cxd> cell_phase,
                     std::span<cxd> out) {
    const std::size_t P = cell_weights.size();
    const double inv = 1.0 / static_cast<double>(P);
    const auto cells = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for if (static_cast<std::ptrdiff_t>(u.size()) > parallel_threshold)
    for (std::ptrdiff_t c = 0; c < cells; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        cxd acc{};
        for (std::size_t j = 0; j < P; ++j) acc += u[ci * P + j] * cell_weights[j];
        out[ci] = cell_phase[ci] * acc * inv;
    }
}

void block_apply(std::span<cxd> uhat, std::span<const cxd> blocks, std::size_t classes, std::size_t P) {
    const auto n = static_cast<std::ptrdiff_t>(classes);
#pragma omp parallel if (static_cast<std::ptrdiff_t>(uhat.size()) > parallel_threshold)
    {
        std::vector<cxd> in(P);
#pragma omp for
        for (std::ptrdiff_t r = 0; r < n; ++r) block_apply_one(uhat, blocks, classes, P, static_cast<std::size_t>(r), in);
    }
}

}  // namespace parallel

}  // namespace blochhom::kernels
