#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "blochhom/common.hpp"

// Pointwise kernels of the split-step propagators and the per-cell projection.
//
// Each kernel exists twice with the same signature: `serial` is the plain
// reference loop, `parallel` is the OpenMP version used by the solvers. Every
// output element depends only on its own inputs, so both produce bit-identical
// results regardless of thread count.

namespace blochhom::kernels {

/// Input of the fine-scale potential step, V_j = base_j + Re(time_phase * drive_phase_j) * drive_profile_j.
struct FinePotentialTerms {
    std::span<const double> base;  // empty for drive-only phases
    std::span<const cxd> drive_phase;    // empty when undriven
    std::span<const double> drive_profile;
    cxd time_phase{0.0, 0.0};
    double drive_scale = 0.0;
};

namespace serial {

void multiply(std::span<cxd> u, std::span<const cxd> factor);
void phase_rotate(std::span<cxd> u, std::span<const double> potential, double tau);
void rabi_rotate(std::span<cxd> a, std::span<cxd> b, std::span<const double> envelope, cxd coupling,
                 double tau);
void eigen_rotate(std::span<const std::span<cxd>> fields, std::span<const double> envelope,
                  const Eigen::MatrixXcd& eigenvectors, const Eigen::VectorXd& eigenvalues, double tau);
void fine_potential_phase(std::span<cxd> u, const FinePotentialTerms& terms, double tau);
void fine_potential_values(std::span<double> out, const FinePotentialTerms& terms);
void cell_projection(std::span<const cxd> u, std::span<const cxd> cell_weights,
                     std::span<const cxd> cell_phase, std::span<cxd> out);
/// uhat[r + j * classes] <- sum_k blocks[r][j][k] uhat[r + k * classes], blocks row-major P x P.
void block_apply(std::span<cxd> uhat, std::span<const cxd> blocks, std::size_t classes, std::size_t P);

}  // namespace serial

namespace parallel {

void multiply(std::span<cxd> u, std::span<const cxd> factor);
void phase_rotate(std::span<cxd> u, std::span<const double> potential, double tau);
void rabi_rotate(std::span<cxd> a, std::span<cxd> b, std::span<const double> envelope, cxd coupling,
                 double tau);
void eigen_rotate(std::span<const std::span<cxd>> fields, std::span<const double> envelope,
                  const Eigen::MatrixXcd& eigenvectors, const Eigen::VectorXd& eigenvalues, double tau);
void fine_potential_phase(std::span<cxd> u, const FinePotentialTerms& terms, double tau);
void fine_potential_values(std::span<double> out, const FinePotentialTerms& terms);
void cell_projection(std::span<const cxd> u, std::span<const cxd> cell_weights,
                     std::span<const cxd> cell_phase, std::span<cxd> out);
/// uhat[r + j * classes] <- sum_k blocks[r][j][k] uhat[r + k * classes], blocks row-major P x P.
void block_apply(std::span<cxd> uhat, std::span<const cxd> blocks, std::size_t classes, std::size_t P);

}  // namespace parallel

}  // namespace blochhom::kernels
