// Serial reference against OpenMP kernels at fine-solver sizes.

#include "blochhom/kernels.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace blochhom;

namespace {

std::vector<cxd> random_field(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> d;
    std::vector<cxd> v(n);
    for (auto& x : v) x = {d(rng), d(rng)};
    return v;
}

std::vector<double> random_real(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

template <bool Parallel>
void phase_rotate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto u = random_field(n, 1);
    const auto v = random_real(n, 2);
    for (auto _ : state) {
        if constexpr (Parallel) kernels::parallel::phase_rotate(u, v, 1e-4);
        else kernels::serial::phase_rotate(u, v, 1e-4);
        benchmark::DoNotOptimize(u.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

template <bool Parallel>
void fine_potential_phase(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto u = random_field(n, 1);
    const auto base = random_real(n, 2);
    const auto phase = random_field(n, 3);
    const auto profile = random_real(n, 4);
    const kernels::FinePotentialTerms t{base, phase, profile, std::polar(1.0, 0.3), 2.0};
    for (auto _ : state) {
        if constexpr (Parallel) kernels::parallel::fine_potential_phase(u, t, 1e-4);
        else kernels::serial::fine_potential_phase(u, t, 1e-4);
        benchmark::DoNotOptimize(u.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

template <bool Parallel>
void rabi_rotate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = random_field(n, 1), b = random_field(n, 2);
    const auto env = random_real(n, 3);
    for (auto _ : state) {
        if constexpr (Parallel) kernels::parallel::rabi_rotate(a, b, env, {0.3, 0.1}, 1e-3);
        else kernels::serial::rabi_rotate(a, b, env, {0.3, 0.1}, 1e-3);
        benchmark::DoNotOptimize(a.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

template <bool Parallel>
void eigen_rotate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Eigen::Matrix3cd d = Eigen::Matrix3cd::Zero();
    d(0, 1) = d(1, 0) = 0.4;
    d(1, 2) = d(2, 1) = 0.7;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d);
    auto x = random_field(n, 1), y = random_field(n, 2), z = random_field(n, 3);
    const std::vector<std::span<cxd>> fields{x, y, z};
    const auto env = random_real(n, 4);
    for (auto _ : state) {
        if constexpr (Parallel) kernels::parallel::eigen_rotate(fields, env, es.eigenvectors(), es.eigenvalues(), 1e-3);
        else kernels::serial::eigen_rotate(fields, env, es.eigenvectors(), es.eigenvalues(), 1e-3);
        benchmark::DoNotOptimize(x.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

// Bloch-class propagator: n points, P = 16 points per cell.
template <bool Parallel>
void block_apply(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    constexpr std::size_t P = 16;
    const std::size_t classes = n / P;
    auto u = random_field(n, 1);
    const auto blocks = random_field(classes * P * P, 2);
    for (auto _ : state) {
        if constexpr (Parallel) kernels::parallel::block_apply(u, blocks, classes, P);
        else kernels::serial::block_apply(u, blocks, classes, P);
        benchmark::DoNotOptimize(u.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

template <bool Parallel>
void cell_projection(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    constexpr std::size_t P = 16;
    const auto u = random_field(n, 1);
    const auto w = random_field(P, 2);
    const auto ph = random_field(n / P, 3);
    std::vector<cxd> out(n / P);
    for (auto _ : state) {
        if constexpr (Parallel) kernels::parallel::cell_projection(u, w, ph, out);
        else kernels::serial::cell_projection(u, w, ph, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

}  // namespace

#define BLOCHHOM_PAIR(fn)                                                             \
    BENCHMARK(fn<false>)->Name(#fn "/serial")->RangeMultiplier(4)->Range(1 << 12, 1 << 18); \
    BENCHMARK(fn<true>)->Name(#fn "/parallel")->RangeMultiplier(4)->Range(1 << 12, 1 << 18)

BLOCHHOM_PAIR(phase_rotate);
BLOCHHOM_PAIR(fine_potential_phase);
BLOCHHOM_PAIR(rabi_rotate);
BLOCHHOM_PAIR(eigen_rotate);
BLOCHHOM_PAIR(block_apply);
BLOCHHOM_PAIR(cell_projection);

BENCHMARK_MAIN();
