#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "ctrlcert/attainability.hpp"
#include "ctrlcert/flows.hpp"
#include "ctrlcert/kalman.hpp"
#include "ctrlcert/numerics.hpp"
#include "ctrlcert/simulate.hpp"
#include "ctrlcert/system.hpp"

using namespace ctrlcert;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) out(i, j) = dist(rng);
    return out;
}

LinearSystem random_controllable(std::mt19937_64& rng, int n, int m) {
    for (;;) {
        Eigen::MatrixXd A = random_matrix(rng, n, n);
        Eigen::MatrixXd B = random_matrix(rng, n, m);
        if (B.isZero(0.0)) continue;
        LinearSystem sys(A, B, ControlSet::ball(1.0, m));
        if (kalman::analyze(sys).rank == n) return sys;
    }
}

void bm_mat_exp(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(7u);
    const Eigen::MatrixXd M = random_matrix(rng, n, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(numerics::mat_exp(M, 0.7));
    }
}
BENCHMARK(bm_mat_exp)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void bm_exp_integral(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(8u);
    const Eigen::MatrixXd M = random_matrix(rng, n, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(numerics::exp_integral(M, 0.7));
    }
}
BENCHMARK(bm_exp_integral)->Arg(2)->Arg(4)->Arg(8);

void bm_pushforward_series(benchmark::State& state) {
    std::mt19937_64 rng(9u);
    const LinearSystem sys = random_controllable(rng, 4, 2);
    const auto profile = attainability::saturation_depth(sys);
    const auto basis = attainability::choose_basis(sys, profile.ell_max);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            flows::pushforward_series(sys, 0, 0.5, profile.ell_max, basis));
    }
}
BENCHMARK(bm_pushforward_series);

void bm_certify(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(10u);
    const LinearSystem sys = random_controllable(rng, n, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(attainability::certify(sys, 1.0));
    }
}
BENCHMARK(bm_certify)->Arg(2)->Arg(3)->Arg(4)->Arg(5);

void bm_steer(benchmark::State& state) {
    Eigen::MatrixXd A(2, 2), B(2, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    const LinearSystem sys(A, B, ControlSet::box(Eigen::VectorXd::Ones(1)));
    Eigen::VectorXd target(2);
    target << 0.008, -0.006;
    const Eigen::VectorXd qbar = Eigen::VectorXd::Zero(2);
    const attainability::SteerOptions options;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            attainability::steer(sys, target, qbar, options));
    }
}
BENCHMARK(bm_steer);

void bm_sample_reachable(benchmark::State& state) {
    const int workers = static_cast<int>(state.range(0));
    std::mt19937_64 rng(12u);
    const LinearSystem sys = random_controllable(rng, 4, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            simulate::sample_reachable(sys, 1.0, 1000, 8, 42u, workers));
    }
}
BENCHMARK(bm_sample_reachable)->Arg(1)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
