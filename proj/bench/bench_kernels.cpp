#include <benchmark/benchmark.h>

#include <random>

#include "hierax/factor.hpp"
#include "hierax/oracle.hpp"

using namespace hierax;

namespace {

// n ternary variables, values in (0, 1).
Factor dense(VarId first, int n, std::uint64_t seed) {
    std::vector<VarId> scope;
    std::vector<std::size_t> cards;
    for (int i = 0; i < n; ++i) {
        scope.push_back(first + i);
        cards.push_back(3);
    }
    Factor f(scope, cards);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& x : f.values()) x = u(rng);
    return f;
}

// Chain of n ternary variables with random CPTs.
BayesianNetwork chain(int n) {
    BayesianNetwork net;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    VarId prev = -1;
    for (int i = 0; i < n; ++i) {
        const auto v = net.add_variable("X" + std::to_string(i), StateSpace{"a", "b", "c"});
        const std::size_t rows = prev < 0 ? 1 : 3;
        std::vector<double> values;
        for (std::size_t r = 0; r < rows; ++r) {
            std::vector<double> row{u(rng), u(rng), u(rng)};
            const double total = row[0] + row[1] + row[2];
            for (auto x : row) values.push_back(x / total);
        }
        if (prev < 0) net.set_prior(v, values);
        else net.set_cpt(v, {prev}, Factor({prev, v}, {3, 3}, values));
        prev = v;
    }
    return net;
}

void BM_MultiplySerial(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    const auto a = dense(0, n, 1), b = dense(n / 2, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::multiply_serial(a, b));
}

void BM_MultiplyParallel(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    const auto a = dense(0, n, 1), b = dense(n / 2, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::multiply_parallel(a, b, 1));
}

void BM_MarginalizeSerial(benchmark::State& state) {
    const auto f = dense(0, static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::marginalize_serial(f, {0, 2, 4}));
}

void BM_MarginalizeParallel(benchmark::State& state) {
    const auto f = dense(0, static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::marginalize_parallel(f, {0, 2, 4}, 1));
}

void BM_JointSerial(benchmark::State& state) {
    const auto net = chain(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::joint_serial(net));
}

void BM_JointParallel(benchmark::State& state) {
    const auto net = chain(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::joint_parallel(net, 1));
}

}  // namespace

BENCHMARK(BM_MultiplySerial)->DenseRange(4, 8, 2)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_MultiplyParallel)->DenseRange(4, 8, 2)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_MarginalizeSerial)->DenseRange(8, 12, 2)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_MarginalizeParallel)->DenseRange(8, 12, 2)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_JointSerial)->DenseRange(8, 12, 2)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_JointParallel)->DenseRange(8, 12, 2)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
