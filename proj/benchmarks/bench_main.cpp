#include <benchmark/benchmark.h>

#include <numeric>

#include "sip/clustering.hpp"
#include "sip/hmm.hpp"
#include "sip/predictor.hpp"
#include "sip/rng.hpp"
#include "sip/segmentation.hpp"
#include "sip/simulation.hpp"

namespace {

using namespace sip;

std::vector<int> random_actions(int len, int m, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> actions(static_cast<std::size_t>(len));
    for (auto& a : actions) a = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m)));
    return actions;
}

void BM_Forward(benchmark::State& state) {
    const auto params = PredictorParams::random_init(26, 20, 1);
    const auto actions = random_actions(static_cast<int>(state.range(0)), 26, 2);
    for (auto _ : state) benchmark::DoNotOptimize(forward(actions, params));
    state.SetItemsProcessed(state.iterations() * (state.range(0) - 1));
}
BENCHMARK(BM_Forward)->Arg(30)->Arg(100);

void BM_Gradient(benchmark::State& state) {
    const auto params = PredictorParams::random_init(26, 20, 1);
    const auto actions = random_actions(static_cast<int>(state.range(0)), 26, 2);
    for (auto _ : state) benchmark::DoNotOptimize(gradient(actions, params));
    state.SetItemsProcessed(state.iterations() * (state.range(0) - 1));
}
BENCHMARK(BM_Gradient)->Arg(30)->Arg(100);

void BM_EntropyProcess(benchmark::State& state) {
    const auto params = PredictorParams::random_init(26, 20, 1);
    ResponseProcess p;
    p.id = "bench";
    p.actions = random_actions(100, 26, 3);
    for (auto _ : state) benchmark::DoNotOptimize(entropy_process(p, params));
}
BENCHMARK(BM_EntropyProcess);

void BM_Segment(benchmark::State& state) {
    Rng rng(5);
    std::vector<double> h(static_cast<std::size_t>(state.range(0)));
    for (auto& v : h) v = rng.uniform() * 3.0;
    for (auto _ : state) benchmark::DoNotOptimize(segment(h, 0.3));
}
BENCHMARK(BM_Segment)->Arg(100)->Arg(1000);

void BM_KMeansFit(benchmark::State& state) {
    Rng rng(7);
    std::vector<FrequencyProfile> profiles;
    for (int i = 0; i < 2000; ++i) {
        FrequencyProfile p;
        Eigen::VectorXd v(26);
        for (int j = 0; j < 26; ++j) v[j] = -std::log(1.0 - rng.uniform());
        p.z = v / v.sum();
        p.length = 5;
        profiles.push_back(std::move(p));
    }
    KMeansConfig config;
    config.restarts = 1;
    for (auto _ : state) benchmark::DoNotOptimize(kmeans_fit(profiles, 4, config));
}
BENCHMARK(BM_KMeansFit);

void BM_ViterbiDecode(benchmark::State& state) {
    Rng rng(9);
    HmmParams params;
    auto simplex = [&](int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = -std::log(1.0 - rng.uniform());
        return (v / v.sum()).eval();
    };
    params.initial = simplex(4);
    params.transition = Eigen::MatrixXd(4, 4);
    params.emission = Eigen::MatrixXd(4, 26);
    for (int i = 0; i < 4; ++i) {
        params.transition.row(i) = simplex(4).transpose();
        params.emission.row(i) = simplex(26).transpose();
    }
    const auto actions = random_actions(100, 26, 11);
    for (auto _ : state) benchmark::DoNotOptimize(hmm_decode(actions, params));
}
BENCHMARK(BM_ViterbiDecode);

void BM_BaumWelchIteration(benchmark::State& state) {
    const auto sim = simulate_dataset(200, 4, 26, 13);
    std::vector<std::size_t> idx(sim.dataset.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    HmmConfig config;
    config.restarts = 1;
    config.max_iter = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(hmm_fit(sim.dataset, idx, 4, config));
}
BENCHMARK(BM_BaumWelchIteration);

void BM_SimulateDataset(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_dataset(static_cast<int>(state.range(0)), 4, 26, 17));
}
BENCHMARK(BM_SimulateDataset)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
