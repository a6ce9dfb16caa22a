#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "sip/simulation.hpp"

using namespace sip;

namespace {

// Subprocess slices recovered from the truth labels: the subtask chain has a
// zero diagonal, so runs of the state sequence are exactly the subprocesses.
std::vector<std::pair<std::string, std::vector<int>>> truth_runs(const SimulatedInstance& inst) {
    std::vector<std::pair<std::string, std::vector<int>>> runs;
    for (std::size_t t = 0; t < inst.truth.size(); ++t) {
        if (runs.empty() || runs.back().first != inst.truth[t])
            runs.push_back({inst.truth[t], {}});
        runs.back().second.push_back(inst.process.actions[t]);
    }
    return runs;
}

}  // namespace

TEST_CASE("subtask model construction") {
    const auto model = gen_subtask_model(2, 7);
    CHECK(model.transition(0, 0) == 0.0);
    CHECK(model.transition(1, 1) == 0.0);
    CHECK(model.transition(0, 1) == doctest::Approx(1.0));
    CHECK(model.transition(1, 0) == doctest::Approx(1.0));
    CHECK(model.start.sum() == doctest::Approx(1.0));

    const auto big = gen_subtask_model(4, 11);
    for (int i = 0; i < 4; ++i) {
        CHECK(big.transition(i, i) == 0.0);
        CHECK(big.transition.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto again = gen_subtask_model(4, 11);
    CHECK((big.transition - again.transition).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(gen_subtask_model(1, 3), std::invalid_argument);
}

TEST_CASE("subprocess models embed the standard solution") {
    CHECK_THROWS_AS(gen_subprocess_models(2, 5, 1), std::invalid_argument);

    const auto models = gen_subprocess_models(4, 26, 123);
    REQUIRE(models.size() == 4);
    for (const auto& model : models) {
        std::set<int> distinct(model.solution.begin(), model.solution.end());
        CHECK(distinct.size() == 6);

        // Chain successors along the standard solution.
        for (int i = 0; i < 5; ++i)
            CHECK(model.successor[static_cast<std::size_t>(model.solution[i])] ==
                  model.solution[i + 1]);

        // Off-solution actions jump to one of the first five specials.
        std::set<int> chain(model.solution.begin(), model.solution.begin() + 5);
        for (int a = 0; a < 26; ++a) {
            if (chain.count(a)) continue;
            CHECK(chain.count(model.successor[static_cast<std::size_t>(a)]) == 1);
        }

        CHECK(model.start.sum() == doctest::Approx(1.0).epsilon(1e-12));
        for (int i = 0; i < 26; ++i) {
            CHECK(model.transition.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
            // Successor weight 100 against 25 Uniform(0,1) competitors.
            const double mass = model.transition(i, model.successor[static_cast<std::size_t>(i)]);
            CHECK(mass > 100.0 / 125.0);
            CHECK(mass < 1.0);
            CHECK(model.transition.row(i).maxCoeff() == doctest::Approx(mass));
        }
    }
}

TEST_CASE("generator naming widens past single letters") {
    const auto model = gen_generator_model(30, 40, 3);
    CHECK(model.alphabet.size() == 40);
    CHECK(model.alphabet.token(0) == "act0");
    CHECK(model.alphabet.token(39) == "act39");
    CHECK(model.subtask_names.size() == 30);
    CHECK(model.subtask_names[0] == "G0");
    CHECK(model.subprocess_models.size() == 30);
}

TEST_CASE("simulated processes obey the generator laws") {
    const auto model = gen_generator_model(4, 26, 2025);
    std::map<std::string, const SubprocessModel*> by_name;
    for (std::size_t g = 0; g < model.subtask_names.size(); ++g)
        by_name[model.subtask_names[g]] = &model.subprocess_models[g];

    for (int trial = 0; trial < 300; ++trial) {
        Rng rng = Rng::child(4242, static_cast<std::uint64_t>(trial));
        const auto inst = simulate_process(model, rng);

        CHECK(inst.subtasks.size() >= 3);
        CHECK(inst.subtasks.size() <= 6);
        CHECK(inst.truth.size() == inst.process.actions.size());

        for (std::size_t l = 1; l < inst.subtasks.size(); ++l)
            CHECK(inst.subtasks[l] != inst.subtasks[l - 1]);

        const auto runs = truth_runs(inst);
        REQUIRE(runs.size() == inst.subtasks.size());
        for (std::size_t l = 0; l < runs.size(); ++l) {
            CHECK(runs[l].first == inst.subtasks[l]);
            const int terminal = by_name.at(runs[l].first)->solution[5];
            const auto& actions = runs[l].second;
            CHECK(actions.back() == terminal);
            for (std::size_t t = 0; t + 1 < actions.size(); ++t) CHECK(actions[t] != terminal);
        }
    }
}

TEST_CASE("simulated datasets are deterministic and carry truth metadata") {
    const auto a = simulate_dataset(50, 4, 26, 31337);
    const auto b = simulate_dataset(50, 4, 26, 31337);
    REQUIRE(a.dataset.size() == 50);
    CHECK(a.dataset.alphabet == b.dataset.alphabet);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(a.dataset.processes[i].id == b.dataset.processes[i].id);
        CHECK(a.dataset.processes[i].actions == b.dataset.processes[i].actions);
        CHECK(a.dataset.processes[i].meta == b.dataset.processes[i].meta);
        const auto& truth =
            std::get<std::vector<std::string>>(a.dataset.processes[i].meta.at("truth"));
        CHECK(truth.size() == a.dataset.processes[i].actions.size());
    }

    const auto c = simulate_dataset(50, 4, 26, 31338);
    bool any_difference = false;
    for (std::size_t i = 0; i < 50; ++i)
        any_difference = any_difference || a.dataset.processes[i].actions != c.dataset.processes[i].actions;
    CHECK(any_difference);
}

TEST_CASE("subtask sequence lengths look uniform on {3..6}") {
    const auto sim = simulate_dataset(2000, 4, 26, 99);
    std::map<std::size_t, int> counts;
    for (const auto& p : sim.dataset.processes) {
        const auto& truth = std::get<std::vector<std::string>>(p.meta.at("truth"));
        std::size_t runs = 1;
        for (std::size_t t = 1; t < truth.size(); ++t)
            if (truth[t] != truth[t - 1]) ++runs;
        ++counts[runs];
    }
    for (auto [len, count] : counts) {
        CHECK(len >= 3);
        CHECK(len <= 6);
    }
    const double expected = 2000.0 / 4.0;
    double chi2 = 0.0;
    for (std::size_t len = 3; len <= 6; ++len) {
        const double diff = counts[len] - expected;
        chi2 += diff * diff / expected;
    }
    CHECK(chi2 < 16.27);  // chi-square df=3 upper 0.1% point
}

TEST_CASE("successor transitions dominate empirically") {
    const auto sim = simulate_dataset(400, 4, 26, 7);
    std::map<std::string, const SubprocessModel*> by_name;
    for (std::size_t g = 0; g < sim.model.subtask_names.size(); ++g)
        by_name[sim.model.subtask_names[g]] = &sim.model.subprocess_models[g];

    std::size_t followed = 0, total = 0;
    for (const auto& p : sim.dataset.processes) {
        const auto& truth = std::get<std::vector<std::string>>(p.meta.at("truth"));
        for (std::size_t t = 0; t + 1 < p.actions.size(); ++t) {
            if (truth[t] != truth[t + 1]) continue;  // stay within one subprocess
            const auto* sp = by_name.at(truth[t]);
            ++total;
            if (p.actions[t + 1] == sp->successor[static_cast<std::size_t>(p.actions[t])]) ++followed;
        }
    }
    const double rate = static_cast<double>(followed) / static_cast<double>(total);
    CHECK(rate > 100.0 / 125.0);
    CHECK(rate < 1.0);
}
