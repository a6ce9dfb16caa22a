#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sip/data.hpp"
#include "sip/rng.hpp"

namespace sip {

// Top-level Markov model over subtasks: random start distribution and a
// zero-diagonal transition matrix, both built from uniform draws.
struct SubtaskModel {
    Eigen::VectorXd start;        // pi over subtasks
    Eigen::MatrixXd transition;   // zero diagonal, rows sum to 1
};

// Per-subtask action chain with an embedded six-action standard solution:
// each row's heaviest column is the successor map psi, weight 100 against
// Uniform(0,1) competitors.
struct SubprocessModel {
    std::vector<int> solution;    // six distinct action indices; the last one terminates
    std::vector<int> successor;   // psi over all actions
    Eigen::VectorXd start;        // pi^(g)
    Eigen::MatrixXd transition;   // P^(g), rows sum to 1
};

SubtaskModel gen_subtask_model(int subtask_count, std::uint64_t seed);

std::vector<SubprocessModel> gen_subprocess_models(int subtask_count, int alphabet_size,
                                                   std::uint64_t seed);

struct GeneratorModel {
    ActionAlphabet alphabet;
    std::vector<std::string> subtask_names;
    SubtaskModel subtask_model;
    std::vector<SubprocessModel> subprocess_models;
};

// One model draw; alphabet tokens are single letters for M <= 26, "act<i>"
// otherwise, and subtask names are capital letters for R <= 26.
GeneratorModel gen_generator_model(int subtask_count, int alphabet_size, std::uint64_t seed);

struct SimulatedInstance {
    ResponseProcess process;          // meta["truth"] carries the state labels
    std::vector<std::string> truth;   // v, per action
    std::vector<std::string> subtasks;  // q, per subprocess
    int resamples = 0;                // subprocesses regenerated at the step cap
};

// Subtask-sequence length uniform on {3..6}; each subprocess runs its chain
// until the subtask's terminal action appears (inclusive). A subprocess
// exceeding cap_steps is resampled and counted.
SimulatedInstance simulate_process(const GeneratorModel& model, Rng& rng, int cap_steps = 0);

struct SimulatedDataset {
    ProcessDataset dataset;
    GeneratorModel model;
    std::size_t total_resamples = 0;
};

// One generator-model draw per dataset; process i is generated from an
// independent child stream of the seed, so generation parallelizes without
// changing the output.
SimulatedDataset simulate_dataset(int n, int subtask_count, int alphabet_size,
                                  std::uint64_t seed);

void write_generator_sidecar(const std::string& path, const GeneratorModel& model,
                             std::uint64_t seed, int n, std::size_t total_resamples);

}  // namespace sip
