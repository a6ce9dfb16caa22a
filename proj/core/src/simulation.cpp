#include "sip/simulation.hpp"

#include <fstream>
#include <span>
#include <stdexcept>

#include <json.hpp>

namespace sip {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::size_t draw(const VectorXd& weights, Rng& rng) {
    return rng.discrete(std::span<const double>(weights.data(), static_cast<std::size_t>(weights.size())));
}

}  // namespace

SubtaskModel gen_subtask_model(int subtask_count, std::uint64_t seed) {
    Rng rng(seed);
    if (subtask_count < 2)
        throw std::invalid_argument("gen_subtask_model: need at least 2 subtasks");

    SubtaskModel model;
    model.start = VectorXd(subtask_count);
    for (int i = 0; i < subtask_count; ++i) model.start[i] = rng.uniform();
    model.start /= model.start.sum();

    model.transition = MatrixXd(subtask_count, subtask_count);
    for (int i = 0; i < subtask_count; ++i)
        for (int j = 0; j < subtask_count; ++j) model.transition(i, j) = rng.uniform();
    model.transition.diagonal().setZero();
    for (int i = 0; i < subtask_count; ++i) model.transition.row(i) /= model.transition.row(i).sum();
    return model;
}

std::vector<SubprocessModel> gen_subprocess_models(int subtask_count, int alphabet_size,
                                                   std::uint64_t seed) {
    if (alphabet_size < 6)
        throw std::invalid_argument("gen_subprocess_models: need at least 6 actions");
    Rng rng(seed);

    std::vector<SubprocessModel> models;
    models.reserve(static_cast<std::size_t>(subtask_count));
    for (int g = 0; g < subtask_count; ++g) {
        SubprocessModel model;

        // Six distinct special actions via partial Fisher-Yates.
        std::vector<int> pool(static_cast<std::size_t>(alphabet_size));
        for (int i = 0; i < alphabet_size; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < 6; ++i) {
            const auto j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(alphabet_size - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        model.solution.assign(pool.begin(), pool.begin() + 6);

        // Successor map: chain along the solution; every other action jumps
        // to a uniformly chosen one of the first five specials.
        std::vector<bool> is_chain(static_cast<std::size_t>(alphabet_size), false);
        for (int i = 0; i < 5; ++i) is_chain[static_cast<std::size_t>(model.solution[i])] = true;
        model.successor.assign(static_cast<std::size_t>(alphabet_size), -1);
        for (int i = 0; i < 5; ++i)
            model.successor[static_cast<std::size_t>(model.solution[i])] = model.solution[i + 1];
        for (int a = 0; a < alphabet_size; ++a) {
            if (is_chain[static_cast<std::size_t>(a)]) continue;
            model.successor[static_cast<std::size_t>(a)] =
                model.solution[static_cast<std::size_t>(rng.uniform_int(5))];
        }

        model.start = VectorXd(alphabet_size);
        for (int a = 0; a < alphabet_size; ++a) model.start[a] = rng.uniform();
        model.start /= model.start.sum();

        model.transition = MatrixXd(alphabet_size, alphabet_size);
        for (int i = 0; i < alphabet_size; ++i)
            for (int j = 0; j < alphabet_size; ++j) model.transition(i, j) = rng.uniform();
        for (int i = 0; i < alphabet_size; ++i) {
            model.transition(i, model.successor[static_cast<std::size_t>(i)]) = 100.0;
            model.transition.row(i) /= model.transition.row(i).sum();
        }
        models.push_back(std::move(model));
    }
    return models;
}

GeneratorModel gen_generator_model(int subtask_count, int alphabet_size, std::uint64_t seed) {
    GeneratorModel model;
    std::vector<std::string> tokens;
    tokens.reserve(static_cast<std::size_t>(alphabet_size));
    for (int a = 0; a < alphabet_size; ++a) {
        tokens.push_back(alphabet_size <= 26 ? std::string(1, static_cast<char>('a' + a))
                                             : "act" + std::to_string(a));
    }
    model.alphabet = ActionAlphabet(std::move(tokens));
    for (int g = 0; g < subtask_count; ++g) {
        model.subtask_names.push_back(subtask_count <= 26 ? std::string(1, static_cast<char>('A' + g))
                                                          : "G" + std::to_string(g));
    }
    model.subtask_model = gen_subtask_model(subtask_count, splitmix64(seed ^ 0x5349502d73756274ULL));
    model.subprocess_models =
        gen_subprocess_models(subtask_count, alphabet_size, splitmix64(seed ^ 0x5349502d70726f63ULL));
    return model;
}

SimulatedInstance simulate_process(const GeneratorModel& model, Rng& rng, int cap_steps) {
    const int alphabet_size = model.alphabet.size();
    const int cap = cap_steps > 0 ? cap_steps : 10 * alphabet_size;

    SimulatedInstance instance;
    const std::size_t length = 3 + rng.uniform_int(4);  // L uniform on {3,4,5,6}

    std::size_t subtask = draw(model.subtask_model.start, rng);
    for (std::size_t l = 0; l < length; ++l) {
        if (l > 0)
            subtask = draw(model.subtask_model.transition.row(static_cast<Eigen::Index>(subtask)).transpose(), rng);
        const SubprocessModel& sp = model.subprocess_models[subtask];
        const int terminal = sp.solution[5];

        std::vector<int> subprocess;
        while (true) {
            subprocess.clear();
            int action = static_cast<int>(draw(sp.start, rng));
            subprocess.push_back(action);
            while (action != terminal && static_cast<int>(subprocess.size()) < cap) {
                action = static_cast<int>(draw(sp.transition.row(action).transpose(), rng));
                subprocess.push_back(action);
            }
            if (action == terminal) break;
            ++instance.resamples;  // hit the cap, resample this subprocess
        }

        instance.subtasks.push_back(model.subtask_names[subtask]);
        for (int a : subprocess) {
            instance.process.actions.push_back(a);
            instance.truth.push_back(model.subtask_names[subtask]);
        }
    }
    instance.process.meta["truth"] = instance.truth;
    return instance;
}

SimulatedDataset simulate_dataset(int n, int subtask_count, int alphabet_size,
                                  std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("simulate_dataset: n must be >= 1");

    SimulatedDataset out;
    out.model = gen_generator_model(subtask_count, alphabet_size, seed);
    out.dataset.alphabet = out.model.alphabet;
    out.dataset.processes.reserve(static_cast<std::size_t>(n));

    int digits = 1;
    for (int v = n; v >= 10; v /= 10) ++digits;
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::child(seed, static_cast<std::uint64_t>(i) + 1);
        SimulatedInstance instance = simulate_process(out.model, rng);
        std::string id = std::to_string(i);
        instance.process.id = "sim" + std::string(static_cast<std::size_t>(digits) - id.size(), '0') + id;
        out.total_resamples += static_cast<std::size_t>(instance.resamples);
        out.dataset.processes.push_back(std::move(instance.process));
    }
    return out;
}

void write_generator_sidecar(const std::string& path, const GeneratorModel& model,
                             std::uint64_t seed, int n, std::size_t total_resamples) {
    using nlohmann::json;
    json j;
    j["format"] = "sip-generator";
    j["version"] = 1;
    j["seed"] = seed;
    j["n"] = n;
    j["subtasks"] = model.subtask_names;
    j["alphabet"] = model.alphabet.tokens();
    j["total_resamples"] = total_resamples;

    json start = json::array();
    for (Eigen::Index i = 0; i < model.subtask_model.start.size(); ++i)
        start.push_back(model.subtask_model.start[i]);
    json trans = json::array();
    for (Eigen::Index i = 0; i < model.subtask_model.transition.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < model.subtask_model.transition.cols(); ++k)
            row.push_back(model.subtask_model.transition(i, k));
        trans.push_back(std::move(row));
    }
    j["subtask_model"] = {{"start", std::move(start)}, {"transition", std::move(trans)}};

    json subprocesses = json::array();
    for (std::size_t g = 0; g < model.subprocess_models.size(); ++g) {
        const auto& sp = model.subprocess_models[g];
        json entry;
        entry["subtask"] = model.subtask_names[g];
        json solution = json::array();
        for (int a : sp.solution) solution.push_back(model.alphabet.token(a));
        entry["solution"] = std::move(solution);
        json successor = json::object();
        for (int a = 0; a < model.alphabet.size(); ++a)
            successor[model.alphabet.token(a)] = model.alphabet.token(sp.successor[static_cast<std::size_t>(a)]);
        entry["successor"] = std::move(successor);
        subprocesses.push_back(std::move(entry));
    }
    j["subprocess_models"] = std::move(subprocesses);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write generator sidecar: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace sip
