// Command-line front end for the subtask identification pipeline:
// simulate -> train -> segment -> cluster -> label -> sequences -> evaluate,
// plus the HMM baseline and the information-decomposition harness.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sip/clustering.hpp"
#include "sip/data.hpp"
#include "sip/evaluation.hpp"
#include "sip/glm.hpp"
#include "sip/hmm.hpp"
#include "sip/io.hpp"
#include "sip/predictor.hpp"
#include "sip/segmentation.hpp"
#include "sip/simulation.hpp"
#include "sip/viz.hpp"

namespace {

using nlohmann::json;

struct CommonOptions {
    std::string data_dir;
    int jobs = 0;  // 0 = hardware concurrency
};

std::string resolve(const CommonOptions& common, const std::string& path) {
    if (path.empty() || std::filesystem::path(path).is_absolute() || common.data_dir.empty())
        return path;
    return (std::filesystem::path(common.data_dir) / path).string();
}

int job_count(const CommonOptions& common, std::size_t items) {
    int jobs = common.jobs > 0 ? common.jobs
                               : static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs),
                                                  std::max<std::size_t>(items, 1)));
}

// Order-preserving parallel map; exceptions propagate to the caller.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            try {
                for (std::size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

sip::ProcessFileFormat format_from_path(const std::string& path, const std::string& explicit_format) {
    if (explicit_format == "jsonl") return sip::ProcessFileFormat::Jsonl;
    if (explicit_format == "csv") return sip::ProcessFileFormat::Csv;
    if (!explicit_format.empty())
        throw CLI::ValidationError("--format must be jsonl or csv");
    return std::filesystem::path(path).extension() == ".csv" ? sip::ProcessFileFormat::Csv
                                                             : sip::ProcessFileFormat::Jsonl;
}

struct DatasetOptions {
    std::string input;
    std::string format;
    int min_length = 10;
    bool merge_consecutive = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("-i,--input", input, "Process file (JSONL or CSV)")->required();
        cmd->add_option("--format", format, "Input format: jsonl|csv (default from extension)");
        cmd->add_option("--min-length", min_length,
                        "Drop processes shorter than this at ingestion");
        cmd->add_flag("--merge-consecutive", merge_consecutive,
                      "Collapse consecutive duplicate actions");
    }

    sip::ProcessDataset load(const CommonOptions& common, sip::ReadReport* report = nullptr) const {
        sip::ReadOptions options;
        options.format = format_from_path(input, format);
        options.min_length = min_length;
        options.merge_consecutive = merge_consecutive;
        return sip::read_process_file(resolve(common, input), options, report);
    }
};

std::vector<double> parse_lambda_grid(const std::vector<std::string>& items) {
    std::vector<double> grid;
    for (const auto& item : items) {
        const auto colon = item.find(':');
        if (colon != std::string::npos) {
            // from:to:step inclusive sweep
            const auto second = item.find(':', colon + 1);
            if (second == std::string::npos)
                throw CLI::ValidationError("--lambda range must be from:to:step");
            const double from = std::stod(item.substr(0, colon));
            const double to = std::stod(item.substr(colon + 1, second - colon - 1));
            const double step = std::stod(item.substr(second + 1));
            if (step <= 0) throw CLI::ValidationError("--lambda step must be positive");
            for (int k = 0; from + k * step <= to + 1e-9; ++k)
                grid.push_back(std::round((from + k * step) * 1e9) / 1e9);
        } else {
            grid.push_back(std::stod(item));
        }
    }
    for (double v : grid) {
        if (v < 0.0 || v > 1.0)
            throw CLI::ValidationError("lambda must lie in [0, 1], got " + std::to_string(v));
    }
    if (grid.empty()) throw CLI::ValidationError("no lambda values given");
    return grid;
}

std::string lambda_tag(double lambda) {
    std::string s = json(lambda).dump();
    for (auto& c : s)
        if (c == '.') c = 'p';
    return s;
}

std::string output_for_lambda(const std::string& pattern, double lambda, bool multiple) {
    const std::string placeholder = "{lambda}";
    const auto pos = pattern.find(placeholder);
    if (pos != std::string::npos) {
        std::string out = pattern;
        out.replace(pos, placeholder.size(), lambda_tag(lambda));
        return out;
    }
    if (!multiple) return pattern;
    std::filesystem::path p(pattern);
    const std::string stem = p.stem().string();
    const std::string ext = p.extension().string();
    return (p.parent_path() / (stem + "-lambda" + lambda_tag(lambda) + ext)).string();
}

std::vector<std::size_t> subset_indices(const sip::ProcessDataset& dataset,
                                        const sip::DatasetSplit* split, const std::string& subset) {
    if (subset == "all" || subset.empty()) {
        std::vector<std::size_t> idx(dataset.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return idx;
    }
    if (!split)
        throw CLI::ValidationError("--subset " + subset + " requires --split");
    if (subset == "train") return split->train;
    if (subset == "valid") return split->valid;
    if (subset == "test") return split->test;
    throw CLI::ValidationError("--subset must be one of all|train|valid|test");
}

std::vector<std::string> truth_labels(const sip::ResponseProcess& process,
                                      const std::string& truth_key) {
    auto it = process.meta.find(truth_key);
    if (it == process.meta.end())
        throw std::runtime_error("process " + process.id + " has no '" + truth_key +
                                 "' metadata");
    if (!std::holds_alternative<std::vector<std::string>>(it->second))
        throw std::runtime_error("process " + process.id + ": '" + truth_key +
                                 "' metadata is not a label array");
    const auto& labels = std::get<std::vector<std::string>>(it->second);
    if (labels.size() != process.actions.size())
        throw std::runtime_error("process " + process.id + ": truth length " +
                                 std::to_string(labels.size()) + " != T " +
                                 std::to_string(process.actions.size()));
    return labels;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

json train_log_json(const sip::TrainLog& log) {
    json evals = json::array();
    for (const auto& e : log.evals) {
        evals.push_back({{"epoch", e.epoch},
                         {"train_total_nll", e.train_total_nll},
                         {"train_mean_nll", e.train_mean_nll},
                         {"valid_total_nll", e.valid_total_nll},
                         {"valid_mean_nll", e.valid_mean_nll}});
    }
    return {{"evals", std::move(evals)},
            {"best_epoch", log.best_epoch},
            {"best_valid_total_nll", log.best_valid_total_nll},
            {"train_steps", log.train_steps},
            {"valid_steps", log.valid_steps}};
}

sip::FeatureSpec parse_spec(const std::string& name) {
    sip::FeatureSpec spec;
    if (name == "baseline") {
        spec.choice = sip::FeatureChoice::Baseline;
    } else if (name == "transitions") {
        spec.choice = sip::FeatureChoice::Transitions;
    } else if (name == "transitions+subtask-ngrams") {
        spec.choice = sip::FeatureChoice::TransitionsSubtaskNgrams;
    } else if (name == "process-ngrams") {
        spec.choice = sip::FeatureChoice::ProcessNgrams;
    } else if (name.rfind("single-subtask-ngrams:", 0) == 0) {
        spec.choice = sip::FeatureChoice::SingleSubtaskNgrams;
        spec.subtask = name.substr(std::string("single-subtask-ngrams:").size());
        if (spec.subtask.empty())
            throw CLI::ValidationError("single-subtask-ngrams needs a subtask: " + name);
    } else {
        throw CLI::ValidationError("unknown feature spec '" + name + "'");
    }
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subtask identification for process data: predictive segmentation, "
                 "clustering, and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();  // global options (-d, -j) may follow the subcommand

    CommonOptions common;
    const char* env_dir = std::getenv("SIP_DATA_DIR");
    if (env_dir) common.data_dir = env_dir;
    app.add_option("-d,--data-dir", common.data_dir,
                   "Base directory for relative paths (env SIP_DATA_DIR)");
    app.add_option("-j,--jobs", common.jobs, "Worker thread cap (default: hardware)");

    // ---- simulate ----
    auto* cmd_simulate = app.add_subcommand("simulate", "Generate a synthetic dataset with ground truth");
    int sim_n = 5000, sim_r = 4, sim_m = 26;
    std::uint64_t sim_seed = 0;
    std::string sim_out = "simulated.jsonl", sim_sidecar;
    cmd_simulate->add_option("-n,--n", sim_n, "Number of processes")->check(CLI::PositiveNumber);
    cmd_simulate->add_option("-r,--subtasks", sim_r, "Number of subtasks");
    cmd_simulate->add_option("-m,--actions", sim_m, "Alphabet size");
    cmd_simulate->add_option("-s,--seed", sim_seed, "Seed");
    cmd_simulate->add_option("-o,--out", sim_out, "Output JSONL path");
    cmd_simulate->add_option("--sidecar", sim_sidecar, "Generator sidecar path (default <out>.gen.json)");
    cmd_simulate->callback([&] {
        const auto sim = sip::simulate_dataset(sim_n, sim_r, sim_m, sim_seed);
        const std::string out = resolve(common, sim_out);
        sip::write_process_file(out, sim.dataset, sip::ProcessFileFormat::Jsonl);
        const std::string sidecar = sim_sidecar.empty() ? out + ".gen.json" : resolve(common, sim_sidecar);
        sip::write_generator_sidecar(sidecar, sim.model, sim_seed, sim_n, sim.total_resamples);
        std::cout << "wrote " << sim_n << " processes to " << out << " (alphabet " << sim_m
                  << ", subtasks " << sim_r << ", resamples " << sim.total_resamples << ")\n";
    });

    // ---- train ----
    auto* cmd_train = app.add_subcommand("train", "Train the action-prediction model");
    DatasetOptions train_data;
    train_data.attach(cmd_train);
    sip::TrainConfig train_config;
    std::vector<double> train_ratios{0.70, 0.15, 0.15};
    std::string train_out = "predictor.json", train_split_in, train_split_out, train_log_out;
    std::uint64_t split_seed = 0;
    cmd_train->add_option("-k,--hidden-dim", train_config.hidden_dim, "Embedding/hidden dimension K");
    cmd_train->add_option("--lr", train_config.learning_rate, "RmsProp learning rate");
    cmd_train->add_option("-e,--epochs", train_config.epochs, "Training epochs");
    cmd_train->add_option("-s,--seed", train_config.seed, "Training seed");
    cmd_train->add_option("--rmsprop-decay", train_config.rmsprop_decay, "Second-moment decay");
    cmd_train->add_option("--rmsprop-eps", train_config.rmsprop_epsilon, "RmsProp epsilon");
    cmd_train->add_option("--eval-every", train_config.eval_every, "Validation cadence in epochs");
    cmd_train->add_option("--ratios", train_ratios, "Train/valid/test ratios")->expected(3);
    cmd_train->add_option("--split", train_split_in, "Reuse an existing split manifest");
    cmd_train->add_option("--split-out", train_split_out, "Split manifest output (default <out>.split.json)");
    auto* split_seed_opt =
        cmd_train->add_option("--split-seed", split_seed, "Split seed (default: training seed)");
    cmd_train->add_option("-o,--out", train_out, "Model output path");
    cmd_train->add_option("--log", train_log_out, "Training log path (default <out>.log.json)");
    cmd_train->callback([&] {
        const auto dataset = train_data.load(common);
        sip::DatasetSplit split;
        if (!train_split_in.empty()) {
            split = sip::read_split_manifest(resolve(common, train_split_in), dataset);
        } else {
            split = sip::split_dataset(dataset, train_ratios[0], train_ratios[1], train_ratios[2],
                                       split_seed_opt->count() > 0 ? split_seed : train_config.seed);
        }
        const auto result = sip::train(dataset, split.train, split.valid, train_config);
        const std::string out = resolve(common, train_out);
        sip::save_predictor(out, result.params, dataset.alphabet, train_config);
        if (train_split_in.empty()) {
            const std::string split_path =
                train_split_out.empty() ? out + ".split.json" : resolve(common, train_split_out);
            sip::write_split_manifest(split_path, split, dataset);
        }
        const std::string log_path =
            train_log_out.empty() ? out + ".log.json" : resolve(common, train_log_out);
        write_json_file(log_path, train_log_json(result.log));
        std::cout << "trained K=" << train_config.hidden_dim << " on " << split.train.size()
                  << " processes; best epoch " << result.log.best_epoch << ", valid mean NLL "
                  << result.log.best_valid_total_nll /
                         static_cast<double>(std::max<std::size_t>(result.log.valid_steps, 1))
                  << "; model at " << out << "\n";
    });

    // ---- select-k ----
    auto* cmd_selectk = app.add_subcommand("select-k", "Pick the embedding dimension by validation loss");
    DatasetOptions selectk_data;
    selectk_data.attach(cmd_selectk);
    sip::TrainConfig selectk_config;
    std::vector<int> selectk_grid;
    std::vector<double> selectk_ratios{0.70, 0.15, 0.15};
    std::string selectk_split_in, selectk_out;
    cmd_selectk->add_option("--k-grid", selectk_grid, "Candidate dimensions")->required();
    cmd_selectk->add_option("--lr", selectk_config.learning_rate, "RmsProp learning rate");
    cmd_selectk->add_option("-e,--epochs", selectk_config.epochs, "Training epochs");
    cmd_selectk->add_option("-s,--seed", selectk_config.seed, "Training seed");
    cmd_selectk->add_option("--ratios", selectk_ratios, "Train/valid/test ratios")->expected(3);
    cmd_selectk->add_option("--split", selectk_split_in, "Reuse an existing split manifest");
    cmd_selectk->add_option("-o,--out", selectk_out, "Selection report path");
    cmd_selectk->callback([&] {
        const auto dataset = selectk_data.load(common);
        sip::DatasetSplit split;
        if (!selectk_split_in.empty()) {
            split = sip::read_split_manifest(resolve(common, selectk_split_in), dataset);
        } else {
            split = sip::split_dataset(dataset, selectk_ratios[0], selectk_ratios[1],
                                       selectk_ratios[2], selectk_config.seed);
        }
        const auto selection =
            sip::select_embedding_dim(dataset, split.train, split.valid, selectk_grid, selectk_config);
        json per_k = json::array();
        for (const auto& [k, loss] : selection.candidate_losses)
            per_k.push_back({{"k", k}, {"valid_total_nll", loss}});
        std::cout << "selected K=" << selection.best_dim << "\n";
        if (!selectk_out.empty())
            write_json_file(resolve(common, selectk_out),
                            {{"best_k", selection.best_dim}, {"candidates", std::move(per_k)}});
    });

    // ---- segment ----
    auto* cmd_segment = app.add_subcommand(
        "segment", "Compute entropy processes and U-curve boundaries (recommended lambda 0.2-0.8)");
    DatasetOptions segment_data;
    segment_data.attach(cmd_segment);
    std::string segment_model, segment_out = "segments.jsonl";
    std::vector<std::string> segment_lambdas;
    cmd_segment->add_option("--model", segment_model, "Predictor model path")->required();
    cmd_segment
        ->add_option("-l,--lambda", segment_lambdas,
                     "Depth threshold(s): value, comma list, or from:to:step (default 0.3)")
        ->delimiter(',');
    cmd_segment->add_option("-o,--out", segment_out,
                            "Output path; use {lambda} or get a -lambda<v> suffix per value");
    cmd_segment->callback([&] {
        const auto dataset = segment_data.load(common);
        const auto model = sip::load_predictor(resolve(common, segment_model));
        if (!(model.alphabet == dataset.alphabet))
            throw std::runtime_error("model alphabet does not match the dataset (check ingestion flags)");
        if (segment_lambdas.empty()) segment_lambdas = {"0.3"};
        const auto grid = parse_lambda_grid(segment_lambdas);

        // Entropy processes are lambda-independent; compute once.
        std::vector<sip::EntropyProcess> entropies(dataset.size());
        parallel_for(dataset.size(), job_count(common, dataset.size()), [&](std::size_t i) {
            entropies[i] = sip::entropy_process(dataset.processes[i], model.params);
        });
        for (double lambda : grid) {
            std::vector<sip::SegmentedProcess> rows(dataset.size());
            parallel_for(dataset.size(), job_count(common, dataset.size()), [&](std::size_t i) {
                const auto result = sip::segment(entropies[i].values, lambda);
                rows[i] = {dataset.processes[i].id, lambda, result.boundaries, entropies[i].values};
            });
            const std::string out =
                resolve(common, output_for_lambda(segment_out, lambda, grid.size() > 1));
            sip::write_segments_file(out, rows);
            std::cout << "lambda " << lambda << ": wrote " << rows.size() << " segmentations to "
                      << out << "\n";
        }
    });

    // ---- cluster ----
    auto* cmd_cluster = app.add_subcommand("cluster", "Fit Hellinger k-means on subprocess profiles");
    DatasetOptions cluster_data;
    cluster_data.attach(cmd_cluster);
    std::string cluster_segments, cluster_split, cluster_out = "clusters.json", cluster_fit_on = "trainvalid";
    sip::KMeansConfig cluster_config;
    int cluster_count = 4;
    cmd_cluster->add_option("--segments", cluster_segments, "Segments JSONL from `segment`")->required();
    cmd_cluster->add_option("-c,--clusters", cluster_count, "Number of clusters R_c");
    cmd_cluster->add_option("-s,--seed", cluster_config.seed, "Seed");
    cmd_cluster->add_option("--restarts", cluster_config.restarts, "k-means restarts");
    cmd_cluster->add_option("--max-iter", cluster_config.max_iter, "Lloyd iteration cap");
    cmd_cluster->add_option("--split", cluster_split, "Split manifest (for --fit-on trainvalid)");
    cmd_cluster->add_option("--fit-on", cluster_fit_on, "Profiles used for fitting: trainvalid|all");
    cmd_cluster->add_option("-o,--out", cluster_out, "Cluster model output path");
    cmd_cluster->callback([&] {
        const auto dataset = cluster_data.load(common);
        const auto segments = sip::read_segments_file(resolve(common, cluster_segments));
        std::unordered_map<std::string, const sip::SegmentedProcess*> seg_by_id;
        for (const auto& s : segments) seg_by_id[s.id] = &s;

        std::vector<std::size_t> fit_rows;
        if (cluster_fit_on == "all") {
            fit_rows.resize(dataset.size());
            std::iota(fit_rows.begin(), fit_rows.end(), std::size_t{0});
        } else if (cluster_fit_on == "trainvalid") {
            if (cluster_split.empty())
                throw CLI::ValidationError("--fit-on trainvalid requires --split (or use --fit-on all)");
            const auto split = sip::read_split_manifest(resolve(common, cluster_split), dataset);
            fit_rows = split.train;
            fit_rows.insert(fit_rows.end(), split.valid.begin(), split.valid.end());
            std::sort(fit_rows.begin(), fit_rows.end());
        } else {
            throw CLI::ValidationError("--fit-on must be trainvalid or all");
        }

        std::vector<sip::FrequencyProfile> profiles;
        for (auto i : fit_rows) {
            const auto& process = dataset.processes[i];
            auto it = seg_by_id.find(process.id);
            if (it == seg_by_id.end())
                throw std::runtime_error("no segmentation for process " + process.id);
            const auto& bounds = it->second->boundaries;
            for (std::size_t l = 0; l + 1 < bounds.size(); ++l) {
                auto profile = sip::frequency_profile(
                    std::span<const int>(process.actions.data() + bounds[l],
                                         static_cast<std::size_t>(bounds[l + 1] - bounds[l])),
                    dataset.alphabet.size());
                profile.process_id = process.id;
                profile.segment_index = static_cast<int>(l);
                profiles.push_back(std::move(profile));
            }
        }

        auto fit = sip::kmeans_fit(profiles, cluster_count, cluster_config);
        const std::string out = resolve(common, cluster_out);
        sip::save_cluster_model(out, fit.model);

        const auto summary = sip::cluster_summary(fit.model, profiles, fit.assignments);
        json summary_json = json::array();
        for (const auto& row : summary) {
            json profile = json::array();
            for (Eigen::Index m = 0; m < row.profile.size(); ++m) profile.push_back(row.profile[m]);
            summary_json.push_back({{"label", row.label},
                                    {"proportion", row.proportion},
                                    {"segments", row.segments},
                                    {"profile", std::move(profile)}});
        }
        write_json_file(out + ".summary.json",
                        {{"objective", fit.model.objective},
                         {"iterations", fit.iterations},
                         {"max_renorm_drift", fit.model.max_renorm_drift},
                         {"profiles", profiles.size()},
                         {"subtasks", std::move(summary_json)}});
        std::cout << "fit " << cluster_count << " clusters on " << profiles.size()
                  << " profiles (objective " << fit.model.objective << ", drift "
                  << fit.model.max_renorm_drift << "); model at " << out << "\n";
    });

    // ---- label ----
    auto* cmd_label = app.add_subcommand("label", "Apply an analyst label map to a cluster model");
    std::string label_model, label_map_path, label_out;
    cmd_label->add_option("--model", label_model, "Cluster model path")->required();
    cmd_label->add_option("--map", label_map_path,
                          "JSON label map: array or {\"0\": \"NAME\", ...}; repeated names merge")
        ->required();
    cmd_label->add_option("-o,--out", label_out, "Output path (default: overwrite input)");
    cmd_label->callback([&] {
        auto model = sip::load_cluster_model(resolve(common, label_model));
        sip::label_clusters(model, sip::read_label_map(resolve(common, label_map_path)));
        const std::string out = label_out.empty() ? resolve(common, label_model) : resolve(common, label_out);
        sip::save_cluster_model(out, model);
        std::cout << "labeled " << model.cluster_count() << " clusters into "
                  << model.subtask_count() << " subtasks; model at " << out << "\n";
    });

    // ---- sequences ----
    auto* cmd_sequences = app.add_subcommand("sequences", "Emit state and subtask sequences");
    DatasetOptions sequences_data;
    sequences_data.attach(cmd_sequences);
    std::string sequences_segments, sequences_model, sequences_out = "sequences.jsonl";
    cmd_sequences->add_option("--segments", sequences_segments, "Segments JSONL")->required();
    cmd_sequences->add_option("--cluster-model", sequences_model, "Cluster model path")->required();
    cmd_sequences->add_option("-o,--out", sequences_out, "Output JSONL path");
    cmd_sequences->callback([&] {
        const auto dataset = sequences_data.load(common);
        const auto segments = sip::read_segments_file(resolve(common, sequences_segments));
        const auto model = sip::load_cluster_model(resolve(common, sequences_model));
        if (model.centroids.cols() != dataset.alphabet.size())
            throw std::runtime_error("cluster model alphabet size does not match the dataset");
        std::unordered_map<std::string, const sip::SegmentedProcess*> seg_by_id;
        for (const auto& s : segments) seg_by_id[s.id] = &s;

        std::vector<sip::LabeledSequences> rows(dataset.size());
        parallel_for(dataset.size(), job_count(common, dataset.size()), [&](std::size_t i) {
            const auto& process = dataset.processes[i];
            auto it = seg_by_id.find(process.id);
            if (it == seg_by_id.end())
                throw std::runtime_error("no segmentation for process " + process.id);
            sip::SegmentationResult seg;
            seg.lambda = it->second->lambda;
            seg.boundaries = it->second->boundaries;
            rows[i].id = process.id;
            rows[i].states = sip::state_sequence(process, seg, model);
            rows[i].subtasks = sip::subtask_sequence(rows[i].states);
        });
        const std::string out = resolve(common, sequences_out);
        sip::write_sequences_file(out, rows);
        std::cout << "wrote " << rows.size() << " state/subtask sequences to " << out << "\n";
    });

    // ---- evaluate ----
    auto* cmd_evaluate = app.add_subcommand("evaluate", "Score estimated sequences against the truth");
    DatasetOptions evaluate_data;
    evaluate_data.attach(cmd_evaluate);
    std::string evaluate_sequences, evaluate_truth_key = "truth", evaluate_subset = "all";
    std::string evaluate_split, evaluate_out;
    bool evaluate_align = false;
    cmd_evaluate->add_option("--sequences", evaluate_sequences, "Estimated sequences JSONL")->required();
    cmd_evaluate->add_option("--truth-key", evaluate_truth_key, "Metadata key with true labels");
    cmd_evaluate->add_option("--subset", evaluate_subset, "all|train|valid|test");
    cmd_evaluate->add_option("--split", evaluate_split, "Split manifest for --subset");
    cmd_evaluate->add_flag("--align", evaluate_align,
                           "Rename estimated labels to truth labels by the overlap-maximizing "
                           "assignment before scoring (for arbitrary cluster names)");
    cmd_evaluate->add_option("-o,--out", evaluate_out, "Report JSON path");
    cmd_evaluate->callback([&] {
        const auto dataset = evaluate_data.load(common);
        const auto sequences = sip::read_sequences_file(resolve(common, evaluate_sequences));
        std::unordered_map<std::string, const sip::LabeledSequences*> seq_by_id;
        for (const auto& s : sequences) seq_by_id[s.id] = &s;

        sip::DatasetSplit split;
        const bool have_split = !evaluate_split.empty();
        if (have_split) split = sip::read_split_manifest(resolve(common, evaluate_split), dataset);
        const auto rows = subset_indices(dataset, have_split ? &split : nullptr, evaluate_subset);

        std::vector<std::vector<std::string>> truths, estimates;
        for (auto i : rows) {
            const auto& process = dataset.processes[i];
            auto it = seq_by_id.find(process.id);
            if (it == seq_by_id.end())
                throw std::runtime_error("no estimated sequence for process " + process.id);
            truths.push_back(truth_labels(process, evaluate_truth_key));
            estimates.push_back(it->second->states);
        }
        if (evaluate_align) estimates = sip::align_label_sequences(estimates, truths);
        std::vector<sip::StatePair> pairs;
        for (std::size_t s = 0; s < truths.size(); ++s)
            pairs.push_back({truths[s], estimates[s]});
        const auto report = sip::compute_measures(pairs);
        const json j = sip::measure_report_to_json(report);
        std::cout << j.dump(2) << "\n";
        if (!evaluate_out.empty()) write_json_file(resolve(common, evaluate_out), j);
    });

    // ---- hmm-fit ----
    auto* cmd_hmm_fit = app.add_subcommand("hmm-fit", "Fit the hidden Markov baseline");
    DatasetOptions hmm_data;
    hmm_data.attach(cmd_hmm_fit);
    sip::HmmConfig hmm_config;
    int hmm_states = 4;
    std::string hmm_out = "hmm.json", hmm_split, hmm_fit_on = "all";
    cmd_hmm_fit->add_option("-r,--states", hmm_states, "Hidden state count");
    cmd_hmm_fit->add_option("-s,--seed", hmm_config.seed, "Seed");
    cmd_hmm_fit->add_option("--restarts", hmm_config.restarts, "Baum-Welch restarts");
    cmd_hmm_fit->add_option("--max-iter", hmm_config.max_iter, "Iteration cap");
    cmd_hmm_fit->add_option("--tol", hmm_config.tol, "Relative log-likelihood tolerance");
    cmd_hmm_fit->add_option("--split", hmm_split, "Split manifest (for --fit-on trainvalid)");
    cmd_hmm_fit->add_option("--fit-on", hmm_fit_on, "Sequences used for fitting: all|trainvalid");
    cmd_hmm_fit->add_option("-o,--out", hmm_out, "Model output path");
    cmd_hmm_fit->callback([&] {
        const auto dataset = hmm_data.load(common);
        std::vector<std::size_t> rows;
        if (hmm_fit_on == "all") {
            rows.resize(dataset.size());
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        } else if (hmm_fit_on == "trainvalid") {
            if (hmm_split.empty()) throw CLI::ValidationError("--fit-on trainvalid requires --split");
            const auto split = sip::read_split_manifest(resolve(common, hmm_split), dataset);
            rows = split.train;
            rows.insert(rows.end(), split.valid.begin(), split.valid.end());
            std::sort(rows.begin(), rows.end());
        } else {
            throw CLI::ValidationError("--fit-on must be all or trainvalid");
        }
        const auto fit = sip::hmm_fit(dataset, rows, hmm_states, hmm_config);
        const std::string out = resolve(common, hmm_out);
        sip::save_hmm(out, fit.params, dataset.alphabet, hmm_config.seed, fit.loglik);
        write_json_file(out + ".trace.json",
                        {{"loglik_trace", fit.loglik_trace}, {"iterations", fit.iterations}});
        std::cout << "fit HMM with " << hmm_states << " states on " << rows.size()
                  << " processes (loglik " << fit.loglik << "); model at " << out << "\n";
    });

    // ---- hmm-eval ----
    auto* cmd_hmm_eval = app.add_subcommand(
        "hmm-eval", "Decode with the HMM, align states to truth labels, and score");
    DatasetOptions hmm_eval_data;
    hmm_eval_data.attach(cmd_hmm_eval);
    std::string hmm_eval_model, hmm_eval_truth_key = "truth", hmm_eval_subset = "all";
    std::string hmm_eval_split, hmm_eval_out, hmm_eval_sequences_out;
    cmd_hmm_eval->add_option("--model", hmm_eval_model, "HMM model path")->required();
    cmd_hmm_eval->add_option("--truth-key", hmm_eval_truth_key, "Metadata key with true labels");
    cmd_hmm_eval->add_option("--subset", hmm_eval_subset, "all|train|valid|test");
    cmd_hmm_eval->add_option("--split", hmm_eval_split, "Split manifest for --subset");
    cmd_hmm_eval->add_option("-o,--out", hmm_eval_out, "Report JSON path");
    cmd_hmm_eval->add_option("--sequences-out", hmm_eval_sequences_out,
                             "Write decoded label sequences JSONL");
    cmd_hmm_eval->callback([&] {
        const auto dataset = hmm_eval_data.load(common);
        const auto model = sip::load_hmm(resolve(common, hmm_eval_model));
        if (!(model.alphabet == dataset.alphabet))
            throw std::runtime_error("HMM alphabet does not match the dataset");

        sip::DatasetSplit split;
        const bool have_split = !hmm_eval_split.empty();
        if (have_split) split = sip::read_split_manifest(resolve(common, hmm_eval_split), dataset);
        const auto rows = subset_indices(dataset, have_split ? &split : nullptr, hmm_eval_subset);

        std::vector<std::vector<int>> decoded(rows.size());
        std::vector<std::vector<std::string>> truths(rows.size());
        parallel_for(rows.size(), job_count(common, rows.size()), [&](std::size_t k) {
            const auto& process = dataset.processes[rows[k]];
            decoded[k] = sip::hmm_decode(process.actions, model.params);
            truths[k] = truth_labels(process, hmm_eval_truth_key);
        });

        const auto mapping = sip::align_states(decoded, truths, model.params.state_count());
        std::vector<sip::StatePair> pairs(rows.size());
        std::vector<sip::LabeledSequences> labeled(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            std::vector<std::string> estimate(decoded[k].size());
            for (std::size_t t = 0; t < decoded[k].size(); ++t)
                estimate[t] = mapping[static_cast<std::size_t>(decoded[k][t])];
            labeled[k].id = dataset.processes[rows[k]].id;
            labeled[k].states = estimate;
            labeled[k].subtasks = sip::subtask_sequence(estimate);
            pairs[k] = {truths[k], std::move(estimate)};
        }
        const auto report = sip::compute_measures(pairs);
        json j = sip::measure_report_to_json(report);
        json map_json = json::object();
        for (std::size_t s = 0; s < mapping.size(); ++s) map_json[std::to_string(s)] = mapping[s];
        j["state_labels"] = std::move(map_json);
        std::cout << j.dump(2) << "\n";
        if (!hmm_eval_out.empty()) write_json_file(resolve(common, hmm_eval_out), j);
        if (!hmm_eval_sequences_out.empty())
            sip::write_sequences_file(resolve(common, hmm_eval_sequences_out), labeled);
    });

    // ---- decompose ----
    auto* cmd_decompose = app.add_subcommand(
        "decompose", "Information-decomposition regressions over feature choices");
    DatasetOptions decompose_data;
    decompose_data.attach(cmd_decompose);
    std::string decompose_sequences, decompose_split, decompose_out = "decomposition.csv";
    std::vector<std::string> decompose_targets, decompose_specs;
    sip::DecompositionConfig decompose_config;
    cmd_decompose->add_option("--sequences", decompose_sequences, "Estimated sequences JSONL")->required();
    cmd_decompose->add_option("--split", decompose_split, "Split manifest")->required();
    cmd_decompose->add_option("--targets", decompose_targets, "Target metadata keys")
        ->required()
        ->delimiter(',');
    cmd_decompose
        ->add_option("--specs", decompose_specs,
                     "Feature choices: baseline, transitions, transitions+subtask-ngrams, "
                     "process-ngrams, single-subtask-ngrams:<SUBTASK>")
        ->delimiter(',');
    cmd_decompose->add_option("--outcome-key", decompose_config.outcome_key, "Outcome metadata key");
    cmd_decompose->add_option("--threshold", decompose_config.ngram_threshold, "N-gram frequency threshold");
    cmd_decompose->add_flag("--doc-freq", decompose_config.document_frequency,
                            "Threshold on per-sequence presence instead of token rate");
    cmd_decompose->add_option("--folds", decompose_config.folds, "CV folds");
    cmd_decompose->add_option("--grid", decompose_config.ridge_grid, "Ridge penalty grid")->delimiter(',');
    cmd_decompose->add_option("-s,--seed", decompose_config.seed, "CV seed");
    cmd_decompose->add_option("-o,--out", decompose_out, "Report CSV path");
    cmd_decompose->callback([&] {
        const auto dataset = decompose_data.load(common);
        const auto sequences = sip::read_sequences_file(resolve(common, decompose_sequences));
        const auto split = sip::read_split_manifest(resolve(common, decompose_split), dataset);
        if (decompose_specs.empty())
            decompose_specs = {"baseline", "transitions", "transitions+subtask-ngrams",
                               "process-ngrams"};
        std::vector<sip::FeatureSpec> specs;
        for (const auto& name : decompose_specs) specs.push_back(parse_spec(name));

        std::vector<std::string> warnings;
        const auto rows = sip::decomposition_experiment(dataset, sequences, split,
                                                        decompose_targets, specs,
                                                        decompose_config, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        const std::string out = resolve(common, decompose_out);
        sip::write_decomposition_csv(out, rows);
        std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
    });

    // ---- export-viz ----
    auto* cmd_viz = app.add_subcommand("export-viz", "Stacked subtask-sequence layout as CSV (and SVG)");
    std::string viz_sequences, viz_out = "viz.csv", viz_svg;
    int viz_max_len = 0;
    cmd_viz->add_option("--sequences", viz_sequences, "Sequences JSONL")->required();
    cmd_viz->add_option("-o,--out", viz_out, "CSV output path");
    cmd_viz->add_option("--svg", viz_svg, "Optional SVG output path");
    cmd_viz->add_option("--max-len", viz_max_len, "Keep subtask sequences up to this length (0 = all)");
    cmd_viz->callback([&] {
        const auto sequences = sip::read_sequences_file(resolve(common, viz_sequences));
        const std::string out = resolve(common, viz_out);
        sip::write_viz_csv(out, sequences, viz_max_len);
        std::cout << "wrote layout for " << sequences.size() << " sequences to " << out << "\n";
        if (!viz_svg.empty()) sip::write_viz_svg(resolve(common, viz_svg), sequences, viz_max_len);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << json({{"error", e.what()}}).dump() << "\n";
        return 1;
    }
    return 0;
}
