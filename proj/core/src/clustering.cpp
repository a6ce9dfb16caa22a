#include "sip/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "sip/rng.hpp"

namespace sip {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

int nearest_row(const MatrixXd& rows, const VectorXd& point, double* dist_out = nullptr) {
    int best = 0;
    double best_d = kInf;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        const double d = (rows.row(r).transpose() - point).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(r);
        }
    }
    if (dist_out) *dist_out = best_d;
    return best;
}

struct LloydRun {
    MatrixXd root_centroids;
    std::vector<int> assignments;
    std::vector<double> trace;
    double objective = kInf;
    int iterations = 0;
};

LloydRun run_lloyd(const MatrixXd& roots, int k, int max_iter, Rng& rng) {
    const auto n = static_cast<std::size_t>(roots.rows());
    const Eigen::Index dim = roots.cols();

    // k-means++ seeding.
    MatrixXd centroids(k, dim);
    std::vector<double> min_d2(n, kInf);
    centroids.row(0) = roots.row(static_cast<Eigen::Index>(rng.uniform_int(n)));
    for (int c = 1; c < k; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d = (roots.row(static_cast<Eigen::Index>(i)) - centroids.row(c - 1)).squaredNorm();
            min_d2[i] = std::min(min_d2[i], d);
        }
        double total = 0.0;
        for (double d : min_d2) total += d;
        const std::size_t pick = total > 0.0 ? rng.discrete(min_d2) : rng.uniform_int(n);
        centroids.row(c) = roots.row(static_cast<Eigen::Index>(pick));
    }

    LloydRun run;
    run.assignments.assign(n, -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        // Assignment step.
        bool changed = false;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = 0.0;
            const int a = nearest_row(centroids, roots.row(static_cast<Eigen::Index>(i)).transpose(), &d);
            sse += d;
            if (a != run.assignments[i]) {
                run.assignments[i] = a;
                changed = true;
            }
        }
        run.trace.push_back(sse);
        run.objective = sse;
        run.iterations = iter + 1;
        if (!changed && iter > 0) break;

        // Update step: root-space means; an emptied cluster is reseeded at
        // the point currently farthest from its centroid, each empty cluster
        // taking a distinct point.
        MatrixXd sums = MatrixXd::Zero(k, dim);
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(run.assignments[i]) += roots.row(static_cast<Eigen::Index>(i));
            ++counts[static_cast<std::size_t>(run.assignments[i])];
        }
        std::vector<bool> reseed_taken(n, false);
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
            } else {
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (reseed_taken[i]) continue;
                    const double d = (roots.row(static_cast<Eigen::Index>(i)) -
                                      centroids.row(run.assignments[i]))
                                         .squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                reseed_taken[far] = true;
                centroids.row(c) = roots.row(static_cast<Eigen::Index>(far));
            }
        }
    }
    run.root_centroids = std::move(centroids);
    return run;
}

}  // namespace

int ClusterModel::subtask_count() const {
    std::set<std::string> names(labels.begin(), labels.end());
    return static_cast<int>(names.size());
}

FrequencyProfile frequency_profile(std::span<const int> subprocess, int alphabet_size) {
    if (subprocess.empty()) throw std::invalid_argument("frequency_profile: empty subprocess");
    FrequencyProfile profile;
    profile.z = VectorXd::Zero(alphabet_size);
    for (int a : subprocess) {
        if (a < 0 || a >= alphabet_size)
            throw std::out_of_range("frequency_profile: action index out of range");
        profile.z[a] += 1.0;
    }
    profile.length = static_cast<int>(subprocess.size());
    profile.z /= static_cast<double>(subprocess.size());
    return profile;
}

double hellinger(const VectorXd& p, const VectorXd& q) {
    if (p.size() != q.size()) throw std::invalid_argument("hellinger: length mismatch");
    return std::sqrt((p.array().sqrt() - q.array().sqrt()).square().sum());
}

KMeansFit kmeans_fit(const std::vector<FrequencyProfile>& profiles, int cluster_count,
                     const KMeansConfig& config) {
    if (cluster_count < 1) throw std::invalid_argument("kmeans_fit: cluster_count must be >= 1");
    if (static_cast<std::size_t>(cluster_count) > profiles.size())
        throw std::invalid_argument("kmeans_fit: more clusters than profiles");

    const Eigen::Index dim = profiles.front().z.size();
    MatrixXd roots(static_cast<Eigen::Index>(profiles.size()), dim);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (profiles[i].z.size() != dim)
            throw std::invalid_argument("kmeans_fit: inconsistent profile dimensions");
        roots.row(static_cast<Eigen::Index>(i)) = profiles[i].z.array().sqrt().matrix();
    }

    LloydRun best;
    for (int r = 0; r < std::max(config.restarts, 1); ++r) {
        Rng rng = Rng::child(config.seed, static_cast<std::uint64_t>(r));
        LloydRun run = run_lloyd(roots, cluster_count, config.max_iter, rng);
        if (run.objective < best.objective) best = std::move(run);
    }

    KMeansFit fit;
    fit.assignments = std::move(best.assignments);
    fit.objective_trace = std::move(best.trace);
    fit.iterations = best.iterations;
    fit.model.seed = config.seed;
    fit.model.objective = best.objective;
    fit.model.centroids = MatrixXd(cluster_count, dim);
    for (int c = 0; c < cluster_count; ++c) {
        const VectorXd squared = best.root_centroids.row(c).array().square().matrix();
        const double mass = squared.sum();
        fit.model.max_renorm_drift = std::max(fit.model.max_renorm_drift, std::abs(1.0 - mass));
        if (mass <= 0.0)
            throw std::runtime_error("kmeans_fit: degenerate zero centroid");
        fit.model.centroids.row(c) = squared.transpose() / mass;
    }
    fit.model.labels.reserve(static_cast<std::size_t>(cluster_count));
    for (int c = 0; c < cluster_count; ++c) fit.model.labels.push_back("C" + std::to_string(c));
    return fit;
}

int assign_cluster(const VectorXd& profile, const ClusterModel& model) {
    int best = 0;
    double best_d = kInf;
    for (int c = 0; c < model.cluster_count(); ++c) {
        const double d = hellinger(profile, model.centroids.row(c).transpose());
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

void label_clusters(ClusterModel& model, const std::map<int, std::string>& label_map) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(model.cluster_count()));
    for (int c = 0; c < model.cluster_count(); ++c) {
        auto it = label_map.find(c);
        if (it == label_map.end())
            throw std::invalid_argument("label_clusters: no label for cluster " + std::to_string(c));
        labels.push_back(it->second);
    }
    model.labels = std::move(labels);
}

std::vector<std::string> state_sequence(const ResponseProcess& process,
                                        const SegmentationResult& segmentation,
                                        const ClusterModel& model) {
    const auto& bounds = segmentation.boundaries;
    if (bounds.size() < 2 || bounds.front() != 0 ||
        bounds.back() != static_cast<int>(process.actions.size()))
        throw std::invalid_argument("state_sequence: segmentation does not cover the process");

    std::vector<std::string> states(process.actions.size());
    for (std::size_t l = 0; l + 1 < bounds.size(); ++l) {
        const int begin = bounds[l];
        const int end = bounds[l + 1];
        const auto profile = frequency_profile(
            std::span<const int>(process.actions.data() + begin, static_cast<std::size_t>(end - begin)),
            static_cast<int>(model.centroids.cols()));
        const std::string& label = model.labels.at(static_cast<std::size_t>(assign_cluster(profile.z, model)));
        for (int t = begin; t < end; ++t) states[static_cast<std::size_t>(t)] = label;
    }
    return states;
}

std::vector<std::string> subtask_sequence(const std::vector<std::string>& states) {
    if (states.empty()) throw std::invalid_argument("subtask_sequence: empty state sequence");
    std::vector<std::string> collapsed;
    for (const auto& s : states) {
        if (collapsed.empty() || collapsed.back() != s) collapsed.push_back(s);
    }
    return collapsed;
}

std::vector<SubtaskSummary> cluster_summary(const ClusterModel& model,
                                            const std::vector<FrequencyProfile>& profiles,
                                            const std::vector<int>& assignments) {
    if (profiles.size() != assignments.size())
        throw std::invalid_argument("cluster_summary: profiles/assignments size mismatch");

    // Preserve first-appearance order of labels over cluster indices.
    std::vector<std::string> order;
    for (const auto& label : model.labels) {
        if (std::find(order.begin(), order.end(), label) == order.end()) order.push_back(label);
    }

    const Eigen::Index dim = model.centroids.cols();
    std::map<std::string, VectorXd> counts;
    std::map<std::string, std::size_t> segments;
    for (const auto& label : order) {
        counts.emplace(label, VectorXd::Zero(dim));
        segments.emplace(label, 0);
    }
    double total_actions = 0.0;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& label = model.labels.at(static_cast<std::size_t>(assignments[i]));
        counts[label] += profiles[i].z * static_cast<double>(profiles[i].length);
        segments[label] += 1;
        total_actions += static_cast<double>(profiles[i].length);
    }

    std::vector<SubtaskSummary> summary;
    for (const auto& label : order) {
        SubtaskSummary row;
        row.label = label;
        row.segments = segments[label];
        const double mass = counts[label].sum();
        row.proportion = total_actions > 0 ? mass / total_actions : 0.0;
        row.profile = mass > 0 ? (counts[label] / mass).eval() : VectorXd::Zero(dim).eval();
        summary.push_back(std::move(row));
    }
    return summary;
}

void save_cluster_model(const std::string& path, const ClusterModel& model) {
    json j;
    j["format"] = "sip-clusters";
    j["version"] = 1;
    j["cluster_count"] = model.cluster_count();
    json rows = json::array();
    for (int c = 0; c < model.cluster_count(); ++c) {
        json row = json::array();
        for (Eigen::Index m = 0; m < model.centroids.cols(); ++m) row.push_back(model.centroids(c, m));
        rows.push_back(std::move(row));
    }
    j["centroids"] = std::move(rows);
    j["labels"] = model.labels;
    j["seed"] = model.seed;
    j["objective"] = model.objective;
    j["max_renorm_drift"] = model.max_renorm_drift;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write cluster model: " + path);
    out << j.dump(2) << '\n';
}

ClusterModel load_cluster_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cluster model: " + path);
    json j;
    in >> j;
    if (j.value("format", "") != "sip-clusters")
        throw std::runtime_error(path + ": not a cluster model file");
    ClusterModel model;
    const auto& rows = j.at("centroids");
    const int k = static_cast<int>(rows.size());
    if (k < 1) throw std::runtime_error(path + ": no centroids");
    const auto dim = static_cast<Eigen::Index>(rows[0].size());
    model.centroids = MatrixXd(k, dim);
    for (int c = 0; c < k; ++c) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(c)].size()) != dim)
            throw std::runtime_error(path + ": ragged centroid rows");
        for (Eigen::Index m = 0; m < dim; ++m)
            model.centroids(c, m) = rows[static_cast<std::size_t>(c)][static_cast<std::size_t>(m)].get<double>();
    }
    model.labels = j.at("labels").get<std::vector<std::string>>();
    if (static_cast<int>(model.labels.size()) != k)
        throw std::runtime_error(path + ": label count does not match centroids");
    model.seed = j.value("seed", std::uint64_t{0});
    model.objective = j.value("objective", 0.0);
    model.max_renorm_drift = j.value("max_renorm_drift", 0.0);
    return model;
}

std::map<int, std::string> read_label_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label map: " + path);
    json j;
    in >> j;
    std::map<int, std::string> map;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) map[static_cast<int>(i)] = j[i].get<std::string>();
    } else if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            map[std::stoi(it.key())] = it.value().get<std::string>();
    } else {
        throw std::runtime_error(path + ": label map must be an array or object");
    }
    return map;
}

void write_sequences_file(const std::string& path, const std::vector<LabeledSequences>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sequences file: " + path);
    for (const auto& row : rows) {
        json j;
        j["id"] = row.id;
        j["v"] = row.states;
        j["q"] = row.subtasks;
        out << j.dump() << '\n';
    }
}

std::vector<LabeledSequences> read_sequences_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sequences file: " + path);
    std::vector<LabeledSequences> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        LabeledSequences row;
        row.id = j.at("id").get<std::string>();
        row.states = j.at("v").get<std::vector<std::string>>();
        row.subtasks = j.at("q").get<std::vector<std::string>>();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace sip
