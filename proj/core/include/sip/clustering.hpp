#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sip/data.hpp"
#include "sip/segmentation.hpp"

namespace sip {

// Action frequency profile of one subprocess: a probability vector over the
// alphabet, plus enough provenance to pool counts later.
struct FrequencyProfile {
    Eigen::VectorXd z;
    std::string process_id;
    int segment_index = 0;
    int length = 0;  // actions in the subprocess
};

FrequencyProfile frequency_profile(std::span<const int> subprocess, int alphabet_size);

// Hellinger distance between probability vectors of equal length.
double hellinger(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

struct KMeansConfig {
    std::uint64_t seed = 0;
    int max_iter = 100;
    int restarts = 10;
};

struct ClusterModel {
    Eigen::MatrixXd centroids;        // R_c x M, rows are probability vectors
    std::vector<std::string> labels;  // cluster index -> subtask name
    std::uint64_t seed = 0;
    double objective = 0.0;           // root-space SSE of the winning restart
    double max_renorm_drift = 0.0;    // max |1 - ||root-space mean||^2| over centroids

    int cluster_count() const { return static_cast<int>(centroids.rows()); }
    int subtask_count() const;  // distinct labels
};

struct KMeansFit {
    ClusterModel model;
    std::vector<int> assignments;         // per input profile
    std::vector<double> objective_trace;  // winning restart, one entry per Lloyd iteration
    int iterations = 0;
};

// k-means under the Hellinger distance via the square-root embedding:
// profiles are mapped to sqrt coordinates, seeded with k-means++ and refined
// with Lloyd iterations in Euclidean root space, then centroids are squared
// and renormalized back to probability vectors. Best of `restarts` runs by
// final objective. Deterministic given the seed.
KMeansFit kmeans_fit(const std::vector<FrequencyProfile>& profiles, int cluster_count,
                     const KMeansConfig& config);

// Nearest centroid under the Hellinger distance; ties go to the lowest index.
int assign_cluster(const Eigen::VectorXd& profile, const ClusterModel& model);

// Applies an analyst-provided cluster -> subtask name map. Clusters sharing a
// name merge into one subtask. Every cluster index must be covered.
void label_clusters(ClusterModel& model, const std::map<int, std::string>& label_map);

// Per-action subtask labels (length T): each segment's actions take the label
// of the cluster its frequency profile is assigned to.
std::vector<std::string> state_sequence(const ResponseProcess& process,
                                        const SegmentationResult& segmentation,
                                        const ClusterModel& model);

// Collapses consecutive repeats of the state sequence.
std::vector<std::string> subtask_sequence(const std::vector<std::string>& states);

struct SubtaskSummary {
    std::string label;
    Eigen::VectorXd profile;  // pooled action frequencies within the subtask
    double proportion = 0.0;  // share of all actions
    std::size_t segments = 0;
};

// Pools assigned profiles by subtask label; proportions sum to 1.
std::vector<SubtaskSummary> cluster_summary(const ClusterModel& model,
                                            const std::vector<FrequencyProfile>& profiles,
                                            const std::vector<int>& assignments);

void save_cluster_model(const std::string& path, const ClusterModel& model);
ClusterModel load_cluster_model(const std::string& path);

std::map<int, std::string> read_label_map(const std::string& path);

struct LabeledSequences {
    std::string id;
    std::vector<std::string> states;    // v, per action
    std::vector<std::string> subtasks;  // q, consecutive repeats removed
};

void write_sequences_file(const std::string& path, const std::vector<LabeledSequences>& rows);
std::vector<LabeledSequences> read_sequences_file(const std::string& path);

}  // namespace sip
