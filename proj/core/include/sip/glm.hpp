#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sip/clustering.hpp"
#include "sip/data.hpp"

namespace sip {

enum class FeatureChoice {
    Baseline,                  // outcome only
    Transitions,               // + subtask transition indicators from q
    TransitionsSubtaskNgrams,  // + per-subtask action unigrams/bigrams
    ProcessNgrams,             // outcome + whole-process unigrams/bigrams
    SingleSubtaskNgrams,       // ngrams from one subtask's subprocesses only
};

std::string feature_choice_name(FeatureChoice choice);

struct FeatureSpec {
    FeatureChoice choice = FeatureChoice::Baseline;
    double ngram_threshold = 0.001;  // keep n-grams with corpus frequency above this
    bool include_outcome = true;
    std::string outcome_key = "outcome";
    std::string subtask;  // required for SingleSubtaskNgrams
    // Threshold base: occurrence rate among all n-gram tokens (default) or
    // the share of training sequences containing the n-gram.
    bool document_frequency = false;
};

struct FeatureVocabulary {
    std::vector<std::string> names;
    std::unordered_map<std::string, int> index;

    int size() const { return static_cast<int>(names.size()); }
    void add(const std::string& name);
};

// Builds the feature vocabulary from the training rows: transition pairs seen
// in the subtask sequences and n-grams whose corpus frequency clears the
// threshold, crossed with subtask labels where the choice calls for it.
// Names are sorted, so the vocabulary is deterministic.
FeatureVocabulary build_vocabulary(const ProcessDataset& dataset,
                                   const std::vector<const LabeledSequences*>& sequences,
                                   const std::vector<std::size_t>& rows, const FeatureSpec& spec);

// Binary feature vector for one process against a fixed vocabulary; n-grams
// absent from the vocabulary are ignored. Throws if the choice needs subtask
// sequences and `sequences` is null.
Eigen::VectorXd extract_features(const ResponseProcess& process,
                                 const LabeledSequences* sequences, const FeatureSpec& spec,
                                 const FeatureVocabulary& vocabulary,
                                 const ActionAlphabet& alphabet);

enum class LinkFunction { Identity, Logit };

struct GlmModel {
    LinkFunction link = LinkFunction::Identity;
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
    double ridge_penalty = 0.0;
    std::vector<std::string> vocabulary;
};

// Intercept bound for the logit link, logit(1 - 1e-6); keeps degenerate
// targets from driving the unpenalized intercept to infinity.
double logit_intercept_cap();

// Identity link: penalized normal equations (intercept unpenalized).
// Logit link: penalized Newton iterations with step halving, run until the
// penalized-gradient max norm is below 1e-8.
GlmModel ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, LinkFunction link,
                   double ridge_penalty);

Eigen::VectorXd glm_predict(const GlmModel& model, const Eigen::MatrixXd& x);

// Five-fold (by default) cross-validated penalty choice: argmin of mean
// held-out loss (squared error or deviance); ties go to the larger penalty.
double cv_select_penalty(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, LinkFunction link,
                         const std::vector<double>& grid, int folds, std::uint64_t seed);

// Mann-Whitney AUC with half credit for score ties. Requires both classes.
double auc(const Eigen::VectorXd& scores, const std::vector<int>& labels);

// Out-of-sample R^2 against the training-mean predictor.
double osr2(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actuals,
            double train_mean);

struct DecompositionConfig {
    std::vector<double> ridge_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4};
    int folds = 5;
    std::uint64_t seed = 0;
    double ngram_threshold = 0.001;
    bool document_frequency = false;
    std::string outcome_key = "outcome";
};

struct DecompositionRow {
    std::string target;
    std::string feature_choice;
    std::string metric;  // "auc" or "osr2"
    double value = 0.0;
    double ridge_penalty = 0.0;
    int feature_count = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

// Fits one model per (target, feature choice) cell on train+valid rows and
// scores it on the test rows: AUC for binary targets (logit link), OSR^2
// otherwise (identity link). Targets or cells that cannot be scored are
// skipped with a warning.
std::vector<DecompositionRow> decomposition_experiment(
    const ProcessDataset& dataset, const std::vector<LabeledSequences>& sequences,
    const DatasetSplit& split, const std::vector<std::string>& targets,
    const std::vector<FeatureSpec>& specs, const DecompositionConfig& config,
    std::vector<std::string>* warnings = nullptr);

void write_decomposition_csv(const std::string& path, const std::vector<DecompositionRow>& rows);

}  // namespace sip
