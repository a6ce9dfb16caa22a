#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sip/data.hpp"

namespace sip {

struct HmmParams {
    Eigen::VectorXd initial;     // pi, length R
    Eigen::MatrixXd transition;  // A, R x R, rows sum to 1
    Eigen::MatrixXd emission;    // B, R x M, rows sum to 1

    int state_count() const { return static_cast<int>(initial.size()); }
    int symbol_count() const { return static_cast<int>(emission.cols()); }
};

struct HmmConfig {
    std::uint64_t seed = 0;
    int restarts = 10;
    int max_iter = 200;
    double tol = 1e-6;              // relative log-likelihood change
    double emission_floor = 1e-10;  // keeps zero-count emissions out of lock-in
};

struct HmmFit {
    HmmParams params;
    std::vector<double> loglik_trace;  // winning restart, one entry per iteration
    double loglik = 0.0;
    int iterations = 0;
};

// Multi-sequence Baum-Welch in scaled (normalized-forward) arithmetic, one
// shared model across all sequences. Rows are Dirichlet(1) initialized per
// restart; the restart with the best final log-likelihood wins.
HmmFit hmm_fit(const ProcessDataset& dataset, const std::vector<std::size_t>& indices,
               int state_count, const HmmConfig& config);

// Total scaled-forward log-likelihood of one sequence.
double hmm_log_likelihood(const std::vector<int>& actions, const HmmParams& params);

// Viterbi decoding in log space; ties break toward the lower state index.
std::vector<int> hmm_decode(const std::vector<int>& actions, const HmmParams& params);

// Minimum-cost assignment for a square cost matrix; returns the column chosen
// for each row.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

// Maps decoded states to true labels by maximizing positional overlap on the
// pooled contingency table (Hungarian assignment). States left without a
// matching label get "S<index>" placeholder names.
std::vector<std::string> align_states(const std::vector<std::vector<int>>& decoded,
                                      const std::vector<std::vector<std::string>>& truths,
                                      int state_count);

// Same assignment for already-labeled estimates (e.g. arbitrary cluster
// names): renames estimated labels to the truth labels that maximize pooled
// positional overlap. Estimates without a truth partner get an
// "UNMATCHED_<label>" name.
std::vector<std::vector<std::string>> align_label_sequences(
    const std::vector<std::vector<std::string>>& estimates,
    const std::vector<std::vector<std::string>>& truths);

void save_hmm(const std::string& path, const HmmParams& params, const ActionAlphabet& alphabet,
              std::uint64_t seed, double loglik);

struct HmmModelFile {
    HmmParams params;
    ActionAlphabet alphabet;
    std::uint64_t seed = 0;
    double loglik = 0.0;
};

HmmModelFile load_hmm(const std::string& path);

}  // namespace sip
