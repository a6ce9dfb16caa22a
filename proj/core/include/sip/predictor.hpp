#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sip/data.hpp"

namespace sip {

struct TrainConfig {
    int hidden_dim = 20;         // K
    double learning_rate = 1e-3;
    int epochs = 50;
    std::uint64_t seed = 0;
    double rmsprop_decay = 0.9;
    double rmsprop_epsilon = 1e-8;
    int eval_every = 1;          // validation cadence, in epochs
};

// All model parameters in one flat vector with block views: action embeddings
// (M x K), the six gate matrices (K x K each), and the logistic head with
// M-1 logit rows (category M is the reference with logit pinned to 0).
// Flat storage makes the optimizer, the gradient, and finite-difference
// checks operate on a single contiguous vector.
class PredictorParams {
public:
    PredictorParams(int action_count, int hidden_dim);

    // Uniform(-0.1, 0.1) entries, filled in storage order, seed-controlled.
    static PredictorParams random_init(int action_count, int hidden_dim, std::uint64_t seed);

    int action_count() const { return action_count_; }
    int hidden_dim() const { return hidden_dim_; }

    Eigen::VectorXd& flat() { return flat_; }
    const Eigen::VectorXd& flat() const { return flat_; }
    Eigen::Index parameter_count() const { return flat_.size(); }

    using Block = Eigen::Map<Eigen::MatrixXd>;
    using ConstBlock = Eigen::Map<const Eigen::MatrixXd>;
    using VecBlock = Eigen::Map<Eigen::VectorXd>;
    using ConstVecBlock = Eigen::Map<const Eigen::VectorXd>;

    Block embeddings() { return block(0, action_count_, hidden_dim_); }
    ConstBlock embeddings() const { return block(0, action_count_, hidden_dim_); }
    Block update_state() { return gate(0); }        // U1
    ConstBlock update_state() const { return gate(0); }
    Block update_input() { return gate(1); }        // V1
    ConstBlock update_input() const { return gate(1); }
    Block reset_state() { return gate(2); }         // U2
    ConstBlock reset_state() const { return gate(2); }
    Block reset_input() { return gate(3); }         // V2
    ConstBlock reset_input() const { return gate(3); }
    Block candidate_state() { return gate(4); }     // U3
    ConstBlock candidate_state() const { return gate(4); }
    Block candidate_input() { return gate(5); }     // V3
    ConstBlock candidate_input() const { return gate(5); }
    Block head_weights() { return block(head_offset(), action_count_ - 1, hidden_dim_); }
    ConstBlock head_weights() const { return block(head_offset(), action_count_ - 1, hidden_dim_); }
    VecBlock head_bias() {
        return VecBlock(flat_.data() + bias_offset(), action_count_ - 1);
    }
    ConstVecBlock head_bias() const {
        return ConstVecBlock(flat_.data() + bias_offset(), action_count_ - 1);
    }

    bool all_finite() const { return flat_.allFinite(); }

private:
    Eigen::Index gate_offset(int g) const {
        return static_cast<Eigen::Index>(action_count_) * hidden_dim_ +
               static_cast<Eigen::Index>(g) * hidden_dim_ * hidden_dim_;
    }
    Eigen::Index head_offset() const { return gate_offset(6); }
    Eigen::Index bias_offset() const {
        return head_offset() + static_cast<Eigen::Index>(action_count_ - 1) * hidden_dim_;
    }
    Block block(Eigen::Index offset, int rows, int cols) {
        return Block(flat_.data() + offset, rows, cols);
    }
    ConstBlock block(Eigen::Index offset, int rows, int cols) const {
        return ConstBlock(flat_.data() + offset, rows, cols);
    }
    Block gate(int g) { return block(gate_offset(g), hidden_dim_, hidden_dim_); }
    ConstBlock gate(int g) const { return block(gate_offset(g), hidden_dim_, hidden_dim_); }

    int action_count_;
    int hidden_dim_;
    Eigen::VectorXd flat_;
};

// One GRU update: update/reset gates and tanh candidate, no bias terms.
// theta_new = (1 - kappa) * theta_prev + kappa * psi, elementwise.
Eigen::VectorXd gru_step(const Eigen::VectorXd& theta_prev, const Eigen::VectorXd& x,
                         const PredictorParams& params);

// Softmax over the M-1 head logits plus the pinned reference logit 0,
// computed with max-logit subtraction.
Eigen::VectorXd predictive_distribution(const Eigen::VectorXd& theta,
                                        const PredictorParams& params);

struct ForwardResult {
    // states[t] is the hidden state after consuming actions[0..t];
    // probs[t] is the predictive distribution for actions[t+1]. Both have
    // length T-1.
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> probs;
};

ForwardResult forward(const std::vector<int>& actions, const PredictorParams& params);

double log_likelihood(const std::vector<int>& actions, const PredictorParams& params);

// Exact gradient of log_likelihood via reverse accumulation through the
// recurrence. Returned flat, same layout as PredictorParams::flat().
Eigen::VectorXd gradient(const std::vector<int>& actions, const PredictorParams& params,
                         double* log_likelihood_out = nullptr);

struct RmsPropState {
    Eigen::VectorXd second_moment;  // running mean of squared gradients
};

// Ascent step on the log-likelihood:
//   v <- rho * v + (1 - rho) * g^2,  theta <- theta + lr * g / sqrt(v + eps)
void rmsprop_update(PredictorParams& params, const Eigen::VectorXd& grad, RmsPropState& state,
                    double learning_rate, double decay, double epsilon);

struct EvalPoint {
    int epoch;
    double train_total_nll;
    double train_mean_nll;   // per prediction step
    double valid_total_nll;
    double valid_mean_nll;
};

struct TrainLog {
    std::vector<EvalPoint> evals;
    int best_epoch = 0;
    double best_valid_total_nll = 0.0;
    std::size_t train_steps = 0;  // total prediction steps in the train set
    std::size_t valid_steps = 0;
};

struct TrainResult {
    PredictorParams params;
    TrainLog log;
};

// Per-sequence stochastic gradient ascent with RmsProp steps: one shuffled
// pass over the train indices per epoch, validation evaluated at the
// configured cadence, and the parameter snapshot with the lowest validation
// loss returned. Deterministic given config.seed.
TrainResult train(const ProcessDataset& dataset, const std::vector<std::size_t>& train_indices,
                  const std::vector<std::size_t>& valid_indices, const TrainConfig& config);

// Total negative log-likelihood over the given processes; steps_out receives
// the number of prediction steps.
double dataset_nll(const ProcessDataset& dataset, const std::vector<std::size_t>& indices,
                   const PredictorParams& params, std::size_t* steps_out = nullptr);

struct DimSelection {
    int best_dim = 0;
    std::vector<std::pair<int, double>> candidate_losses;  // (K, best valid total NLL)
};

// Trains one model per candidate K and picks the smallest validation loss;
// ties go to the smaller K.
DimSelection select_embedding_dim(const ProcessDataset& dataset,
                                  const std::vector<std::size_t>& train_indices,
                                  const std::vector<std::size_t>& valid_indices,
                                  const std::vector<int>& candidates, const TrainConfig& config);

struct PredictorModelFile {
    PredictorParams params;
    ActionAlphabet alphabet;
    TrainConfig config;
};

void save_predictor(const std::string& path, const PredictorParams& params,
                    const ActionAlphabet& alphabet, const TrainConfig& config);
PredictorModelFile load_predictor(const std::string& path);

}  // namespace sip
