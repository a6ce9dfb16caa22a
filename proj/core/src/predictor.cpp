#include "sip/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "sip/rng.hpp"

namespace sip {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

VectorXd sigmoid(const VectorXd& v) {
    return (1.0 + (-v.array()).exp()).inverse().matrix();
}

void check_dims(const PredictorParams& params) {
    if (params.action_count() < 2) throw std::invalid_argument("predictor: need at least 2 actions");
    if (params.hidden_dim() < 1) throw std::invalid_argument("predictor: hidden_dim must be >= 1");
}

// Logits for the M-1 non-reference categories.
VectorXd head_logits(const VectorXd& theta, const PredictorParams& params) {
    return params.head_weights() * theta + params.head_bias();
}

// log sum over exp(logits) and exp(0), with max subtraction.
double log_norm(const VectorXd& logits) {
    double m = std::max(0.0, logits.maxCoeff());
    return m + std::log(std::exp(-m) + (logits.array() - m).exp().sum());
}

struct StepCache {
    VectorXd theta_prev;
    VectorXd kappa;
    VectorXd reset;
    VectorXd candidate;
    VectorXd theta;
};

StepCache gru_step_cached(const VectorXd& theta_prev, const VectorXd& x,
                          const PredictorParams& params) {
    StepCache c;
    c.theta_prev = theta_prev;
    c.kappa = sigmoid(params.update_state() * theta_prev + params.update_input() * x);
    c.reset = sigmoid(params.reset_state() * theta_prev + params.reset_input() * x);
    c.candidate = (params.candidate_state() * c.reset.cwiseProduct(theta_prev) +
                   params.candidate_input() * x)
                      .array()
                      .tanh()
                      .matrix();
    c.theta = (1.0 - c.kappa.array()) * theta_prev.array() + c.kappa.array() * c.candidate.array();
    return c;
}

}  // namespace

PredictorParams::PredictorParams(int action_count, int hidden_dim)
    : action_count_(action_count), hidden_dim_(hidden_dim) {
    if (action_count < 2) throw std::invalid_argument("PredictorParams: action_count must be >= 2");
    if (hidden_dim < 1) throw std::invalid_argument("PredictorParams: hidden_dim must be >= 1");
    const Eigen::Index m = action_count, k = hidden_dim;
    flat_ = VectorXd::Zero(m * k + 6 * k * k + (m - 1) * k + (m - 1));
}

PredictorParams PredictorParams::random_init(int action_count, int hidden_dim,
                                             std::uint64_t seed) {
    PredictorParams params(action_count, hidden_dim);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < params.flat_.size(); ++i)
        params.flat_[i] = 0.2 * rng.uniform() - 0.1;
    return params;
}

Eigen::VectorXd gru_step(const VectorXd& theta_prev, const VectorXd& x,
                         const PredictorParams& params) {
    check_dims(params);
    if (theta_prev.size() != params.hidden_dim() || x.size() != params.hidden_dim())
        throw std::invalid_argument("gru_step: dimension mismatch");
    if (!theta_prev.allFinite() || !x.allFinite())
        throw std::invalid_argument("gru_step: non-finite input");
    return gru_step_cached(theta_prev, x, params).theta;
}

Eigen::VectorXd predictive_distribution(const VectorXd& theta, const PredictorParams& params) {
    check_dims(params);
    const VectorXd logits = head_logits(theta, params);
    const double m = std::max(0.0, logits.maxCoeff());
    VectorXd p(params.action_count());
    p.head(params.action_count() - 1) = (logits.array() - m).exp();
    p[params.action_count() - 1] = std::exp(-m);
    p /= p.sum();
    return p;
}

ForwardResult forward(const std::vector<int>& actions, const PredictorParams& params) {
    check_dims(params);
    const int t_len = static_cast<int>(actions.size());
    if (t_len < 2) throw std::invalid_argument("forward: process must have length >= 2");

    ForwardResult result;
    result.states.reserve(t_len - 1);
    result.probs.reserve(t_len - 1);
    VectorXd theta = VectorXd::Zero(params.hidden_dim());
    for (int t = 0; t + 1 < t_len; ++t) {
        const VectorXd x = params.embeddings().row(actions[t]).transpose();
        theta = gru_step_cached(theta, x, params).theta;
        result.states.push_back(theta);
        result.probs.push_back(predictive_distribution(theta, params));
    }
    return result;
}

double log_likelihood(const std::vector<int>& actions, const PredictorParams& params) {
    check_dims(params);
    const int t_len = static_cast<int>(actions.size());
    if (t_len < 2) throw std::invalid_argument("log_likelihood: process must have length >= 2");

    double total = 0.0;
    VectorXd theta = VectorXd::Zero(params.hidden_dim());
    for (int t = 0; t + 1 < t_len; ++t) {
        const VectorXd x = params.embeddings().row(actions[t]).transpose();
        theta = gru_step_cached(theta, x, params).theta;
        const VectorXd logits = head_logits(theta, params);
        const int target = actions[t + 1];
        const double target_logit = target == params.action_count() - 1 ? 0.0 : logits[target];
        total += target_logit - log_norm(logits);
    }
    return total;
}

Eigen::VectorXd gradient(const std::vector<int>& actions, const PredictorParams& params,
                         double* log_likelihood_out) {
    check_dims(params);
    const int t_len = static_cast<int>(actions.size());
    if (t_len < 2) throw std::invalid_argument("gradient: process must have length >= 2");
    const int k = params.hidden_dim();
    const int m = params.action_count();

    // Forward pass, caching gate activations per step.
    std::vector<StepCache> steps;
    steps.reserve(t_len - 1);
    VectorXd theta = VectorXd::Zero(k);
    double loglik = 0.0;
    for (int t = 0; t + 1 < t_len; ++t) {
        const VectorXd x = params.embeddings().row(actions[t]).transpose();
        steps.push_back(gru_step_cached(theta, x, params));
        theta = steps.back().theta;
        const VectorXd logits = head_logits(theta, params);
        const int target = actions[t + 1];
        const double target_logit = target == m - 1 ? 0.0 : logits[target];
        loglik += target_logit - log_norm(logits);
    }
    if (log_likelihood_out) *log_likelihood_out = loglik;

    PredictorParams grad(m, k);
    auto g_emb = grad.embeddings();
    auto g_u1 = grad.update_state();
    auto g_v1 = grad.update_input();
    auto g_u2 = grad.reset_state();
    auto g_v2 = grad.reset_input();
    auto g_u3 = grad.candidate_state();
    auto g_v3 = grad.candidate_input();
    auto g_w = grad.head_weights();
    auto g_b = grad.head_bias();

    // Reverse pass. dtheta accumulates dL/dtheta_t from the head at step t
    // and from step t+1's recurrence.
    VectorXd dtheta = VectorXd::Zero(k);
    for (int t = t_len - 2; t >= 0; --t) {
        const StepCache& c = steps[static_cast<std::size_t>(t)];

        // Head at this step: d logit_j = 1{target == j} - p_j for the M-1
        // free logits (the reference logit is constant).
        const VectorXd p = predictive_distribution(c.theta, params);
        const int target = actions[t + 1];
        VectorXd dlogits = -p.head(m - 1);
        if (target < m - 1) dlogits[target] += 1.0;
        g_b += dlogits;
        g_w.noalias() += dlogits * c.theta.transpose();
        dtheta.noalias() += params.head_weights().transpose() * dlogits;

        // Through theta = (1-kappa)*theta_prev + kappa*psi.
        const VectorXd dkappa = dtheta.cwiseProduct(c.candidate - c.theta_prev);
        const VectorXd dpsi = dtheta.cwiseProduct(c.kappa);
        VectorXd dtheta_prev = dtheta.cwiseProduct(VectorXd::Ones(k) - c.kappa);

        const VectorXd x = params.embeddings().row(actions[t]).transpose();
        VectorXd dx = VectorXd::Zero(k);

        // Candidate: psi = tanh(U3 (r*theta_prev) + V3 x).
        const VectorXd dpre_c =
            dpsi.cwiseProduct((1.0 - c.candidate.array().square()).matrix());
        const VectorXd rh = c.reset.cwiseProduct(c.theta_prev);
        g_u3.noalias() += dpre_c * rh.transpose();
        g_v3.noalias() += dpre_c * x.transpose();
        const VectorXd drh = params.candidate_state().transpose() * dpre_c;
        dx.noalias() += params.candidate_input().transpose() * dpre_c;
        const VectorXd dreset = drh.cwiseProduct(c.theta_prev);
        dtheta_prev += drh.cwiseProduct(c.reset);

        // Reset gate: r = sigmoid(U2 theta_prev + V2 x).
        const VectorXd dpre_r =
            dreset.cwiseProduct(c.reset).cwiseProduct(VectorXd::Ones(k) - c.reset);
        g_u2.noalias() += dpre_r * c.theta_prev.transpose();
        g_v2.noalias() += dpre_r * x.transpose();
        dtheta_prev.noalias() += params.reset_state().transpose() * dpre_r;
        dx.noalias() += params.reset_input().transpose() * dpre_r;

        // Update gate: kappa = sigmoid(U1 theta_prev + V1 x).
        const VectorXd dpre_k =
            dkappa.cwiseProduct(c.kappa).cwiseProduct(VectorXd::Ones(k) - c.kappa);
        g_u1.noalias() += dpre_k * c.theta_prev.transpose();
        g_v1.noalias() += dpre_k * x.transpose();
        dtheta_prev.noalias() += params.update_state().transpose() * dpre_k;
        dx.noalias() += params.update_input().transpose() * dpre_k;

        g_emb.row(actions[t]) += dx.transpose();
        dtheta = std::move(dtheta_prev);
    }
    return grad.flat();
}

void rmsprop_update(PredictorParams& params, const VectorXd& grad, RmsPropState& state,
                    double learning_rate, double decay, double epsilon) {
    if (grad.size() != params.flat().size())
        throw std::invalid_argument("rmsprop_update: gradient size mismatch");
    if (state.second_moment.size() == 0)
        state.second_moment = VectorXd::Zero(grad.size());
    if (state.second_moment.size() != grad.size())
        throw std::invalid_argument("rmsprop_update: state size mismatch");
    state.second_moment = decay * state.second_moment.array() + (1.0 - decay) * grad.array().square();
    params.flat().array() +=
        learning_rate * grad.array() / (state.second_moment.array() + epsilon).sqrt();
}

double dataset_nll(const ProcessDataset& dataset, const std::vector<std::size_t>& indices,
                   const PredictorParams& params, std::size_t* steps_out) {
    double total = 0.0;
    std::size_t steps = 0;
    for (auto i : indices) {
        const auto& actions = dataset.processes.at(i).actions;
        total -= log_likelihood(actions, params);
        steps += actions.size() - 1;
    }
    if (steps_out) *steps_out = steps;
    return total;
}

TrainResult train(const ProcessDataset& dataset, const std::vector<std::size_t>& train_indices,
                  const std::vector<std::size_t>& valid_indices, const TrainConfig& config) {
    if (train_indices.empty() || valid_indices.empty())
        throw std::invalid_argument("train: train and valid sets must be nonempty");
    if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (config.learning_rate <= 0) throw std::invalid_argument("train: learning rate must be > 0");
    if (config.hidden_dim < 1) throw std::invalid_argument("train: hidden_dim must be >= 1");

    const int m = dataset.alphabet.size();
    PredictorParams params = PredictorParams::random_init(m, config.hidden_dim, config.seed);
    RmsPropState opt;

    PredictorParams best = params;
    double best_valid = std::numeric_limits<double>::infinity();
    int best_epoch = 0;

    TrainLog log;
    std::vector<std::size_t> order(train_indices);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng shuffle_rng = Rng::child(config.seed, 1000 + static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);
        for (auto i : order) {
            const VectorXd grad = gradient(dataset.processes.at(i).actions, params);
            rmsprop_update(params, grad, opt, config.learning_rate, config.rmsprop_decay,
                           config.rmsprop_epsilon);
        }

        const bool eval_now = (config.eval_every > 0 && epoch % config.eval_every == 0) ||
                              epoch == config.epochs;
        if (!eval_now) continue;

        std::size_t train_steps = 0, valid_steps = 0;
        const double train_nll = dataset_nll(dataset, train_indices, params, &train_steps);
        const double valid_nll = dataset_nll(dataset, valid_indices, params, &valid_steps);
        log.train_steps = train_steps;
        log.valid_steps = valid_steps;
        log.evals.push_back({epoch, train_nll, train_nll / static_cast<double>(train_steps),
                             valid_nll, valid_nll / static_cast<double>(valid_steps)});
        if (valid_nll < best_valid) {
            best_valid = valid_nll;
            best = params;
            best_epoch = epoch;
        }
    }

    log.best_epoch = best_epoch;
    log.best_valid_total_nll = best_valid;
    return {std::move(best), std::move(log)};
}

DimSelection select_embedding_dim(const ProcessDataset& dataset,
                                  const std::vector<std::size_t>& train_indices,
                                  const std::vector<std::size_t>& valid_indices,
                                  const std::vector<int>& candidates, const TrainConfig& config) {
    if (candidates.empty())
        throw std::invalid_argument("select_embedding_dim: no candidate dimensions");

    DimSelection selection;
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<int> sorted(candidates);
    std::sort(sorted.begin(), sorted.end());
    for (int k : sorted) {
        TrainConfig c = config;
        c.hidden_dim = k;
        TrainResult result = train(dataset, train_indices, valid_indices, c);
        selection.candidate_losses.emplace_back(k, result.log.best_valid_total_nll);
        if (result.log.best_valid_total_nll < best_loss) {
            best_loss = result.log.best_valid_total_nll;
            selection.best_dim = k;
        }
    }
    return selection;
}

namespace {

json matrix_to_json(const Eigen::Ref<const MatrixXd>& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

void matrix_from_json(const json& j, Eigen::Ref<MatrixXd> out, const std::string& name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != out.rows())
        throw std::runtime_error("predictor model: bad row count for " + name);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != out.cols())
            throw std::runtime_error("predictor model: bad column count for " + name);
        for (Eigen::Index c = 0; c < out.cols(); ++c)
            out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
}

}  // namespace

void save_predictor(const std::string& path, const PredictorParams& params,
                    const ActionAlphabet& alphabet, const TrainConfig& config) {
    if (alphabet.size() != params.action_count())
        throw std::invalid_argument("save_predictor: alphabet size does not match model");
    json j;
    j["format"] = "sip-predictor";
    j["version"] = 1;
    j["alphabet"] = alphabet.tokens();
    j["hidden_dim"] = params.hidden_dim();
    j["embeddings"] = matrix_to_json(params.embeddings());
    j["gru"] = {{"update_state", matrix_to_json(params.update_state())},
                {"update_input", matrix_to_json(params.update_input())},
                {"reset_state", matrix_to_json(params.reset_state())},
                {"reset_input", matrix_to_json(params.reset_input())},
                {"candidate_state", matrix_to_json(params.candidate_state())},
                {"candidate_input", matrix_to_json(params.candidate_input())}};
    json head;
    head["weights"] = matrix_to_json(params.head_weights());
    json bias = json::array();
    for (Eigen::Index i = 0; i < params.head_bias().size(); ++i) bias.push_back(params.head_bias()[i]);
    head["bias"] = std::move(bias);
    j["head"] = std::move(head);
    j["train_config"] = {{"hidden_dim", config.hidden_dim},
                         {"learning_rate", config.learning_rate},
                         {"epochs", config.epochs},
                         {"seed", config.seed},
                         {"rmsprop_decay", config.rmsprop_decay},
                         {"rmsprop_epsilon", config.rmsprop_epsilon},
                         {"eval_every", config.eval_every}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write predictor model: " + path);
    out << j.dump(2) << '\n';
}

PredictorModelFile load_predictor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open predictor model: " + path);
    json j;
    in >> j;
    if (j.value("format", "") != "sip-predictor")
        throw std::runtime_error(path + ": not a predictor model file");

    ActionAlphabet alphabet(j.at("alphabet").get<std::vector<std::string>>());
    const int m = alphabet.size();
    const int k = j.at("hidden_dim").get<int>();
    PredictorParams params(m, k);
    matrix_from_json(j.at("embeddings"), params.embeddings(), "embeddings");
    const json& gru = j.at("gru");
    matrix_from_json(gru.at("update_state"), params.update_state(), "gru.update_state");
    matrix_from_json(gru.at("update_input"), params.update_input(), "gru.update_input");
    matrix_from_json(gru.at("reset_state"), params.reset_state(), "gru.reset_state");
    matrix_from_json(gru.at("reset_input"), params.reset_input(), "gru.reset_input");
    matrix_from_json(gru.at("candidate_state"), params.candidate_state(), "gru.candidate_state");
    matrix_from_json(gru.at("candidate_input"), params.candidate_input(), "gru.candidate_input");
    const json& head = j.at("head");
    matrix_from_json(head.at("weights"), params.head_weights(), "head.weights");
    const json& bias = head.at("bias");
    if (static_cast<int>(bias.size()) != m - 1)
        throw std::runtime_error("predictor model: bad head bias length");
    for (int i = 0; i < m - 1; ++i) params.head_bias()[i] = bias[static_cast<std::size_t>(i)].get<double>();
    if (!params.all_finite()) throw std::runtime_error(path + ": non-finite parameters");

    TrainConfig config;
    if (j.contains("train_config")) {
        const json& tc = j["train_config"];
        config.hidden_dim = tc.value("hidden_dim", k);
        config.learning_rate = tc.value("learning_rate", 1e-3);
        config.epochs = tc.value("epochs", 50);
        config.seed = tc.value("seed", std::uint64_t{0});
        config.rmsprop_decay = tc.value("rmsprop_decay", 0.9);
        config.rmsprop_epsilon = tc.value("rmsprop_epsilon", 1e-8);
        config.eval_every = tc.value("eval_every", 1);
    }
    return {std::move(params), std::move(alphabet), config};
}

}  // namespace sip
