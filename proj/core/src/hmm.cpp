#include "sip/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "sip/rng.hpp"

namespace sip {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

VectorXd dirichlet_row(int n, Rng& rng) {
    VectorXd row(n);
    for (int i = 0; i < n; ++i) row[i] = -std::log(1.0 - rng.uniform());
    return row / row.sum();
}

HmmParams random_hmm(int r, int m, Rng& rng) {
    HmmParams params;
    params.initial = dirichlet_row(r, rng);
    params.transition = MatrixXd(r, r);
    for (int i = 0; i < r; ++i) params.transition.row(i) = dirichlet_row(r, rng).transpose();
    params.emission = MatrixXd(r, m);
    for (int i = 0; i < r; ++i) params.emission.row(i) = dirichlet_row(m, rng).transpose();
    return params;
}

struct SequenceStats {
    double loglik = 0.0;
    VectorXd gamma_first;
    MatrixXd xi_sum;       // R x R
    MatrixXd emit_counts;  // R x M, gamma-weighted
    VectorXd gamma_trans;  // R, sum of gamma over t < T-1
};

// Scaled forward-backward for one sequence plus the accumulators Baum-Welch
// needs.
SequenceStats forward_backward(const std::vector<int>& actions, const HmmParams& params) {
    const int r = params.state_count();
    const int t_len = static_cast<int>(actions.size());

    MatrixXd alpha(t_len, r);
    VectorXd scale(t_len);
    VectorXd cur = params.initial.cwiseProduct(params.emission.col(actions[0]));
    scale[0] = cur.sum();
    if (scale[0] <= 0) throw std::runtime_error("hmm: zero forward mass (symbol with no emission)");
    alpha.row(0) = cur.transpose() / scale[0];
    for (int t = 1; t < t_len; ++t) {
        cur = (params.transition.transpose() * alpha.row(t - 1).transpose())
                  .cwiseProduct(params.emission.col(actions[t]));
        scale[t] = cur.sum();
        if (scale[t] <= 0) throw std::runtime_error("hmm: zero forward mass (symbol with no emission)");
        alpha.row(t) = cur.transpose() / scale[t];
    }

    MatrixXd beta(t_len, r);
    beta.row(t_len - 1).setOnes();
    for (int t = t_len - 2; t >= 0; --t) {
        const VectorXd tmp =
            params.emission.col(actions[t + 1]).cwiseProduct(beta.row(t + 1).transpose());
        beta.row(t) = (params.transition * tmp).transpose() / scale[t + 1];
    }

    SequenceStats stats;
    stats.loglik = scale.array().log().sum();
    stats.gamma_first = alpha.row(0).cwiseProduct(beta.row(0)).transpose();
    stats.xi_sum = MatrixXd::Zero(r, r);
    stats.emit_counts = MatrixXd::Zero(r, params.symbol_count());
    stats.gamma_trans = VectorXd::Zero(r);
    for (int t = 0; t < t_len; ++t) {
        const VectorXd gamma = alpha.row(t).cwiseProduct(beta.row(t)).transpose();
        stats.emit_counts.col(actions[t]) += gamma;
        if (t + 1 < t_len) {
            stats.gamma_trans += gamma;
            // xi(i,j) = alpha_t(i) A(i,j) B(j, s_{t+1}) beta_{t+1}(j) / c_{t+1}
            const VectorXd right =
                params.emission.col(actions[t + 1]).cwiseProduct(beta.row(t + 1).transpose()) /
                scale[t + 1];
            stats.xi_sum += (alpha.row(t).transpose() * right.transpose()).cwiseProduct(params.transition);
        }
    }
    return stats;
}

}  // namespace

double hmm_log_likelihood(const std::vector<int>& actions, const HmmParams& params) {
    if (actions.empty()) throw std::invalid_argument("hmm_log_likelihood: empty sequence");
    const int t_len = static_cast<int>(actions.size());
    VectorXd cur = params.initial.cwiseProduct(params.emission.col(actions[0]));
    double total = 0.0;
    double s = cur.sum();
    if (s <= 0) return kNegInf;
    total += std::log(s);
    cur /= s;
    for (int t = 1; t < t_len; ++t) {
        cur = (params.transition.transpose() * cur).cwiseProduct(params.emission.col(actions[t]));
        s = cur.sum();
        if (s <= 0) return kNegInf;
        total += std::log(s);
        cur /= s;
    }
    return total;
}

HmmFit hmm_fit(const ProcessDataset& dataset, const std::vector<std::size_t>& indices,
               int state_count, const HmmConfig& config) {
    if (state_count < 1) throw std::invalid_argument("hmm_fit: state_count must be >= 1");
    if (indices.empty()) throw std::invalid_argument("hmm_fit: empty index set");
    std::size_t total_actions = 0;
    for (auto i : indices) total_actions += dataset.processes.at(i).actions.size();
    if (static_cast<std::size_t>(state_count) > total_actions)
        throw std::invalid_argument("hmm_fit: more states than observed actions");

    const int m = dataset.alphabet.size();
    HmmFit best;
    best.loglik = kNegInf;

    for (int restart = 0; restart < std::max(config.restarts, 1); ++restart) {
        Rng rng = Rng::child(config.seed, static_cast<std::uint64_t>(restart));
        HmmParams params = random_hmm(state_count, m, rng);
        std::vector<double> trace;
        double prev = kNegInf;

        for (int iter = 0; iter < config.max_iter; ++iter) {
            VectorXd pi_acc = VectorXd::Zero(state_count);
            MatrixXd xi_acc = MatrixXd::Zero(state_count, state_count);
            VectorXd gamma_trans_acc = VectorXd::Zero(state_count);
            MatrixXd emit_acc = MatrixXd::Zero(state_count, m);
            double loglik = 0.0;
            for (auto i : indices) {
                const SequenceStats stats = forward_backward(dataset.processes.at(i).actions, params);
                loglik += stats.loglik;
                pi_acc += stats.gamma_first;
                xi_acc += stats.xi_sum;
                gamma_trans_acc += stats.gamma_trans;
                emit_acc += stats.emit_counts;
            }
            trace.push_back(loglik);

            // M-step.
            params.initial = pi_acc / pi_acc.sum();
            for (int i = 0; i < state_count; ++i) {
                if (gamma_trans_acc[i] > 0) {
                    params.transition.row(i) = xi_acc.row(i) / gamma_trans_acc[i];
                    params.transition.row(i) /= params.transition.row(i).sum();
                }
                VectorXd row = emit_acc.row(i).transpose();
                const double mass = row.sum();
                if (mass > 0) row /= mass;
                row = row.cwiseMax(config.emission_floor);
                params.emission.row(i) = row.transpose() / row.sum();
            }

            if (iter > 0 && std::abs(loglik - prev) <= config.tol * std::abs(prev)) {
                prev = loglik;
                break;
            }
            prev = loglik;
        }

        if (prev > best.loglik) {
            best.params = std::move(params);
            best.loglik = prev;
            best.loglik_trace = std::move(trace);
            best.iterations = static_cast<int>(best.loglik_trace.size());
        }
    }
    return best;
}

std::vector<int> hmm_decode(const std::vector<int>& actions, const HmmParams& params) {
    if (actions.empty()) throw std::invalid_argument("hmm_decode: empty sequence");
    const int r = params.state_count();
    const int t_len = static_cast<int>(actions.size());

    const MatrixXd log_a = params.transition.array().log().matrix();
    const MatrixXd log_b = params.emission.array().log().matrix();

    MatrixXd delta(t_len, r);
    Eigen::MatrixXi back(t_len, r);
    for (int i = 0; i < r; ++i)
        delta(0, i) = std::log(params.initial[i]) + log_b(i, actions[0]);
    for (int t = 1; t < t_len; ++t) {
        for (int j = 0; j < r; ++j) {
            int arg = 0;
            double best = kNegInf;
            for (int i = 0; i < r; ++i) {
                const double cand = delta(t - 1, i) + log_a(i, j);
                if (cand > best) {
                    best = cand;
                    arg = i;
                }
            }
            delta(t, j) = best + log_b(j, actions[t]);
            back(t, j) = arg;
        }
    }

    std::vector<int> path(static_cast<std::size_t>(t_len));
    int arg = 0;
    double best = kNegInf;
    for (int i = 0; i < r; ++i) {
        if (delta(t_len - 1, i) > best) {
            best = delta(t_len - 1, i);
            arg = i;
        }
    }
    path[static_cast<std::size_t>(t_len) - 1] = arg;
    for (int t = t_len - 1; t > 0; --t)
        path[static_cast<std::size_t>(t) - 1] = back(t, path[static_cast<std::size_t>(t)]);
    return path;
}

std::vector<int> hungarian(const MatrixXd& cost) {
    if (cost.rows() != cost.cols()) throw std::invalid_argument("hungarian: matrix must be square");
    const int n = static_cast<int>(cost.rows());
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
        std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        if (p[static_cast<std::size_t>(j)] > 0)
            row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
    }
    return row_to_col;
}

std::vector<std::string> align_states(const std::vector<std::vector<int>>& decoded,
                                      const std::vector<std::vector<std::string>>& truths,
                                      int state_count) {
    if (decoded.size() != truths.size())
        throw std::invalid_argument("align_states: decoded/truth count mismatch");

    std::vector<std::string> label_names;
    std::map<std::string, int> label_index;
    MatrixXd counts = MatrixXd::Zero(state_count, 0);
    for (std::size_t s = 0; s < decoded.size(); ++s) {
        if (decoded[s].size() != truths[s].size())
            throw std::invalid_argument("align_states: sequence length mismatch");
        for (std::size_t t = 0; t < decoded[s].size(); ++t) {
            const std::string& label = truths[s][t];
            auto it = label_index.find(label);
            if (it == label_index.end()) {
                it = label_index.emplace(label, static_cast<int>(label_names.size())).first;
                label_names.push_back(label);
                counts.conservativeResize(Eigen::NoChange, counts.cols() + 1);
                counts.col(counts.cols() - 1).setZero();
            }
            counts(decoded[s][t], it->second) += 1.0;
        }
    }

    const int n = std::max(state_count, static_cast<int>(label_names.size()));
    MatrixXd cost = MatrixXd::Zero(n, n);
    cost.topLeftCorner(state_count, counts.cols()) = -counts;
    const std::vector<int> assignment = hungarian(cost);

    std::vector<std::string> mapping(static_cast<std::size_t>(state_count));
    for (int s = 0; s < state_count; ++s) {
        const int col = assignment[static_cast<std::size_t>(s)];
        mapping[static_cast<std::size_t>(s)] = col < static_cast<int>(label_names.size())
                                                   ? label_names[static_cast<std::size_t>(col)]
                                                   : "S" + std::to_string(s);
    }
    return mapping;
}

std::vector<std::vector<std::string>> align_label_sequences(
    const std::vector<std::vector<std::string>>& estimates,
    const std::vector<std::vector<std::string>>& truths) {
    if (estimates.size() != truths.size())
        throw std::invalid_argument("align_label_sequences: estimate/truth count mismatch");

    std::vector<std::string> est_names, true_names;
    std::map<std::string, int> est_index, true_index;
    auto intern = [](const std::string& label, std::vector<std::string>& names,
                     std::map<std::string, int>& index) {
        auto it = index.find(label);
        if (it != index.end()) return it->second;
        index.emplace(label, static_cast<int>(names.size()));
        names.push_back(label);
        return static_cast<int>(names.size()) - 1;
    };
    for (std::size_t s = 0; s < estimates.size(); ++s) {
        if (estimates[s].size() != truths[s].size())
            throw std::invalid_argument("align_label_sequences: sequence length mismatch");
        for (const auto& l : estimates[s]) intern(l, est_names, est_index);
        for (const auto& l : truths[s]) intern(l, true_names, true_index);
    }

    const int n = static_cast<int>(std::max(est_names.size(), true_names.size()));
    MatrixXd cost = MatrixXd::Zero(n, n);
    for (std::size_t s = 0; s < estimates.size(); ++s) {
        for (std::size_t t = 0; t < estimates[s].size(); ++t)
            cost(est_index.at(estimates[s][t]), true_index.at(truths[s][t])) -= 1.0;
    }
    const std::vector<int> assignment = hungarian(cost);

    std::vector<std::vector<std::string>> renamed = estimates;
    for (auto& seq : renamed) {
        for (auto& label : seq) {
            const int col = assignment[static_cast<std::size_t>(est_index.at(label))];
            label = col < static_cast<int>(true_names.size())
                        ? true_names[static_cast<std::size_t>(col)]
                        : "UNMATCHED_" + label;
        }
    }
    return renamed;
}

void save_hmm(const std::string& path, const HmmParams& params, const ActionAlphabet& alphabet,
              std::uint64_t seed, double loglik) {
    if (alphabet.size() != params.symbol_count())
        throw std::invalid_argument("save_hmm: alphabet size does not match emissions");
    json j;
    j["format"] = "sip-hmm";
    j["version"] = 1;
    j["states"] = params.state_count();
    j["alphabet"] = alphabet.tokens();
    json pi = json::array();
    for (int i = 0; i < params.state_count(); ++i) pi.push_back(params.initial[i]);
    j["pi"] = std::move(pi);
    json a = json::array();
    for (int i = 0; i < params.state_count(); ++i) {
        json row = json::array();
        for (int k = 0; k < params.state_count(); ++k) row.push_back(params.transition(i, k));
        a.push_back(std::move(row));
    }
    j["A"] = std::move(a);
    json b = json::array();
    for (int i = 0; i < params.state_count(); ++i) {
        json row = json::array();
        for (int m = 0; m < params.symbol_count(); ++m) row.push_back(params.emission(i, m));
        b.push_back(std::move(row));
    }
    j["B"] = std::move(b);
    j["seed"] = seed;
    j["loglik"] = loglik;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write HMM model: " + path);
    out << j.dump(2) << '\n';
}

HmmModelFile load_hmm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open HMM model: " + path);
    json j;
    in >> j;
    if (j.value("format", "") != "sip-hmm") throw std::runtime_error(path + ": not an HMM model file");

    HmmModelFile file;
    file.alphabet = ActionAlphabet(j.at("alphabet").get<std::vector<std::string>>());
    const int r = j.at("states").get<int>();
    const int m = file.alphabet.size();
    file.params.initial = VectorXd(r);
    for (int i = 0; i < r; ++i) file.params.initial[i] = j.at("pi")[static_cast<std::size_t>(i)].get<double>();
    file.params.transition = MatrixXd(r, r);
    file.params.emission = MatrixXd(r, m);
    for (int i = 0; i < r; ++i) {
        for (int k = 0; k < r; ++k)
            file.params.transition(i, k) =
                j.at("A")[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
        for (int c = 0; c < m; ++c)
            file.params.emission(i, c) =
                j.at("B")[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
    }
    file.seed = j.value("seed", std::uint64_t{0});
    file.loglik = j.value("loglik", 0.0);
    return file;
}

}  // namespace sip
