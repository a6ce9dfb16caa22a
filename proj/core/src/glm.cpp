#include "sip/glm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "sip/rng.hpp"

namespace sip {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool needs_sequences(FeatureChoice choice) {
    return choice == FeatureChoice::Transitions ||
           choice == FeatureChoice::TransitionsSubtaskNgrams ||
           choice == FeatureChoice::SingleSubtaskNgrams;
}

// Maximal constant runs of the state sequence, as (label, action slice).
std::vector<std::pair<std::string, std::vector<int>>> state_runs(
    const ResponseProcess& process, const LabeledSequences& seq) {
    if (seq.states.size() != process.actions.size())
        throw std::invalid_argument("state sequence length does not match process " + process.id);
    std::vector<std::pair<std::string, std::vector<int>>> runs;
    for (std::size_t t = 0; t < seq.states.size(); ++t) {
        if (runs.empty() || runs.back().first != seq.states[t])
            runs.push_back({seq.states[t], {}});
        runs.back().second.push_back(process.actions[t]);
    }
    return runs;
}

std::string uni_name(const ActionAlphabet& alphabet, int a) {
    return "uni:" + alphabet.token(a);
}

std::string bi_name(const ActionAlphabet& alphabet, int a, int b) {
    return "bi:" + alphabet.token(a) + ">" + alphabet.token(b);
}

// N-gram occurrence counting over a set of token slices. Unigrams and bigrams
// are thresholded against their own token totals (or against the sequence
// count when document_frequency is set).
struct NgramCounter {
    std::map<std::string, double> counts;
    double uni_total = 0, bi_total = 0;
    std::size_t sequences = 0;

    void add(const ActionAlphabet& alphabet, const std::vector<int>& actions, bool document_frequency) {
        ++sequences;
        std::set<std::string> seen;
        for (std::size_t t = 0; t < actions.size(); ++t) {
            const std::string u = uni_name(alphabet, actions[t]);
            uni_total += 1;
            if (document_frequency) seen.insert(u);
            else counts[u] += 1;
            if (t + 1 < actions.size()) {
                const std::string b = bi_name(alphabet, actions[t], actions[t + 1]);
                bi_total += 1;
                if (document_frequency) seen.insert(b);
                else counts[b] += 1;
            }
        }
        if (document_frequency) {
            for (const auto& name : seen) counts[name] += 1;
        }
    }

    std::vector<std::string> surviving(double threshold, bool document_frequency) const {
        std::vector<std::string> names;
        for (const auto& [name, count] : counts) {
            const bool is_uni = name.rfind("uni:", 0) == 0;
            const double base = document_frequency ? static_cast<double>(sequences)
                                                   : (is_uni ? uni_total : bi_total);
            if (base > 0 && count / base > threshold) names.push_back(name);
        }
        return names;
    }
};

double meta_as_double(const MetaValue& value) {
    if (std::holds_alternative<bool>(value)) return std::get<bool>(value) ? 1.0 : 0.0;
    if (std::holds_alternative<double>(value)) return std::get<double>(value);
    throw std::invalid_argument("metadata value is not numeric");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::string feature_choice_name(FeatureChoice choice) {
    switch (choice) {
        case FeatureChoice::Baseline: return "baseline";
        case FeatureChoice::Transitions: return "transitions";
        case FeatureChoice::TransitionsSubtaskNgrams: return "transitions+subtask-ngrams";
        case FeatureChoice::ProcessNgrams: return "process-ngrams";
        case FeatureChoice::SingleSubtaskNgrams: return "single-subtask-ngrams";
    }
    return "?";
}

void FeatureVocabulary::add(const std::string& name) {
    if (index.count(name)) return;
    index.emplace(name, static_cast<int>(names.size()));
    names.push_back(name);
}

FeatureVocabulary build_vocabulary(const ProcessDataset& dataset,
                                   const std::vector<const LabeledSequences*>& sequences,
                                   const std::vector<std::size_t>& rows, const FeatureSpec& spec) {
    if (spec.ngram_threshold <= 0 || spec.ngram_threshold >= 1)
        throw std::invalid_argument("build_vocabulary: ngram threshold must lie in (0, 1)");
    if (spec.choice == FeatureChoice::SingleSubtaskNgrams && spec.subtask.empty())
        throw std::invalid_argument("build_vocabulary: single-subtask choice needs a subtask name");

    FeatureVocabulary vocab;
    if (spec.include_outcome) vocab.add("outcome");
    if (spec.choice == FeatureChoice::Baseline) return vocab;

    std::set<std::string> transition_pairs;
    std::set<std::string> subtasks_seen;
    NgramCounter ngrams;

    for (std::size_t row : rows) {
        const ResponseProcess& process = dataset.processes.at(row);
        const LabeledSequences* seq = sequences.at(row);
        if (needs_sequences(spec.choice)) {
            if (!seq)
                throw std::invalid_argument("build_vocabulary: missing subtask sequences for process " +
                                            process.id);
            for (std::size_t l = 0; l + 1 < seq->subtasks.size(); ++l)
                transition_pairs.insert(seq->subtasks[l] + ">" + seq->subtasks[l + 1]);
            for (const auto& label : seq->subtasks) subtasks_seen.insert(label);
        }

        switch (spec.choice) {
            case FeatureChoice::TransitionsSubtaskNgrams:
                for (const auto& [label, actions] : state_runs(process, *seq))
                    ngrams.add(dataset.alphabet, actions, spec.document_frequency);
                break;
            case FeatureChoice::SingleSubtaskNgrams:
                for (const auto& [label, actions] : state_runs(process, *seq)) {
                    if (label == spec.subtask)
                        ngrams.add(dataset.alphabet, actions, spec.document_frequency);
                }
                break;
            case FeatureChoice::ProcessNgrams:
                ngrams.add(dataset.alphabet, process.actions, spec.document_frequency);
                break;
            default:
                break;
        }
    }

    if (spec.choice == FeatureChoice::Transitions ||
        spec.choice == FeatureChoice::TransitionsSubtaskNgrams) {
        for (const auto& pair : transition_pairs) vocab.add("trans:" + pair);
    }

    const auto surviving = ngrams.surviving(spec.ngram_threshold, spec.document_frequency);
    switch (spec.choice) {
        case FeatureChoice::TransitionsSubtaskNgrams:
            for (const auto& subtask : subtasks_seen)
                for (const auto& name : surviving) vocab.add("sub:" + subtask + ":" + name);
            break;
        case FeatureChoice::SingleSubtaskNgrams:
            for (const auto& name : surviving) vocab.add("sub:" + spec.subtask + ":" + name);
            break;
        case FeatureChoice::ProcessNgrams:
            for (const auto& name : surviving) vocab.add("proc:" + name);
            break;
        default:
            break;
    }
    return vocab;
}

Eigen::VectorXd extract_features(const ResponseProcess& process,
                                 const LabeledSequences* sequences, const FeatureSpec& spec,
                                 const FeatureVocabulary& vocabulary,
                                 const ActionAlphabet& alphabet) {
    if (needs_sequences(spec.choice) && !sequences)
        throw std::invalid_argument("extract_features: choice requires subtask sequences");

    VectorXd x = VectorXd::Zero(vocabulary.size());
    auto set_if_known = [&](const std::string& name) {
        auto it = vocabulary.index.find(name);
        if (it != vocabulary.index.end()) x[it->second] = 1.0;
    };

    if (spec.include_outcome) {
        auto it = vocabulary.index.find("outcome");
        if (it != vocabulary.index.end()) {
            auto meta_it = process.meta.find(spec.outcome_key);
            if (meta_it == process.meta.end())
                throw std::invalid_argument("extract_features: process " + process.id +
                                            " lacks outcome metadata '" + spec.outcome_key + "'");
            x[it->second] = meta_as_double(meta_it->second);
        }
    }
    if (spec.choice == FeatureChoice::Baseline) return x;

    if (spec.choice == FeatureChoice::Transitions ||
        spec.choice == FeatureChoice::TransitionsSubtaskNgrams) {
        for (std::size_t l = 0; l + 1 < sequences->subtasks.size(); ++l)
            set_if_known("trans:" + sequences->subtasks[l] + ">" + sequences->subtasks[l + 1]);
    }

    auto mark_ngrams = [&](const std::string& prefix, const std::vector<int>& actions) {
        for (std::size_t t = 0; t < actions.size(); ++t) {
            set_if_known(prefix + uni_name(alphabet, actions[t]));
            if (t + 1 < actions.size())
                set_if_known(prefix + bi_name(alphabet, actions[t], actions[t + 1]));
        }
    };

    switch (spec.choice) {
        case FeatureChoice::TransitionsSubtaskNgrams:
            for (const auto& [label, actions] : state_runs(process, *sequences))
                mark_ngrams("sub:" + label + ":", actions);
            break;
        case FeatureChoice::SingleSubtaskNgrams:
            for (const auto& [label, actions] : state_runs(process, *sequences)) {
                if (label == spec.subtask) mark_ngrams("sub:" + label + ":", actions);
            }
            break;
        case FeatureChoice::ProcessNgrams:
            mark_ngrams("proc:", process.actions);
            break;
        default:
            break;
    }
    return x;
}

double logit_intercept_cap() { return std::log((1.0 - 1e-6) / 1e-6); }

namespace {

GlmModel ridge_fit_identity(const MatrixXd& x, const VectorXd& y, double penalty) {
    const Eigen::Index n = x.rows(), p = x.cols();
    MatrixXd normal(p + 1, p + 1);
    normal(0, 0) = static_cast<double>(n);
    normal.block(0, 1, 1, p) = x.colwise().sum();
    normal.block(1, 0, p, 1) = x.colwise().sum().transpose();
    normal.block(1, 1, p, p) = x.transpose() * x + penalty * MatrixXd::Identity(p, p);
    VectorXd rhs(p + 1);
    rhs[0] = y.sum();
    rhs.tail(p) = x.transpose() * y;
    const VectorXd solution = normal.ldlt().solve(rhs);

    GlmModel model;
    model.link = LinkFunction::Identity;
    model.intercept = solution[0];
    model.coefficients = solution.tail(p);
    model.ridge_penalty = penalty;
    return model;
}

double penalized_logit_objective(const MatrixXd& x, const VectorXd& y, double b0,
                                 const VectorXd& beta, double penalty) {
    const VectorXd eta = (x * beta).array() + b0;
    double loglik = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        // log(1 + e^eta) computed stably
        const double e = eta[i];
        loglik += y[i] * e - (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)));
    }
    return loglik - 0.5 * penalty * beta.squaredNorm();
}

GlmModel ridge_fit_logit(const MatrixXd& x, const VectorXd& y, double penalty) {
    const Eigen::Index p = x.cols();
    const double cap = logit_intercept_cap();
    double b0 = 0.0;
    VectorXd beta = VectorXd::Zero(p);
    double objective = penalized_logit_objective(x, y, b0, beta, penalty);

    for (int iter = 0; iter < 100; ++iter) {
        const VectorXd eta = ((x * beta).array() + b0).matrix();
        VectorXd prob(eta.size()), weight(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            prob[i] = sigmoid(eta[i]);
            weight[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-10);
        }
        const VectorXd residual = y - prob;

        VectorXd grad(p + 1);
        grad[0] = residual.sum();
        grad.tail(p) = x.transpose() * residual - penalty * beta;
        if (grad.cwiseAbs().maxCoeff() < 1e-8) break;

        MatrixXd hessian(p + 1, p + 1);
        hessian(0, 0) = weight.sum();
        hessian.block(0, 1, 1, p) = weight.transpose() * x;
        hessian.block(1, 0, p, 1) = hessian.block(0, 1, 1, p).transpose();
        hessian.block(1, 1, p, p) =
            x.transpose() * weight.asDiagonal() * x + penalty * MatrixXd::Identity(p, p);
        const VectorXd step = hessian.ldlt().solve(grad);

        // Newton ascent with halving until the penalized objective improves.
        double scale = 1.0;
        for (int halving = 0; halving < 40; ++halving) {
            const double b0_new = std::clamp(b0 + scale * step[0], -cap, cap);
            const VectorXd beta_new = beta + scale * step.tail(p);
            const double obj_new = penalized_logit_objective(x, y, b0_new, beta_new, penalty);
            if (obj_new >= objective - 1e-12) {
                b0 = b0_new;
                beta = beta_new;
                objective = obj_new;
                break;
            }
            scale *= 0.5;
        }
    }

    GlmModel model;
    model.link = LinkFunction::Logit;
    model.intercept = b0;
    model.coefficients = std::move(beta);
    model.ridge_penalty = penalty;
    return model;
}

}  // namespace

GlmModel ridge_fit(const MatrixXd& x, const VectorXd& y, LinkFunction link, double ridge_penalty) {
    if (x.rows() == 0) throw std::invalid_argument("ridge_fit: no rows");
    if (x.rows() != y.size()) throw std::invalid_argument("ridge_fit: X/y row mismatch");
    if (ridge_penalty < 0) throw std::invalid_argument("ridge_fit: penalty must be >= 0");
    return link == LinkFunction::Identity ? ridge_fit_identity(x, y, ridge_penalty)
                                          : ridge_fit_logit(x, y, ridge_penalty);
}

Eigen::VectorXd glm_predict(const GlmModel& model, const MatrixXd& x) {
    VectorXd eta = ((x * model.coefficients).array() + model.intercept).matrix();
    if (model.link == LinkFunction::Logit) {
        for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
    }
    return eta;
}

double cv_select_penalty(const MatrixXd& x, const VectorXd& y, LinkFunction link,
                         const std::vector<double>& grid, int folds, std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("cv_select_penalty: empty grid");
    if (folds < 2) throw std::invalid_argument("cv_select_penalty: need at least 2 folds");
    if (x.rows() < folds) throw std::invalid_argument("cv_select_penalty: fewer rows than folds");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<int> fold_of(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(folds));

    double best_penalty = grid.front();
    double best_loss = std::numeric_limits<double>::infinity();
    for (double penalty : grid) {
        double loss_sum = 0.0;
        std::size_t loss_n = 0;
        for (int fold = 0; fold < folds; ++fold) {
            std::vector<Eigen::Index> in_rows, out_rows;
            for (std::size_t i = 0; i < fold_of.size(); ++i) {
                (fold_of[i] == fold ? out_rows : in_rows).push_back(static_cast<Eigen::Index>(i));
            }
            MatrixXd x_in(in_rows.size(), x.cols()), x_out(out_rows.size(), x.cols());
            VectorXd y_in(in_rows.size()), y_out(out_rows.size());
            for (std::size_t i = 0; i < in_rows.size(); ++i) {
                x_in.row(static_cast<Eigen::Index>(i)) = x.row(in_rows[i]);
                y_in[static_cast<Eigen::Index>(i)] = y[in_rows[i]];
            }
            for (std::size_t i = 0; i < out_rows.size(); ++i) {
                x_out.row(static_cast<Eigen::Index>(i)) = x.row(out_rows[i]);
                y_out[static_cast<Eigen::Index>(i)] = y[out_rows[i]];
            }
            const GlmModel model = ridge_fit(x_in, y_in, link, penalty);
            const VectorXd pred = glm_predict(model, x_out);
            for (Eigen::Index i = 0; i < y_out.size(); ++i) {
                if (link == LinkFunction::Identity) {
                    const double r = y_out[i] - pred[i];
                    loss_sum += r * r;
                } else {
                    const double p = std::clamp(pred[i], 1e-12, 1.0 - 1e-12);
                    loss_sum += -2.0 * (y_out[i] * std::log(p) + (1.0 - y_out[i]) * std::log(1.0 - p));
                }
                ++loss_n;
            }
        }
        const double mean_loss = loss_sum / static_cast<double>(loss_n);
        // Ties go to the larger penalty; the grid is scanned in order.
        if (mean_loss < best_loss || (mean_loss == best_loss && penalty > best_penalty)) {
            best_loss = mean_loss;
            best_penalty = penalty;
        }
    }
    return best_penalty;
}

double auc(const VectorXd& scores, const std::vector<int>& labels) {
    if (static_cast<std::size_t>(scores.size()) != labels.size())
        throw std::invalid_argument("auc: scores/labels size mismatch");
    std::size_t positives = 0;
    for (int label : labels) {
        if (label != 0 && label != 1) throw std::invalid_argument("auc: labels must be 0/1");
        positives += static_cast<std::size_t>(label);
    }
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0)
        throw std::invalid_argument("auc: both classes must be present");

    // Average ranks handle ties with half credit.
    std::vector<std::size_t> order(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[static_cast<Eigen::Index>(a)] <
                                                         scores[static_cast<Eigen::Index>(b)]; });
    std::vector<double> rank(labels.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               scores[static_cast<Eigen::Index>(order[j + 1])] ==
                   scores[static_cast<Eigen::Index>(order[i])])
            ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double rank_sum = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] == 1) rank_sum += rank[k];
    }
    const double np = static_cast<double>(positives), nn = static_cast<double>(negatives);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double osr2(const VectorXd& predictions, const VectorXd& actuals, double train_mean) {
    if (predictions.size() != actuals.size())
        throw std::invalid_argument("osr2: size mismatch");
    if (predictions.size() == 0) throw std::invalid_argument("osr2: empty input");
    const double denom = (actuals.array() - train_mean).square().sum();
    if (denom <= 0) throw std::invalid_argument("osr2: zero variance around the train mean");
    const double sse = (actuals - predictions).squaredNorm();
    return 1.0 - sse / denom;
}

std::vector<DecompositionRow> decomposition_experiment(
    const ProcessDataset& dataset, const std::vector<LabeledSequences>& sequences,
    const DatasetSplit& split, const std::vector<std::string>& targets,
    const std::vector<FeatureSpec>& specs, const DecompositionConfig& config,
    std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& message) {
        if (warnings) warnings->push_back(message);
    };

    // Sequences aligned to processes by id.
    std::unordered_map<std::string, const LabeledSequences*> by_id;
    for (const auto& seq : sequences) by_id[seq.id] = &seq;
    std::vector<const LabeledSequences*> aligned(dataset.size(), nullptr);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto it = by_id.find(dataset.processes[i].id);
        if (it != by_id.end()) aligned[i] = it->second;
    }

    std::vector<std::size_t> fit_rows(split.train);
    fit_rows.insert(fit_rows.end(), split.valid.begin(), split.valid.end());

    std::vector<DecompositionRow> rows;
    for (const auto& target : targets) {
        // Collect rows carrying the target.
        std::vector<std::size_t> train_rows, test_rows;
        bool binary = true;
        for (auto i : fit_rows) {
            auto it = dataset.processes[i].meta.find(target);
            if (it == dataset.processes[i].meta.end()) continue;
            const double v = meta_as_double(it->second);
            if (v != 0.0 && v != 1.0) binary = false;
            train_rows.push_back(i);
        }
        for (auto i : split.test) {
            auto it = dataset.processes[i].meta.find(target);
            if (it == dataset.processes[i].meta.end()) continue;
            const double v = meta_as_double(it->second);
            if (v != 0.0 && v != 1.0) binary = false;
            test_rows.push_back(i);
        }
        if (train_rows.empty() || test_rows.empty()) {
            warn("target '" + target + "': no metadata, skipped");
            continue;
        }
        const LinkFunction link = binary ? LinkFunction::Logit : LinkFunction::Identity;

        for (const FeatureSpec& base_spec : specs) {
            FeatureSpec spec = base_spec;
            spec.ngram_threshold = config.ngram_threshold;
            spec.document_frequency = config.document_frequency;
            spec.outcome_key = config.outcome_key;
            const bool target_is_outcome = target == config.outcome_key;
            if (target_is_outcome) {
                if (spec.choice == FeatureChoice::Baseline) continue;  // nothing left to use
                spec.include_outcome = false;
            }

            std::vector<std::size_t> cell_train = train_rows, cell_test = test_rows;
            if (spec.choice == FeatureChoice::SingleSubtaskNgrams) {
                auto contains_subtask = [&](std::size_t i) {
                    const LabeledSequences* seq = aligned[i];
                    return seq && std::find(seq->subtasks.begin(), seq->subtasks.end(),
                                            spec.subtask) != seq->subtasks.end();
                };
                std::erase_if(cell_train, [&](std::size_t i) { return !contains_subtask(i); });
                std::erase_if(cell_test, [&](std::size_t i) { return !contains_subtask(i); });
            }
            const std::string cell_name =
                spec.choice == FeatureChoice::SingleSubtaskNgrams
                    ? feature_choice_name(spec.choice) + ":" + spec.subtask
                    : feature_choice_name(spec.choice);
            if (cell_train.size() < static_cast<std::size_t>(config.folds) || cell_test.empty()) {
                warn("cell (" + target + ", " + cell_name + "): too few rows, skipped");
                continue;
            }

            FeatureVocabulary vocab;
            MatrixXd x_train, x_test;
            VectorXd y_train(static_cast<Eigen::Index>(cell_train.size()));
            VectorXd y_test(static_cast<Eigen::Index>(cell_test.size()));
            try {
                vocab = build_vocabulary(dataset, aligned, cell_train, spec);
                x_train = MatrixXd(static_cast<Eigen::Index>(cell_train.size()), vocab.size());
                x_test = MatrixXd(static_cast<Eigen::Index>(cell_test.size()), vocab.size());
                for (std::size_t r = 0; r < cell_train.size(); ++r) {
                    const auto i = cell_train[r];
                    x_train.row(static_cast<Eigen::Index>(r)) =
                        extract_features(dataset.processes[i], aligned[i], spec, vocab,
                                         dataset.alphabet)
                            .transpose();
                    y_train[static_cast<Eigen::Index>(r)] =
                        meta_as_double(dataset.processes[i].meta.at(target));
                }
                for (std::size_t r = 0; r < cell_test.size(); ++r) {
                    const auto i = cell_test[r];
                    x_test.row(static_cast<Eigen::Index>(r)) =
                        extract_features(dataset.processes[i], aligned[i], spec, vocab,
                                         dataset.alphabet)
                            .transpose();
                    y_test[static_cast<Eigen::Index>(r)] =
                        meta_as_double(dataset.processes[i].meta.at(target));
                }
            } catch (const std::exception& e) {
                warn("cell (" + target + ", " + cell_name + "): " + e.what());
                continue;
            }

            DecompositionRow row;
            row.target = target;
            row.feature_choice = cell_name;
            row.n_train = cell_train.size();
            row.n_test = cell_test.size();
            row.feature_count = vocab.size();
            try {
                row.ridge_penalty = cv_select_penalty(x_train, y_train, link, config.ridge_grid,
                                                      config.folds, config.seed);
                const GlmModel model = ridge_fit(x_train, y_train, link, row.ridge_penalty);
                const VectorXd pred = glm_predict(model, x_test);
                if (link == LinkFunction::Logit) {
                    std::vector<int> labels(cell_test.size());
                    for (std::size_t r = 0; r < cell_test.size(); ++r)
                        labels[r] = y_test[static_cast<Eigen::Index>(r)] != 0.0 ? 1 : 0;
                    row.metric = "auc";
                    row.value = auc(pred, labels);
                } else {
                    row.metric = "osr2";
                    row.value = osr2(pred, y_test, y_train.mean());
                }
            } catch (const std::exception& e) {
                warn("cell (" + target + ", " + cell_name + "): " + e.what());
                continue;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_decomposition_csv(const std::string& path, const std::vector<DecompositionRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write decomposition report: " + path);
    out << "target,feature_choice,metric_name,value,lambda_ridge,n_features,n_train,n_test\n";
    for (const auto& row : rows) {
        out << row.target << ',' << row.feature_choice << ',' << row.metric << ','
            << nlohmann::json(row.value).dump() << ',' << nlohmann::json(row.ridge_penalty).dump()
            << ',' << row.feature_count << ',' << row.n_train << ',' << row.n_test << '\n';
    }
}

}  // namespace sip
