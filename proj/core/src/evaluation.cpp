#include "sip/evaluation.hpp"

#include <stdexcept>

namespace sip {

std::vector<int> transition_set(const std::vector<std::string>& states) {
    if (states.empty()) throw std::invalid_argument("transition_set: empty state sequence");
    std::vector<int> times;
    for (std::size_t t = 0; t + 1 < states.size(); ++t) {
        if (states[t + 1] != states[t]) times.push_back(static_cast<int>(t) + 1);
    }
    return times;
}

MeasureReport compute_measures(const std::vector<StatePair>& pairs) {
    MeasureCounts c;
    for (const auto& [truth, estimate] : pairs) {
        if (truth.size() != estimate.size())
            throw std::invalid_argument("compute_measures: state sequences differ in length");
        if (truth.empty()) throw std::invalid_argument("compute_measures: empty state sequence");

        c.total_positions += truth.size();
        for (std::size_t t = 0; t < truth.size(); ++t) {
            if (truth[t] == estimate[t]) ++c.overlap_positions;
        }
        for (std::size_t t = 0; t + 1 < truth.size(); ++t) {
            const bool true_change = truth[t + 1] != truth[t];
            const bool est_change = estimate[t + 1] != estimate[t];
            if (true_change) ++c.true_transitions;
            if (est_change) ++c.estimated_transitions;
            if (true_change && est_change) {
                ++c.matched_transitions;
                if (estimate[t + 1] == truth[t + 1]) ++c.directed_matches;
            }
        }
    }

    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };

    MeasureReport report;
    report.counts = c;
    report.precision = ratio(c.matched_transitions, c.estimated_transitions);
    report.recall = ratio(c.matched_transitions, c.true_transitions);
    report.precision_plus = ratio(c.directed_matches, c.estimated_transitions);
    report.recall_plus = ratio(c.directed_matches, c.true_transitions);
    report.overlap = ratio(c.overlap_positions, c.total_positions);
    return report;
}

nlohmann::json measure_report_to_json(const MeasureReport& report) {
    auto field = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    nlohmann::json j;
    j["precision"] = field(report.precision);
    j["recall"] = field(report.recall);
    j["precision_plus"] = field(report.precision_plus);
    j["recall_plus"] = field(report.recall_plus);
    j["overlap"] = field(report.overlap);
    j["counts"] = {{"true_transitions", report.counts.true_transitions},
                   {"estimated_transitions", report.counts.estimated_transitions},
                   {"matched_transitions", report.counts.matched_transitions},
                   {"directed_matches", report.counts.directed_matches},
                   {"overlap_positions", report.counts.overlap_positions},
                   {"total_positions", report.counts.total_positions}};
    return j;
}

}  // namespace sip
