#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace sip {

// Times immediately before a label change: 1-based t with v_{t+1} != v_t,
// t < T, matching the reporting convention used throughout.
std::vector<int> transition_set(const std::vector<std::string>& states);

struct MeasureCounts {
    std::size_t true_transitions = 0;       // sum |T|
    std::size_t estimated_transitions = 0;  // sum |T-hat|
    std::size_t matched_transitions = 0;    // sum |T intersect T-hat|
    std::size_t directed_matches = 0;       // sum |T+|: time and next label both correct
    std::size_t overlap_positions = 0;      // sum |{t : v_t = v-hat_t}|
    std::size_t total_positions = 0;        // sum T_i
};

// Pooled (micro) accuracy measures over a set of (true, estimated) state
// sequence pairs. A zero denominator leaves the measure unset rather than
// producing 0 or NaN.
struct MeasureReport {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> precision_plus;
    std::optional<double> recall_plus;
    std::optional<double> overlap;
    MeasureCounts counts;
};

using StatePair = std::pair<std::vector<std::string>, std::vector<std::string>>;

MeasureReport compute_measures(const std::vector<StatePair>& pairs);

nlohmann::json measure_report_to_json(const MeasureReport& report);

}  // namespace sip
