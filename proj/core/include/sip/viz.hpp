#pragma once

#include <string>
#include <vector>

#include "sip/clustering.hpp"

namespace sip {

// Stacked subtask-sequence layout: one row per process, rows in dictionary
// order of the subtask sequence, one column per subtask slot. max_length 0
// means no length filter.
void write_viz_csv(const std::string& path, std::vector<LabeledSequences> rows,
                   int max_length = 0);

// Static SVG rendering of the same layout: unit-width colored cells per
// subtask, rows stacked vertically, legend on top.
void write_viz_svg(const std::string& path, std::vector<LabeledSequences> rows,
                   int max_length = 0);

}  // namespace sip
