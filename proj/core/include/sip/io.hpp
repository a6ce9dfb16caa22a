#pragma once

#include <string>

#include "sip/data.hpp"

namespace sip {

enum class ProcessFileFormat { Jsonl, Csv };

struct ReadOptions {
    ProcessFileFormat format = ProcessFileFormat::Jsonl;
    // Processes shorter than this are dropped at ingestion (floor of 2 is
    // always enforced; one action cannot yield a prediction step).
    int min_length = 10;
    // Collapse runs of identical consecutive actions into one.
    bool merge_consecutive = false;
    // Separator inside the CSV "seq" column.
    char seq_separator = ',';
};

struct ReadReport {
    std::size_t kept = 0;
    std::size_t dropped_short = 0;
};

// Reads a process file into a dataset. The alphabet is built from observed
// tokens in first-appearance order. Malformed records raise errors naming the
// line number; an empty file is an error.
ProcessDataset read_process_file(const std::string& path, const ReadOptions& options,
                                 ReadReport* report = nullptr);

void write_process_file(const std::string& path, const ProcessDataset& dataset,
                        ProcessFileFormat format, char seq_separator = ',');

void write_split_manifest(const std::string& path, const DatasetSplit& split,
                          const ProcessDataset& dataset);

// Resolves manifest ids back to indices in `dataset`; throws on unknown ids.
DatasetSplit read_split_manifest(const std::string& path, const ProcessDataset& dataset);

}  // namespace sip
