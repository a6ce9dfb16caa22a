#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace sip {

// Finite action vocabulary. Index order is first appearance in the corpus and
// is stored in every model file so reloaded models agree with the data.
class ActionAlphabet {
public:
    ActionAlphabet() = default;
    explicit ActionAlphabet(std::vector<std::string> tokens);

    // Returns the index of `token`, inserting it if unseen.
    int intern(const std::string& token);

    int index_of(const std::string& token) const;  // throws on unknown token
    const std::string& token(int index) const;     // throws on out-of-range index
    bool contains(const std::string& token) const;

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    bool operator==(const ActionAlphabet& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

// Metadata values carried opaquely per process: numeric targets, binary
// outcomes, or per-action label arrays (e.g. ground-truth state sequences).
using MetaValue = std::variant<double, bool, std::vector<std::string>>;
using MetaMap = std::map<std::string, MetaValue>;

// One respondent's ordered action sequence, encoded against an alphabet.
struct ResponseProcess {
    std::string id;
    std::vector<int> actions;  // alphabet indices, length T >= 2
    MetaMap meta;

    int length() const { return static_cast<int>(actions.size()); }
};

struct ProcessDataset {
    ActionAlphabet alphabet;
    std::vector<ResponseProcess> processes;

    std::size_t size() const { return processes.size(); }
};

// Disjoint train/valid/test index partition of a dataset.
struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

// Token sequence -> index sequence against `alphabet`. Throws naming the
// offending token when it is not in the alphabet.
std::vector<int> encode(const std::vector<std::string>& tokens, const ActionAlphabet& alphabet);

// Index sequence -> token sequence. Throws on out-of-range indices.
std::vector<std::string> decode(const std::vector<int>& indices, const ActionAlphabet& alphabet);

// Seeded random partition. Rounding rule: train and valid counts are floored,
// the remainder goes to test, so sizes are deterministic for every N.
DatasetSplit split_dataset(const ProcessDataset& dataset,
                           double train_ratio, double valid_ratio, double test_ratio,
                           std::uint64_t seed);

inline DatasetSplit split_dataset(const ProcessDataset& dataset, std::uint64_t seed) {
    return split_dataset(dataset, 0.70, 0.15, 0.15, seed);
}

}  // namespace sip
