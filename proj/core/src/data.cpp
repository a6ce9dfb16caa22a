#include "sip/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sip/rng.hpp"

namespace sip {

ActionAlphabet::ActionAlphabet(std::vector<std::string> tokens) {
    for (auto& t : tokens) intern(t);
}

int ActionAlphabet::intern(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    int idx = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, idx);
    return idx;
}

int ActionAlphabet::index_of(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end())
        throw std::invalid_argument("unknown action token: '" + token + "'");
    return it->second;
}

const std::string& ActionAlphabet::token(int index) const {
    if (index < 0 || index >= size())
        throw std::out_of_range("action index " + std::to_string(index) +
                                " out of range for alphabet of size " + std::to_string(size()));
    return tokens_[static_cast<std::size_t>(index)];
}

bool ActionAlphabet::contains(const std::string& token) const {
    return index_.find(token) != index_.end();
}

std::vector<int> encode(const std::vector<std::string>& tokens, const ActionAlphabet& alphabet) {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(alphabet.index_of(t));
    return out;
}

std::vector<std::string> decode(const std::vector<int>& indices, const ActionAlphabet& alphabet) {
    std::vector<std::string> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(alphabet.token(i));
    return out;
}

DatasetSplit split_dataset(const ProcessDataset& dataset,
                           double train_ratio, double valid_ratio, double test_ratio,
                           std::uint64_t seed) {
    const std::size_t n = dataset.size();
    if (n < 3) throw std::invalid_argument("split_dataset: need at least 3 processes");
    if (train_ratio <= 0 || valid_ratio <= 0 || test_ratio <= 0)
        throw std::invalid_argument("split_dataset: ratios must be positive");
    if (std::abs(train_ratio + valid_ratio + test_ratio - 1.0) > 1e-9)
        throw std::invalid_argument("split_dataset: ratios must sum to 1");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    const auto n_train = static_cast<std::size_t>(std::floor(train_ratio * static_cast<double>(n)));
    const auto n_valid = static_cast<std::size_t>(std::floor(valid_ratio * static_cast<double>(n)));

    DatasetSplit split;
    split.seed = seed;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                       order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.valid.begin(), split.valid.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace sip
