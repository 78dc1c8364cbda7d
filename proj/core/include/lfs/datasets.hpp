#pragma once

#include "lfs/numerics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lfs {

/// Feature rows with dense identity labels in [0, identity_count).
struct LabeledDataset {
    DenseMatrix features;
    std::vector<std::size_t> labels;
    std::size_t identity_count = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols(); }

    bool operator==(const LabeledDataset&) const = default;
};

/// Throws ContractError unless labels are in range and every identity has a sample.
void validate(const LabeledDataset& data);

struct SyntheticSpec {
    std::size_t classes = 50;
    std::size_t dim = 32;
    std::size_t samples_per_class = 40;
    double noise_sigma = 0.35;
    std::uint64_t seed = 0;
};

/// Class centers uniform on the unit sphere; samples are normalize(center + sigma * noise),
/// stored class-major.
LabeledDataset generate_synthetic(const SyntheticSpec& spec);

/// CSV, one sample per line: feature columns then an integer label. Labels are re-indexed
/// densely in first-appearance order. Throws DataError naming the offending line.
LabeledDataset parse_csv(std::istream& in, const std::string& source = "<stream>");
LabeledDataset load_flat_file(const std::filesystem::path& path);
void write_flat_file(const std::filesystem::path& path, const LabeledDataset& data);

/// Rows `rows` of `data`, relabelled densely in first-appearance order.
LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> rows);

struct OpenSetSplit {
    LabeledDataset train;
    LabeledDataset eval;
    std::vector<std::size_t> train_identities; // original labels
    std::vector<std::size_t> eval_identities;
};

/// Partitions identities (not samples): round(train_frac * K) identities go to train.
/// Requires at least two identities on each side.
OpenSetSplit split_open_set(const LabeledDataset& data, double train_frac, std::uint64_t seed);

struct Pair {
    std::size_t first = 0;
    std::size_t second = 0;
    bool same = false;

    bool operator==(const Pair&) const = default;
};

struct PairSet {
    std::vector<Pair> pairs;

    std::size_t size() const { return pairs.size(); }
};

/// Throws ContractError unless indices are valid, flags agree with labels, and both
/// classes of pair are present.
void validate(const PairSet& pairs, const LabeledDataset& data);

/// n_pairs / 2 same-identity and n_pairs / 2 different-identity pairs, each without
/// replacement, in shuffled order.
PairSet make_pairs(const LabeledDataset& data, std::size_t n_pairs, std::uint64_t seed);

} // namespace lfs
