#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lfs {

inline constexpr double kNormEpsilon = 1e-12;
inline constexpr double kArccosClamp = 1e-7;

/// Row-major matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// out = A * B^T   (A: n x k, B: m x k)
DenseMatrix multiply_abt(const DenseMatrix& a, const DenseMatrix& b);
// out = A^T * B   (A: n x m, B: n x k)
DenseMatrix multiply_atb(const DenseMatrix& a, const DenseMatrix& b);
// out = A * B     (A: n x k, B: k x m)
DenseMatrix multiply_ab(const DenseMatrix& a, const DenseMatrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Max-shifted log(sum(exp(v))). Throws ContractError on empty input.
double log_sum_exp(std::span<const double> values);

/// v / max(||v||, epsilon).
std::vector<double> l2_normalize(std::span<const double> v, double epsilon = kNormEpsilon);

/// Clamps a cosine to [-1 + 1e-7, 1 - 1e-7] before arccos.
double clamped_acos(double cosine);

/// Counter-based generator: output i is SplitMix64 applied to key + (i + 1) * golden.
class RandomEngine {
public:
    using result_type = std::uint64_t;

    explicit RandomEngine(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept;

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() noexcept;
    /// Unbiased integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept;
    /// Standard normal draw (Box-Muller, both outputs used).
    double normal() noexcept;

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Immutable description of a random stream, keyed by (seed, label path).
/// Streams are derived hierarchically, e.g. RngStream(7, "run").derive("epoch3").derive("shuffle")
/// has label "run/epoch3/shuffle".
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string label);

    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& label() const noexcept { return label_; }
    std::uint64_t key() const noexcept { return key_; }

    RngStream derive(std::string_view child) const;
    RandomEngine engine() const noexcept { return RandomEngine(key_); }

    bool operator==(const RngStream& other) const noexcept
    {
        return seed_ == other.seed_ && label_ == other.label_;
    }

private:
    std::uint64_t seed_;
    std::string label_;
    std::uint64_t key_;
};

/// n draws from N(mu, sigma^2), starting at the beginning of the stream.
std::vector<double> sample_gaussian(const RngStream& stream, double mu, double sigma, std::size_t n);

/// Uniformly random permutation of [0, n) by Fisher-Yates.
std::vector<std::size_t> random_permutation(std::size_t n, RandomEngine& engine);

/// 64-bit FNV-1a over raw bytes, chainable through `basis`.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

} // namespace lfs
