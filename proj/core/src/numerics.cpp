#include "lfs/numerics.hpp"

#include "lfs/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lfs {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data))
{
    require(data_.size() == rows_ * cols_, "DenseMatrix: data length must equal rows * cols");
}

DenseMatrix multiply_abt(const DenseMatrix& a, const DenseMatrix& b)
{
    require(a.cols() == b.cols(), "multiply_abt: inner dimensions differ");
    DenseMatrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        auto oi = out.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            oi[j] = dot(ai, b.row(j));
        }
    }
    return out;
}

DenseMatrix multiply_atb(const DenseMatrix& a, const DenseMatrix& b)
{
    require(a.rows() == b.rows(), "multiply_atb: row counts differ");
    DenseMatrix out(a.cols(), b.cols());
    for (std::size_t n = 0; n < a.rows(); ++n) {
        auto an = a.row(n);
        auto bn = b.row(n);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double scale = an[i];
            if (scale == 0.0) {
                continue;
            }
            auto oi = out.row(i);
            for (std::size_t j = 0; j < bn.size(); ++j) {
                oi[j] += scale * bn[j];
            }
        }
    }
    return out;
}

DenseMatrix multiply_ab(const DenseMatrix& a, const DenseMatrix& b)
{
    require(a.cols() == b.rows(), "multiply_ab: inner dimensions differ");
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        auto oi = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double scale = ai[k];
            if (scale == 0.0) {
                continue;
            }
            auto bk = b.row(k);
            for (std::size_t j = 0; j < bk.size(); ++j) {
                oi[j] += scale * bk[j];
            }
        }
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double l2_norm(std::span<const double> v)
{
    return std::sqrt(dot(v, v));
}

double log_sum_exp(std::span<const double> values)
{
    require(!values.empty(), "log_sum_exp: empty input");
    const double peak = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) {
        sum += std::exp(v - peak);
    }
    return peak + std::log(sum);
}

std::vector<double> l2_normalize(std::span<const double> v, double epsilon)
{
    require(epsilon > 0.0, "l2_normalize: epsilon must be positive");
    const double denom = std::max(l2_norm(v), epsilon);
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) {
        x /= denom;
    }
    return out;
}

double clamped_acos(double cosine)
{
    return std::acos(std::clamp(cosine, -1.0 + kArccosClamp, 1.0 - kArccosClamp));
}

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, const std::string& label)
{
    const auto hash = fnv1a(std::as_bytes(std::span(label.data(), label.size())));
    return mix64(mix64(seed + kGolden) ^ hash);
}

} // namespace

RandomEngine::result_type RandomEngine::operator()() noexcept
{
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RandomEngine::uniform() noexcept
{
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomEngine::below(std::uint64_t bound) noexcept
{
    if (bound <= 1) {
        return 0;
    }
    // Rejection on the top of the range keeps the result unbiased.
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x = 0;
    do {
        x = (*this)();
    } while (x >= limit);
    return x % bound;
}

double RandomEngine::normal() noexcept
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

RngStream::RngStream(std::uint64_t seed, std::string label)
    : seed_(seed), label_(std::move(label)), key_(stream_key(seed_, label_))
{
}

RngStream RngStream::derive(std::string_view child) const
{
    std::string path = label_;
    if (!path.empty()) {
        path += '/';
    }
    path += child;
    return RngStream(seed_, std::move(path));
}

std::vector<double> sample_gaussian(const RngStream& stream, double mu, double sigma, std::size_t n)
{
    require(sigma > 0.0, "sample_gaussian: sigma must be positive");
    auto engine = stream.engine();
    std::vector<double> out(n);
    for (double& x : out) {
        x = mu + sigma * engine.normal();
    }
    return out;
}

std::vector<std::size_t> random_permutation(std::size_t n, RandomEngine& engine)
{
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(engine.below(i));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t basis) noexcept
{
    std::uint64_t h = basis;
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace lfs
