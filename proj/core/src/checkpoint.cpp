#include "lfs/checkpoint.hpp"

#include "lfs/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace lfs {

namespace {

constexpr char kMagic[4] = {'L', 'F', 'S', '1'};

class Writer {
public:
    void magic() { raw(kMagic, sizeof kMagic); }

    void u32(std::size_t v)
    {
        if (v > std::numeric_limits<std::uint32_t>::max()) {
            throw ContractError("checkpoint: dimension does not fit in 32 bits");
        }
        put_le(static_cast<std::uint32_t>(v));
    }

    void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

    void f64s(std::span<const double> vs)
    {
        for (double v : vs) {
            f64(v);
        }
    }

    std::vector<std::byte> take() { return std::move(out_); }

private:
    template <class U>
    void put_le(U v)
    {
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
        }
    }

    void raw(const char* p, std::size_t n)
    {
        for (std::size_t i = 0; i < n; ++i) {
            out_.push_back(static_cast<std::byte>(p[i]));
        }
    }

    std::vector<std::byte> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    void magic()
    {
        need(sizeof kMagic, "magic");
        if (std::memcmp(bytes_.data(), kMagic, sizeof kMagic) != 0) {
            throw FormatError("checkpoint: bad magic (expected \"LFS1\")");
        }
        pos_ += sizeof kMagic;
    }

    std::uint32_t u32(const char* what) { return get_le<std::uint32_t>(what); }

    double f64(const char* what)
    {
        const double v = std::bit_cast<double>(get_le<std::uint64_t>(what));
        if (!std::isfinite(v)) {
            throw FormatError(std::string("checkpoint: non-finite value in ") + what);
        }
        return v;
    }

    std::vector<double> f64s(std::size_t n, const char* what)
    {
        need(n * 8, what);
        std::vector<double> out(n);
        for (double& v : out) {
            v = f64(what);
        }
        return out;
    }

    void finish() const
    {
        if (pos_ != bytes_.size()) {
            throw FormatError("checkpoint: " + std::to_string(bytes_.size() - pos_) + " trailing bytes");
        }
    }

private:
    void need(std::size_t n, const char* what) const
    {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(std::string("checkpoint: truncated while reading ") + what);
        }
    }

    template <class U>
    U get_le(const char* what)
    {
        need(sizeof(U), what);
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            v |= static_cast<U>(std::to_integer<unsigned>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(U);
        return v;
    }

    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::byte> encode_checkpoint(const Network& net)
{
    validate(net);
    Writer w;
    w.magic();
    w.u32(net.backbone.layer_count());
    for (std::size_t l = 0; l < net.backbone.layer_count(); ++l) {
        const auto& weights = net.backbone.weights[l];
        w.u32(weights.rows());
        w.u32(weights.cols());
        w.f64s(weights.values());
        w.f64s(net.backbone.biases[l]);
    }
    w.u32(net.head.class_weights.rows());
    w.u32(net.head.class_weights.cols());
    w.f64(net.head.scale);
    w.f64s(net.head.class_weights.values());
    return w.take();
}

Network decode_checkpoint(std::span<const std::byte> bytes)
{
    Reader r(bytes);
    r.magic();
    const std::uint32_t layers = r.u32("layer count");
    if (layers == 0) {
        throw FormatError("checkpoint: zero layers");
    }

    Network net;
    for (std::uint32_t l = 0; l < layers; ++l) {
        const std::uint32_t rows = r.u32("layer rows");
        const std::uint32_t cols = r.u32("layer cols");
        if (rows == 0 || cols == 0) {
            throw FormatError("checkpoint: empty layer " + std::to_string(l));
        }
        if (l == 0) {
            net.backbone.layer_dims.push_back(cols);
        } else if (cols != net.backbone.layer_dims.back()) {
            throw FormatError("checkpoint: layer " + std::to_string(l) + " does not compose with its predecessor");
        }
        net.backbone.layer_dims.push_back(rows);
        net.backbone.weights.emplace_back(rows, cols, r.f64s(std::size_t{rows} * cols, "layer weights"));
        net.backbone.biases.push_back(r.f64s(rows, "layer biases"));
    }

    const std::uint32_t k = r.u32("head K");
    const std::uint32_t d = r.u32("head d");
    if (k < 2 || d != net.backbone.layer_dims.back()) {
        throw FormatError("checkpoint: head shape inconsistent with backbone");
    }
    net.head.scale = r.f64("head scale");
    if (!(net.head.scale > 0.0)) {
        throw FormatError("checkpoint: head scale must be positive");
    }
    net.head.class_weights = DenseMatrix(k, d, r.f64s(std::size_t{k} * d, "head weights"));
    r.finish();
    return net;
}

void write_checkpoint(const std::filesystem::path& path, const Network& net)
{
    const auto bytes = encode_checkpoint(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("failed writing checkpoint: " + path.string());
    }
}

Network read_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open checkpoint: " + path.string());
    }
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(std::as_bytes(std::span(raw.data(), raw.size())));
}

} // namespace lfs
