#include "lfs/model.hpp"

#include "lfs/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lfs {

void validate(const Network& net)
{
    const auto& bb = net.backbone;
    require(bb.layer_dims.size() >= 2, "Network: need at least input and embedding dims");
    require(bb.weights.size() + 1 == bb.layer_dims.size(), "Network: weight count does not match layer dims");
    require(bb.biases.size() == bb.weights.size(), "Network: bias count does not match layer count");
    for (std::size_t l = 0; l < bb.weights.size(); ++l) {
        require(bb.weights[l].rows() == bb.layer_dims[l + 1] && bb.weights[l].cols() == bb.layer_dims[l],
                "Network: layer " + std::to_string(l) + " weight shape does not compose");
        require(bb.biases[l].size() == bb.layer_dims[l + 1], "Network: layer " + std::to_string(l) + " bias size");
    }
    require(net.head.class_weights.rows() >= 2, "ClassifierHead: need K >= 2");
    require(net.head.class_weights.cols() == bb.embedding_dim(), "ClassifierHead: width must equal embedding dim");
    require(net.head.scale > 0.0, "ClassifierHead: scale must be positive");
}

Network init_network(std::span<const std::size_t> layer_dims, std::size_t num_classes, double scale,
                     const RngStream& stream)
{
    require(layer_dims.size() >= 2, "init_network: need at least input and embedding dims");
    require(std::all_of(layer_dims.begin(), layer_dims.end(), [](std::size_t d) { return d > 0; }),
            "init_network: every layer dim must be positive");
    require(num_classes >= 2, "init_network: need K >= 2");
    require(scale > 0.0, "init_network: scale must be positive");

    Network net;
    net.backbone.layer_dims.assign(layer_dims.begin(), layer_dims.end());
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t fan_in = layer_dims[l];
        const std::size_t fan_out = layer_dims[l + 1];
        const auto draws = sample_gaussian(stream.derive("layer" + std::to_string(l)), 0.0,
                                           std::sqrt(2.0 / static_cast<double>(fan_in)), fan_in * fan_out);
        net.backbone.weights.emplace_back(fan_out, fan_in, draws);
        net.backbone.biases.emplace_back(fan_out, 0.0);
    }
    const std::size_t d = layer_dims.back();
    net.head.class_weights = DenseMatrix(
        num_classes, d, sample_gaussian(stream.derive("head"), 0.0, std::sqrt(1.0 / static_cast<double>(d)), num_classes * d));
    net.head.scale = scale;
    return net;
}

namespace {

// Row-wise v / max(||v||, eps); records the unclamped norms.
DenseMatrix normalize_rows(const DenseMatrix& m, std::vector<double>& norms)
{
    DenseMatrix out(m.rows(), m.cols());
    norms.resize(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto src = m.row(i);
        norms[i] = l2_norm(src);
        const double denom = std::max(norms[i], kNormEpsilon);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < src.size(); ++j) {
            dst[j] = src[j] / denom;
        }
    }
    return out;
}

// Backprop through u = v / max(||v||, eps): dv = (g - (g.u) u) / ||v|| when ||v|| >= eps, else g / eps.
DenseMatrix normalize_rows_backward(const DenseMatrix& grad_unit, const DenseMatrix& unit,
                                    const std::vector<double>& norms)
{
    DenseMatrix out(unit.rows(), unit.cols());
    for (std::size_t i = 0; i < unit.rows(); ++i) {
        const auto g = grad_unit.row(i);
        const auto u = unit.row(i);
        auto dst = out.row(i);
        if (norms[i] < kNormEpsilon) {
            for (std::size_t j = 0; j < g.size(); ++j) {
                dst[j] = g[j] / kNormEpsilon;
            }
            continue;
        }
        const double radial = dot(g, u);
        for (std::size_t j = 0; j < g.size(); ++j) {
            dst[j] = (g[j] - radial * u[j]) / norms[i];
        }
    }
    return out;
}

DenseMatrix run_backbone(const EmbeddingModel& model, const DenseMatrix& batch, ForwardCache* cache)
{
    require(batch.cols() == model.input_dim(), "forward: batch width " + std::to_string(batch.cols()) +
                                                   " does not match input dim " + std::to_string(model.input_dim()));
    DenseMatrix current = batch;
    const std::size_t layers = model.layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        DenseMatrix z = multiply_abt(current, model.weights[l]);
        const auto& b = model.biases[l];
        for (std::size_t i = 0; i < z.rows(); ++i) {
            auto row = z.row(i);
            for (std::size_t j = 0; j < row.size(); ++j) {
                row[j] += b[j];
            }
        }
        DenseMatrix act = z;
        if (l + 1 < layers) {
            for (double& v : act.values()) {
                v = std::max(v, 0.0);
            }
        }
        if (cache != nullptr) {
            cache->pre_activations.push_back(std::move(z));
            cache->activations.push_back(act);
        }
        current = std::move(act);
    }
    return current;
}

} // namespace

ForwardCache forward(const Network& net, const DenseMatrix& batch)
{
    ForwardCache cache;
    cache.input = batch;
    const DenseMatrix embedding = run_backbone(net.backbone, batch, &cache);
    require(net.head.class_weights.cols() == embedding.cols(), "forward: head width does not match embedding dim");
    cache.normalized_embedding = normalize_rows(embedding, cache.embedding_norms);
    cache.normalized_weights = normalize_rows(net.head.class_weights, cache.weight_norms);
    cache.cosines = multiply_abt(cache.normalized_embedding, cache.normalized_weights);
    for (double& c : cache.cosines.values()) {
        c = std::clamp(c, -1.0, 1.0);
    }
    return cache;
}

Gradients backward(const Network& net, const ForwardCache& cache, const DenseMatrix& grad_cosines)
{
    require(grad_cosines.rows() == cache.cosines.rows() && grad_cosines.cols() == cache.cosines.cols(),
            "backward: upstream gradient shape does not match cosines");
    const auto& bb = net.backbone;
    const std::size_t layers = bb.layer_count();

    Gradients grads;
    grads.weights.resize(layers);
    grads.biases.resize(layers);

    // cos = X_hat W_hat^T
    const DenseMatrix grad_x_hat = multiply_ab(grad_cosines, cache.normalized_weights);
    const DenseMatrix grad_w_hat = multiply_atb(grad_cosines, cache.normalized_embedding);
    grads.class_weights = normalize_rows_backward(grad_w_hat, cache.normalized_weights, cache.weight_norms);

    DenseMatrix grad = normalize_rows_backward(grad_x_hat, cache.normalized_embedding, cache.embedding_norms);
    for (std::size_t l = layers; l-- > 0;) {
        if (l + 1 < layers) {
            const auto& z = cache.pre_activations[l];
            auto g = grad.values();
            auto zv = z.values();
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (zv[i] <= 0.0) {
                    g[i] = 0.0;
                }
            }
        }
        const DenseMatrix& layer_input = l == 0 ? cache.input : cache.activations[l - 1];
        grads.weights[l] = multiply_atb(grad, layer_input);
        auto& gb = grads.biases[l];
        gb.assign(grad.cols(), 0.0);
        for (std::size_t i = 0; i < grad.rows(); ++i) {
            const auto row = grad.row(i);
            for (std::size_t j = 0; j < row.size(); ++j) {
                gb[j] += row[j];
            }
        }
        if (l > 0) {
            grad = multiply_ab(grad, bb.weights[l]);
        }
    }
    return grads;
}

DenseMatrix embed(const EmbeddingModel& model, const DenseMatrix& batch)
{
    std::vector<double> norms;
    return normalize_rows(run_backbone(model, batch, nullptr), norms);
}

Gradients zeros_like(const Network& net)
{
    Gradients g;
    for (std::size_t l = 0; l < net.backbone.layer_count(); ++l) {
        const auto& w = net.backbone.weights[l];
        g.weights.emplace_back(w.rows(), w.cols());
        g.biases.emplace_back(net.backbone.biases[l].size(), 0.0);
    }
    g.class_weights = DenseMatrix(net.head.class_weights.rows(), net.head.class_weights.cols());
    return g;
}

namespace {

template <class Weights, class Biases, class Head, class Span>
std::vector<Span> blocks_of(Weights& weights, Biases& biases, Head& head)
{
    std::vector<Span> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.emplace_back(weights[l].values());
        out.emplace_back(biases[l]);
    }
    out.emplace_back(head.values());
    return out;
}

} // namespace

std::vector<std::span<double>> parameter_blocks(Network& net)
{
    return blocks_of<decltype(net.backbone.weights), decltype(net.backbone.biases), DenseMatrix, std::span<double>>(
        net.backbone.weights, net.backbone.biases, net.head.class_weights);
}

std::vector<std::span<double>> parameter_blocks(Gradients& grads)
{
    return blocks_of<decltype(grads.weights), decltype(grads.biases), DenseMatrix, std::span<double>>(
        grads.weights, grads.biases, grads.class_weights);
}

std::vector<std::span<const double>> parameter_blocks(const Network& net)
{
    return blocks_of<const std::vector<DenseMatrix>, const std::vector<std::vector<double>>, const DenseMatrix,
                     std::span<const double>>(net.backbone.weights, net.backbone.biases, net.head.class_weights);
}

std::vector<std::span<const double>> parameter_blocks(const Gradients& grads)
{
    return blocks_of<const std::vector<DenseMatrix>, const std::vector<std::vector<double>>, const DenseMatrix,
                     std::span<const double>>(grads.weights, grads.biases, grads.class_weights);
}

std::uint64_t parameter_digest(const Network& net)
{
    std::uint64_t h = fnv1a({});
    for (const auto block : parameter_blocks(net)) {
        h = fnv1a(std::as_bytes(block), h);
    }
    const double scale = net.head.scale;
    return fnv1a(std::as_bytes(std::span(&scale, 1)), h);
}

} // namespace lfs
