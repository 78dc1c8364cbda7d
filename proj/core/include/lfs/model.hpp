#pragma once

#include "lfs/numerics.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lfs {

/// Feed-forward backbone. weights[l] is (layer_dims[l+1] x layer_dims[l]); ReLU follows every
/// layer except the last, whose output is the (unnormalized) embedding.
struct EmbeddingModel {
    std::vector<std::size_t> layer_dims;
    std::vector<DenseMatrix> weights;
    std::vector<std::vector<double>> biases;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t embedding_dim() const { return layer_dims.back(); }
    std::size_t layer_count() const { return weights.size(); }

    bool operator==(const EmbeddingModel&) const = default;
};

/// Rows of class_weights are the (unnormalized) class directions w_k.
struct ClassifierHead {
    DenseMatrix class_weights;
    double scale = 32.0;

    std::size_t num_classes() const { return class_weights.rows(); }

    bool operator==(const ClassifierHead&) const = default;
};

struct Network {
    EmbeddingModel backbone;
    ClassifierHead head;

    bool operator==(const Network&) const = default;
};

/// Parameter-shaped buffers: gradients and momentum share this layout.
struct Gradients {
    std::vector<DenseMatrix> weights;
    std::vector<std::vector<double>> biases;
    DenseMatrix class_weights;

    bool operator==(const Gradients&) const = default;
};

struct ForwardCache {
    DenseMatrix input;
    std::vector<DenseMatrix> pre_activations; // per layer, N x out
    std::vector<DenseMatrix> activations;     // per layer, N x out (post-ReLU for hidden layers)
    std::vector<double> embedding_norms;
    DenseMatrix normalized_embedding;
    std::vector<double> weight_norms;
    DenseMatrix normalized_weights;
    DenseMatrix cosines; // N x K
};

void validate(const Network& net);

/// He-initialized backbone (N(0, 2/fan_in)), zero biases, class weights N(0, 1/d).
Network init_network(std::span<const std::size_t> layer_dims, std::size_t num_classes, double scale,
                     const RngStream& stream);

ForwardCache forward(const Network& net, const DenseMatrix& batch);

/// Backpropagates dL/dcosines (N x K) through the head normalization, the embedding
/// normalization and the backbone.
Gradients backward(const Network& net, const ForwardCache& cache, const DenseMatrix& grad_cosines);

/// L2-normalized embeddings of every row of `batch`.
DenseMatrix embed(const EmbeddingModel& model, const DenseMatrix& batch);

Gradients zeros_like(const Network& net);

/// Every trainable block of `net`/`grads` in a fixed order: per layer weights then bias, then
/// class weights. The scale is not trainable.
std::vector<std::span<double>> parameter_blocks(Network& net);
std::vector<std::span<double>> parameter_blocks(Gradients& grads);
std::vector<std::span<const double>> parameter_blocks(const Network& net);
std::vector<std::span<const double>> parameter_blocks(const Gradients& grads);

/// FNV-1a digest of all parameter bytes (and the scale).
std::uint64_t parameter_digest(const Network& net);

} // namespace lfs
