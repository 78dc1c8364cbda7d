#include "lfs/trainer.hpp"

#include "lfs/error.hpp"
#include "lfs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lfs {

void SgdConfig::validate() const
{
    require(learning_rate > 0.0, "sgd.learning_rate must be > 0");
    require(momentum >= 0.0 && momentum < 1.0, "sgd.momentum must lie in [0, 1)");
    require(weight_decay >= 0.0, "sgd.weight_decay must be >= 0");
    require(batch_size >= 1, "sgd.batch_size must be >= 1");
}

void LrSchedule::validate() const
{
    require(initial > 0.0, "schedule.initial must be > 0");
    require(drop_factor > 1.0, "schedule.drop_factor must be > 1");
    require(std::is_sorted(drop_epochs.begin(), drop_epochs.end()), "schedule.drop_epochs must be sorted");
}

double LrSchedule::rate_at(std::size_t epoch) const
{
    double rate = initial;
    for (std::size_t drop : drop_epochs) {
        if (epoch >= drop) {
            rate /= drop_factor;
        }
    }
    return rate;
}

void ModelConfig::validate() const
{
    require(embedding_dim >= 1, "model.embedding_dim must be >= 1");
    require(std::all_of(hidden.begin(), hidden.end(), [](std::size_t d) { return d >= 1; }),
            "model.hidden dims must be >= 1");
    require(scale > 0.0, "model.scale must be > 0");
}

std::vector<std::size_t> ModelConfig::layer_dims(std::size_t input_dim) const
{
    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(embedding_dim);
    return dims;
}

void TrainingConfig::validate() const
{
    model.validate();
    sgd.validate();
    schedule.validate();
}

TrainState make_train_state(Network model)
{
    TrainState state;
    state.momentum = zeros_like(model);
    state.model = std::move(model);
    return state;
}

TrainState sgd_step(TrainState state, const Gradients& grads, const SgdConfig& config, double lr)
{
    auto params = parameter_blocks(state.model);
    auto buffers = parameter_blocks(state.momentum);
    const auto g = parameter_blocks(grads);
    require(params.size() == g.size() && params.size() == buffers.size(), "sgd_step: parameter block count mismatch");
    for (std::size_t b = 0; b < params.size(); ++b) {
        require(params[b].size() == g[b].size() && params[b].size() == buffers[b].size(),
                "sgd_step: block " + std::to_string(b) + " shape mismatch");
        auto w = params[b];
        auto v = buffers[b];
        const auto gb = g[b];
        for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = config.momentum * v[i] + (gb[i] + config.weight_decay * w[i]);
            w[i] -= lr * v[i];
        }
    }
    return state;
}

BatchEvaluation evaluate_batch(const Network& net, const MarginSpec& loss, const LabeledDataset& data,
                               std::span<const std::size_t> rows)
{
    DenseMatrix batch(rows.size(), data.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = data.features.row(rows[i]);
        std::copy(src.begin(), src.end(), batch.row(i).begin());
    }
    const auto cache = forward(net, batch);

    BatchEvaluation out;
    DenseMatrix upstream(rows.size(), net.head.num_classes());
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    const bool angular = std::holds_alternative<margin::Angular>(loss.variant()) ||
                         std::holds_alternative<margin::Combined>(loss.variant());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const LogitRow row{cache.cosines.row(i), data.labels[rows[i]], net.head.scale};
        auto grad_row = upstream.row(i);
        out.loss_sum += loss_and_gradient(loss, row, grad_row);
        if (angular && modulating_factor(loss, row.cosines[row.label], row.scale) > 0.0) {
            ++out.positive_factor_rows;
        }
        for (double& g : grad_row) {
            g *= inv_n;
        }
    }
    out.gradients = backward(net, cache, upstream);
    return out;
}

EpochResult train_epoch(TrainState state, const MarginSpec& loss, const LabeledDataset& data,
                        const SgdConfig& config, double lr, const RngStream& stream)
{
    require(data.size() > 0, "train_epoch: empty dataset");
    require(lr >= 0.0, "train_epoch: learning rate must be >= 0");
    require(data.identity_count <= state.model.head.num_classes(), "train_epoch: more identities than classes");

    auto engine = stream.derive("shuffle").engine();
    const auto order = random_permutation(data.size(), engine);

    double loss_sum = 0.0;
    std::size_t positive_rows = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t stop = std::min(order.size(), start + config.batch_size);
        const std::span<const std::size_t> rows(order.data() + start, stop - start);
        auto evaluation = evaluate_batch(state.model, loss, data, rows);
        loss_sum += evaluation.loss_sum;
        positive_rows += evaluation.positive_factor_rows;
        state = sgd_step(std::move(state), evaluation.gradients, config, lr);
    }
    ++state.epoch;
    return {std::move(state), loss_sum / static_cast<double>(data.size()), positive_rows};
}

std::vector<EpochResult> train_candidates(const TrainState& state, std::span<const double> factors,
                                          const LabeledDataset& data, const SgdConfig& config, double lr,
                                          const RngStream& epoch_stream, std::size_t threads)
{
    for (double a : factors) {
        require(a <= 0.0, "train_candidates: every factor must satisfy a <= 0");
    }
    std::vector<EpochResult> results(factors.size());
    parallel_for(factors.size(), threads, [&](std::size_t i) {
        results[i] = train_epoch(state, MarginSpec::unified(factors[i]), data, config, lr, epoch_stream);
    });
    return results;
}

} // namespace lfs
