#pragma once

#include "lfs/datasets.hpp"
#include "lfs/margin.hpp"
#include "lfs/model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace lfs {

struct SgdConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    std::size_t batch_size = 128;

    void validate() const;
};

/// Step schedule: the rate is divided by drop_factor at each listed epoch (0-based, the drop
/// applies from that epoch on).
struct LrSchedule {
    double initial = 0.1;
    std::vector<std::size_t> drop_epochs{15, 25};
    double drop_factor = 10.0;

    void validate() const;
    double rate_at(std::size_t epoch) const;
};

struct ModelConfig {
    std::vector<std::size_t> hidden{128};
    std::size_t embedding_dim = 64;
    double scale = 32.0;

    void validate() const;
    std::vector<std::size_t> layer_dims(std::size_t input_dim) const;
};

struct TrainingConfig {
    ModelConfig model;
    SgdConfig sgd;
    LrSchedule schedule;
    std::size_t epochs = 30;
    std::size_t threads = 1;

    void validate() const;
};

struct TrainState {
    Network model;
    Gradients momentum;
    std::size_t epoch = 0;
};

TrainState make_train_state(Network model);

/// v <- momentum * v + (g + weight_decay * w);  w <- w - lr * v.
TrainState sgd_step(TrainState state, const Gradients& grads, const SgdConfig& config, double lr);

struct EpochResult {
    TrainState state;
    double mean_loss = 0.0;
    /// Rows whose margin gave a > 0 (Angular margins past theta = pi / m1). Training proceeds
    /// on them unchanged; callers surface the count as a warning.
    std::size_t positive_factor_rows = 0;
};

/// One pass over `data` in mini-batches, in the order given by stream.derive("shuffle").
/// mean_loss is the running mean of per-sample losses at the time each batch was processed.
EpochResult train_epoch(TrainState state, const MarginSpec& loss, const LabeledDataset& data,
                        const SgdConfig& config, double lr, const RngStream& stream);

/// B one-epoch trainings from the same snapshot, sharing the shuffle of `epoch_stream` and
/// differing only in the unified factor. Results are in input order whatever the schedule.
std::vector<EpochResult> train_candidates(const TrainState& state, std::span<const double> factors,
                                          const LabeledDataset& data, const SgdConfig& config, double lr,
                                          const RngStream& epoch_stream, std::size_t threads);

/// Mean loss and batch-averaged gradient of `loss` on the given rows.
struct BatchEvaluation {
    double loss_sum = 0.0;
    Gradients gradients;
    std::size_t positive_factor_rows = 0;
};
BatchEvaluation evaluate_batch(const Network& net, const MarginSpec& loss, const LabeledDataset& data,
                               std::span<const std::size_t> rows);

} // namespace lfs
