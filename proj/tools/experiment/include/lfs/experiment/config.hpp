#pragma once

#include <lfs/datasets.hpp>
#include <lfs/eval.hpp>
#include <lfs/margin.hpp>
#include <lfs/search.hpp>
#include <lfs/trainer.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfs::experiment {

/// A configuration value is missing or out of range. `field` is the dotted config key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field))
    {
    }

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct DatasetConfig {
    std::string source = "synthetic"; // "synthetic" | "csv"
    std::filesystem::path path;
    SyntheticSpec synthetic;
    std::optional<std::uint64_t> seed; // defaults to the run seed
    double train_frac = 0.8;
    double val_frac = 0.5; // share of held-out identities used for validation; the rest is test
    std::size_t val_pairs = 2000;
    std::size_t test_pairs = 2000;
};

struct LossConfig {
    std::string type = "plain"; // plain | sphere | arc | am | combined | unified
    int m1 = 3;
    double m2 = 0.5;
    double m3 = 0.35;
    double a = 0.0;
};

struct SearchSettings {
    double mu0 = -10.0;
    double sigma = 0.2;
    double eta = 0.05;
    std::size_t population = 4;
    std::string score_grad = "mu";  // mu | a
    std::string optimizer = "plain"; // plain | adam
    std::string sample_space = "direct"; // direct | negexp
};

struct RandomSettings {
    double a_min = -1e4;
    double min_magnitude = 1.0;
};

struct EvalSettings {
    std::string reward = "verification"; // verification | identification
    std::size_t folds = 10;
    std::vector<double> far{1e-1, 1e-2, 1e-3};
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::filesystem::path out = "runs/default";

    DatasetConfig dataset;
    ModelConfig model;
    LossConfig loss;
    SgdConfig sgd{0.01, 0.9, 0.0005, 128};
    std::size_t epochs = 30;
    std::vector<std::size_t> drop_epochs{15, 25};
    double drop_factor = 10.0;
    SearchSettings search;
    RandomSettings random;
    EvalSettings eval;
    std::vector<double> ablation_factors{0.0, -1.0, -10.0, -100.0, -1000.0, -10000.0};
};

/// Overlays keys present in `text` (JSON) onto `base`. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Fully resolved config as pretty JSON; feeding it back through parse_config reproduces the run.
std::string dump_config(const ExperimentConfig& config);

/// Throws ConfigError naming the first invalid field.
void validate(const ExperimentConfig& config);

MarginSpec make_loss(const LossConfig& loss);
TrainingConfig make_training(const ExperimentConfig& config);
SearchConfig make_search(const ExperimentConfig& config);
RandomScheduleConfig make_random(const ExperimentConfig& config);
RewardKind make_reward_kind(const EvalSettings& eval);

} // namespace lfs::experiment
