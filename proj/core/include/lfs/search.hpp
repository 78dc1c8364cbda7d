#pragma once

#include "lfs/eval.hpp"
#include "lfs/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace lfs {

/// Which log-density gradient multiplies the reward. Mu uses d/dmu log g = (a - mu) / sigma^2
/// (ascent on the expected reward); A uses d/da log g = -(a - mu) / sigma^2.
enum class ScoreGradient { Mu, A };
enum class OuterOptimizer { Plain, Adam };
/// Direct samples a ~ N(mu, sigma^2) clipped at 0; NegExp samples t ~ N(mu, sigma^2) and uses a = -exp(t).
enum class SampleSpace { Direct, NegExp };

struct SearchDistribution {
    double mu = -10.0;
    double sigma = 0.2;
    double eta = 0.05;
    std::size_t population = 4;

    void validate() const;
};

/// B clipped draws min(N(mu, sigma^2), 0).
std::vector<double> sample_factors(const SearchDistribution& dist, const RngStream& stream);

/// Raw draws in the search variable (before mapping to a factor).
std::vector<double> sample_draws(const SearchDistribution& dist, const RngStream& stream);
/// Maps a draw to a factor a <= 0 and the variable the score is taken in.
double factor_from_draw(double draw, SampleSpace space);
double score_variable(double draw, SampleSpace space);

/// (r - mean) / population-std; all zeros when the std is below 1e-12.
std::vector<double> normalize_rewards(std::span<const double> raw);

/// (1/B) sum_i R_i * score_i.
double reinforce_gradient(const SearchDistribution& dist, std::span<const double> samples,
                          std::span<const double> normalized_rewards, ScoreGradient score = ScoreGradient::Mu);

/// mu + eta * reinforce_gradient(...)
double reinforce_update(const SearchDistribution& dist, std::span<const double> samples,
                        std::span<const double> normalized_rewards, ScoreGradient score = ScoreGradient::Mu);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double first_moment = 0.0;
    double second_moment = 0.0;
    std::size_t steps = 0;
};

/// One Adam ascent step on mu.
double adam_update(double mu, double gradient, double eta, AdamState& state);

/// argmax of raw rewards, lowest index on ties.
std::size_t select_best(std::span<const double> raw_rewards);

struct SearchConfig {
    TrainingConfig training;
    SearchDistribution distribution;
    ScoreGradient score_gradient = ScoreGradient::Mu;
    OuterOptimizer optimizer = OuterOptimizer::Plain;
    SampleSpace sample_space = SampleSpace::Direct;

    void validate() const;
};

struct CandidateRecord {
    std::size_t index = 0;
    double draw = 0.0;
    double factor = 0.0;
    double mean_loss = 0.0;
    double raw_reward = 0.0;
    double normalized_reward = 0.0;
    std::uint64_t digest = 0;
};

struct SearchEpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double mu_before = 0.0;
    double mu_after = 0.0;
    std::uint64_t start_digest = 0;
    std::vector<CandidateRecord> candidates;
    std::size_t winner = 0;
};

struct SearchResult {
    Network final_model;
    double final_reward = 0.0;
    std::size_t final_epoch = 0; // 0 means the initial model
    std::vector<SearchEpochRecord> history;
};

/// Called on the coordinator after each epoch with the epoch's starting state and candidates.
using SearchObserver =
    std::function<void(const SearchEpochRecord&, const TrainState& start, std::span<const EpochResult> candidates)>;

/// Initial model shared by every run mode for a given seed.
Network initial_network(const ModelConfig& model, const LabeledDataset& train, std::uint64_t seed);
/// Stream for epoch e's shuffle, shared by every run mode for a given seed.
RngStream epoch_stream(std::uint64_t seed, std::size_t epoch);

/// Per epoch: sample B factors, train B candidates from the broadcast state, score each on
/// the validation set, normalize, update mu, and broadcast the winner. The returned model is
/// the highest-scoring winner over the whole run.
SearchResult run_search(const SearchConfig& config, const LabeledDataset& train, const Validation& validation,
                        std::uint64_t seed, const SearchObserver& observer = {});

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    std::optional<double> factor;
    double mean_loss = 0.0;
    double reward = 0.0;
    std::uint64_t digest = 0;
    std::size_t positive_factor_rows = 0;
};

struct TrainingRun {
    Network final_model;
    double final_reward = 0.0;
    std::vector<EpochRecord> history;
};

/// Plain single-model training with a fixed loss; the final model is the last epoch's.
TrainingRun run_fixed(const TrainingConfig& config, const MarginSpec& loss, const LabeledDataset& train,
                      const Validation& validation, std::uint64_t seed);

struct RandomScheduleConfig {
    TrainingConfig training;
    double a_min = -1e4;
    double min_magnitude = 1.0;

    void validate() const;
};

/// |a| log-uniform on [min(min_magnitude, -a_min), -a_min]; exactly 0 when a_min == 0.
double sample_random_factor(double a_min, double min_magnitude, RandomEngine& engine);

/// Single model, factor resampled once per epoch without reward guidance.
TrainingRun run_random_schedule(const RandomScheduleConfig& config, const LabeledDataset& train,
                                const Validation& validation, std::uint64_t seed);

} // namespace lfs
