#include "lfs/search.hpp"

#include "lfs/error.hpp"
#include "lfs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lfs {

void SearchDistribution::validate() const
{
    require(sigma > 0.0, "search.sigma must be > 0");
    require(eta > 0.0, "search.eta must be > 0");
    require(population >= 1, "search.population must be >= 1");
    require(std::isfinite(mu), "search.mu0 must be finite");
}

std::vector<double> sample_draws(const SearchDistribution& dist, const RngStream& stream)
{
    dist.validate();
    return sample_gaussian(stream, dist.mu, dist.sigma, dist.population);
}

double factor_from_draw(double draw, SampleSpace space)
{
    return space == SampleSpace::NegExp ? -std::exp(draw) : std::min(draw, 0.0);
}

double score_variable(double draw, SampleSpace space)
{
    return space == SampleSpace::NegExp ? draw : std::min(draw, 0.0);
}

std::vector<double> sample_factors(const SearchDistribution& dist, const RngStream& stream)
{
    auto draws = sample_draws(dist, stream);
    for (double& d : draws) {
        d = factor_from_draw(d, SampleSpace::Direct);
    }
    return draws;
}

std::vector<double> normalize_rewards(std::span<const double> raw)
{
    require(!raw.empty(), "normalize_rewards: empty input");
    const auto n = static_cast<double>(raw.size());
    const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / n;
    double var = 0.0;
    for (double r : raw) {
        var += (r - mean) * (r - mean);
    }
    const double sd = std::sqrt(var / n);
    std::vector<double> out(raw.size(), 0.0);
    if (sd < 1e-12) {
        return out;
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = (raw[i] - mean) / sd;
    }
    return out;
}

double reinforce_gradient(const SearchDistribution& dist, std::span<const double> samples,
                          std::span<const double> normalized_rewards, ScoreGradient score)
{
    require(samples.size() == normalized_rewards.size() && !samples.empty(),
            "reinforce_gradient: samples and rewards must have equal, non-zero length");
    const double variance = dist.sigma * dist.sigma;
    const double sign = score == ScoreGradient::Mu ? 1.0 : -1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        acc += normalized_rewards[i] * sign * (samples[i] - dist.mu) / variance;
    }
    return acc / static_cast<double>(samples.size());
}

double reinforce_update(const SearchDistribution& dist, std::span<const double> samples,
                        std::span<const double> normalized_rewards, ScoreGradient score)
{
    return dist.mu + dist.eta * reinforce_gradient(dist, samples, normalized_rewards, score);
}

double adam_update(double mu, double gradient, double eta, AdamState& state)
{
    ++state.steps;
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * gradient;
    state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * gradient * gradient;
    const auto t = static_cast<double>(state.steps);
    const double m_hat = state.first_moment / (1.0 - std::pow(state.beta1, t));
    const double v_hat = state.second_moment / (1.0 - std::pow(state.beta2, t));
    return mu + eta * m_hat / (std::sqrt(v_hat) + state.epsilon);
}

std::size_t select_best(std::span<const double> raw_rewards)
{
    require(!raw_rewards.empty(), "select_best: no candidates");
    std::size_t best = 0;
    for (std::size_t i = 1; i < raw_rewards.size(); ++i) {
        if (raw_rewards[i] > raw_rewards[best]) {
            best = i;
        }
    }
    return best;
}

void SearchConfig::validate() const
{
    training.validate();
    distribution.validate();
}

Network initial_network(const ModelConfig& model, const LabeledDataset& train, std::uint64_t seed)
{
    const auto dims = model.layer_dims(train.dim());
    return init_network(dims, train.identity_count, model.scale, RngStream(seed, "model"));
}

RngStream epoch_stream(std::uint64_t seed, std::size_t epoch)
{
    return RngStream(seed, "train").derive("epoch" + std::to_string(epoch));
}

namespace {

void require_validation(const Validation& validation)
{
    require(validation.data != nullptr && validation.data->size() > 0, "validation set is empty");
}

} // namespace

SearchResult run_search(const SearchConfig& config, const LabeledDataset& train, const Validation& validation,
                        std::uint64_t seed, const SearchObserver& observer)
{
    config.validate();
    require_validation(validation);
    validate(train);

    TrainState state = make_train_state(initial_network(config.training.model, train, seed));
    SearchResult result;
    result.final_model = state.model;
    result.final_reward = reward(state.model, validation);
    result.final_epoch = 0;

    SearchDistribution dist = config.distribution;
    AdamState adam;
    const RngStream search_root(seed, "search");
    const std::size_t population = dist.population;

    for (std::size_t e = 0; e < config.training.epochs; ++e) {
        SearchEpochRecord record;
        record.epoch = e + 1;
        record.lr = config.training.schedule.rate_at(e);
        record.mu_before = dist.mu;
        record.start_digest = parameter_digest(state.model);

        const auto draws = sample_draws(dist, search_root.derive("epoch" + std::to_string(e)));
        std::vector<double> factors(population);
        std::vector<double> samples(population);
        for (std::size_t i = 0; i < population; ++i) {
            factors[i] = factor_from_draw(draws[i], config.sample_space);
            samples[i] = score_variable(draws[i], config.sample_space);
        }

        auto candidates = train_candidates(state, factors, train, config.training.sgd, record.lr,
                                           epoch_stream(seed, e), config.training.threads);
        std::vector<double> raw(population);
        parallel_for(population, config.training.threads,
                     [&](std::size_t i) { raw[i] = reward(candidates[i].state.model, validation); });
        const auto normalized = normalize_rewards(raw);

        const double gradient = reinforce_gradient(dist, samples, normalized, config.score_gradient);
        dist.mu = config.optimizer == OuterOptimizer::Adam ? adam_update(dist.mu, gradient, dist.eta, adam)
                                                           : dist.mu + dist.eta * gradient;
        record.mu_after = dist.mu;
        record.winner = select_best(raw);

        for (std::size_t i = 0; i < population; ++i) {
            record.candidates.push_back({i, draws[i], factors[i], candidates[i].mean_loss, raw[i], normalized[i],
                                         parameter_digest(candidates[i].state.model)});
        }
        if (observer) {
            observer(record, state, candidates);
        }

        state = std::move(candidates[record.winner].state);
        // The untrained model only stands in when no epoch has run.
        if (result.final_epoch == 0 || raw[record.winner] > result.final_reward) {
            result.final_model = state.model;
            result.final_reward = raw[record.winner];
            result.final_epoch = record.epoch;
        }
        result.history.push_back(std::move(record));
    }
    return result;
}

TrainingRun run_fixed(const TrainingConfig& config, const MarginSpec& loss, const LabeledDataset& train,
                      const Validation& validation, std::uint64_t seed)
{
    config.validate();
    require_validation(validation);
    validate(train);

    TrainState state = make_train_state(initial_network(config.model, train, seed));
    TrainingRun run;
    const auto factor = loss.constant_factor(config.model.scale);
    for (std::size_t e = 0; e < config.epochs; ++e) {
        const double lr = config.schedule.rate_at(e);
        auto epoch = train_epoch(std::move(state), loss, train, config.sgd, lr, epoch_stream(seed, e));
        state = std::move(epoch.state);
        run.history.push_back({e + 1, lr, factor, epoch.mean_loss, reward(state.model, validation),
                               parameter_digest(state.model), epoch.positive_factor_rows});
    }
    run.final_model = state.model;
    run.final_reward = run.history.empty() ? reward(state.model, validation) : run.history.back().reward;
    return run;
}

void RandomScheduleConfig::validate() const
{
    training.validate();
    require(a_min <= 0.0 && std::isfinite(a_min), "random.a_min must be <= 0");
    require(min_magnitude > 0.0, "random.min_magnitude must be > 0");
}

double sample_random_factor(double a_min, double min_magnitude, RandomEngine& engine)
{
    require(a_min <= 0.0, "sample_random_factor: a_min must be <= 0");
    if (a_min == 0.0) {
        return 0.0;
    }
    const double hi = -a_min;
    const double lo = std::min(min_magnitude, hi);
    const double u = engine.uniform();
    return -std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
}

TrainingRun run_random_schedule(const RandomScheduleConfig& config, const LabeledDataset& train,
                                const Validation& validation, std::uint64_t seed)
{
    config.validate();
    require_validation(validation);
    validate(train);

    TrainState state = make_train_state(initial_network(config.training.model, train, seed));
    TrainingRun run;
    const RngStream root(seed, "random");
    for (std::size_t e = 0; e < config.training.epochs; ++e) {
        auto engine = root.derive("epoch" + std::to_string(e)).engine();
        const double a = sample_random_factor(config.a_min, config.min_magnitude, engine);
        const double lr = config.training.schedule.rate_at(e);
        auto epoch = train_epoch(std::move(state), MarginSpec::unified(a), train, config.training.sgd, lr,
                                 epoch_stream(seed, e));
        state = std::move(epoch.state);
        run.history.push_back(
            {e + 1, lr, a, epoch.mean_loss, reward(state.model, validation), parameter_digest(state.model)});
    }
    run.final_model = state.model;
    run.final_reward = run.history.empty() ? reward(state.model, validation) : run.history.back().reward;
    return run;
}

} // namespace lfs
