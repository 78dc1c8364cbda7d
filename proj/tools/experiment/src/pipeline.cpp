#include "lfs/experiment/pipeline.hpp"

#include "lfs/experiment/metrics.hpp"

#include <lfs/checkpoint.hpp>
#include <lfs/error.hpp>
#include <lfs/margin.hpp>
#include <lfs/search.hpp>

#include <fmt/format.h>

#include <chrono>
#include <fstream>

namespace lfs::experiment {

namespace fs = std::filesystem;

namespace {

std::uint64_t derived_seed(std::uint64_t seed, const char* label) { return RngStream(seed, label).engine()(); }

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text)
{
    auto out = open_out(path);
    out << text;
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

void write_curve(const fs::path& path, const std::vector<CurvePoint>& points)
{
    auto out = open_out(path);
    write_curve_csv(out, points);
}

std::string array_json(const std::vector<double>& values)
{
    std::string s = "[";
    for (double v : values) {
        if (s.size() > 1) {
            s += ',';
        }
        s += format_number(v);
    }
    return s + "]";
}

std::string run_id_for(const std::string& mode, std::uint64_t seed) { return mode + "-" + std::to_string(seed); }

struct RunFiles {
    fs::path dir;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
};

RunFiles begin_run(const ExperimentConfig& config, const fs::path& dir)
{
    fs::create_directories(dir);
    ExperimentConfig resolved = config;
    resolved.out = dir;
    write_text(dir / "config.json", dump_config(resolved));
    return {dir};
}

RunOutcome finish_run(const RunFiles& files, const ExperimentConfig& config, const PreparedData& data,
                      const std::string& mode, Network model, double final_reward, std::size_t final_epoch)
{
    const auto& dir = files.dir;
    write_checkpoint(dir / "model.lfs", model);

    RunOutcome outcome;
    outcome.run_id = run_id_for(mode, config.seed);
    outcome.final_reward = final_reward;
    outcome.test_report = evaluate_model(model, data.test, data.test_pairs, config.eval, "test");
    outcome.final_model = std::move(model);
    write_report(dir, outcome.test_report, "report", "");

    write_text(dir / "run.json", JsonLine()
                                     .add("run_id", outcome.run_id)
                                     .add("mode", mode)
                                     .add("final_reward", final_reward)
                                     .add("final_epoch", final_epoch)
                                     .add("test_verification_accuracy", outcome.test_report.verification.accuracy)
                                     .add("test_rank1", outcome.test_report.identification.rank1)
                                     .str() +
                                     "\n");

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - files.started).count();
    LineWriter(dir / "timing.jsonl").write(JsonLine().add("run_id", outcome.run_id).add("wall_seconds", seconds).str());
    return outcome;
}

RunOutcome write_training_run(const RunFiles& files, const ExperimentConfig& config, const PreparedData& data,
                              const std::string& mode, TrainingRun run)
{
    const auto run_id = run_id_for(mode, config.seed);
    LineWriter metrics(files.dir / "metrics.jsonl");
    std::vector<CurvePoint> loss_curve;
    std::vector<CurvePoint> reward_curve;
    for (const auto& record : run.history) {
        metrics.write(metric_line(run_id, mode, record));
        loss_curve.push_back({static_cast<double>(record.epoch), record.mean_loss});
        reward_curve.push_back({static_cast<double>(record.epoch), record.reward});
    }
    write_curve(files.dir / "loss_curve.csv", loss_curve);
    write_curve(files.dir / "reward_curve.csv", reward_curve);
    auto outcome =
        finish_run(files, config, data, mode, std::move(run.final_model), run.final_reward, run.history.size());
    for (const auto& record : run.history) {
        outcome.positive_factor_rows += record.positive_factor_rows;
    }
    return outcome;
}

} // namespace

PreparedData prepare_data(const ExperimentConfig& config)
{
    const std::uint64_t seed = config.dataset.seed.value_or(config.seed);
    LabeledDataset full;
    if (config.dataset.source == "csv") {
        full = load_flat_file(config.dataset.path);
    } else {
        SyntheticSpec spec = config.dataset.synthetic;
        spec.seed = seed;
        full = generate_synthetic(spec);
    }

    auto outer = split_open_set(full, config.dataset.train_frac, seed);
    auto inner = split_open_set(outer.eval, config.dataset.val_frac, derived_seed(seed, "holdout"));

    PreparedData data;
    data.train = std::move(outer.train);
    data.val = std::move(inner.train);
    data.test = std::move(inner.eval);
    data.val_pairs = make_pairs(data.val, config.dataset.val_pairs, derived_seed(seed, "val_pairs"));
    data.test_pairs = make_pairs(data.test, config.dataset.test_pairs, derived_seed(seed, "test_pairs"));
    return data;
}

Validation make_validation(const PreparedData& data, const ExperimentConfig& config)
{
    return {&data.val, data.val_pairs, make_reward_kind(config.eval), config.eval.folds};
}

bool EvaluationReport::operator==(const EvaluationReport& o) const
{
    const auto far_eq = [](const FarPoint& x, const FarPoint& y) { return x.far == y.far && x.tpr == y.tpr; };
    return split == o.split && verification.accuracy == o.verification.accuracy &&
           verification.fold_thresholds == o.verification.fold_thresholds &&
           verification.fold_accuracies == o.verification.fold_accuracies && verification.roc == o.verification.roc &&
           identification.rank1 == o.identification.rank1 && identification.cmc == o.identification.cmc &&
           std::equal(tpr_at_far.begin(), tpr_at_far.end(), o.tpr_at_far.begin(), o.tpr_at_far.end(), far_eq);
}

EvaluationReport evaluate_model(const Network& net, const LabeledDataset& data, const PairSet& pairs,
                                const EvalSettings& eval, std::string split)
{
    EvaluationReport report;
    report.split = std::move(split);
    const auto embeddings = embed_all(net, data);
    const auto scored = score_pairs(embeddings, pairs);
    report.verification = verification_accuracy(scored, eval.folds);
    report.identification = rank1_identification(embeddings, data.labels, make_gallery_probe(data.labels));
    for (double far : eval.far) {
        FarPoint point{far, std::nullopt};
        try {
            point.tpr = tpr_at_far(scored, far);
        } catch (const FarUnresolvable&) {
        }
        report.tpr_at_far.push_back(point);
    }
    return report;
}

std::string report_json(const EvaluationReport& r)
{
    std::string fars = "[";
    for (const auto& p : r.tpr_at_far) {
        if (fars.size() > 1) {
            fars += ',';
        }
        fars += JsonLine().add("far", p.far).add("tpr", p.tpr).str();
    }
    fars += ']';
    return JsonLine()
               .add("split", r.split)
               .add("verification_accuracy", r.verification.accuracy)
               .add_raw("fold_accuracies", array_json(r.verification.fold_accuracies))
               .add_raw("fold_thresholds", array_json(r.verification.fold_thresholds))
               .add("rank1", r.identification.rank1)
               .add_raw("tpr_at_far", fars)
               .str() +
           "\n";
}

void write_report(const fs::path& dir, const EvaluationReport& report, const std::string& stem,
                  const std::string& curve_prefix)
{
    write_text(dir / (stem + ".json"), report_json(report));
    write_curve(dir / (curve_prefix + "roc.csv"), report.verification.roc);
    write_curve(dir / (curve_prefix + "cmc.csv"), report.identification.cmc);
}

RunOutcome run_train_fixed(const ExperimentConfig& config, const PreparedData& data, const fs::path& dir)
{
    const auto files = begin_run(config, dir);
    auto run = run_fixed(make_training(config), make_loss(config.loss), data.train, make_validation(data, config),
                         config.seed);
    return write_training_run(files, config, data, "train-fixed", std::move(run));
}

RunOutcome run_random_mode(const ExperimentConfig& config, const PreparedData& data, const fs::path& dir)
{
    const auto files = begin_run(config, dir);
    auto run = run_random_schedule(make_random(config), data.train, make_validation(data, config), config.seed);
    return write_training_run(files, config, data, "random-schedule", std::move(run));
}

RunOutcome run_search_mode(const ExperimentConfig& config, const PreparedData& data, const fs::path& dir)
{
    const auto files = begin_run(config, dir);
    const std::string mode = "search";
    const auto run_id = run_id_for(mode, config.seed);
    fs::create_directories(dir / "checkpoints");

    LineWriter metrics(dir / "metrics.jsonl");
    std::vector<CurvePoint> loss_curve;
    std::vector<CurvePoint> reward_curve;
    std::vector<CurvePoint> mu_curve{{0.0, config.search.mu0}};
    const auto observer = [&](const SearchEpochRecord& record, const TrainState&, std::span<const EpochResult> cands) {
        metrics.write(metric_line(run_id, mode, record));
        write_checkpoint(dir / "checkpoints" / fmt::format("epoch_{:03}.lfs", record.epoch),
                         cands[record.winner].state.model);
        const auto x = static_cast<double>(record.epoch);
        loss_curve.push_back({x, record.candidates[record.winner].mean_loss});
        reward_curve.push_back({x, record.candidates[record.winner].raw_reward});
        mu_curve.push_back({x, record.mu_after});
    };

    auto result = run_search(make_search(config), data.train, make_validation(data, config), config.seed, observer);
    write_curve(dir / "loss_curve.csv", loss_curve);
    write_curve(dir / "reward_curve.csv", reward_curve);
    write_curve(dir / "mu_trajectory.csv", mu_curve);
    return finish_run(files, config, data, mode, std::move(result.final_model), result.final_reward,
                      result.final_epoch);
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& config, const PreparedData& data, const fs::path& dir)
{
    for (double a : config.ablation_factors) {
        if (!(a <= 0.0)) {
            throw ConfigError("ablation.factors", "factor " + format_number(a) + " is positive");
        }
    }
    fs::create_directories(dir);
    ExperimentConfig resolved = config;
    resolved.out = dir;
    write_text(dir / "config.json", dump_config(resolved));

    std::vector<AblationRow> rows;
    LineWriter jsonl(dir / "summary.jsonl");
    auto csv = open_out(dir / "summary.csv");
    csv << "a,final_reward,test_verification_accuracy,test_rank1\n";
    for (double a : config.ablation_factors) {
        ExperimentConfig single = config;
        single.loss = {};
        single.loss.type = "unified";
        single.loss.a = a;
        auto outcome = run_train_fixed(single, data, dir / ("a_" + format_number(a)));
        csv << format_number(a) << ',' << format_number(outcome.final_reward) << ','
            << format_number(outcome.test_report.verification.accuracy) << ','
            << format_number(outcome.test_report.identification.rank1) << '\n';
        csv.flush();
        jsonl.write(JsonLine()
                        .add("a", a)
                        .add("final_reward", outcome.final_reward)
                        .add("test_verification_accuracy", outcome.test_report.verification.accuracy)
                        .add("test_rank1", outcome.test_report.identification.rank1)
                        .str());
        rows.push_back({a, std::move(outcome)});
    }
    return rows;
}

void write_modulating_curves(std::ostream& out, const std::vector<double>& factors)
{
    out << "a,p,h,pm\n";
    for (double a : factors) {
        require(a <= 0.0, "export-curves: factor " + format_number(a) + " is positive");
        for (int i = 0; i <= 1000; ++i) {
            const double p = i / 1000.0;
            const double h = modulating_function(a, p);
            out << format_number(a) << ',' << format_number(p) << ',' << format_number(h) << ','
                << format_number(h * p) << '\n';
        }
    }
}

} // namespace lfs::experiment
