#pragma once

#include "lfs/experiment/config.hpp"

#include <lfs/datasets.hpp>
#include <lfs/eval.hpp>
#include <lfs/model.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lfs::experiment {

/// Open-set identity split: train identities, then the held-out identities split again into
/// validation and test.
struct PreparedData {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
    PairSet val_pairs;
    PairSet test_pairs;
};

PreparedData prepare_data(const ExperimentConfig& config);

/// Points into `data.val`; `data` must outlive the result.
Validation make_validation(const PreparedData& data, const ExperimentConfig& config);

struct FarPoint {
    double far = 0.0;
    std::optional<double> tpr; // empty when the pair set has too few negatives
};

struct EvaluationReport {
    std::string split;
    VerificationReport verification;
    IdentificationReport identification;
    std::vector<FarPoint> tpr_at_far;

    bool operator==(const EvaluationReport&) const;
};

EvaluationReport evaluate_model(const Network& net, const LabeledDataset& data, const PairSet& pairs,
                                const EvalSettings& eval, std::string split);

std::string report_json(const EvaluationReport& report);

/// `stem`.json, `stem_prefix`roc.csv and `stem_prefix`cmc.csv
void write_report(const std::filesystem::path& dir, const EvaluationReport& report, const std::string& stem,
                  const std::string& curve_prefix);

struct RunOutcome {
    std::string run_id;
    Network final_model;
    double final_reward = 0.0;
    EvaluationReport test_report;
    std::size_t positive_factor_rows = 0; // summed over epochs
};

/// Each run writes config.json, metrics.jsonl, timing.jsonl, model.lfs, run.json, report.json,
/// roc.csv, cmc.csv, loss_curve.csv and reward_curve.csv into `dir`. Search also writes
/// mu_trajectory.csv and checkpoints/epoch_NNN.lfs for every epoch winner.
RunOutcome run_train_fixed(const ExperimentConfig& config, const PreparedData& data, const std::filesystem::path& dir);
RunOutcome run_search_mode(const ExperimentConfig& config, const PreparedData& data, const std::filesystem::path& dir);
RunOutcome run_random_mode(const ExperimentConfig& config, const PreparedData& data, const std::filesystem::path& dir);

struct AblationRow {
    double factor = 0.0;
    RunOutcome outcome;
};

/// One unified-loss run per factor in subdirectories a_<factor>, plus summary.csv and summary.jsonl.
std::vector<AblationRow> run_ablation(const ExperimentConfig& config, const PreparedData& data,
                                      const std::filesystem::path& dir);

/// Long CSV "a,p,h,pm" for p = 0, 0.001, ..., 1 and each factor.
void write_modulating_curves(std::ostream& out, const std::vector<double>& factors);

} // namespace lfs::experiment
