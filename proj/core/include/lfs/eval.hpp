#pragma once

#include "lfs/datasets.hpp"
#include "lfs/model.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace lfs {

struct ScoredPair {
    double similarity = 0.0;
    bool same = false;
};

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const CurvePoint&) const = default;
};

struct VerificationReport {
    double accuracy = 0.0;
    std::vector<double> fold_thresholds;
    std::vector<double> fold_accuracies;
    std::vector<CurvePoint> roc; // (FAR, TPR), starting at (0, 0) and ending at (1, 1)
};

struct IdentificationReport {
    double rank1 = 0.0;
    std::vector<CurvePoint> cmc; // (rank, fraction matched within rank)
};

struct GalleryProbeSplit {
    std::vector<std::size_t> gallery;
    std::vector<std::size_t> probes;
};

/// L2-normalized embedding of every sample.
DenseMatrix embed_all(const Network& net, const LabeledDataset& data);

std::vector<ScoredPair> score_pairs(const DenseMatrix& embeddings, const PairSet& pairs);

/// K-fold thresholded verification. Pair i belongs to fold i % folds; each fold is scored
/// with the threshold that maximizes accuracy on the remaining folds. A pair is predicted
/// "same" when its similarity exceeds the threshold. Accuracy is pooled over all pairs.
VerificationReport verification_accuracy(std::span<const ScoredPair> scored, std::size_t folds = 10);
VerificationReport verification_accuracy(const DenseMatrix& embeddings, const PairSet& pairs, std::size_t folds = 10);

/// ROC over all pairs, one point per distinct similarity.
std::vector<CurvePoint> roc_curve(std::span<const ScoredPair> scored);

/// First sample of every identity forms the gallery; all remaining samples are probes.
GalleryProbeSplit make_gallery_probe(std::span<const std::size_t> labels);

/// Ranks the gallery by cosine similarity for each probe (ties keep gallery order).
IdentificationReport rank1_identification(const DenseMatrix& gallery, std::span<const std::size_t> gallery_labels,
                                          const DenseMatrix& probes, std::span<const std::size_t> probe_labels);
IdentificationReport rank1_identification(const DenseMatrix& embeddings, std::span<const std::size_t> labels,
                                          const GalleryProbeSplit& split);

/// TPR at the smallest threshold whose false-acceptance fraction is <= far.
/// Throws FarUnresolvable when there are fewer than ceil(1/far) negatives.
double tpr_at_far(std::span<const ScoredPair> scored, double far);

enum class RewardKind { Verification, Identification };

struct Validation {
    const LabeledDataset* data = nullptr;
    PairSet pairs;
    RewardKind kind = RewardKind::Verification;
    std::size_t folds = 10;
};

/// Validation score of a model: verification accuracy on the pair set (folds assigned over the
/// pairs sorted by index, so the order of `pairs` does not matter), or rank-1 identification
/// over the first-sample gallery.
double reward(const Network& net, const Validation& validation);

/// "x,y" header, one point per line, 17 significant digits.
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points);

} // namespace lfs
