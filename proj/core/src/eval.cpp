#include "lfs/eval.hpp"

#include "lfs/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <tuple>

namespace lfs {

DenseMatrix embed_all(const Network& net, const LabeledDataset& data)
{
    return embed(net.backbone, data.features);
}

std::vector<ScoredPair> score_pairs(const DenseMatrix& embeddings, const PairSet& pairs)
{
    std::vector<ScoredPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs.pairs) {
        require(p.first < embeddings.rows() && p.second < embeddings.rows(), "score_pairs: index out of range");
        out.push_back({dot(embeddings.row(p.first), embeddings.row(p.second)), p.same});
    }
    return out;
}

namespace {

void require_both_classes(std::span<const ScoredPair> scored, const char* what)
{
    const bool any_same = std::any_of(scored.begin(), scored.end(), [](const ScoredPair& s) { return s.same; });
    const bool any_diff = std::any_of(scored.begin(), scored.end(), [](const ScoredPair& s) { return !s.same; });
    require(any_same && any_diff, std::string(what) + ": need at least one same and one different pair");
}

struct Threshold {
    double value;
    bool below_all; // predict "same" for every pair
};

// Threshold maximizing accuracy of "same iff similarity > t" over `train`. Candidates are a
// sentinel below everything and each distinct similarity; ties resolve to the lowest candidate.
Threshold best_threshold(std::vector<ScoredPair> train)
{
    std::sort(train.begin(), train.end(),
              [](const ScoredPair& a, const ScoredPair& b) { return a.similarity < b.similarity; });
    long long correct = std::count_if(train.begin(), train.end(), [](const ScoredPair& s) { return s.same; });
    long long best = correct;
    Threshold chosen{train.front().similarity - 1.0, true};
    for (std::size_t i = 0; i < train.size();) {
        const double v = train[i].similarity;
        for (; i < train.size() && train[i].similarity == v; ++i) {
            correct += train[i].same ? -1 : 1;
        }
        if (correct > best) {
            best = correct;
            chosen = {v, false};
        }
    }
    return chosen;
}

bool predict_same(const Threshold& t, double similarity)
{
    return t.below_all || similarity > t.value;
}

} // namespace

VerificationReport verification_accuracy(std::span<const ScoredPair> scored, std::size_t folds)
{
    require(folds >= 2, "verification_accuracy: need at least two folds");
    require(scored.size() >= folds, "verification_accuracy: fewer pairs than folds");
    require_both_classes(scored, "verification_accuracy");

    VerificationReport report;
    std::size_t total_correct = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<ScoredPair> train;
        for (std::size_t i = 0; i < scored.size(); ++i) {
            if (i % folds != f) {
                train.push_back(scored[i]);
            }
        }
        const auto threshold = best_threshold(std::move(train));
        std::size_t correct = 0;
        std::size_t count = 0;
        for (std::size_t i = f; i < scored.size(); i += folds) {
            correct += predict_same(threshold, scored[i].similarity) == scored[i].same ? 1 : 0;
            ++count;
        }
        total_correct += correct;
        report.fold_thresholds.push_back(threshold.value);
        report.fold_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(count));
    }
    report.accuracy = static_cast<double>(total_correct) / static_cast<double>(scored.size());
    report.roc = roc_curve(scored);
    return report;
}

VerificationReport verification_accuracy(const DenseMatrix& embeddings, const PairSet& pairs, std::size_t folds)
{
    const auto scored = score_pairs(embeddings, pairs);
    return verification_accuracy(scored, folds);
}

std::vector<CurvePoint> roc_curve(std::span<const ScoredPair> scored)
{
    require_both_classes(scored, "roc_curve");
    std::vector<ScoredPair> sorted(scored.begin(), scored.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredPair& a, const ScoredPair& b) { return a.similarity > b.similarity; });
    const auto positives = static_cast<double>(std::count_if(sorted.begin(), sorted.end(), [](auto& s) { return s.same; }));
    const auto negatives = static_cast<double>(sorted.size()) - positives;

    std::vector<CurvePoint> roc{{0.0, 0.0}};
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double v = sorted[i].similarity;
        for (; i < sorted.size() && sorted[i].similarity == v; ++i) {
            (sorted[i].same ? tp : fp) += 1;
        }
        roc.push_back({static_cast<double>(fp) / negatives, static_cast<double>(tp) / positives});
    }
    return roc;
}

GalleryProbeSplit make_gallery_probe(std::span<const std::size_t> labels)
{
    GalleryProbeSplit split;
    std::vector<bool> seen;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= seen.size()) {
            seen.resize(labels[i] + 1, false);
        }
        if (!seen[labels[i]]) {
            seen[labels[i]] = true;
            split.gallery.push_back(i);
        } else {
            split.probes.push_back(i);
        }
    }
    return split;
}

IdentificationReport rank1_identification(const DenseMatrix& gallery, std::span<const std::size_t> gallery_labels,
                                          const DenseMatrix& probes, std::span<const std::size_t> probe_labels)
{
    require(gallery.rows() == gallery_labels.size() && probes.rows() == probe_labels.size(),
            "rank1_identification: label counts must match embedding rows");
    require(gallery.rows() > 0 && probes.rows() > 0, "rank1_identification: empty gallery or probe set");
    require(gallery.cols() == probes.cols(), "rank1_identification: embedding widths differ");

    const std::size_t g = gallery.rows();
    std::vector<std::size_t> rank_histogram(g + 1, 0);
    std::vector<double> sims(g);
    for (std::size_t p = 0; p < probes.rows(); ++p) {
        for (std::size_t j = 0; j < g; ++j) {
            sims[j] = dot(probes.row(p), gallery.row(j));
        }
        // best-ranked gallery entry carrying the probe's label
        std::size_t match = g;
        for (std::size_t j = 0; j < g; ++j) {
            if (gallery_labels[j] == probe_labels[p] && (match == g || sims[j] > sims[match])) {
                match = j;
            }
        }
        require(match < g, "rank1_identification: probe label absent from gallery");
        std::size_t rank = 1;
        for (std::size_t j = 0; j < g; ++j) {
            if (sims[j] > sims[match] || (sims[j] == sims[match] && j < match)) {
                ++rank;
            }
        }
        ++rank_histogram[rank];
    }

    IdentificationReport report;
    std::size_t cumulative = 0;
    const auto n = static_cast<double>(probes.rows());
    for (std::size_t r = 1; r <= g; ++r) {
        cumulative += rank_histogram[r];
        report.cmc.push_back({static_cast<double>(r), static_cast<double>(cumulative) / n});
    }
    report.rank1 = report.cmc.front().y;
    return report;
}

IdentificationReport rank1_identification(const DenseMatrix& embeddings, std::span<const std::size_t> labels,
                                          const GalleryProbeSplit& split)
{
    auto gather = [&](const std::vector<std::size_t>& rows, DenseMatrix& m, std::vector<std::size_t>& l) {
        m = DenseMatrix(rows.size(), embeddings.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto src = embeddings.row(rows[i]);
            std::copy(src.begin(), src.end(), m.row(i).begin());
            l.push_back(labels[rows[i]]);
        }
    };
    DenseMatrix gallery;
    DenseMatrix probes;
    std::vector<std::size_t> gallery_labels;
    std::vector<std::size_t> probe_labels;
    gather(split.gallery, gallery, gallery_labels);
    gather(split.probes, probes, probe_labels);
    return rank1_identification(gallery, gallery_labels, probes, probe_labels);
}

double tpr_at_far(std::span<const ScoredPair> scored, double far)
{
    require(far > 0.0 && far <= 1.0, "tpr_at_far: far must lie in (0, 1]");
    std::vector<double> negatives;
    std::vector<double> positives;
    for (const auto& s : scored) {
        (s.same ? positives : negatives).push_back(s.similarity);
    }
    require(!positives.empty(), "tpr_at_far: no positive pairs");
    const auto needed = static_cast<std::size_t>(std::ceil(1.0 / far - 1e-9));
    if (negatives.size() < needed) {
        throw FarUnresolvable("FAR unresolvable: far=" + std::to_string(far) + " needs at least " +
                              std::to_string(needed) + " negative pairs, have " + std::to_string(negatives.size()));
    }
    std::sort(negatives.begin(), negatives.end(), std::greater<>());
    const auto allowed =
        static_cast<std::size_t>(std::floor(far * static_cast<double>(negatives.size()) * (1.0 + 1e-12)));
    const double threshold =
        allowed < negatives.size() ? negatives[allowed] : -std::numeric_limits<double>::infinity();
    const auto accepted = std::count_if(positives.begin(), positives.end(), [&](double s) { return s > threshold; });
    return static_cast<double>(accepted) / static_cast<double>(positives.size());
}

double reward(const Network& net, const Validation& validation)
{
    require(validation.data != nullptr && validation.data->size() > 0, "reward: empty validation set");
    const auto embeddings = embed_all(net, *validation.data);
    if (validation.kind == RewardKind::Identification) {
        return rank1_identification(embeddings, validation.data->labels, make_gallery_probe(validation.data->labels))
            .rank1;
    }
    // Folds are assigned over a canonical pair order so the reward does not depend on how the
    // pair list happens to be arranged.
    PairSet canonical = validation.pairs;
    const auto key = [](const Pair& p) { return std::tuple(std::min(p.first, p.second), std::max(p.first, p.second), p.same); };
    std::sort(canonical.pairs.begin(), canonical.pairs.end(),
              [&](const Pair& x, const Pair& y) { return key(x) < key(y); });
    return verification_accuracy(embeddings, canonical, validation.folds).accuracy;
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points)
{
    out << "x,y\n";
    char buf[64];
    for (const auto& p : points) {
        char* end = std::to_chars(buf, buf + sizeof buf, p.x, std::chars_format::general, 17).ptr;
        *end++ = ',';
        end = std::to_chars(end, buf + sizeof buf, p.y, std::chars_format::general, 17).ptr;
        *end++ = '\n';
        out.write(buf, end - buf);
    }
}

} // namespace lfs
