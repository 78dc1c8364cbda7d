#pragma once

// Exhaustive reference implementations of the evaluation metrics.

#include <lfs/eval.hpp>
#include <lfs/numerics.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

struct Identification {
    double rank1 = 0.0;
    std::vector<double> cmc; // cmc[r - 1]
};

inline Identification identify(const lfs::DenseMatrix& gallery, const std::vector<std::size_t>& gallery_labels,
                               const lfs::DenseMatrix& probes, const std::vector<std::size_t>& probe_labels)
{
    Identification out;
    out.cmc.assign(gallery.rows(), 0.0);
    for (std::size_t p = 0; p < probes.rows(); ++p) {
        std::vector<double> sim(gallery.rows());
        for (std::size_t g = 0; g < gallery.rows(); ++g) {
            double d = 0.0;
            for (std::size_t j = 0; j < gallery.cols(); ++j) {
                d += gallery(g, j) * probes(p, j);
            }
            sim[g] = d;
        }
        // Rank of the first gallery entry carrying the probe's label, counting every entry that
        // beats it outright or ties it earlier in gallery order.
        std::size_t best_rank = gallery.rows() + 1;
        for (std::size_t t = 0; t < gallery.rows(); ++t) {
            if (gallery_labels[t] != probe_labels[p]) {
                continue;
            }
            std::size_t rank = 1;
            for (std::size_t g = 0; g < gallery.rows(); ++g) {
                if (sim[g] > sim[t] || (sim[g] == sim[t] && g < t)) {
                    ++rank;
                }
            }
            best_rank = std::min(best_rank, rank);
        }
        for (std::size_t r = best_rank; r <= gallery.rows(); ++r) {
            out.cmc[r - 1] += 1.0;
        }
    }
    for (auto& c : out.cmc) {
        c /= static_cast<double>(probes.rows());
    }
    out.rank1 = out.cmc.empty() ? 0.0 : out.cmc[0];
    return out;
}

/// Scans every candidate threshold; empty when the pair set has fewer than ceil(1/far) negatives.
inline std::optional<double> tpr_at_far(const std::vector<lfs::ScoredPair>& scored, double far)
{
    std::vector<double> candidates{-std::numeric_limits<double>::infinity()};
    std::size_t negatives = 0, positives = 0;
    for (const auto& s : scored) {
        candidates.push_back(s.similarity);
        (s.same ? positives : negatives) += 1;
    }
    if (static_cast<double>(negatives) < std::ceil(1.0 / far - 1e-9)) {
        return std::nullopt;
    }
    double best_threshold = std::numeric_limits<double>::infinity();
    for (double t : candidates) {
        std::size_t false_accepts = 0;
        for (const auto& s : scored) {
            false_accepts += (!s.same && s.similarity > t);
        }
        if (static_cast<double>(false_accepts) <= far * static_cast<double>(negatives) * (1.0 + 1e-12) &&
            t < best_threshold) {
            best_threshold = t;
        }
    }
    std::size_t hits = 0;
    for (const auto& s : scored) {
        hits += (s.same && s.similarity > best_threshold);
    }
    return static_cast<double>(hits) / static_cast<double>(positives);
}

/// Round-robin K-fold accuracy, every candidate threshold tried on every training fold.
inline double verification_accuracy(const std::vector<lfs::ScoredPair>& scored, std::size_t folds)
{
    std::size_t correct = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<double> candidates{-std::numeric_limits<double>::infinity()};
        for (std::size_t i = 0; i < scored.size(); ++i) {
            if (i % folds != f) {
                candidates.push_back(scored[i].similarity);
            }
        }
        double best_t = 0.0;
        long best = -1;
        for (double t : candidates) {
            long ok = 0;
            for (std::size_t i = 0; i < scored.size(); ++i) {
                if (i % folds != f) {
                    ok += ((scored[i].similarity > t) == scored[i].same);
                }
            }
            if (ok > best || (ok == best && t < best_t)) {
                best = ok;
                best_t = t;
            }
        }
        for (std::size_t i = f; i < scored.size(); i += folds) {
            correct += ((scored[i].similarity > best_t) == scored[i].same);
        }
    }
    return static_cast<double>(correct) / static_cast<double>(scored.size());
}

} // namespace oracle
