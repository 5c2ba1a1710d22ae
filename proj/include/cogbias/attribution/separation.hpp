#ifndef COGBIAS_ATTRIBUTION_SEPARATION_HPP
#define COGBIAS_ATTRIBUTION_SEPARATION_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "../randomness.hpp"

namespace cogbias {

/** A bias score together with the per-group sample count that sets its threshold. */
struct ScoredBias {
    std::string bias;
    double score = 0;
    double n = 1000;
};

struct SeparationRow {
    std::string bias;
    double score_a = 0;
    double score_b = 0;
    double threshold_a = 0;
    double threshold_b = 0;
    Direction direction_a = Direction::neutral;
    Direction direction_b = Direction::neutral;
    bool separated = false;

    bool significant_a() const { return direction_a != Direction::neutral; }
    bool significant_b() const { return direction_b != Direction::neutral; }

    bool operator==(const SeparationRow&) const = default;
};

/**
 * Two models are separated on a bias when both scores are significant and point in opposite
 * directions. Rows follow the order of `a`; every bias in `a` must also appear in `b`.
 */
inline std::vector<SeparationRow> separation_check(std::span<const ScoredBias> a,
                                                   std::span<const ScoredBias> b,
                                                   double sigma = 1.0,
                                                   double p = 0.05) {
    std::vector<SeparationRow> out;
    for (const auto& left : a) {
        const ScoredBias* right = nullptr;
        for (const auto& candidate : b) {
            if (candidate.bias == left.bias) {
                right = &candidate;
                break;
            }
        }
        if (!right) {
            throw Error("bias '" + left.bias + "' has no score on the second side");
        }
        SeparationRow row;
        row.bias = left.bias;
        row.score_a = left.score;
        row.score_b = right->score;
        row.threshold_a = neutrality_threshold(left.n, sigma, p).threshold;
        row.threshold_b = neutrality_threshold(right->n, sigma, p).threshold;
        row.direction_a = categorize(left.score, row.threshold_a);
        row.direction_b = categorize(right->score, row.threshold_b);
        row.separated = row.significant_a() && row.significant_b() && row.direction_a == mirror(row.direction_b);
        out.push_back(row);
    }
    return out;
}

/** Scores of one run in `matrix` for every catalog-bias row, with n from `thresholds`. */
inline std::vector<ScoredBias> scored_biases(const ScoreMatrix& matrix, const std::string& run, const ThresholdPolicy& thresholds) {
    auto col = matrix.col_index(run);
    if (!col) {
        throw Error("no run '" + run + "' in score matrix");
    }
    std::vector<ScoredBias> out;
    for (std::size_t r = 0; r < matrix.num_rows(); ++r) {
        auto b = find_bias(matrix.rows()[r]);
        auto v = matrix.at(r, *col);
        if (!b || !v) {
            continue;
        }
        out.push_back(ScoredBias{b->name, *v, thresholds.n_for(b->name)});
    }
    return out;
}

/** Separation between two named runs of a matrix. */
struct SeparationComparison {
    std::string run_a;
    std::string run_b;
    std::vector<SeparationRow> rows;

    bool operator==(const SeparationComparison&) const = default;
};

}

#endif
