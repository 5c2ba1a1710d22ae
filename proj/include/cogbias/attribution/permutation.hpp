#ifndef COGBIAS_ATTRIBUTION_PERMUTATION_HPP
#define COGBIAS_ATTRIBUTION_PERMUTATION_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "../random.hpp"
#include "quality.hpp"

namespace cogbias {

enum class PermutationMode {
    size_preserving, ///< shuffle the given labels, keeping cluster sizes
    free             ///< draw labels independently, rejecting draws with a cluster under 2 points
};

inline std::string_view to_string(PermutationMode m) {
    return m == PermutationMode::free ? "free" : "size-preserving";
}

inline PermutationMode permutation_mode_from_string(std::string_view s) {
    if (s == "size-preserving") {
        return PermutationMode::size_preserving;
    }
    if (s == "free") {
        return PermutationMode::free;
    }
    throw Error("unknown permutation mode '" + std::string(s) + "'");
}

struct PermutationOptions {
    /** Number of shuffled labelings. */
    std::size_t permutations = 100;

    /** The observed value must beat at least this fraction of the shuffled values. */
    double level = 0.95;

    PermutationMode mode = PermutationMode::size_preserving;

    /** Trial `t` draws from `Rng::stream(seed, t)`. */
    std::uint64_t seed = 0;

    bool operator==(const PermutationOptions&) const = default;
};

struct PermutationResult {
    QualityMetric metric = QualityMetric::silhouette;
    double observed = 0;
    std::vector<double> distribution;
    std::size_t beaten = 0; ///< permuted values the observed one is strictly better than
    bool significant = false;

    bool operator==(const PermutationResult&) const = default;
};

namespace internal {

inline std::vector<int> permuted_labels(std::span<const int> labels, PermutationMode mode, Rng& rng) {
    std::vector<int> out(labels.begin(), labels.end());
    if (mode == PermutationMode::size_preserving) {
        rng.shuffle(std::span<int>(out));
        return out;
    }
    if (out.size() < 4) {
        throw Error("free permutations need at least 4 points");
    }
    for (;;) {
        std::size_t ones = 0;
        for (auto& l : out) {
            l = static_cast<int>(rng.below(2));
            ones += static_cast<std::size_t>(l);
        }
        if (ones >= 2 && out.size() - ones >= 2) {
            return out;
        }
    }
}

}

/**
 * Judge an observed index value against values from shuffled labelings.
 * `beaten` counts the permuted values the observed one is strictly better than.
 */
inline PermutationResult judge_permutations(QualityMetric metric, double observed, std::vector<double> distribution, double level) {
    PermutationResult r{metric, observed, std::move(distribution), 0, false};
    for (double v : r.distribution) {
        r.beaten += better(metric, observed, v);
    }
    auto needed = static_cast<std::size_t>(std::ceil(level * static_cast<double>(r.distribution.size()) - 1e-9));
    r.significant = !r.distribution.empty() && r.beaten >= needed;
    return r;
}

/**
 * Permutation test of all five indices at once. Every shuffled labeling is scored on every metric,
 * so the five results share one set of permutations.
 */
inline std::array<PermutationResult, 5> permutation_test_all(const PointCloud& cloud,
                                                             std::span<const int> labels,
                                                             const PermutationOptions& options = {}) {
    if (options.permutations < 1) {
        throw Error("permutation test needs at least one permutation");
    }
    auto observed = cluster_quality(cloud, labels);
    std::array<std::vector<double>, 5> dist;
    for (std::size_t t = 0; t < options.permutations; ++t) {
        auto rng = Rng::stream(options.seed, t);
        auto shuffled = internal::permuted_labels(labels, options.mode, rng);
        auto q = cluster_quality(cloud, shuffled);
        for (std::size_t m = 0; m < all_quality_metrics.size(); ++m) {
            dist[m].push_back(metric_value(q, all_quality_metrics[m]));
        }
    }
    std::array<PermutationResult, 5> out;
    for (std::size_t m = 0; m < all_quality_metrics.size(); ++m) {
        auto metric = all_quality_metrics[m];
        out[m] = judge_permutations(metric, metric_value(observed, metric), std::move(dist[m]), options.level);
    }
    return out;
}

/**
 * Permutation test of one index. Significant iff the observed value is strictly better than at
 * least `level` of the permuted values ("better" follows the metric's direction).
 */
inline PermutationResult permutation_test(const BiasVectorSet& vectors,
                                          const Labeling& labeling,
                                          QualityMetric metric,
                                          const PermutationOptions& options = {}) {
    auto all = permutation_test_all(PointCloud(vectors), labeling.labels, options);
    for (auto& r : all) {
        if (r.metric == metric) {
            return r;
        }
    }
    throw Error("unreachable metric");
}

}

#endif
