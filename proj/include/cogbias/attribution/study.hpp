#ifndef COGBIAS_ATTRIBUTION_STUDY_HPP
#define COGBIAS_ATTRIBUTION_STUDY_HPP

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "kmeans.hpp"
#include "permutation.hpp"
#include "quality.hpp"

/**
 * @file study.hpp
 * @brief Clustering-quality comparison of pretraining, instruction, random and K-Means labelings.
 */

namespace cogbias {

/**
 * Mean quality over `trials` random labelings that keep the cluster sizes of `labels`.
 * Trial `t` draws from `Rng::stream(seed, t)`.
 */
inline ClusterQuality random_baseline(const PointCloud& cloud, std::span<const int> labels, std::size_t trials = 5, std::uint64_t seed = 0) {
    if (cloud.size() < 4) {
        throw Error("random baseline needs at least 4 vectors");
    }
    if (trials == 0) {
        throw Error("random baseline needs at least one trial");
    }
    ClusterQuality mean;
    for (std::size_t t = 0; t < trials; ++t) {
        auto rng = Rng::stream(seed, t);
        std::vector<int> shuffled(labels.begin(), labels.end());
        rng.shuffle(std::span<int>(shuffled));
        auto q = cluster_quality(cloud, shuffled);
        mean.silhouette += q.silhouette;
        mean.calinski_harabasz += q.calinski_harabasz;
        mean.davies_bouldin += q.davies_bouldin;
        mean.mean_intra_distance += q.mean_intra_distance;
        mean.mean_inter_distance += q.mean_inter_distance;
    }
    auto k = static_cast<double>(trials);
    mean.silhouette /= k;
    mean.calinski_harabasz /= k;
    mean.davies_bouldin /= k;
    mean.mean_intra_distance /= k;
    mean.mean_inter_distance /= k;
    return mean;
}

/** Balanced random baseline (sizes floor(N/2) and ceil(N/2)). */
inline ClusterQuality random_baseline(const BiasVectorSet& vectors, std::size_t trials = 5, std::uint64_t seed = 0) {
    std::vector<int> labels(vectors.size(), 0);
    for (std::size_t i = vectors.size() / 2; i < labels.size(); ++i) {
        labels[i] = 1;
    }
    return random_baseline(PointCloud(vectors), labels, trials, seed);
}

struct ClusteringOptions {
    PermutationOptions permutation;
    KmeansOptions kmeans;
    std::size_t random_trials = 5;

    /** Seed of the random-baseline trials. */
    std::uint64_t random_seed = 0;

    bool operator==(const ClusteringOptions&) const = default;
};

struct ClusteringRow {
    LabelScheme scheme = LabelScheme::random;
    ClusterQuality quality;
    /** Per metric in `all_quality_metrics` order; absent for the random baseline. */
    std::optional<std::array<bool, 5>> significant;

    bool operator==(const ClusteringRow&) const = default;
};

struct ClusteringReport {
    Granularity granularity = Granularity::bias_level;
    std::vector<std::string> run_ids;
    std::size_t features = 0;
    std::vector<ClusteringRow> rows; ///< random, instruction, pretraining, kmeans
    Labeling pretraining;
    Labeling instruction;
    Labeling kmeans;
    std::uint64_t kmeans_seed = 0;
    std::size_t kmeans_valid_runs = 0;
    std::size_t kmeans_disagreements = 0; ///< vs pretraining labels
    double kmeans_ari = 0;                ///< vs pretraining labels

    const ClusteringRow& row(LabelScheme s) const {
        for (const auto& r : rows) {
            if (r.scheme == s) {
                return r;
            }
        }
        throw Error("no clustering row for scheme '" + std::string(to_string(s)) + "'");
    }

    bool operator==(const ClusteringReport&) const = default;
};

/**
 * Score the pretraining and instruction labelings of `vectors` (from `roster`, or from the run-id
 * naming convention), the K-Means reference and the random baseline, with permutation
 * significance for every non-random row.
 */
inline ClusteringReport cluster_study(const BiasVectorSet& vectors, std::span<const ModelRun> roster, const ClusteringOptions& options = {}) {
    PointCloud cloud(vectors);
    ClusteringReport report;
    report.granularity = vectors.granularity;
    report.run_ids = vectors.run_ids();
    report.features = vectors.dimension();
    report.pretraining = label_by(vectors, roster, LabelScheme::pretraining);
    report.instruction = label_by(vectors, roster, LabelScheme::instruction);

    auto significance = [&](std::span<const int> labels) {
        auto tests = permutation_test_all(cloud, labels, options.permutation);
        std::array<bool, 5> flags{};
        for (std::size_t m = 0; m < flags.size(); ++m) {
            flags[m] = tests[m].significant;
        }
        return flags;
    };

    auto kmeans = kmeans_reference(cloud, options.kmeans);
    report.kmeans = kmeans.labeling;
    report.kmeans_seed = kmeans.seed;
    report.kmeans_valid_runs = kmeans.ranked.size();
    report.kmeans_disagreements = disagreements(report.kmeans.labels, report.pretraining.labels);
    report.kmeans_ari = adjusted_rand_index(report.kmeans.labels, report.pretraining.labels);

    report.rows.push_back({LabelScheme::random, random_baseline(cloud, report.pretraining.labels, options.random_trials, options.random_seed), std::nullopt});
    report.rows.push_back({LabelScheme::instruction, cluster_quality(cloud, report.instruction.labels), significance(report.instruction.labels)});
    report.rows.push_back({LabelScheme::pretraining, cluster_quality(cloud, report.pretraining.labels), significance(report.pretraining.labels)});
    report.rows.push_back({LabelScheme::kmeans, kmeans.quality, significance(report.kmeans.labels)});
    return report;
}

}

#endif
