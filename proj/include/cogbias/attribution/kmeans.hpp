#ifndef COGBIAS_ATTRIBUTION_KMEANS_HPP
#define COGBIAS_ATTRIBUTION_KMEANS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "../random.hpp"
#include "quality.hpp"

/**
 * @file kmeans.hpp
 * @brief Lloyd's K-Means with k-means++ seeding, and the median-of-restarts reference clustering.
 */

namespace cogbias {

struct KmeansOptions {
    /** Number of clusters. The reference clustering supports 2 only. */
    int k = 2;

    /** Independent restarts; restart `i` is seeded with `first_seed + i`. */
    std::size_t runs = 30;

    std::uint64_t first_seed = 0;

    std::size_t max_iterations = 300;

    /** Fresh k-means++ draws allowed when a restart ends with an empty cluster. */
    std::size_t max_reseeds = 10;

    bool operator==(const KmeansOptions&) const = default;
};

/** Outcome of one restart. Labels are canonical: the first point is always in cluster 0. */
struct KmeansRun {
    std::uint64_t seed = 0;
    std::vector<int> labels;
    double inertia = 0;
    std::size_t iterations = 0;
    double silhouette = 0;

    bool operator==(const KmeansRun&) const = default;
};

namespace internal {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double ss = 0;
    for (std::size_t f = 0; f < a.size(); ++f) {
        ss += (a[f] - b[f]) * (a[f] - b[f]);
    }
    return ss;
}

/**
 * Greedy k-means++: each new centre is the best of `2 + floor(ln k)` candidates drawn with
 * probability proportional to squared distance, judged by the resulting total potential.
 */
inline std::vector<std::vector<double>> kmeanspp_centers(const PointCloud& cloud, int k, Rng& rng) {
    const auto n = cloud.size();
    const auto trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
    std::vector<std::vector<double>> centers;
    auto first = cloud.point(static_cast<std::size_t>(rng.below(n)));
    centers.emplace_back(first.begin(), first.end());

    std::vector<double> mindist(n);
    for (std::size_t i = 0; i < n; ++i) {
        mindist[i] = squared_distance(cloud.point(i), centers.back());
    }
    while (static_cast<int>(centers.size()) < k) {
        double total = 0;
        for (double d : mindist) {
            total += d;
        }
        std::size_t best = 0;
        double best_potential = std::numeric_limits<double>::infinity();
        std::vector<double> best_dist;
        for (std::size_t t = 0; t < trials; ++t) {
            std::size_t chosen = n - 1;
            if (total <= 0) {
                chosen = static_cast<std::size_t>(rng.below(n));
            } else {
                double target = rng.uniform() * total;
                double cumulative = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    cumulative += mindist[i];
                    if (target < cumulative && mindist[i] > 0) {
                        chosen = i;
                        break;
                    }
                }
            }
            std::vector<double> dist(n);
            double potential = 0;
            for (std::size_t i = 0; i < n; ++i) {
                dist[i] = std::min(mindist[i], squared_distance(cloud.point(i), cloud.point(chosen)));
                potential += dist[i];
            }
            if (potential < best_potential) {
                best_potential = potential;
                best = chosen;
                best_dist = std::move(dist);
            }
        }
        mindist = std::move(best_dist);
        auto p = cloud.point(best);
        centers.emplace_back(p.begin(), p.end());
    }
    return centers;
}

inline std::vector<int> canonical_labels(std::vector<int> labels) {
    std::map<int, int> remap;
    for (auto& l : labels) {
        auto it = remap.find(l);
        if (it == remap.end()) {
            it = remap.emplace(l, static_cast<int>(remap.size())).first;
        }
        l = it->second;
    }
    return labels;
}

}

/**
 * One K-Means restart: greedy k-means++ seeding followed by Lloyd iterations until assignments stop
 * changing. Returns nothing when every allowed reseed still ends with an empty cluster.
 */
inline std::optional<KmeansRun> lloyd(const PointCloud& cloud, std::uint64_t seed, const KmeansOptions& options) {
    const auto n = cloud.size();
    const auto d = cloud.dimension();
    const auto k = static_cast<std::size_t>(options.k);
    Rng rng(seed);

    for (std::size_t attempt = 0; attempt <= options.max_reseeds; ++attempt) {
        auto centers = internal::kmeanspp_centers(cloud, options.k, rng);
        std::vector<int> labels(n, -1);
        std::size_t iter = 0;
        bool empty_cluster = false;
        for (; iter < options.max_iterations; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                int best = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < k; ++c) {
                    double dist = internal::squared_distance(cloud.point(i), centers[c]);
                    if (dist < best_d) {
                        best_d = dist;
                        best = static_cast<int>(c);
                    }
                }
                if (labels[i] != best) {
                    labels[i] = best;
                    changed = true;
                }
            }
            std::vector<std::size_t> counts(k, 0);
            for (auto& c : centers) {
                std::fill(c.begin(), c.end(), 0.0);
            }
            for (std::size_t i = 0; i < n; ++i) {
                auto p = cloud.point(i);
                for (std::size_t f = 0; f < d; ++f) {
                    centers[labels[i]][f] += p[f];
                }
                ++counts[labels[i]];
            }
            empty_cluster = std::find(counts.begin(), counts.end(), 0u) != counts.end();
            if (empty_cluster) {
                break;
            }
            for (std::size_t c = 0; c < k; ++c) {
                for (auto& v : centers[c]) {
                    v /= static_cast<double>(counts[c]);
                }
            }
            if (!changed) {
                break;
            }
        }
        if (empty_cluster) {
            continue;
        }
        KmeansRun run;
        run.seed = seed;
        run.iterations = iter + 1;
        for (std::size_t i = 0; i < n; ++i) {
            run.inertia += internal::squared_distance(cloud.point(i), centers[labels[i]]);
        }
        run.labels = internal::canonical_labels(std::move(labels));
        return run;
    }
    return std::nullopt;
}

/**
 * Reference clustering: `runs` restarts of 2-means, ranked by silhouette (ties by lower seed);
 * the lower-median run is returned. Restarts that end with an empty cluster, or with a cluster
 * too small for the silhouette, are dropped from the ranking.
 */
struct KmeansReference {
    Labeling labeling;
    ClusterQuality quality;
    std::uint64_t seed = 0;
    std::vector<KmeansRun> ranked; ///< valid restarts in ranking order
    std::size_t dropped = 0;

    bool operator==(const KmeansReference&) const = default;
};

inline KmeansReference kmeans_reference(const PointCloud& cloud, const KmeansOptions& options = {}) {
    if (options.k != 2) {
        throw Error("the reference clustering supports K = 2 only");
    }
    if (cloud.size() < static_cast<std::size_t>(options.k)) {
        throw Error("K-Means needs at least K points");
    }
    if (cloud.size() < 2 * static_cast<std::size_t>(options.k)) {
        throw Error("silhouette undefined: K-Means on " + std::to_string(cloud.size()) +
                    " points leaves a cluster with fewer than 2 points");
    }
    if (options.runs == 0) {
        throw Error("K-Means needs at least one run");
    }

    KmeansReference out;
    for (std::size_t r = 0; r < options.runs; ++r) {
        auto run = lloyd(cloud, options.first_seed + r, options);
        if (!run) {
            ++out.dropped;
            continue;
        }
        Labeling l{LabelScheme::kmeans, run->labels};
        if (l.count(0) < 2 || l.count(1) < 2) {
            ++out.dropped;
            continue;
        }
        run->silhouette = cluster_quality(cloud, run->labels).silhouette;
        out.ranked.push_back(std::move(*run));
    }
    if (out.ranked.empty()) {
        throw Error("every K-Means restart was degenerate");
    }
    std::stable_sort(out.ranked.begin(), out.ranked.end(), [](const KmeansRun& a, const KmeansRun& b) {
        if (a.silhouette != b.silhouette) {
            return a.silhouette < b.silhouette;
        }
        return a.seed < b.seed;
    });
    const auto& median = out.ranked[(out.ranked.size() - 1) / 2];
    out.labeling = Labeling{LabelScheme::kmeans, median.labels};
    out.quality = cluster_quality(cloud, median.labels);
    out.seed = median.seed;
    return out;
}

inline KmeansReference kmeans_reference(const BiasVectorSet& vectors, const KmeansOptions& options = {}) {
    return kmeans_reference(PointCloud(vectors), options);
}

/**
 * Adjusted Rand index between two labelings of the same points.
 * Two labelings that both put every point in a single cluster score 1.
 */
inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw Error("adjusted_rand_index: length mismatch");
    }
    const auto n = a.size();
    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        table[{a[i], b[i]}] += 1;
        rows[a[i]] += 1;
        cols[b[i]] += 1;
    }
    auto choose2 = [](double x) { return x * (x - 1) / 2; };
    double index = 0, sum_rows = 0, sum_cols = 0;
    for (const auto& [key, v] : table) {
        index += choose2(v);
    }
    for (const auto& [key, v] : rows) {
        sum_rows += choose2(v);
    }
    for (const auto& [key, v] : cols) {
        sum_cols += choose2(v);
    }
    double total = choose2(static_cast<double>(n));
    double expected = total == 0 ? 0 : sum_rows * sum_cols / total;
    double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) {
        return 1.0;
    }
    return (index - expected) / (maximum - expected);
}

/** Points whose two-way assignment differs from `reference`, up to swapping the cluster names. */
inline std::size_t disagreements(std::span<const int> labels, std::span<const int> reference) {
    if (labels.size() != reference.size()) {
        throw Error("disagreements: length mismatch");
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        same += labels[i] == reference[i];
    }
    return std::min(labels.size() - same, same);
}

}

#endif
