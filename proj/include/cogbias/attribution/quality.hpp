#ifndef COGBIAS_ATTRIBUTION_QUALITY_HPP
#define COGBIAS_ATTRIBUTION_QUALITY_HPP

#include <array>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "../types.hpp"

/**
 * @file quality.hpp
 * @brief Validity indices for a two-way partition of bias vectors under Euclidean distance.
 */

namespace cogbias {

struct ClusterQuality {
    double silhouette = 0;
    double calinski_harabasz = 0;
    double davies_bouldin = 0;
    double mean_intra_distance = 0;
    double mean_inter_distance = 0;

    bool operator==(const ClusterQuality&) const = default;
};

enum class QualityMetric { silhouette, calinski_harabasz, davies_bouldin, intra_distance, inter_distance };

inline constexpr std::array<QualityMetric, 5> all_quality_metrics{
    QualityMetric::silhouette, QualityMetric::calinski_harabasz, QualityMetric::davies_bouldin,
    QualityMetric::intra_distance, QualityMetric::inter_distance};

inline std::string_view to_string(QualityMetric m) {
    switch (m) {
    case QualityMetric::silhouette:
        return "silhouette";
    case QualityMetric::calinski_harabasz:
        return "calinski_harabasz";
    case QualityMetric::davies_bouldin:
        return "davies_bouldin";
    case QualityMetric::intra_distance:
        return "mean_intra_distance";
    case QualityMetric::inter_distance:
        return "mean_inter_distance";
    }
    return "silhouette";
}

inline QualityMetric quality_metric_from_string(std::string_view s) {
    for (auto m : all_quality_metrics) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw Error("unknown quality metric '" + std::string(s) + "'");
}

/** Davies-Bouldin and intra distance improve downwards; the rest improve upwards. */
inline bool higher_is_better(QualityMetric m) {
    return m != QualityMetric::davies_bouldin && m != QualityMetric::intra_distance;
}

inline double metric_value(const ClusterQuality& q, QualityMetric m) {
    switch (m) {
    case QualityMetric::silhouette:
        return q.silhouette;
    case QualityMetric::calinski_harabasz:
        return q.calinski_harabasz;
    case QualityMetric::davies_bouldin:
        return q.davies_bouldin;
    case QualityMetric::intra_distance:
        return q.mean_intra_distance;
    case QualityMetric::inter_distance:
        return q.mean_inter_distance;
    }
    return 0;
}

/** Strictly better, in the metric's own direction. */
inline bool better(QualityMetric m, double a, double b) {
    return higher_is_better(m) ? a > b : a < b;
}

/**
 * Dense points plus their pairwise Euclidean distances. Built once and reused across relabelings.
 */
class PointCloud {
public:
    explicit PointCloud(const BiasVectorSet& set) : n_(set.size()), d_(set.dimension()), coords_(n_ * d_), dist_(n_ * n_, 0.0) {
        for (std::size_t i = 0; i < n_; ++i) {
            if (set.vectors[i].scores.size() != d_) {
                throw Error("bias vector '" + set.vectors[i].run_id + "' has the wrong length");
            }
            std::copy(set.vectors[i].scores.begin(), set.vectors[i].scores.end(), coords_.begin() + static_cast<std::ptrdiff_t>(i * d_));
        }
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j) {
                double ss = 0;
                for (std::size_t f = 0; f < d_; ++f) {
                    double diff = coords_[i * d_ + f] - coords_[j * d_ + f];
                    ss += diff * diff;
                }
                dist_[i * n_ + j] = dist_[j * n_ + i] = std::sqrt(ss);
            }
        }
    }

    std::size_t size() const { return n_; }
    std::size_t dimension() const { return d_; }
    double distance(std::size_t i, std::size_t j) const { return dist_[i * n_ + j]; }
    std::span<const double> point(std::size_t i) const { return {coords_.data() + i * d_, d_}; }

private:
    std::size_t n_;
    std::size_t d_;
    std::vector<double> coords_;
    std::vector<double> dist_;
};

namespace internal {

inline void check_two_way(const PointCloud& cloud, std::span<const int> labels) {
    if (labels.size() != cloud.size()) {
        throw Error("labeling length does not match the number of vectors");
    }
    std::size_t counts[2] = {0, 0};
    for (int l : labels) {
        if (l != 0 && l != 1) {
            throw Error("cluster labels must be 0 or 1");
        }
        ++counts[l];
    }
    if (counts[0] == 0 || counts[1] == 0) {
        throw Error("empty cluster");
    }
    if (counts[0] < 2 || counts[1] < 2) {
        throw Error("silhouette undefined: every cluster needs at least 2 points");
    }
}

}

/**
 * Per-point silhouette `(b - a) / max(a, b)`; a point whose `a` and `b` are both zero scores 0.
 */
inline std::vector<double> silhouette_samples(const PointCloud& cloud, std::span<const int> labels) {
    internal::check_two_way(cloud, labels);
    const auto n = cloud.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sums[2] = {0, 0};
        std::size_t counts[2] = {0, 0};
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            sums[labels[j]] += cloud.distance(i, j);
            ++counts[labels[j]];
        }
        int own = labels[i];
        double a = sums[own] / static_cast<double>(counts[own]);
        double b = sums[1 - own] / static_cast<double>(counts[1 - own]);
        double denom = std::max(a, b);
        out[i] = denom > 0 ? (b - a) / denom : 0.0;
    }
    return out;
}

/**
 * All five indices for a two-way labeling.
 * Calinski-Harabasz is `[B / (k - 1)] / [W / (N - k)]` and is 1 when W = 0;
 * Davies-Bouldin averages, over clusters, the worst `(s_i + s_j) / d(c_i, c_j)` with
 * coincident centroids contributing 0. Intra/inter are means over unordered point pairs.
 * Throws for an empty cluster or a cluster with fewer than 2 points.
 */
inline ClusterQuality cluster_quality(const PointCloud& cloud, std::span<const int> labels) {
    auto sil = silhouette_samples(cloud, labels);
    const auto n = cloud.size();
    const auto d = cloud.dimension();
    ClusterQuality q;

    double total = 0;
    for (double s : sil) {
        total += s;
    }
    q.silhouette = total / static_cast<double>(n);

    std::vector<double> centroid[2] = {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    std::vector<double> overall(d, 0.0);
    std::size_t counts[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        auto p = cloud.point(i);
        for (std::size_t f = 0; f < d; ++f) {
            centroid[labels[i]][f] += p[f];
            overall[f] += p[f];
        }
        ++counts[labels[i]];
    }
    for (std::size_t f = 0; f < d; ++f) {
        centroid[0][f] /= static_cast<double>(counts[0]);
        centroid[1][f] /= static_cast<double>(counts[1]);
        overall[f] /= static_cast<double>(n);
    }

    auto sq = [d](std::span<const double> a, std::span<const double> b) {
        double ss = 0;
        for (std::size_t f = 0; f < d; ++f) {
            ss += (a[f] - b[f]) * (a[f] - b[f]);
        }
        return ss;
    };

    double within = 0, between = 0;
    double scatter[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        double s = sq(cloud.point(i), centroid[labels[i]]);
        within += s;
        scatter[labels[i]] += std::sqrt(s);
    }
    for (int c = 0; c < 2; ++c) {
        between += static_cast<double>(counts[c]) * sq(centroid[c], overall);
        scatter[c] /= static_cast<double>(counts[c]);
    }
    const double k = 2;
    q.calinski_harabasz = within == 0 ? 1.0 : (between / (k - 1)) / (within / (static_cast<double>(n) - k));

    double centroid_gap = std::sqrt(sq(centroid[0], centroid[1]));
    // With two clusters each cluster's worst partner is the other one, so both terms coincide.
    q.davies_bouldin = centroid_gap == 0 ? 0.0 : (scatter[0] + scatter[1]) / centroid_gap;

    double intra = 0, inter = 0;
    std::size_t intra_pairs = 0, inter_pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (labels[i] == labels[j]) {
                intra += cloud.distance(i, j);
                ++intra_pairs;
            } else {
                inter += cloud.distance(i, j);
                ++inter_pairs;
            }
        }
    }
    q.mean_intra_distance = intra / static_cast<double>(intra_pairs);
    q.mean_inter_distance = inter / static_cast<double>(inter_pairs);
    return q;
}

inline ClusterQuality cluster_quality(const BiasVectorSet& vectors, const Labeling& labeling) {
    return cluster_quality(PointCloud(vectors), labeling.labels);
}

}

#endif
