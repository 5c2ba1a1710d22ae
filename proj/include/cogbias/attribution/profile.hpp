#ifndef COGBIAS_ATTRIBUTION_PROFILE_HPP
#define COGBIAS_ATTRIBUTION_PROFILE_HPP

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "../types.hpp"

namespace cogbias {

/** Mean score per bias within each cluster. */
struct ClusterProfile {
    std::vector<std::string> features;
    std::vector<std::vector<std::string>> members;           ///< run_ids per cluster
    std::vector<std::vector<std::optional<double>>> means;   ///< [cluster][feature]

    bool operator==(const ClusterProfile&) const = default;
};

/**
 * For each cluster and each matrix row, the mean over the cluster's runs of the present scores.
 * `runs[i]` carries `labeling.labels[i]`. A feature with no present score in a cluster is missing.
 */
inline ClusterProfile cluster_bias_profile(const ScoreMatrix& matrix, std::span<const std::string> runs, const Labeling& labeling) {
    if (runs.size() != labeling.labels.size()) {
        throw Error("labeling length does not match the run list");
    }
    int clusters = 0;
    for (int l : labeling.labels) {
        if (l < 0) {
            throw Error("negative cluster label");
        }
        clusters = std::max(clusters, l + 1);
    }
    ClusterProfile out;
    out.features = matrix.rows();
    out.members.resize(static_cast<std::size_t>(clusters));
    std::vector<std::vector<std::size_t>> cols(static_cast<std::size_t>(clusters));
    for (std::size_t i = 0; i < runs.size(); ++i) {
        auto c = matrix.col_index(runs[i]);
        if (!c) {
            throw Error("no run '" + runs[i] + "' in score matrix");
        }
        out.members[static_cast<std::size_t>(labeling.labels[i])].push_back(runs[i]);
        cols[static_cast<std::size_t>(labeling.labels[i])].push_back(*c);
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
        std::vector<std::optional<double>> row;
        for (std::size_t r = 0; r < matrix.num_rows(); ++r) {
            double total = 0;
            std::size_t count = 0;
            for (auto c : cols[k]) {
                if (auto v = matrix.at(r, c)) {
                    total += *v;
                    ++count;
                }
            }
            row.push_back(count ? std::optional<double>(total / static_cast<double>(count)) : std::nullopt);
        }
        out.means.push_back(std::move(row));
    }
    return out;
}

}

#endif
