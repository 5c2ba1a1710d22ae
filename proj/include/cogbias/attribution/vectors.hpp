#ifndef COGBIAS_ATTRIBUTION_VECTORS_HPP
#define COGBIAS_ATTRIBUTION_VECTORS_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "../types.hpp"

namespace cogbias {

struct VectorBuildResult {
    BiasVectorSet vectors;
    std::vector<std::string> dropped;  ///< features missing for some runs
    std::vector<std::string> warnings; ///< features missing for every run
};

namespace internal {

inline bool feature_applies(const std::string& label, Granularity g) {
    auto b = find_bias(feature_bias_name(label));
    if (!b || !b->in_bias_vector()) {
        return false;
    }
    if (g == Granularity::scenario_level) {
        return b->scenario_structured() && label.find('#') != std::string::npos;
    }
    return label.find('#') == std::string::npos;
}

}

/**
 * One bias vector per run (matrix column), over the matrix rows that belong in a vector of the
 * matrix's granularity: the 32 vector biases at bias level, or the scenario cells of the 30
 * scenario-structured biases at scenario level. Non-bias rows such as MMLU are ignored.
 * A feature missing for any run is dropped for all runs.
 *
 * @param runs Optional subset and order of runs; all columns when empty.
 */
inline VectorBuildResult build_bias_vectors(const ScoreMatrix& matrix, std::span<const std::string> runs = {}) {
    std::vector<std::string> cols = runs.empty() ? matrix.cols() : std::vector<std::string>(runs.begin(), runs.end());
    std::vector<std::size_t> col_idx;
    for (const auto& c : cols) {
        auto ci = matrix.col_index(c);
        if (!ci) {
            throw Error("no run '" + c + "' in score matrix");
        }
        col_idx.push_back(*ci);
    }

    VectorBuildResult out;
    out.vectors.granularity = matrix.granularity();
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < matrix.num_rows(); ++r) {
        const auto& label = matrix.rows()[r];
        if (!internal::feature_applies(label, matrix.granularity())) {
            continue;
        }
        std::size_t present = 0;
        for (auto c : col_idx) {
            present += matrix.at(r, c).has_value();
        }
        if (present == col_idx.size()) {
            keep.push_back(r);
            out.vectors.features.push_back(label);
        } else {
            out.dropped.push_back(label);
            if (present == 0) {
                out.warnings.push_back("feature '" + label + "' is missing for every run and was dropped");
            }
        }
    }

    for (std::size_t j = 0; j < cols.size(); ++j) {
        BiasVector v{cols[j], {}};
        v.scores.reserve(keep.size());
        for (auto r : keep) {
            v.scores.push_back(*matrix.at(r, col_idx[j]));
        }
        out.vectors.vectors.push_back(std::move(v));
    }
    return out;
}

/**
 * Z-score every feature across runs. Constant features become 0.
 */
inline BiasVectorSet standardize(const BiasVectorSet& set) {
    BiasVectorSet out = set;
    const auto n = set.size();
    if (n < 2) {
        return out;
    }
    for (std::size_t f = 0; f < set.dimension(); ++f) {
        double mu = 0;
        for (const auto& v : set.vectors) {
            mu += v.scores[f];
        }
        mu /= static_cast<double>(n);
        double ss = 0;
        for (const auto& v : set.vectors) {
            ss += (v.scores[f] - mu) * (v.scores[f] - mu);
        }
        double sd = std::sqrt(ss / static_cast<double>(n - 1));
        for (auto& v : out.vectors) {
            v.scores[f] = sd > 0 ? (v.scores[f] - mu) / sd : 0.0;
        }
    }
    return out;
}

}

#endif
