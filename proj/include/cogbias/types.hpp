#ifndef COGBIAS_TYPES_HPP
#define COGBIAS_TYPES_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "catalog.hpp"
#include "error.hpp"

/**
 * @file types.hpp
 * @brief Domain types shared by every analysis stage.
 */

namespace cogbias {

/**
 * Where an evaluated model came from.
 */
enum class Origin {
    seeded_replica,         ///< one of K finetunes that differ only by random seed
    original_full_finetune, ///< the publicly released finetune of the same backbone/data
    external                ///< anything else, e.g. community finetunes
};

inline std::string_view to_string(Origin o) {
    switch (o) {
    case Origin::seeded_replica:
        return "seeded-replica";
    case Origin::original_full_finetune:
        return "original-full-finetune";
    case Origin::external:
        return "external";
    }
    return "external";
}

inline Origin origin_from_string(std::string_view s) {
    if (s == "seeded-replica") {
        return Origin::seeded_replica;
    }
    if (s == "original-full-finetune") {
        return Origin::original_full_finetune;
    }
    if (s == "external") {
        return Origin::external;
    }
    throw Error("unknown origin '" + std::string(s) + "'");
}

/**
 * Identity of one evaluated model. `run_id` is the join key across every file.
 */
struct ModelRun {
    std::string run_id;
    std::string pretrain_id;
    std::string instruction_id;
    std::optional<std::uint32_t> seed;
    Origin origin = Origin::external;

    bool operator==(const ModelRun&) const = default;
};

/**
 * Derive a run from the naming convention `<pretrain>-<instruction>-s<seed>` (seeded replica)
 * or `<pretrain>-<instruction>-org` (original full finetune).
 * Anything else is an external run whose pretrain id is the first '-'-separated token
 * and whose instruction id is the remainder.
 */
inline ModelRun parse_run_id(std::string_view id) {
    if (id.empty()) {
        throw Error("empty run_id");
    }
    ModelRun run;
    run.run_id = std::string(id);

    auto first = id.find('-');
    auto last = id.rfind('-');
    if (first == std::string_view::npos) {
        run.pretrain_id = std::string(id);
        return run;
    }
    run.pretrain_id = std::string(id.substr(0, first));

    if (last != first) {
        auto tail = id.substr(last + 1);
        auto middle = id.substr(first + 1, last - first - 1);
        if (tail == "org") {
            run.instruction_id = std::string(middle);
            run.origin = Origin::original_full_finetune;
            return run;
        }
        if (tail.size() > 1 && tail[0] == 's') {
            std::uint32_t seed = 0;
            auto digits = tail.substr(1);
            auto res = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
            if (res.ec == std::errc() && res.ptr == digits.data() + digits.size()) {
                run.instruction_id = std::string(middle);
                run.seed = seed;
                run.origin = Origin::seeded_replica;
                return run;
            }
        }
    }
    run.instruction_id = std::string(id.substr(first + 1));
    return run;
}

/** Answer scale of a scale-pair record; `target_choice` marks proportion-bias records. */
enum class ScaleKind { likert7, percent11, target_choice };

inline std::string_view to_string(ScaleKind s) {
    switch (s) {
    case ScaleKind::likert7:
        return "likert7";
    case ScaleKind::percent11:
        return "percent11";
    case ScaleKind::target_choice:
        return "target-choice";
    }
    return "target-choice";
}

inline std::optional<ScaleKind> scale_from_string(std::string_view s) {
    if (s == "likert7") {
        return ScaleKind::likert7;
    }
    if (s == "percent11") {
        return ScaleKind::percent11;
    }
    if (s == "target-choice") {
        return ScaleKind::target_choice;
    }
    return std::nullopt;
}

/** Whether `value` lies on the grid of `scale`: 1..7 for likert7, 0..100 step 10 for percent11. */
inline bool on_grid(ScaleKind scale, double value) {
    if (std::floor(value) != value) {
        return false;
    }
    switch (scale) {
    case ScaleKind::likert7:
        return value >= 1 && value <= 7;
    case ScaleKind::percent11:
        return value >= 0 && value <= 100 && std::fmod(value, 10.0) == 0;
    case ScaleKind::target_choice:
        return false;
    }
    return false;
}

enum class Condition { control, treatment };

inline std::string_view to_string(Condition c) {
    return c == Condition::control ? "control" : "treatment";
}

inline std::optional<Condition> condition_from_string(std::string_view s) {
    if (s == "control") {
        return Condition::control;
    }
    if (s == "treatment") {
        return Condition::treatment;
    }
    return std::nullopt;
}

/**
 * One model answer to one prompt condition of one test instance.
 * A record with neither `answer_value` nor `answer_option` is a non-response.
 */
struct ResponseRecord {
    std::string run_id;
    BiasId bias;
    std::int64_t scenario_id = 0;
    std::int64_t instance_id = 0;
    Condition condition = Condition::control;
    ScaleKind scale = ScaleKind::likert7;
    std::optional<double> answer_value;
    std::optional<std::string> answer_option;
    int k = 1;
    std::optional<std::string> target_option;

    bool answered() const { return answer_value.has_value() || answer_option.has_value(); }

    bool operator==(const ResponseRecord&) const = default;
};

enum class Granularity { bias_level, scenario_level };

inline std::string_view to_string(Granularity g) {
    return g == Granularity::bias_level ? "bias-level" : "scenario-level";
}

inline Granularity granularity_from_string(std::string_view s) {
    if (s == "bias-level") {
        return Granularity::bias_level;
    }
    if (s == "scenario-level") {
        return Granularity::scenario_level;
    }
    throw Error("unknown granularity '" + std::string(s) + "'");
}

/** Row label of a scenario-level feature, e.g. "Anchoring#17". */
inline std::string scenario_label(std::string_view bias_name, std::int64_t scenario_id) {
    return std::string(bias_name) + "#" + std::to_string(scenario_id);
}

/** Bias name part of a feature label ("Anchoring#17" -> "Anchoring", "Anchoring" -> "Anchoring"). */
inline std::string_view feature_bias_name(std::string_view label) {
    auto hash = label.rfind('#');
    return hash == std::string_view::npos ? label : label.substr(0, hash);
}

/**
 * Features x runs matrix of bias scores. Every present value lies in [-1, 1];
 * missing entries are explicit. Immutable once built.
 */
class ScoreMatrix {
public:
    ScoreMatrix() = default;

    /**
     * @param values Row-major, `rows.size() * cols.size()` entries.
     * Throws on shape mismatch, duplicate labels or out-of-range values.
     */
    ScoreMatrix(Granularity granularity,
                std::vector<std::string> rows,
                std::vector<std::string> cols,
                std::vector<std::optional<double>> values)
        : granularity_(granularity), rows_(std::move(rows)), cols_(std::move(cols)) {
        if (values.size() != rows_.size() * cols_.size()) {
            throw Error("score matrix shape mismatch");
        }
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (!row_index_.emplace(rows_[r], r).second) {
                throw Error("duplicate feature label '" + rows_[r] + "'");
            }
        }
        for (std::size_t c = 0; c < cols_.size(); ++c) {
            if (!col_index_.emplace(cols_[c], c).second) {
                throw Error("duplicate run_id '" + cols_[c] + "'");
            }
        }
        values_.resize(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i]) {
                double v = *values[i];
                if (!(v >= -1.0 && v <= 1.0)) {
                    throw Error("score " + std::to_string(v) + " outside [-1, 1] for feature '" +
                                rows_[i / cols_.size()] + "', run '" + cols_[i % cols_.size()] + "'");
                }
                values_[i] = v;
            } else {
                values_[i] = missing();
            }
        }
    }

    Granularity granularity() const { return granularity_; }
    const std::vector<std::string>& rows() const { return rows_; }
    const std::vector<std::string>& cols() const { return cols_; }
    std::size_t num_rows() const { return rows_.size(); }
    std::size_t num_cols() const { return cols_.size(); }

    std::optional<double> at(std::size_t r, std::size_t c) const {
        double v = values_[r * cols_.size() + c];
        if (std::isnan(v)) {
            return std::nullopt;
        }
        return v;
    }

    std::optional<double> at(std::string_view row, std::string_view col) const {
        auto r = row_index(row);
        auto c = col_index(col);
        if (!r || !c) {
            return std::nullopt;
        }
        return at(*r, *c);
    }

    std::optional<std::size_t> row_index(std::string_view label) const {
        auto it = row_index_.find(std::string(label));
        return it == row_index_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
    }

    std::optional<std::size_t> col_index(std::string_view run_id) const {
        auto it = col_index_.find(std::string(run_id));
        return it == col_index_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
    }

    /** Present values of one row, across all runs, in column order. */
    std::vector<std::optional<double>> row(std::size_t r) const {
        std::vector<std::optional<double>> out;
        out.reserve(cols_.size());
        for (std::size_t c = 0; c < cols_.size(); ++c) {
            out.push_back(at(r, c));
        }
        return out;
    }

    /** Sub-matrix keeping the given rows and columns in the given order. */
    ScoreMatrix select(std::span<const std::string> rows, std::span<const std::string> cols) const {
        std::vector<std::optional<double>> vals;
        vals.reserve(rows.size() * cols.size());
        for (const auto& r : rows) {
            auto ri = row_index(r);
            if (!ri) {
                throw Error("no feature '" + r + "' in score matrix");
            }
            for (const auto& c : cols) {
                auto ci = col_index(c);
                if (!ci) {
                    throw Error("no run '" + c + "' in score matrix");
                }
                vals.push_back(at(*ri, *ci));
            }
        }
        return ScoreMatrix(granularity_, {rows.begin(), rows.end()}, {cols.begin(), cols.end()}, std::move(vals));
    }

    /**
     * Side-by-side concatenation. Rows are the union in first-seen order;
     * entries absent from one side are missing.
     */
    ScoreMatrix concat_columns(const ScoreMatrix& other) const {
        if (other.granularity_ != granularity_) {
            throw Error("cannot concatenate matrices of different granularity");
        }
        std::vector<std::string> rows = rows_;
        for (const auto& r : other.rows_) {
            if (!row_index(r)) {
                rows.push_back(r);
            }
        }
        std::vector<std::string> cols = cols_;
        cols.insert(cols.end(), other.cols_.begin(), other.cols_.end());
        std::vector<std::optional<double>> vals;
        vals.reserve(rows.size() * cols.size());
        for (const auto& r : rows) {
            for (const auto& c : cols_) {
                vals.push_back(at(r, c));
            }
            for (const auto& c : other.cols_) {
                vals.push_back(other.at(r, c));
            }
        }
        return ScoreMatrix(granularity_, std::move(rows), std::move(cols), std::move(vals));
    }

    bool operator==(const ScoreMatrix& other) const {
        if (granularity_ != other.granularity_ || rows_ != other.rows_ || cols_ != other.cols_) {
            return false;
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            bool a = std::isnan(values_[i]), b = std::isnan(other.values_[i]);
            if (a != b || (!a && values_[i] != other.values_[i])) {
                return false;
            }
        }
        return true;
    }

private:
    static double missing() { return std::numeric_limits<double>::quiet_NaN(); }

    Granularity granularity_ = Granularity::bias_level;
    std::vector<std::string> rows_;
    std::vector<std::string> cols_;
    std::vector<double> values_;
    std::unordered_map<std::string, std::size_t> row_index_;
    std::unordered_map<std::string, std::size_t> col_index_;
};

/** One model's bias fingerprint. The feature labels live in the owning `BiasVectorSet`. */
struct BiasVector {
    std::string run_id;
    std::vector<double> scores;

    bool operator==(const BiasVector&) const = default;
};

/**
 * Bias vectors that share one feature order.
 */
struct BiasVectorSet {
    Granularity granularity = Granularity::bias_level;
    std::vector<std::string> features;
    std::vector<BiasVector> vectors;

    std::size_t size() const { return vectors.size(); }
    std::size_t dimension() const { return features.size(); }
    std::span<const double> point(std::size_t i) const { return vectors[i].scores; }

    std::vector<std::string> run_ids() const {
        std::vector<std::string> out;
        for (const auto& v : vectors) {
            out.push_back(v.run_id);
        }
        return out;
    }

    bool operator==(const BiasVectorSet&) const = default;
};

/**
 * Bound below which a bias score is indistinguishable from zero, from a two-sample test
 * with `n` values per group and maximum standard deviation `sigma`.
 */
struct SignificanceThreshold {
    double n = 1000;
    double sigma = 1.0;
    double p = 0.05;
    double threshold = 0;

    /** threshold = z(1 - p/2) * sqrt(2 sigma^2 / n). */
    static SignificanceThreshold derive(double n, double sigma = 1.0, double p = 0.05) {
        if (!(n >= 2)) {
            throw Error("significance threshold needs n >= 2");
        }
        if (!(sigma > 0)) {
            throw Error("significance threshold needs sigma > 0");
        }
        if (!(p > 0 && p < 1)) {
            throw Error("significance level p must lie in (0, 1)");
        }
        boost::math::normal_distribution<double> standard;
        double z = boost::math::quantile(standard, 1.0 - p / 2.0);
        return SignificanceThreshold{n, sigma, p, z * std::sqrt(2.0 * sigma * sigma / n)};
    }

    bool operator==(const SignificanceThreshold&) const = default;
};

enum class Direction { negative = -1, neutral = 0, positive = 1 };

inline std::string_view to_string(Direction d) {
    switch (d) {
    case Direction::negative:
        return "negative";
    case Direction::neutral:
        return "neutral";
    case Direction::positive:
        return "positive";
    }
    return "neutral";
}

inline Direction direction_from_string(std::string_view s) {
    if (s == "negative") {
        return Direction::negative;
    }
    if (s == "positive") {
        return Direction::positive;
    }
    if (s == "neutral") {
        return Direction::neutral;
    }
    throw Error("unknown direction '" + std::string(s) + "'");
}

inline Direction categorize(double score, double threshold) {
    if (score > threshold) {
        return Direction::positive;
    }
    if (score < -threshold) {
        return Direction::negative;
    }
    return Direction::neutral;
}

inline Direction mirror(Direction d) {
    return static_cast<Direction>(-static_cast<int>(d));
}

enum class LabelScheme { pretraining, instruction, random, kmeans };

inline std::string_view to_string(LabelScheme s) {
    switch (s) {
    case LabelScheme::pretraining:
        return "pretraining";
    case LabelScheme::instruction:
        return "instruction";
    case LabelScheme::random:
        return "random";
    case LabelScheme::kmeans:
        return "kmeans";
    }
    return "random";
}

inline LabelScheme label_scheme_from_string(std::string_view s) {
    for (auto v : {LabelScheme::pretraining, LabelScheme::instruction, LabelScheme::random, LabelScheme::kmeans}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    throw Error("unknown labeling scheme '" + std::string(s) + "'");
}

/**
 * Two-way cluster assignment, aligned with the vectors of a `BiasVectorSet`.
 */
struct Labeling {
    LabelScheme scheme = LabelScheme::random;
    std::vector<int> labels;

    std::size_t count(int cluster) const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), cluster));
    }

    bool operator==(const Labeling&) const = default;
};

/** Roster lookup by run_id. */
inline const ModelRun* find_run(std::span<const ModelRun> roster, std::string_view run_id) {
    auto it = std::find_if(roster.begin(), roster.end(), [&](const ModelRun& r) { return r.run_id == run_id; });
    return it == roster.end() ? nullptr : &*it;
}

/**
 * Label each vector by the pretraining or instruction identity of its run.
 * The identity of the first vector becomes cluster 0; exactly two distinct identities are required.
 */
inline Labeling label_by(const BiasVectorSet& set, std::span<const ModelRun> roster, LabelScheme scheme) {
    if (scheme != LabelScheme::pretraining && scheme != LabelScheme::instruction) {
        throw Error("label_by supports pretraining and instruction schemes only");
    }
    Labeling out{scheme, {}};
    std::vector<std::string> seen;
    for (const auto& v : set.vectors) {
        const ModelRun* run = find_run(roster, v.run_id);
        ModelRun parsed;
        if (!run) {
            parsed = parse_run_id(v.run_id);
            run = &parsed;
        }
        const auto& key = scheme == LabelScheme::pretraining ? run->pretrain_id : run->instruction_id;
        auto it = std::find(seen.begin(), seen.end(), key);
        if (it == seen.end()) {
            seen.push_back(key);
            it = seen.end() - 1;
        }
        out.labels.push_back(static_cast<int>(it - seen.begin()));
    }
    if (seen.size() != 2) {
        throw Error("labeling by " + std::string(to_string(scheme)) + " yields " + std::to_string(seen.size()) +
                    " groups; exactly 2 are required");
    }
    return out;
}

}

#endif
