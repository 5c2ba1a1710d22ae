#ifndef COGBIAS_SCORING_HPP
#define COGBIAS_SCORING_HPP

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "types.hpp"

/**
 * @file scoring.hpp
 * @brief Bias scores from paired control/treatment responses.
 */

namespace cogbias {

/**
 * Normalized scale-pair score `k * (a1 - a2) / max(a1, a2)`, where `a1` is the control answer
 * and `a2` the treatment answer. Both answers at zero score 0.
 */
inline double score_scale_pair(double a1, double a2, int k) {
    if (a1 < 0 || a2 < 0) {
        throw Error("scale-pair answers must be non-negative");
    }
    if (k != 1 && k != -1) {
        throw Error("orientation k must be -1 or +1");
    }
    double top = std::max(a1, a2);
    if (top == 0) {
        return 0;
    }
    return static_cast<double>(k) * (a1 - a2) / top;
}

/**
 * Target-option rate in the treatment group minus the rate in the control group.
 * Records must all belong to one (run, bias); non-responses are ignored.
 * Throws if either condition has no answered records.
 */
inline double score_proportion(std::span<const ResponseRecord> records, std::string_view target) {
    std::size_t hits[2] = {0, 0};
    std::size_t totals[2] = {0, 0};
    for (const auto& r : records) {
        if (!r.answer_option) {
            continue;
        }
        auto side = r.condition == Condition::control ? 0 : 1;
        ++totals[side];
        if (*r.answer_option == target) {
            ++hits[side];
        }
    }
    if (totals[1] == 0) {
        throw Error("proportion score: empty treatment group");
    }
    if (totals[0] == 0) {
        throw Error("proportion score: empty control group");
    }
    return static_cast<double>(hits[1]) / static_cast<double>(totals[1]) -
           static_cast<double>(hits[0]) / static_cast<double>(totals[0]);
}

struct InstanceScore {
    std::string run_id;
    std::string bias;
    std::int64_t scenario_id = 0;
    std::int64_t instance_id = 0;
    double score = 0;

    bool operator==(const InstanceScore&) const = default;
};

/** Score of a whole (run, bias) cell, used for proportion biases. */
struct CellScore {
    std::string run_id;
    std::string bias;
    double score = 0;

    bool operator==(const CellScore&) const = default;
};

/** Accounting of what was dropped while scoring. */
struct Coverage {
    std::size_t records = 0;
    std::size_t non_responses = 0;
    std::size_t scored_instances = 0;
    std::size_t dropped_instances = 0; ///< scale-pair instances with a missing or unanswered side
    std::size_t scored_cells = 0;
    std::size_t unscored_cells = 0;    ///< proportion cells with an empty answered group

    double instance_coverage() const {
        auto total = scored_instances + dropped_instances;
        return total == 0 ? 1.0 : static_cast<double>(scored_instances) / static_cast<double>(total);
    }

    bool operator==(const Coverage&) const = default;
};

struct ScoringResult {
    std::vector<InstanceScore> instances;
    std::vector<CellScore> cells;
    Coverage coverage;
};

/**
 * Score a response log. Scale-pair instances are paired by (run, bias, scenario, instance);
 * proportion biases are scored per (run, bias) against the records' target option.
 * Unanswered records are dropped and counted, never imputed.
 */
inline ScoringResult score_responses(std::span<const ResponseRecord> records) {
    ScoringResult out;
    out.coverage.records = records.size();

    using InstanceKey = std::tuple<std::string, std::string, std::int64_t, std::int64_t>;
    std::map<InstanceKey, std::pair<const ResponseRecord*, const ResponseRecord*>> pairs;
    std::map<std::pair<std::string, std::string>, std::vector<ResponseRecord>> cells;

    for (const auto& r : records) {
        if (!r.answered()) {
            ++out.coverage.non_responses;
        }
        if (r.bias.kind == BiasKind::proportion) {
            cells[{r.run_id, r.bias.name}].push_back(r);
            continue;
        }
        auto& slot = pairs[{r.run_id, r.bias.name, r.scenario_id, r.instance_id}];
        (r.condition == Condition::control ? slot.first : slot.second) = &r;
    }

    for (const auto& [key, slot] : pairs) {
        const auto* control = slot.first;
        const auto* treatment = slot.second;
        if (!control || !treatment || !control->answer_value || !treatment->answer_value) {
            ++out.coverage.dropped_instances;
            continue;
        }
        const auto& [run, bias_name, scenario, instance] = key;
        out.instances.push_back(InstanceScore{run, bias_name, scenario, instance,
                                              score_scale_pair(*control->answer_value, *treatment->answer_value, control->k)});
        ++out.coverage.scored_instances;
    }

    for (const auto& [key, group] : cells) {
        std::optional<std::string> target;
        for (const auto& r : group) {
            if (r.target_option) {
                target = r.target_option;
                break;
            }
        }
        bool has[2] = {false, false};
        for (const auto& r : group) {
            if (r.answer_option) {
                has[r.condition == Condition::control ? 0 : 1] = true;
            }
        }
        if (!target || !has[0] || !has[1]) {
            ++out.coverage.unscored_cells;
            continue;
        }
        out.cells.push_back(CellScore{key.first, key.second, score_proportion(group, *target)});
        ++out.coverage.scored_cells;
    }
    return out;
}

namespace internal {

inline std::size_t catalog_rank(std::string_view name) {
    auto all = all_biases();
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].name == name) {
            return i;
        }
    }
    return all.size();
}

}

/**
 * Average instance scores into a matrix. Scenario-level entries are the mean of the scenario's
 * instances; bias-level entries are the mean over all of the bias's instances. Proportion-bias
 * cell scores only appear at bias level. Rows follow catalog order (scenarios ascending within
 * a bias); columns follow first appearance of each run.
 */
inline ScoreMatrix aggregate_scores(std::span<const InstanceScore> instances,
                                    Granularity granularity,
                                    std::span<const CellScore> cells = {}) {
    std::vector<std::string> cols;
    auto add_col = [&](const std::string& run) {
        if (std::find(cols.begin(), cols.end(), run) == cols.end()) {
            cols.push_back(run);
        }
    };

    // (bias rank, bias, scenario) -> run -> (sum, count)
    using RowKey = std::tuple<std::size_t, std::string, std::int64_t>;
    std::map<RowKey, std::map<std::string, std::pair<double, std::size_t>>> sums;
    for (const auto& s : instances) {
        add_col(s.run_id);
        std::int64_t scenario = granularity == Granularity::scenario_level ? s.scenario_id : 0;
        auto& cell = sums[{internal::catalog_rank(s.bias), s.bias, scenario}][s.run_id];
        cell.first += s.score;
        cell.second += 1;
    }
    if (granularity == Granularity::bias_level) {
        for (const auto& c : cells) {
            add_col(c.run_id);
            auto& cell = sums[{internal::catalog_rank(c.bias), c.bias, 0}][c.run_id];
            cell.first += c.score;
            cell.second += 1;
        }
    }

    std::vector<std::string> rows;
    std::vector<std::optional<double>> values;
    for (const auto& [key, per_run] : sums) {
        const auto& [rank, bias_name, scenario] = key;
        rows.push_back(granularity == Granularity::bias_level ? bias_name : scenario_label(bias_name, scenario));
        for (const auto& run : cols) {
            auto it = per_run.find(run);
            if (it == per_run.end()) {
                values.emplace_back(std::nullopt);
            } else {
                values.emplace_back(std::clamp(it->second.first / static_cast<double>(it->second.second), -1.0, 1.0));
            }
        }
    }
    return ScoreMatrix(granularity, std::move(rows), std::move(cols), std::move(values));
}

}

#endif
