#ifndef COGBIAS_RANDOMNESS_HPP
#define COGBIAS_RANDOMNESS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stats.hpp"
#include "types.hpp"

/**
 * @file randomness.hpp
 * @brief Seed-induced variability of bias scores and agreement of seed aggregates with the original finetune.
 */

namespace cogbias {

/** Standard deviation of one bias across K seeded replicas (Bessel-corrected, K >= 2). */
inline double seed_std(std::span<const double> scores) {
    if (scores.size() < 2) {
        throw Error("seed_std needs at least 2 seeds, got " + std::to_string(scores.size()));
    }
    return stats::sample_std(scores);
}

/** Neutral band half-width for `n` samples per group; 0.088 at n = 1000. */
inline SignificanceThreshold neutrality_threshold(double n, double sigma = 1.0, double p = 0.05) {
    return SignificanceThreshold::derive(n, sigma, p);
}

struct MajorityResult {
    Direction direction = Direction::neutral;
    bool tie = false;
    std::array<std::size_t, 3> counts{}; ///< negative, neutral, positive

    bool operator==(const MajorityResult&) const = default;
};

/**
 * Most frequent direction among seed scores. When the top count is shared by
 * several directions the result is neutral with `tie` set.
 */
inline MajorityResult majority_direction(std::span<const double> scores, double threshold) {
    if (scores.empty()) {
        throw Error("majority_direction needs at least one score");
    }
    MajorityResult out;
    for (double s : scores) {
        out.counts[static_cast<std::size_t>(static_cast<int>(categorize(s, threshold)) + 1)] += 1;
    }
    auto top = *std::max_element(out.counts.begin(), out.counts.end());
    auto winners = std::count(out.counts.begin(), out.counts.end(), top);
    if (winners > 1) {
        out.tie = true;
        out.direction = Direction::neutral;
        return out;
    }
    auto idx = std::max_element(out.counts.begin(), out.counts.end()) - out.counts.begin();
    out.direction = static_cast<Direction>(static_cast<int>(idx) - 1);
    return out;
}

/**
 * K seeded replicas of one (pretrain, instruction) cell, optionally with the original full finetune.
 */
struct SeedGroup {
    std::string pretrain_id;
    std::string instruction_id;
    std::vector<std::string> members;
    std::optional<std::string> reference;

    std::string name() const { return pretrain_id + "-" + instruction_id; }

    bool operator==(const SeedGroup&) const = default;
};

/** Seed groups of a roster, in order of first appearance. Groups with fewer than 2 members are skipped. */
inline std::vector<SeedGroup> seed_groups(std::span<const ModelRun> roster) {
    std::vector<SeedGroup> groups;
    auto find_group = [&](const ModelRun& r) -> SeedGroup& {
        for (auto& g : groups) {
            if (g.pretrain_id == r.pretrain_id && g.instruction_id == r.instruction_id) {
                return g;
            }
        }
        groups.push_back(SeedGroup{r.pretrain_id, r.instruction_id, {}, std::nullopt});
        return groups.back();
    };
    for (const auto& r : roster) {
        if (r.origin == Origin::seeded_replica) {
            find_group(r).members.push_back(r.run_id);
        }
    }
    for (const auto& r : roster) {
        if (r.origin != Origin::original_full_finetune) {
            continue;
        }
        for (auto& g : groups) {
            if (g.pretrain_id == r.pretrain_id && g.instruction_id == r.instruction_id) {
                g.reference = r.run_id;
            }
        }
    }
    std::erase_if(groups, [](const SeedGroup& g) { return g.members.size() < 2; });
    return groups;
}

/**
 * Per-bias sample size used for thresholds. Biases without an entry use `default_n`.
 */
struct ThresholdPolicy {
    double default_n = 1000;
    double sigma = 1.0;
    double p = 0.05;
    std::map<std::string, double> per_bias_n;

    double n_for(const std::string& bias_name) const {
        auto it = per_bias_n.find(bias_name);
        return it == per_bias_n.end() ? default_n : it->second;
    }

    SignificanceThreshold for_bias(const std::string& bias_name) const {
        return neutrality_threshold(n_for(bias_name), sigma, p);
    }

    bool operator==(const ThresholdPolicy&) const = default;
};

/** Which biases the summary percentages are taken over. */
enum class PercentScope {
    scenario_structured, ///< the 30 scale-pair biases
    all                  ///< every bias row in the table
};

inline std::string_view to_string(PercentScope s) {
    return s == PercentScope::all ? "all" : "scenario-structured";
}

inline PercentScope percent_scope_from_string(std::string_view s) {
    if (s == "all") {
        return PercentScope::all;
    }
    if (s == "scenario-structured") {
        return PercentScope::scenario_structured;
    }
    throw Error("unknown percent scope '" + std::string(s) + "'");
}

struct AgreementRow {
    std::string bias;
    std::vector<double> seeds;
    double mean = 0;
    double median = 0;
    double std = 0;
    double threshold = 0;
    std::optional<double> reference;
    Direction majority = Direction::neutral;
    bool tie = false;
    bool majority_agree = false;
    bool agg_similar = false;

    bool operator==(const AgreementRow&) const = default;
};

struct AgreementSummary {
    double avg_diff_mean = 0;   ///< mean |seed mean - reference| over all rows
    double avg_diff_median = 0; ///< mean |seed median - reference| over all rows
    PercentScope scope = PercentScope::scenario_structured;
    std::size_t scope_count = 0;
    double majority_pct = 0;
    double agg_pct = 0;
    std::size_t all_count = 0;
    double majority_pct_all = 0;
    double agg_pct_all = 0;

    bool operator==(const AgreementSummary&) const = default;
};

/** Table of per-bias seed statistics for one group. `summary` is present when the group has a reference. */
struct GroupTable {
    SeedGroup group;
    std::vector<AgreementRow> rows;
    std::optional<AgreementSummary> summary;
    std::optional<double> correlation; ///< Pearson(reference, seed mean) over the rows

    bool operator==(const GroupTable&) const = default;
};

namespace internal {

inline std::vector<std::string> bias_rows(const ScoreMatrix& matrix) {
    std::vector<std::string> out;
    for (const auto& label : matrix.rows()) {
        auto b = find_bias(label);
        if (b && b->in_bias_vector()) {
            out.push_back(label);
        }
    }
    return out;
}

inline std::vector<double> present_values(const ScoreMatrix& matrix, const std::string& row, std::span<const std::string> runs) {
    std::vector<double> out;
    for (const auto& run : runs) {
        auto v = matrix.at(row, run);
        if (!v) {
            throw Error("missing score for '" + row + "' in run '" + run + "'");
        }
        out.push_back(*v);
    }
    return out;
}

}

/**
 * Per-bias seed statistics of a group over the vector biases present in `matrix`.
 * Every row carries mean, median, std and majority direction; agreement flags need a reference.
 */
inline GroupTable seed_table(const SeedGroup& group, const ScoreMatrix& matrix, const ThresholdPolicy& thresholds) {
    if (group.members.size() < 2) {
        throw Error("seed group '" + group.name() + "' needs at least 2 members");
    }
    GroupTable table{group, {}, std::nullopt, std::nullopt};
    for (const auto& label : internal::bias_rows(matrix)) {
        AgreementRow row;
        row.bias = bias(label).name;
        row.seeds = internal::present_values(matrix, label, group.members);
        row.mean = stats::mean(row.seeds);
        row.median = stats::median(row.seeds);
        row.std = seed_std(row.seeds);
        row.threshold = thresholds.for_bias(row.bias).threshold;
        auto maj = majority_direction(row.seeds, row.threshold);
        row.majority = maj.direction;
        row.tie = maj.tie;
        if (group.reference) {
            auto ref = matrix.at(label, *group.reference);
            if (!ref) {
                throw Error("missing reference score for '" + label + "'");
            }
            row.reference = *ref;
            row.majority_agree = !maj.tie && maj.direction == categorize(*ref, row.threshold);
            row.agg_similar = row.majority_agree || std::abs(row.mean - *ref) < row.threshold ||
                              std::abs(row.median - *ref) < row.threshold;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

/**
 * Agreement of the seed aggregates with the original finetune.
 * Majority agreement: the seeds' majority direction (untied) equals the reference's direction.
 * Aggregate similarity: majority agreement, or the seed mean or median lies within the threshold of the reference.
 * Throws if the group has no reference run.
 */
inline GroupTable aggregate_agreement(const SeedGroup& group,
                                      const ScoreMatrix& matrix,
                                      const ThresholdPolicy& thresholds,
                                      PercentScope scope = PercentScope::scenario_structured) {
    if (!group.reference) {
        throw Error("seed group '" + group.name() + "' has no reference run");
    }
    auto table = seed_table(group, matrix, thresholds);
    if (table.rows.empty()) {
        throw Error("no bias rows to compare for group '" + group.name() + "'");
    }

    AgreementSummary s;
    s.scope = scope;
    std::size_t maj_scope = 0, agg_scope = 0, maj_all = 0, agg_all = 0;
    std::vector<double> refs, means;
    for (const auto& row : table.rows) {
        s.avg_diff_mean += std::abs(row.mean - *row.reference);
        s.avg_diff_median += std::abs(row.median - *row.reference);
        refs.push_back(*row.reference);
        means.push_back(row.mean);

        ++s.all_count;
        maj_all += row.majority_agree;
        agg_all += row.agg_similar;
        if (scope == PercentScope::all || bias(row.bias).scenario_structured()) {
            ++s.scope_count;
            maj_scope += row.majority_agree;
            agg_scope += row.agg_similar;
        }
    }
    auto n = static_cast<double>(table.rows.size());
    s.avg_diff_mean /= n;
    s.avg_diff_median /= n;
    auto pct = [](std::size_t k, std::size_t total) {
        return total == 0 ? 0.0 : 100.0 * static_cast<double>(k) / static_cast<double>(total);
    };
    s.majority_pct = pct(maj_scope, s.scope_count);
    s.agg_pct = pct(agg_scope, s.scope_count);
    s.majority_pct_all = pct(maj_all, s.all_count);
    s.agg_pct_all = pct(agg_all, s.all_count);
    table.summary = s;
    if (refs.size() >= 3) {
        try {
            table.correlation = stats::pearson(refs, means);
        } catch (const Error&) {
            table.correlation = std::nullopt;
        }
    }
    return table;
}

/** Pearson correlation between the original model's scores and the seed-mean scores. */
inline double seed_mean_correlation(std::span<const double> reference, std::span<const double> seed_means) {
    return stats::pearson(reference, seed_means);
}

/** Mean of per-metric seed standard deviations for one seed group and one metric group. */
struct VariabilityRow {
    std::string group;
    std::string metric_group;
    std::size_t metrics = 0;
    double mean_std = 0;

    bool operator==(const VariabilityRow&) const = default;
};

/**
 * Metric group of a feature row: "biases" for vector biases, otherwise the text before ':'
 * ("MMLU:anatomy" -> "MMLU"), or the whole label.
 */
inline std::string metric_group_of(const std::string& label) {
    auto b = find_bias(label);
    if (b && b->in_bias_vector()) {
        return "biases";
    }
    auto colon = label.find(':');
    return colon == std::string::npos ? label : label.substr(0, colon);
}

/**
 * For every seed group and metric group, the mean over metrics of the per-metric seed std.
 * Metric groups come out with "biases" first, then the rest in first-seen row order.
 */
inline std::vector<VariabilityRow> variability_comparison(const ScoreMatrix& matrix, std::span<const SeedGroup> groups) {
    std::vector<std::string> group_names;
    std::map<std::string, std::vector<std::string>> members;
    for (const auto& label : matrix.rows()) {
        if (find_bias(label) && !find_bias(label)->in_bias_vector()) {
            continue;
        }
        auto g = metric_group_of(label);
        if (!members.count(g)) {
            group_names.push_back(g);
        }
        members[g].push_back(label);
    }
    std::stable_partition(group_names.begin(), group_names.end(), [](const std::string& g) { return g == "biases"; });

    std::vector<VariabilityRow> out;
    for (const auto& group : groups) {
        for (const auto& g : group_names) {
            VariabilityRow row{group.name(), g, 0, 0};
            for (const auto& label : members[g]) {
                auto values = internal::present_values(matrix, label, group.members);
                row.mean_std += seed_std(values);
                ++row.metrics;
            }
            row.mean_std /= static_cast<double>(row.metrics);
            out.push_back(row);
        }
    }
    return out;
}

/**
 * Step-1 results for a study.
 */
struct RandomnessReport {
    std::vector<GroupTable> groups;
    std::vector<VariabilityRow> variability;

    bool operator==(const RandomnessReport&) const = default;
};

inline RandomnessReport randomness_report(const ScoreMatrix& matrix,
                                          std::span<const ModelRun> roster,
                                          const ThresholdPolicy& thresholds,
                                          PercentScope scope = PercentScope::scenario_structured) {
    RandomnessReport report;
    auto groups = seed_groups(roster);
    for (const auto& g : groups) {
        report.groups.push_back(g.reference ? aggregate_agreement(g, matrix, thresholds, scope) : seed_table(g, matrix, thresholds));
    }
    report.variability = variability_comparison(matrix, groups);
    return report;
}

}

#endif
