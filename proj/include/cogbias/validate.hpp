#ifndef COGBIAS_VALIDATE_HPP
#define COGBIAS_VALIDATE_HPP

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "types.hpp"

/**
 * @file validate.hpp
 * @brief Report-only integrity checks over a roster and a response log.
 */

namespace cogbias {

enum class IssueKind {
    duplicate_run_id,
    run_origin_mismatch,
    unknown_run,
    unpaired_instance,
    pair_mismatch,
    off_grid_value,
    missing_target_option,
    bad_orientation,
    empty_condition_group
};

inline std::string_view to_string(IssueKind k) {
    switch (k) {
    case IssueKind::duplicate_run_id:
        return "duplicate run_id";
    case IssueKind::run_origin_mismatch:
        return "seed/origin mismatch";
    case IssueKind::unknown_run:
        return "unknown run";
    case IssueKind::unpaired_instance:
        return "unpaired instance";
    case IssueKind::pair_mismatch:
        return "control/treatment mismatch";
    case IssueKind::off_grid_value:
        return "off-grid value";
    case IssueKind::missing_target_option:
        return "missing target_option";
    case IssueKind::bad_orientation:
        return "bad orientation";
    case IssueKind::empty_condition_group:
        return "empty condition group";
    }
    return "issue";
}

struct ValidationIssue {
    IssueKind kind;
    std::string message;

    auto operator<=>(const ValidationIssue&) const = default;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const { return issues.empty(); }
    std::size_t count(IssueKind kind) const {
        return static_cast<std::size_t>(
            std::count_if(issues.begin(), issues.end(), [&](const ValidationIssue& i) { return i.kind == kind; }));
    }

    bool operator==(const ValidationReport&) const = default;
};

/**
 * Check a study for structural defects. Never throws on bad data; every defect becomes an issue.
 * Issues come back sorted and de-duplicated, so the result does not depend on record order
 * and validating the same input twice gives the same report.
 * An empty roster disables the unknown-run check.
 */
inline ValidationReport validate_study(std::span<const ModelRun> runs, std::span<const ResponseRecord> records) {
    std::set<ValidationIssue> issues;

    std::set<std::string> roster;
    for (const auto& run : runs) {
        if (!roster.insert(run.run_id).second) {
            issues.insert({IssueKind::duplicate_run_id, "duplicate run_id '" + run.run_id + "'"});
        }
        if (run.origin == Origin::seeded_replica && !run.seed) {
            issues.insert({IssueKind::run_origin_mismatch, "seeded-replica run '" + run.run_id + "' has no seed"});
        }
        if (run.origin == Origin::original_full_finetune && run.seed) {
            issues.insert({IssueKind::run_origin_mismatch, "original-full-finetune run '" + run.run_id + "' carries a seed"});
        }
    }

    using InstanceKey = std::tuple<std::string, std::string, std::int64_t, std::int64_t>;
    struct Sides {
        const ResponseRecord* control = nullptr;
        const ResponseRecord* treatment = nullptr;
    };
    std::map<InstanceKey, Sides> pairs;
    std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> proportion_groups;

    auto where = [](const ResponseRecord& r) {
        return "(run '" + r.run_id + "', bias '" + r.bias.name + "', scenario " + std::to_string(r.scenario_id) +
               ", instance " + std::to_string(r.instance_id) + ")";
    };

    for (const auto& r : records) {
        if (!roster.empty() && !roster.count(r.run_id)) {
            issues.insert({IssueKind::unknown_run, "record references unknown run '" + r.run_id + "'"});
        }
        if (r.k != 1 && r.k != -1) {
            issues.insert({IssueKind::bad_orientation, "orientation k=" + std::to_string(r.k) + " not in {-1, +1} at " + where(r)});
        }

        if (r.bias.kind == BiasKind::proportion) {
            if (!r.target_option) {
                issues.insert({IssueKind::missing_target_option, "proportion-bias record without target_option at " + where(r)});
            }
            auto& g = proportion_groups[{r.run_id, r.bias.name}];
            (r.condition == Condition::control ? g.first : g.second) += 1;
            continue;
        }

        if (r.answer_value && !on_grid(r.scale, *r.answer_value)) {
            issues.insert({IssueKind::off_grid_value, "off-grid value " + std::to_string(*r.answer_value) + " on " +
                                                          std::string(to_string(r.scale)) + " at " + where(r)});
        }
        auto& sides = pairs[{r.run_id, r.bias.name, r.scenario_id, r.instance_id}];
        (r.condition == Condition::control ? sides.control : sides.treatment) = &r;
    }

    for (const auto& [key, sides] : pairs) {
        if (!sides.control || !sides.treatment) {
            const auto* present = sides.control ? sides.control : sides.treatment;
            issues.insert({IssueKind::unpaired_instance, "unpaired instance " + where(*present) + ": no " +
                                                             (sides.control ? "treatment" : "control") + " partner"});
            continue;
        }
        if (sides.control->scale != sides.treatment->scale || sides.control->k != sides.treatment->k) {
            issues.insert({IssueKind::pair_mismatch, "control and treatment disagree on scale or k at " + where(*sides.control)});
        }
    }

    for (const auto& [key, counts] : proportion_groups) {
        if (counts.first == 0 || counts.second == 0) {
            issues.insert({IssueKind::empty_condition_group, "run '" + key.first + "', bias '" + key.second + "' has no " +
                                                                 (counts.first == 0 ? "control" : "treatment") + " records"});
        }
    }

    return ValidationReport{{issues.begin(), issues.end()}};
}

}

#endif
