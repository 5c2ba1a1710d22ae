#ifndef COGBIAS_CATALOG_HPP
#define COGBIAS_CATALOG_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

/**
 * @file catalog.hpp
 * @brief The fixed set of cognitive biases understood by the library.
 */

namespace cogbias {

/**
 * How a bias is scored from control/treatment responses.
 * `scale_pair` biases compare paired answers on a numeric grid;
 * `proportion` biases compare target-option selection rates between the two groups.
 */
enum class BiasKind { scale_pair, proportion };

/**
 * A bias from the catalog. Only constructible through `find_bias()` / `bias()`.
 */
struct BiasId {
    std::string name;
    BiasKind kind = BiasKind::scale_pair;

    /** Whether the bias has the 200-scenario structure used for scenario-level vectors. */
    bool scenario_structured() const { return kind == BiasKind::scale_pair; }

    /** Belief Invalid is scorable but not part of the 32-feature vectors. */
    bool in_bias_vector() const { return name != "Belief Invalid"; }

    bool operator==(const BiasId&) const = default;
};

namespace internal {

struct CatalogEntry {
    std::string_view name;
    BiasKind kind;
};

inline constexpr std::array<CatalogEntry, 33> catalog_entries{{
    {"Anchoring", BiasKind::scale_pair},
    {"Anthropomorphism", BiasKind::scale_pair},
    {"Availability Heuristic", BiasKind::scale_pair},
    {"Bandwagon Effect", BiasKind::scale_pair},
    {"Confirmation Bias", BiasKind::scale_pair},
    {"Conservatism", BiasKind::scale_pair},
    {"Disposition Effect", BiasKind::scale_pair},
    {"Endowment Effect", BiasKind::scale_pair},
    {"Escalation of Commitment", BiasKind::scale_pair},
    {"Framing Effect", BiasKind::scale_pair},
    {"Fundamental Attribution Error", BiasKind::scale_pair},
    {"Halo Effect", BiasKind::scale_pair},
    {"Hindsight Bias", BiasKind::scale_pair},
    {"Hyperbolic Discounting", BiasKind::scale_pair},
    {"Illusion of Control", BiasKind::scale_pair},
    {"In-Group Bias", BiasKind::scale_pair},
    {"Information Bias", BiasKind::scale_pair},
    {"Loss Aversion", BiasKind::scale_pair},
    {"Mental Accounting", BiasKind::scale_pair},
    {"Negativity Bias", BiasKind::scale_pair},
    {"Not Invented Here", BiasKind::scale_pair},
    {"Optimism Bias", BiasKind::scale_pair},
    {"Planning Fallacy", BiasKind::scale_pair},
    {"Reactance", BiasKind::scale_pair},
    {"Risk Compensation", BiasKind::scale_pair},
    {"Self-Serving Bias", BiasKind::scale_pair},
    {"Social Desirability Bias", BiasKind::scale_pair},
    {"Status-Quo Bias", BiasKind::scale_pair},
    {"Stereotyping", BiasKind::scale_pair},
    {"Survivorship Bias", BiasKind::scale_pair},
    {"Certainty", BiasKind::proportion},
    {"Belief Valid", BiasKind::proportion},
    {"Belief Invalid", BiasKind::proportion},
}};

// Short forms printed in result tables.
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 10> catalog_aliases{{
    {"escalation of c.", "Escalation of Commitment"},
    {"fundamental a.e", "Fundamental Attribution Error"},
    {"fundamental a.e.", "Fundamental Attribution Error"},
    {"availability h.", "Availability Heuristic"},
    {"self-serving", "Self-Serving Bias"},
    {"social desirability", "Social Desirability Bias"},
    {"survivorship", "Survivorship Bias"},
    {"not invented here syndrome", "Not Invented Here"},
    {"anchoring bias", "Anchoring"},
    {"certainty effect", "Certainty"},
}};

// Lowercase, with '-', '_' and runs of whitespace folded into a single space.
inline std::string fold_name(std::string_view name) {
    std::string out;
    bool pending_space = false;
    for (char c : name) {
        if (c == '-' || c == '_' || std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}

/**
 * Look up a bias by name. Matching ignores case and treats '-', '_' and spaces alike,
 * so "Belief-Valid", "belief_valid" and "Belief Valid" all resolve to the same entry.
 * Table abbreviations such as "Escalation of C." are accepted as aliases.
 */
inline std::optional<BiasId> find_bias(std::string_view name) {
    const auto folded = internal::fold_name(name);
    for (const auto& e : internal::catalog_entries) {
        if (internal::fold_name(e.name) == folded) {
            return BiasId{std::string(e.name), e.kind};
        }
    }
    for (const auto& [alias, target] : internal::catalog_aliases) {
        if (internal::fold_name(alias) == folded) {
            return find_bias(target);
        }
    }
    return std::nullopt;
}

/** Like `find_bias()` but throws for unknown names. */
inline BiasId bias(std::string_view name) {
    auto found = find_bias(name);
    if (!found) {
        throw Error("unknown bias '" + std::string(name) + "'");
    }
    return *found;
}

/** All catalog biases in canonical order, including Belief Invalid. */
inline std::vector<BiasId> all_biases() {
    std::vector<BiasId> out;
    for (const auto& e : internal::catalog_entries) {
        out.push_back(BiasId{std::string(e.name), e.kind});
    }
    return out;
}

/** The 32 biases that make up a bias-level vector, in canonical order. */
inline std::vector<BiasId> vector_biases() {
    auto out = all_biases();
    std::erase_if(out, [](const BiasId& b) { return !b.in_bias_vector(); });
    return out;
}

/** The 30 biases with scenario structure. */
inline std::vector<BiasId> scenario_structured_biases() {
    auto out = all_biases();
    std::erase_if(out, [](const BiasId& b) { return !b.scenario_structured(); });
    return out;
}

}

#endif
