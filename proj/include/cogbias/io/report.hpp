#ifndef COGBIAS_IO_REPORT_HPP
#define COGBIAS_IO_REPORT_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "../attribution/pca.hpp"
#include "../attribution/profile.hpp"
#include "../attribution/separation.hpp"
#include "../attribution/study.hpp"
#include "../harness.hpp"
#include "../randomness.hpp"
#include "../scoring.hpp"
#include "../synthetic.hpp"
#include "../validate.hpp"
#include "csv.hpp"

/**
 * @file report.hpp
 * @brief The serializable analysis report and its markdown, CSV and JSON renderings.
 */

namespace cogbias {

struct ScoreSummary {
    Granularity granularity = Granularity::bias_level;
    std::size_t features = 0;
    std::size_t runs = 0;
    std::string matrix_file;
    Coverage coverage;

    bool operator==(const ScoreSummary&) const = default;
};

struct LabeledProfile {
    LabelScheme scheme = LabelScheme::pretraining;
    ClusterProfile profile;

    bool operator==(const LabeledProfile&) const = default;
};

struct SimulationSummary {
    PopulationOptions options;
    std::vector<ModelRun> roster;
    Labeling pretraining;
    Labeling instruction;
    std::string matrix_file;

    bool operator==(const SimulationSummary&) const = default;
};

struct AdministerSummary {
    std::string run_id;
    std::string responses_file;
    AdministerStats stats;

    bool operator==(const AdministerSummary&) const = default;
};

/**
 * Everything one CLI invocation produced. Only the sections of the command that ran are set.
 */
struct AnalysisReport {
    std::string command;
    std::vector<std::pair<std::string, std::string>> provenance;
    std::string config_text;
    std::vector<std::string> warnings;

    std::optional<ValidationReport> validation;
    std::optional<ScoreSummary> scoring;
    std::optional<RandomnessReport> randomness;
    std::optional<ClusteringReport> clustering;
    std::vector<LabeledProfile> profiles;
    std::optional<PcaProjection> pca;
    std::vector<SeparationComparison> separation;
    std::optional<SimulationSummary> simulation;
    std::optional<AdministerSummary> administration;

    bool operator==(const AnalysisReport&) const = default;
};

enum class ReportFormat { markdown, csv, json };

inline ReportFormat report_format_from_string(std::string_view s) {
    if (s == "md" || s == "markdown") {
        return ReportFormat::markdown;
    }
    if (s == "csv") {
        return ReportFormat::csv;
    }
    if (s == "json") {
        return ReportFormat::json;
    }
    throw Error("unknown report format '" + std::string(s) + "'");
}

// JSON mapping. Optional values are null when absent.

using json = nlohmann::json;

namespace internal {

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_get(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return it->template get<T>();
}

inline IssueKind issue_kind_from_string(std::string_view s) {
    for (int k = 0; k <= static_cast<int>(IssueKind::empty_condition_group); ++k) {
        if (to_string(static_cast<IssueKind>(k)) == s) {
            return static_cast<IssueKind>(k);
        }
    }
    throw Error("unknown issue kind '" + std::string(s) + "'");
}

}

inline void to_json(json& j, const ModelRun& r) {
    j = {{"run_id", r.run_id}, {"pretrain_id", r.pretrain_id}, {"instruction_id", r.instruction_id},
         {"seed", internal::opt(r.seed)}, {"origin", to_string(r.origin)}};
}
inline void from_json(const json& j, ModelRun& r) {
    r.run_id = j.at("run_id").get<std::string>();
    r.pretrain_id = j.at("pretrain_id").get<std::string>();
    r.instruction_id = j.at("instruction_id").get<std::string>();
    r.seed = internal::opt_get<std::uint32_t>(j, "seed");
    r.origin = origin_from_string(j.at("origin").get<std::string>());
}

inline void to_json(json& j, const Labeling& l) {
    j = {{"scheme", to_string(l.scheme)}, {"labels", l.labels}};
}
inline void from_json(const json& j, Labeling& l) {
    l.scheme = label_scheme_from_string(j.at("scheme").get<std::string>());
    l.labels = j.at("labels").get<std::vector<int>>();
}

inline void to_json(json& j, const ValidationIssue& i) {
    j = {{"kind", to_string(i.kind)}, {"message", i.message}};
}
inline void from_json(const json& j, ValidationIssue& i) {
    i.kind = internal::issue_kind_from_string(j.at("kind").get<std::string>());
    i.message = j.at("message").get<std::string>();
}
inline void to_json(json& j, const ValidationReport& r) {
    j = {{"issues", r.issues}};
}
inline void from_json(const json& j, ValidationReport& r) {
    r.issues = j.at("issues").get<std::vector<ValidationIssue>>();
}

inline void to_json(json& j, const Coverage& c) {
    j = {{"records", c.records}, {"non_responses", c.non_responses}, {"scored_instances", c.scored_instances},
         {"dropped_instances", c.dropped_instances}, {"scored_cells", c.scored_cells}, {"unscored_cells", c.unscored_cells}};
}
inline void from_json(const json& j, Coverage& c) {
    j.at("records").get_to(c.records);
    j.at("non_responses").get_to(c.non_responses);
    j.at("scored_instances").get_to(c.scored_instances);
    j.at("dropped_instances").get_to(c.dropped_instances);
    j.at("scored_cells").get_to(c.scored_cells);
    j.at("unscored_cells").get_to(c.unscored_cells);
}

inline void to_json(json& j, const ScoreSummary& s) {
    j = {{"granularity", to_string(s.granularity)}, {"features", s.features}, {"runs", s.runs},
         {"matrix_file", s.matrix_file}, {"coverage", s.coverage}};
}
inline void from_json(const json& j, ScoreSummary& s) {
    s.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    j.at("features").get_to(s.features);
    j.at("runs").get_to(s.runs);
    j.at("matrix_file").get_to(s.matrix_file);
    j.at("coverage").get_to(s.coverage);
}

inline void to_json(json& j, const SeedGroup& g) {
    j = {{"pretrain_id", g.pretrain_id}, {"instruction_id", g.instruction_id}, {"members", g.members}, {"reference", internal::opt(g.reference)}};
}
inline void from_json(const json& j, SeedGroup& g) {
    j.at("pretrain_id").get_to(g.pretrain_id);
    j.at("instruction_id").get_to(g.instruction_id);
    j.at("members").get_to(g.members);
    g.reference = internal::opt_get<std::string>(j, "reference");
}

inline void to_json(json& j, const AgreementRow& r) {
    j = {{"bias", r.bias}, {"seeds", r.seeds}, {"mean", r.mean}, {"median", r.median}, {"std", r.std},
         {"threshold", r.threshold}, {"reference", internal::opt(r.reference)}, {"majority", to_string(r.majority)},
         {"tie", r.tie}, {"majority_agree", r.majority_agree}, {"agg_similar", r.agg_similar}};
}
inline void from_json(const json& j, AgreementRow& r) {
    j.at("bias").get_to(r.bias);
    j.at("seeds").get_to(r.seeds);
    j.at("mean").get_to(r.mean);
    j.at("median").get_to(r.median);
    j.at("std").get_to(r.std);
    j.at("threshold").get_to(r.threshold);
    r.reference = internal::opt_get<double>(j, "reference");
    r.majority = direction_from_string(j.at("majority").get<std::string>());
    j.at("tie").get_to(r.tie);
    j.at("majority_agree").get_to(r.majority_agree);
    j.at("agg_similar").get_to(r.agg_similar);
}

inline void to_json(json& j, const AgreementSummary& s) {
    j = {{"avg_diff_mean", s.avg_diff_mean}, {"avg_diff_median", s.avg_diff_median}, {"scope", to_string(s.scope)},
         {"scope_count", s.scope_count}, {"majority_pct", s.majority_pct}, {"agg_pct", s.agg_pct},
         {"all_count", s.all_count}, {"majority_pct_all", s.majority_pct_all}, {"agg_pct_all", s.agg_pct_all}};
}
inline void from_json(const json& j, AgreementSummary& s) {
    j.at("avg_diff_mean").get_to(s.avg_diff_mean);
    j.at("avg_diff_median").get_to(s.avg_diff_median);
    s.scope = percent_scope_from_string(j.at("scope").get<std::string>());
    j.at("scope_count").get_to(s.scope_count);
    j.at("majority_pct").get_to(s.majority_pct);
    j.at("agg_pct").get_to(s.agg_pct);
    j.at("all_count").get_to(s.all_count);
    j.at("majority_pct_all").get_to(s.majority_pct_all);
    j.at("agg_pct_all").get_to(s.agg_pct_all);
}

inline void to_json(json& j, const GroupTable& t) {
    j = {{"group", t.group}, {"rows", t.rows}, {"summary", internal::opt(t.summary)}, {"correlation", internal::opt(t.correlation)}};
}
inline void from_json(const json& j, GroupTable& t) {
    j.at("group").get_to(t.group);
    j.at("rows").get_to(t.rows);
    t.summary = internal::opt_get<AgreementSummary>(j, "summary");
    t.correlation = internal::opt_get<double>(j, "correlation");
}

inline void to_json(json& j, const VariabilityRow& r) {
    j = {{"group", r.group}, {"metric_group", r.metric_group}, {"metrics", r.metrics}, {"mean_std", r.mean_std}};
}
inline void from_json(const json& j, VariabilityRow& r) {
    j.at("group").get_to(r.group);
    j.at("metric_group").get_to(r.metric_group);
    j.at("metrics").get_to(r.metrics);
    j.at("mean_std").get_to(r.mean_std);
}

inline void to_json(json& j, const RandomnessReport& r) {
    j = {{"groups", r.groups}, {"variability", r.variability}};
}
inline void from_json(const json& j, RandomnessReport& r) {
    j.at("groups").get_to(r.groups);
    j.at("variability").get_to(r.variability);
}

inline void to_json(json& j, const ClusterQuality& q) {
    j = {{"silhouette", q.silhouette}, {"calinski_harabasz", q.calinski_harabasz}, {"davies_bouldin", q.davies_bouldin},
         {"mean_intra_distance", q.mean_intra_distance}, {"mean_inter_distance", q.mean_inter_distance}};
}
inline void from_json(const json& j, ClusterQuality& q) {
    j.at("silhouette").get_to(q.silhouette);
    j.at("calinski_harabasz").get_to(q.calinski_harabasz);
    j.at("davies_bouldin").get_to(q.davies_bouldin);
    j.at("mean_intra_distance").get_to(q.mean_intra_distance);
    j.at("mean_inter_distance").get_to(q.mean_inter_distance);
}

inline void to_json(json& j, const ClusteringRow& r) {
    j = {{"scheme", to_string(r.scheme)}, {"quality", r.quality}, {"significant", internal::opt(r.significant)}};
}
inline void from_json(const json& j, ClusteringRow& r) {
    r.scheme = label_scheme_from_string(j.at("scheme").get<std::string>());
    j.at("quality").get_to(r.quality);
    r.significant = internal::opt_get<std::array<bool, 5>>(j, "significant");
}

inline void to_json(json& j, const ClusteringReport& r) {
    j = {{"granularity", to_string(r.granularity)}, {"run_ids", r.run_ids}, {"features", r.features}, {"rows", r.rows},
         {"pretraining", r.pretraining}, {"instruction", r.instruction}, {"kmeans", r.kmeans},
         {"kmeans_seed", r.kmeans_seed}, {"kmeans_valid_runs", r.kmeans_valid_runs},
         {"kmeans_disagreements", r.kmeans_disagreements}, {"kmeans_ari", r.kmeans_ari}};
}
inline void from_json(const json& j, ClusteringReport& r) {
    r.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    j.at("run_ids").get_to(r.run_ids);
    j.at("features").get_to(r.features);
    j.at("rows").get_to(r.rows);
    j.at("pretraining").get_to(r.pretraining);
    j.at("instruction").get_to(r.instruction);
    j.at("kmeans").get_to(r.kmeans);
    j.at("kmeans_seed").get_to(r.kmeans_seed);
    j.at("kmeans_valid_runs").get_to(r.kmeans_valid_runs);
    j.at("kmeans_disagreements").get_to(r.kmeans_disagreements);
    j.at("kmeans_ari").get_to(r.kmeans_ari);
}

inline void to_json(json& j, const ClusterProfile& p) {
    json means = json::array();
    for (const auto& cluster : p.means) {
        json row = json::array();
        for (const auto& v : cluster) {
            row.push_back(internal::opt(v));
        }
        means.push_back(row);
    }
    j = {{"features", p.features}, {"members", p.members}, {"means", means}};
}
inline void from_json(const json& j, ClusterProfile& p) {
    j.at("features").get_to(p.features);
    j.at("members").get_to(p.members);
    p.means.clear();
    for (const auto& cluster : j.at("means")) {
        std::vector<std::optional<double>> row;
        for (const auto& v : cluster) {
            row.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
        }
        p.means.push_back(std::move(row));
    }
}

inline void to_json(json& j, const LabeledProfile& p) {
    j = {{"scheme", to_string(p.scheme)}, {"profile", p.profile}};
}
inline void from_json(const json& j, LabeledProfile& p) {
    p.scheme = label_scheme_from_string(j.at("scheme").get<std::string>());
    j.at("profile").get_to(p.profile);
}

inline void to_json(json& j, const PcaProjection& p) {
    j = {{"run_ids", p.run_ids}, {"coordinates", p.coordinates}, {"explained", p.explained},
         {"explained_all", p.explained_all}, {"features", p.features}, {"loadings", p.loadings}};
}
inline void from_json(const json& j, PcaProjection& p) {
    j.at("run_ids").get_to(p.run_ids);
    j.at("coordinates").get_to(p.coordinates);
    j.at("explained").get_to(p.explained);
    j.at("explained_all").get_to(p.explained_all);
    j.at("features").get_to(p.features);
    j.at("loadings").get_to(p.loadings);
}

inline void to_json(json& j, const SeparationRow& r) {
    j = {{"bias", r.bias}, {"score_a", r.score_a}, {"score_b", r.score_b}, {"threshold_a", r.threshold_a},
         {"threshold_b", r.threshold_b}, {"direction_a", to_string(r.direction_a)},
         {"direction_b", to_string(r.direction_b)}, {"separated", r.separated}};
}
inline void from_json(const json& j, SeparationRow& r) {
    j.at("bias").get_to(r.bias);
    j.at("score_a").get_to(r.score_a);
    j.at("score_b").get_to(r.score_b);
    j.at("threshold_a").get_to(r.threshold_a);
    j.at("threshold_b").get_to(r.threshold_b);
    r.direction_a = direction_from_string(j.at("direction_a").get<std::string>());
    r.direction_b = direction_from_string(j.at("direction_b").get<std::string>());
    j.at("separated").get_to(r.separated);
}

inline void to_json(json& j, const SeparationComparison& c) {
    j = {{"run_a", c.run_a}, {"run_b", c.run_b}, {"rows", c.rows}};
}
inline void from_json(const json& j, SeparationComparison& c) {
    j.at("run_a").get_to(c.run_a);
    j.at("run_b").get_to(c.run_b);
    j.at("rows").get_to(c.rows);
}

inline void to_json(json& j, const PopulationOptions& o) {
    j = {{"n_per_cell", o.n_per_cell}, {"features", o.features}, {"pretrain_effect", o.pretrain_effect},
         {"instruction_effect", o.instruction_effect}, {"noise_sigma", o.noise_sigma}, {"seed", o.seed},
         {"pretrain_ids", o.pretrain_ids}, {"instruction_ids", o.instruction_ids}};
}
inline void from_json(const json& j, PopulationOptions& o) {
    j.at("n_per_cell").get_to(o.n_per_cell);
    j.at("features").get_to(o.features);
    j.at("pretrain_effect").get_to(o.pretrain_effect);
    j.at("instruction_effect").get_to(o.instruction_effect);
    j.at("noise_sigma").get_to(o.noise_sigma);
    j.at("seed").get_to(o.seed);
    j.at("pretrain_ids").get_to(o.pretrain_ids);
    j.at("instruction_ids").get_to(o.instruction_ids);
}

inline void to_json(json& j, const SimulationSummary& s) {
    j = {{"options", s.options}, {"roster", s.roster}, {"pretraining", s.pretraining},
         {"instruction", s.instruction}, {"matrix_file", s.matrix_file}};
}
inline void from_json(const json& j, SimulationSummary& s) {
    j.at("options").get_to(s.options);
    j.at("roster").get_to(s.roster);
    j.at("pretraining").get_to(s.pretraining);
    j.at("instruction").get_to(s.instruction);
    j.at("matrix_file").get_to(s.matrix_file);
}

inline void to_json(json& j, const AdministerStats& s) {
    j = {{"cases", s.cases}, {"records", s.records}, {"answered", s.answered}, {"non_responses", s.non_responses},
         {"failed_requests", s.failed_requests}, {"unparsed", s.unparsed}, {"ambiguous", s.ambiguous},
         {"retries", s.retries}, {"errors", s.errors}};
}
inline void from_json(const json& j, AdministerStats& s) {
    j.at("cases").get_to(s.cases);
    j.at("records").get_to(s.records);
    j.at("answered").get_to(s.answered);
    j.at("non_responses").get_to(s.non_responses);
    j.at("failed_requests").get_to(s.failed_requests);
    j.at("unparsed").get_to(s.unparsed);
    j.at("ambiguous").get_to(s.ambiguous);
    j.at("retries").get_to(s.retries);
    j.at("errors").get_to(s.errors);
}

inline void to_json(json& j, const AdministerSummary& s) {
    j = {{"run_id", s.run_id}, {"responses_file", s.responses_file}, {"stats", s.stats}};
}
inline void from_json(const json& j, AdministerSummary& s) {
    j.at("run_id").get_to(s.run_id);
    j.at("responses_file").get_to(s.responses_file);
    j.at("stats").get_to(s.stats);
}

inline json report_to_json(const AnalysisReport& r) {
    json prov = json::array();
    for (const auto& [k, v] : r.provenance) {
        prov.push_back({k, v});
    }
    return {{"command", r.command},
            {"provenance", prov},
            {"config_text", r.config_text},
            {"warnings", r.warnings},
            {"validation", internal::opt(r.validation)},
            {"scoring", internal::opt(r.scoring)},
            {"randomness", internal::opt(r.randomness)},
            {"clustering", internal::opt(r.clustering)},
            {"profiles", r.profiles},
            {"pca", internal::opt(r.pca)},
            {"separation", r.separation},
            {"simulation", internal::opt(r.simulation)},
            {"administration", internal::opt(r.administration)}};
}

inline AnalysisReport report_from_json(const json& j) {
    AnalysisReport r;
    j.at("command").get_to(r.command);
    for (const auto& kv : j.at("provenance")) {
        r.provenance.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    }
    j.at("config_text").get_to(r.config_text);
    j.at("warnings").get_to(r.warnings);
    r.validation = internal::opt_get<ValidationReport>(j, "validation");
    r.scoring = internal::opt_get<ScoreSummary>(j, "scoring");
    r.randomness = internal::opt_get<RandomnessReport>(j, "randomness");
    r.clustering = internal::opt_get<ClusteringReport>(j, "clustering");
    j.at("profiles").get_to(r.profiles);
    r.pca = internal::opt_get<PcaProjection>(j, "pca");
    j.at("separation").get_to(r.separation);
    r.simulation = internal::opt_get<SimulationSummary>(j, "simulation");
    r.administration = internal::opt_get<AdministerSummary>(j, "administration");
    return r;
}

/** JSON text with full float precision; parsing it back gives an equal report. */
inline std::string format_json(const AnalysisReport& r) {
    return report_to_json(r).dump(2) + "\n";
}

inline AnalysisReport parse_report_json(std::string_view text) {
    try {
        return report_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw Error(std::string("malformed report JSON: ") + e.what());
    }
}

inline AnalysisReport read_report_json(const std::filesystem::path& path) {
    return parse_report_json(io::read_text_file(path));
}

// Markdown.

namespace internal {

inline std::string scheme_title(LabelScheme s) {
    switch (s) {
    case LabelScheme::pretraining:
        return "Pretraining";
    case LabelScheme::instruction:
        return "Instruction";
    case LabelScheme::random:
        return "Random";
    case LabelScheme::kmeans:
        return "K-Means";
    }
    return "";
}

inline std::string granularity_title(Granularity g) {
    return g == Granularity::bias_level ? "Bias Level" : "Scenario Level";
}

inline std::string fixed(double v, int decimals) {
    auto s = io::format_fixed(v, decimals);
    // A rounded negative zero prints as 0.
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
        s.erase(0, 1);
    }
    return s;
}

inline std::string fixed(const std::optional<double>& v, int decimals) {
    return v ? fixed(*v, decimals) : "";
}

inline std::string boolean(bool b) {
    return b ? "True" : "False";
}

inline std::string md_row(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) {
        out += " " + c + " |";
    }
    return out + "\n";
}

inline std::string md_header(const std::vector<std::string>& cells) {
    std::string out = md_row(cells) + "|";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out += i < 2 ? "---|" : "---:|";
    }
    return out + "\n";
}

inline std::string md_provenance(const AnalysisReport& r) {
    std::string out = "## Provenance\n\n";
    for (const auto& [k, v] : r.provenance) {
        out += "- `" + k + "` = `" + v + "`\n";
    }
    if (!r.config_text.empty()) {
        out += "\n```toml\n" + r.config_text;
        if (r.config_text.back() != '\n') {
            out += "\n";
        }
        out += "```\n";
    }
    if (!r.warnings.empty()) {
        out += "\nWarnings:\n\n";
        for (const auto& w : r.warnings) {
            out += "- " + w + "\n";
        }
    }
    return out + "\n";
}

inline std::string md_validation(const ValidationReport& v) {
    std::string out = "## Validation\n\n";
    if (v.ok()) {
        return out + "No issues.\n\n";
    }
    out += md_header({"Kind", "Issue"});
    for (const auto& i : v.issues) {
        out += md_row({std::string(to_string(i.kind)), i.message});
    }
    return out + "\n" + std::to_string(v.issues.size()) + " issue(s).\n\n";
}

inline std::string md_scoring(const ScoreSummary& s) {
    const auto& c = s.coverage;
    std::string out = "## Scoring\n\n";
    out += "Matrix: `" + s.matrix_file + "` (" + std::string(to_string(s.granularity)) + ", " + std::to_string(s.features) +
           " features x " + std::to_string(s.runs) + " runs)\n\n";
    out += md_header({"Records", "Non-responses", "Scored instances", "Dropped instances", "Scored cells", "Unscored cells", "Coverage"});
    out += md_row({std::to_string(c.records), std::to_string(c.non_responses), std::to_string(c.scored_instances),
                   std::to_string(c.dropped_instances), std::to_string(c.scored_cells), std::to_string(c.unscored_cells),
                   fixed(c.instance_coverage(), 4)});
    return out + "\n";
}

inline std::string md_randomness(const RandomnessReport& r) {
    std::string out;
    out += "## Seed variability\n\nMean of per-metric seed standard deviations.\n\n";
    out += md_header({"Model", "Metric group", "Metrics", "Mean std"});
    for (const auto& v : r.variability) {
        out += md_row({v.group, v.metric_group, std::to_string(v.metrics), fixed(v.mean_std, 4)});
    }
    out += "\n";

    bool any_corr = false;
    for (const auto& g : r.groups) {
        any_corr = any_corr || g.correlation.has_value();
    }
    if (any_corr) {
        out += "## Seed-mean correlation with the original\n\n";
        out += md_header({"Model", "Reference", "Pearson r"});
        for (const auto& g : r.groups) {
            if (g.correlation) {
                out += md_row({g.group.name(), *g.group.reference, fixed(*g.correlation, 3)});
            }
        }
        out += "\n";
    }

    for (const auto& g : r.groups) {
        out += "## Seed scores: " + g.group.name() + "\n\n";
        std::vector<std::string> head{"Bias"};
        for (const auto& m : g.group.members) {
            head.push_back(m);
        }
        for (const char* h : {"Mean", "Median", "Std", "Threshold", "Majority"}) {
            head.push_back(h);
        }
        out += md_header(head);
        for (const auto& row : g.rows) {
            std::vector<std::string> cells{row.bias};
            for (double s : row.seeds) {
                cells.push_back(fixed(s, 2));
            }
            cells.push_back(fixed(row.mean, 2));
            cells.push_back(fixed(row.median, 2));
            cells.push_back(fixed(row.std, 2));
            cells.push_back(fixed(row.threshold, 3));
            cells.push_back(std::string(to_string(row.majority)) + (row.tie ? " (tie)" : ""));
            out += md_row(cells);
        }
        out += "\n";
    }

    for (const auto& g : r.groups) {
        if (!g.summary) {
            continue;
        }
        const auto& s = *g.summary;
        out += "## Aggregated scores vs original: " + g.group.name() + "\n\n";
        out += md_header({"Bias", "Full-FT", "Mean", "Median", "Majority", "Agg"});
        for (const auto& row : g.rows) {
            out += md_row({row.bias, fixed(row.reference, 2), fixed(row.mean, 2), fixed(row.median, 2), boolean(row.majority_agree), boolean(row.agg_similar)});
        }
        out += md_row({"Avg Diff", "", fixed(s.avg_diff_mean, 2), fixed(s.avg_diff_median, 2), "", ""});
        out += md_row({"All " + std::to_string(s.all_count) + " rows (%)", "", "", "", fixed(s.majority_pct_all, 2), fixed(s.agg_pct_all, 2)});
        out += md_row({std::string(to_string(s.scope)) + ", " + std::to_string(s.scope_count) + " rows (%)", "", "", "",
                       fixed(s.majority_pct, 2), fixed(s.agg_pct, 2)});
        out += "\n";
    }
    return out;
}

inline std::string md_clustering(const ClusteringReport& c, const std::vector<LabeledProfile>& profiles) {
    std::string out = "## Clustering quality\n\n";
    out += std::to_string(c.run_ids.size()) + " runs x " + std::to_string(c.features) +
           " features. `*` marks permutation-significant values.\n\n";
    out += md_header({"Granularity", "Clustering", "Silhouette", "Calinski", "Davies", "Intra", "Inter"});
    bool first = true;
    for (const auto& row : c.rows) {
        std::vector<std::string> cells{first ? granularity_title(c.granularity) : "", scheme_title(row.scheme)};
        first = false;
        for (std::size_t m = 0; m < all_quality_metrics.size(); ++m) {
            auto cell = fixed(metric_value(row.quality, all_quality_metrics[m]), 3);
            if (row.significant && (*row.significant)[m]) {
                cell += "*";
            }
            cells.push_back(cell);
        }
        out += md_row(cells);
    }
    out += "\nK-Means reference: seed " + std::to_string(c.kmeans_seed) + ", " + std::to_string(c.kmeans_valid_runs) +
           " valid restarts, " + std::to_string(c.kmeans_disagreements) + " of " + std::to_string(c.run_ids.size()) +
           " runs disagree with the pretraining labels, ARI " + fixed(c.kmeans_ari, 3) + ".\n\n";

    out += "## Labelings\n\n";
    out += md_header({"Run", "Pretraining", "Instruction", "K-Means"});
    for (std::size_t i = 0; i < c.run_ids.size(); ++i) {
        out += md_row({c.run_ids[i], std::to_string(c.pretraining.labels[i]), std::to_string(c.instruction.labels[i]),
                       std::to_string(c.kmeans.labels[i])});
    }
    out += "\n";

    for (const auto& lp : profiles) {
        const auto& p = lp.profile;
        out += "## Mean bias score per cluster: " + scheme_title(lp.scheme) + "\n\n";
        std::vector<std::string> head{"Feature"};
        for (std::size_t k = 0; k < p.members.size(); ++k) {
            head.push_back("Cluster " + std::to_string(k) + " (n=" + std::to_string(p.members[k].size()) + ")");
        }
        out += md_header(head);
        for (std::size_t f = 0; f < p.features.size(); ++f) {
            std::vector<std::string> cells{p.features[f]};
            for (const auto& cluster : p.means) {
                cells.push_back(fixed(cluster[f], 3));
            }
            out += md_row(cells);
        }
        out += "\n";
    }
    return out;
}

inline std::string md_pca(const PcaProjection& p) {
    std::string out = "## PCA\n\n";
    out += "PC1 explains " + fixed(100 * p.explained[0], 1) + "% of variance, PC2 " + fixed(100 * p.explained[1], 1) + "%.\n\n";
    out += md_header({"Run", "PC1", "PC2"});
    for (std::size_t i = 0; i < p.run_ids.size(); ++i) {
        out += md_row({p.run_ids[i], fixed(p.coordinates[i][0], 4), fixed(p.coordinates[i][1], 4)});
    }
    out += "\n## Loadings\n\n";
    out += md_header({"Feature", "PC1", "PC2"});
    for (std::size_t f = 0; f < p.features.size(); ++f) {
        out += md_row({p.features[f], fixed(p.loadings[f][0], 4), fixed(p.loadings[f][1], 4)});
    }
    return out + "\n";
}

inline std::string md_separation(const std::vector<SeparationComparison>& comparisons) {
    std::string out;
    for (const auto& c : comparisons) {
        out += "## Separation: " + c.run_a + " vs " + c.run_b + "\n\n`*` marks scores beyond the neutrality threshold.\n\n";
        out += md_header({"Bias", c.run_a, c.run_b, "Threshold", "Separated"});
        for (const auto& r : c.rows) {
            auto a = fixed(r.score_a, 2) + (r.significant_a() ? "*" : "");
            auto b = fixed(r.score_b, 2) + (r.significant_b() ? "*" : "");
            auto thr = fixed(r.threshold_a, 3);
            if (r.threshold_b != r.threshold_a) {
                thr += " / " + fixed(r.threshold_b, 3);
            }
            out += md_row({r.bias, a, b, thr, boolean(r.separated)});
        }
        out += "\n";
    }
    return out;
}

inline std::string md_simulation(const SimulationSummary& s) {
    const auto& o = s.options;
    std::string out = "## Synthetic population\n\n";
    out += "Matrix: `" + s.matrix_file + "`\n\n";
    out += md_header({"Runs per cell", "Features", "Pretrain effect", "Instruction effect", "Noise sigma", "Seed"});
    out += md_row({std::to_string(o.n_per_cell), std::to_string(o.features), io::format_double(o.pretrain_effect),
                   io::format_double(o.instruction_effect), io::format_double(o.noise_sigma), std::to_string(o.seed)});
    out += "\n";
    out += md_header({"Run", "Pretraining", "Instruction"});
    for (std::size_t i = 0; i < s.roster.size(); ++i) {
        out += md_row({s.roster[i].run_id, std::to_string(s.pretraining.labels[i]), std::to_string(s.instruction.labels[i])});
    }
    return out + "\n";
}

inline std::string md_administration(const AdministerSummary& a) {
    const auto& s = a.stats;
    std::string out = "## Administration\n\n";
    out += "Run `" + a.run_id + "`, responses in `" + a.responses_file + "`.\n\n";
    out += md_header({"Cases", "Records", "Answered", "Non-responses", "Failed requests", "Unparsed", "Ambiguous", "Retries"});
    out += md_row({std::to_string(s.cases), std::to_string(s.records), std::to_string(s.answered), std::to_string(s.non_responses),
                   std::to_string(s.failed_requests), std::to_string(s.unparsed), std::to_string(s.ambiguous), std::to_string(s.retries)});
    if (!s.errors.empty()) {
        out += "\nErrors:\n\n";
        for (const auto& e : s.errors) {
            out += "- " + e + "\n";
        }
    }
    return out + "\n";
}

}

inline std::string format_markdown(const AnalysisReport& r) {
    using namespace internal;
    std::string out = "# " + r.command + "\n\n";
    out += md_provenance(r);
    if (r.validation) {
        out += md_validation(*r.validation);
    }
    if (r.scoring) {
        out += md_scoring(*r.scoring);
    }
    if (r.simulation) {
        out += md_simulation(*r.simulation);
    }
    if (r.administration) {
        out += md_administration(*r.administration);
    }
    if (r.clustering) {
        out += md_clustering(*r.clustering, r.profiles);
    }
    if (r.pca) {
        out += md_pca(*r.pca);
    }
    if (!r.separation.empty()) {
        out += md_separation(r.separation);
    }
    if (r.randomness) {
        out += md_randomness(*r.randomness);
    }
    while (out.size() > 1 && out[out.size() - 1] == '\n' && out[out.size() - 2] == '\n') {
        out.pop_back();
    }
    return out;
}

// CSV: one file per table.

struct CsvTable {
    std::string name;
    std::vector<std::vector<std::string>> rows; ///< first row is the header

    std::string text() const {
        std::string out;
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out += (i ? "," : "") + io::csv_field(row[i]);
            }
            out += "\n";
        }
        return out;
    }
};

inline std::vector<CsvTable> format_csv(const AnalysisReport& r) {
    using io::format_double;
    auto num = [](double v) { return format_double(v); };
    auto optnum = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
    std::vector<CsvTable> out;

    CsvTable prov{"provenance", {{"key", "value"}}};
    for (const auto& [k, v] : r.provenance) {
        prov.rows.push_back({k, v});
    }
    out.push_back(std::move(prov));

    if (r.validation) {
        CsvTable t{"validation", {{"kind", "message"}}};
        for (const auto& i : r.validation->issues) {
            t.rows.push_back({std::string(to_string(i.kind)), i.message});
        }
        out.push_back(std::move(t));
    }
    if (r.scoring) {
        const auto& c = r.scoring->coverage;
        out.push_back({"coverage",
                       {{"records", "non_responses", "scored_instances", "dropped_instances", "scored_cells", "unscored_cells"},
                        {std::to_string(c.records), std::to_string(c.non_responses), std::to_string(c.scored_instances),
                         std::to_string(c.dropped_instances), std::to_string(c.scored_cells), std::to_string(c.unscored_cells)}}});
    }
    if (r.randomness) {
        CsvTable rows{"seed_rows", {{"group", "bias", "seeds", "mean", "median", "std", "threshold", "reference", "majority", "tie", "majority_agree", "agg_similar"}}};
        CsvTable summary{"agreement", {{"group", "reference", "correlation", "avg_diff_mean", "avg_diff_median", "scope", "scope_count",
                                        "majority_pct", "agg_pct", "all_count", "majority_pct_all", "agg_pct_all"}}};
        for (const auto& g : r.randomness->groups) {
            for (const auto& row : g.rows) {
                std::string seeds;
                for (std::size_t i = 0; i < row.seeds.size(); ++i) {
                    seeds += (i ? ";" : "") + num(row.seeds[i]);
                }
                rows.rows.push_back({g.group.name(), row.bias, seeds, num(row.mean), num(row.median), num(row.std), num(row.threshold),
                                     optnum(row.reference), std::string(to_string(row.majority)), flag(row.tie),
                                     g.summary ? flag(row.majority_agree) : "", g.summary ? flag(row.agg_similar) : ""});
            }
            if (g.summary) {
                const auto& s = *g.summary;
                summary.rows.push_back({g.group.name(), g.group.reference.value_or(""), optnum(g.correlation), num(s.avg_diff_mean),
                                        num(s.avg_diff_median), std::string(to_string(s.scope)), std::to_string(s.scope_count),
                                        num(s.majority_pct), num(s.agg_pct), std::to_string(s.all_count), num(s.majority_pct_all),
                                        num(s.agg_pct_all)});
            }
        }
        CsvTable var{"variability", {{"group", "metric_group", "metrics", "mean_std"}}};
        for (const auto& v : r.randomness->variability) {
            var.rows.push_back({v.group, v.metric_group, std::to_string(v.metrics), num(v.mean_std)});
        }
        out.push_back(std::move(rows));
        out.push_back(std::move(summary));
        out.push_back(std::move(var));
    }
    if (r.clustering) {
        const auto& c = *r.clustering;
        CsvTable q{"quality", {{"granularity", "clustering", "silhouette", "calinski_harabasz", "davies_bouldin", "mean_intra_distance",
                                "mean_inter_distance", "sig_silhouette", "sig_calinski_harabasz", "sig_davies_bouldin", "sig_intra", "sig_inter"}}};
        for (const auto& row : c.rows) {
            std::vector<std::string> cells{std::string(to_string(c.granularity)), std::string(to_string(row.scheme))};
            for (auto m : all_quality_metrics) {
                cells.push_back(num(metric_value(row.quality, m)));
            }
            for (std::size_t m = 0; m < 5; ++m) {
                cells.push_back(row.significant ? flag((*row.significant)[m]) : "");
            }
            q.rows.push_back(std::move(cells));
        }
        CsvTable labels{"labels", {{"run_id", "pretraining", "instruction", "kmeans"}}};
        for (std::size_t i = 0; i < c.run_ids.size(); ++i) {
            labels.rows.push_back({c.run_ids[i], std::to_string(c.pretraining.labels[i]), std::to_string(c.instruction.labels[i]),
                                   std::to_string(c.kmeans.labels[i])});
        }
        out.push_back(std::move(q));
        out.push_back(std::move(labels));
    }
    for (const auto& lp : r.profiles) {
        CsvTable t{"profile_" + std::string(to_string(lp.scheme)), {{"feature"}}};
        for (std::size_t k = 0; k < lp.profile.members.size(); ++k) {
            t.rows[0].push_back("cluster_" + std::to_string(k));
        }
        for (std::size_t f = 0; f < lp.profile.features.size(); ++f) {
            std::vector<std::string> cells{lp.profile.features[f]};
            for (const auto& cluster : lp.profile.means) {
                cells.push_back(optnum(cluster[f]));
            }
            t.rows.push_back(std::move(cells));
        }
        out.push_back(std::move(t));
    }
    if (r.pca) {
        const auto& p = *r.pca;
        CsvTable coords{"pca_coordinates", {{"run_id", "pc1", "pc2"}}};
        for (std::size_t i = 0; i < p.run_ids.size(); ++i) {
            coords.rows.push_back({p.run_ids[i], num(p.coordinates[i][0]), num(p.coordinates[i][1])});
        }
        CsvTable load{"pca_loadings", {{"feature", "pc1", "pc2"}}};
        for (std::size_t f = 0; f < p.features.size(); ++f) {
            load.rows.push_back({p.features[f], num(p.loadings[f][0]), num(p.loadings[f][1])});
        }
        CsvTable expl{"pca_explained", {{"component", "ratio"}}};
        for (std::size_t i = 0; i < p.explained_all.size(); ++i) {
            expl.rows.push_back({"PC" + std::to_string(i + 1), num(p.explained_all[i])});
        }
        out.push_back(std::move(coords));
        out.push_back(std::move(load));
        out.push_back(std::move(expl));
    }
    if (!r.separation.empty()) {
        CsvTable t{"separation", {{"run_a", "run_b", "bias", "score_a", "score_b", "threshold_a", "threshold_b", "direction_a", "direction_b", "separated"}}};
        for (const auto& c : r.separation) {
            for (const auto& row : c.rows) {
                t.rows.push_back({c.run_a, c.run_b, row.bias, num(row.score_a), num(row.score_b), num(row.threshold_a), num(row.threshold_b),
                                  std::string(to_string(row.direction_a)), std::string(to_string(row.direction_b)), flag(row.separated)});
            }
        }
        out.push_back(std::move(t));
    }
    if (r.simulation) {
        const auto& s = *r.simulation;
        CsvTable t{"population", {{"run_id", "pretrain_id", "instruction_id", "pretraining_label", "instruction_label"}}};
        for (std::size_t i = 0; i < s.roster.size(); ++i) {
            t.rows.push_back({s.roster[i].run_id, s.roster[i].pretrain_id, s.roster[i].instruction_id,
                              std::to_string(s.pretraining.labels[i]), std::to_string(s.instruction.labels[i])});
        }
        out.push_back(std::move(t));
    }
    if (r.administration) {
        const auto& s = r.administration->stats;
        out.push_back({"administration",
                       {{"cases", "records", "answered", "non_responses", "failed_requests", "unparsed", "ambiguous", "retries"},
                        {std::to_string(s.cases), std::to_string(s.records), std::to_string(s.answered), std::to_string(s.non_responses),
                         std::to_string(s.failed_requests), std::to_string(s.unparsed), std::to_string(s.ambiguous), std::to_string(s.retries)}}});
    }
    return out;
}

/**
 * Write the report into `dir` and return the files written, in order.
 * Markdown and JSON produce `<command>.md` / `<command>.json`; CSV produces `<command>_<table>.csv` per table.
 */
inline std::vector<std::filesystem::path> write_report(const AnalysisReport& r, ReportFormat format, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    std::vector<std::filesystem::path> written;
    switch (format) {
    case ReportFormat::markdown:
        written.push_back(dir / (r.command + ".md"));
        io::write_text_file(written.back(), format_markdown(r));
        break;
    case ReportFormat::json:
        written.push_back(dir / (r.command + ".json"));
        io::write_text_file(written.back(), format_json(r));
        break;
    case ReportFormat::csv:
        for (const auto& t : format_csv(r)) {
            written.push_back(dir / (r.command + "_" + t.name + ".csv"));
            io::write_text_file(written.back(), t.text());
        }
        break;
    }
    return written;
}

}

#endif
