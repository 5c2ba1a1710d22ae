#ifndef COGBIAS_IO_CONFIG_HPP
#define COGBIAS_IO_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <toml.hpp>

#include "../attribution/study.hpp"
#include "../attribution/vectors.hpp"
#include "../randomness.hpp"
#include "../synthetic.hpp"
#include "csv.hpp"

/**
 * @file config.hpp
 * @brief Study configuration (TOML with dotted keys) and loading of the data it names.
 */

namespace cogbias::io {

struct AnalysisOptions {
    std::size_t permutations = 100;
    double significance_level = 0.95;
    PermutationMode permutation_mode = PermutationMode::size_preserving;
    std::size_t kmeans_runs = 30;
    std::size_t random_trials = 5;
    bool standardize = false;
    std::uint64_t seed = 0;
    PercentScope percent_scope = PercentScope::scenario_structured;

    bool operator==(const AnalysisOptions&) const = default;
};

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8000";
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string token_env = "COGBIAS_API_TOKEN"; ///< name of the variable holding the bearer token
    double timeout_seconds = 60;
    double temperature = 0;
    std::size_t max_tokens = 64;
    std::size_t concurrency = 4;
    std::size_t max_retries = 3;
    double backoff_seconds = 0.5;

    bool operator==(const EndpointConfig&) const = default;
};

struct StudyConfig {
    std::filesystem::path source;
    std::string text; ///< the config file verbatim

    std::vector<std::filesystem::path> matrices;
    std::optional<std::filesystem::path> responses;
    Granularity granularity = Granularity::bias_level;
    bool include_originals = true;

    AnalysisOptions analysis;
    ThresholdPolicy thresholds;

    /** Explicit roster. When empty, runs are derived from matrix column names. */
    std::vector<ModelRun> roster;

    std::optional<std::filesystem::path> separation_matrix;
    std::vector<std::pair<std::string, std::string>> separation_pairs;

    PopulationOptions simulate;

    std::optional<std::filesystem::path> cases;
    std::optional<std::string> administer_run_id;
    EndpointConfig endpoint;

    /** Effective settings as sorted key/value text, for report provenance. */
    std::vector<std::pair<std::string, std::string>> provenance() const;
};

namespace internal {

inline std::string where(const toml::node& node) {
    const auto& src = node.source();
    return " (line " + std::to_string(src.begin.line) + ")";
}

template <typename T>
std::optional<T> get_node(toml::node_view<const toml::node> node, std::string_view dotted) {
    if (!node) {
        return std::nullopt;
    }
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = node.value<double>()) {
            return *v;
        }
        throw Error("config key '" + std::string(dotted) + "' must be a number" + where(*node.node()));
    } else if constexpr (std::is_same_v<T, bool>) {
        if (auto v = node.as_boolean()) {
            return v->get();
        }
        throw Error("config key '" + std::string(dotted) + "' must be true or false" + where(*node.node()));
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (auto v = node.as_string()) {
            return v->get();
        }
        throw Error("config key '" + std::string(dotted) + "' must be a string" + where(*node.node()));
    } else {
        auto v = node.as_integer();
        if (!v || v->get() < 0) {
            throw Error("config key '" + std::string(dotted) + "' must be a non-negative integer" + where(*node.node()));
        }
        return static_cast<T>(v->get());
    }
}

template <typename T>
std::optional<T> get(const toml::table& root, std::string_view dotted) {
    return get_node<T>(root.at_path(dotted), dotted);
}

inline std::vector<std::string> get_strings(const toml::table& root, std::string_view dotted) {
    std::vector<std::string> out;
    auto node = root.at_path(dotted);
    if (!node) {
        return out;
    }
    if (auto s = node.as_string()) {
        out.push_back(s->get());
        return out;
    }
    auto arr = node.as_array();
    if (!arr) {
        throw Error("config key '" + std::string(dotted) + "' must be a string or an array of strings" + where(*node.node()));
    }
    for (const auto& el : *arr) {
        auto s = el.as_string();
        if (!s) {
            throw Error("config key '" + std::string(dotted) + "' must hold strings only" + where(el));
        }
        out.push_back(s->get());
    }
    return out;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

}

/**
 * Parse configuration text. Relative paths resolve against `base_dir`.
 * Unknown sections are ignored; malformed values raise an error naming the key.
 */
inline StudyConfig parse_config(std::string_view text, const std::filesystem::path& base_dir, std::string_view source = "<config>") {
    using internal::get;
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        throw Error(std::string(source) + ": " + std::string(e.description()) + " (line " + std::to_string(e.source().begin.line) + ")");
    }

    StudyConfig cfg;
    cfg.source = std::filesystem::path(source);
    cfg.text = std::string(text);

    for (const auto& m : internal::get_strings(root, "data.matrices")) {
        cfg.matrices.push_back(internal::resolve(base_dir, m));
    }
    if (auto r = get<std::string>(root, "data.responses")) {
        cfg.responses = internal::resolve(base_dir, *r);
    }

    if (auto g = get<std::string>(root, "study.granularity")) {
        cfg.granularity = granularity_from_string(*g);
    }
    if (auto v = get<bool>(root, "study.include_originals")) {
        cfg.include_originals = *v;
    }

    auto& a = cfg.analysis;
    if (auto v = get<std::size_t>(root, "analysis.permutations")) {
        a.permutations = *v;
    }
    if (auto v = get<double>(root, "analysis.significance_level")) {
        if (!(*v > 0 && *v <= 1)) {
            throw Error("analysis.significance_level must be in (0, 1]");
        }
        a.significance_level = *v;
    }
    if (auto v = get<std::string>(root, "analysis.permutation_mode")) {
        a.permutation_mode = permutation_mode_from_string(*v);
    }
    if (auto v = get<std::size_t>(root, "analysis.kmeans_runs")) {
        a.kmeans_runs = *v;
    }
    if (auto v = get<std::size_t>(root, "analysis.random_trials")) {
        a.random_trials = *v;
    }
    if (auto v = get<bool>(root, "analysis.standardize")) {
        a.standardize = *v;
    }
    if (auto v = get<std::uint64_t>(root, "analysis.seed")) {
        a.seed = *v;
    }
    if (auto v = get<std::string>(root, "analysis.percent_scope")) {
        a.percent_scope = percent_scope_from_string(*v);
    }

    if (auto v = get<double>(root, "thresholds.default_n")) {
        cfg.thresholds.default_n = *v;
    }
    if (auto v = get<double>(root, "thresholds.sigma")) {
        cfg.thresholds.sigma = *v;
    }
    if (auto v = get<double>(root, "thresholds.p")) {
        cfg.thresholds.p = *v;
    }
    if (auto n = root.at_path("thresholds.n").as_table()) {
        for (const auto& [key, node] : *n) {
            auto b = find_bias(key.str());
            if (!b) {
                throw Error("thresholds.n: unknown bias '" + std::string(key.str()) + "'" + internal::where(node));
            }
            auto v = node.value<double>();
            if (!v || *v < 2) {
                throw Error("thresholds.n." + std::string(key.str()) + " must be a number >= 2" + internal::where(node));
            }
            cfg.thresholds.per_bias_n[b->name] = *v;
        }
    }

    if (auto roster = root.at_path("roster").as_table()) {
        for (const auto& [key, node] : *roster) {
            auto t = node.as_table();
            if (!t) {
                throw Error("roster." + std::string(key.str()) + " must be a table" + internal::where(node));
            }
            ModelRun run = parse_run_id(key.str());
            auto prefix = "roster." + std::string(key.str());
            auto entry = [&](const char* name) { return toml::node_view<const toml::node>(t->get(name)); };
            if (auto v = internal::get_node<std::string>(entry("pretrain"), prefix + ".pretrain")) {
                run.pretrain_id = *v;
            }
            if (auto v = internal::get_node<std::string>(entry("instruction"), prefix + ".instruction")) {
                run.instruction_id = *v;
            }
            if (auto v = internal::get_node<std::string>(entry("origin"), prefix + ".origin")) {
                run.origin = origin_from_string(*v);
                if (run.origin != Origin::seeded_replica) {
                    run.seed.reset();
                }
            }
            if (auto v = internal::get_node<std::uint32_t>(entry("seed"), prefix + ".seed")) {
                run.seed = *v;
            }
            cfg.roster.push_back(std::move(run));
        }
    }

    if (auto v = get<std::string>(root, "separation.matrix")) {
        cfg.separation_matrix = internal::resolve(base_dir, *v);
    }
    if (auto pairs = root.at_path("separation.pairs")) {
        auto arr = pairs.as_array();
        if (!arr) {
            throw Error("separation.pairs must be an array of [run_a, run_b] pairs");
        }
        for (const auto& el : *arr) {
            auto pair = el.as_array();
            if (!pair || pair->size() != 2 || !(*pair)[0].is_string() || !(*pair)[1].is_string()) {
                throw Error("separation.pairs entries must be [run_a, run_b]" + internal::where(el));
            }
            cfg.separation_pairs.emplace_back(*(*pair)[0].value<std::string>(), *(*pair)[1].value<std::string>());
        }
    }

    auto& s = cfg.simulate;
    if (auto v = get<std::size_t>(root, "simulate.n_per_cell")) {
        s.n_per_cell = *v;
    }
    if (auto v = get<std::size_t>(root, "simulate.features")) {
        s.features = *v;
    }
    if (auto v = get<double>(root, "simulate.pretrain_effect")) {
        s.pretrain_effect = *v;
    }
    if (auto v = get<double>(root, "simulate.instruction_effect")) {
        s.instruction_effect = *v;
    }
    if (auto v = get<double>(root, "simulate.noise_sigma")) {
        s.noise_sigma = *v;
    }
    s.seed = cfg.analysis.seed;

    if (auto v = get<std::string>(root, "harness.cases")) {
        cfg.cases = internal::resolve(base_dir, *v);
    }
    if (auto v = get<std::string>(root, "harness.run_id")) {
        cfg.administer_run_id = *v;
    }
    auto& e = cfg.endpoint;
    if (auto v = get<std::string>(root, "endpoint.base_url")) {
        e.base_url = *v;
    }
    if (auto v = get<std::string>(root, "endpoint.path")) {
        e.path = *v;
    }
    if (auto v = get<std::string>(root, "endpoint.model")) {
        e.model = *v;
    }
    if (auto v = get<std::string>(root, "endpoint.token_env")) {
        e.token_env = *v;
    }
    if (auto v = get<double>(root, "endpoint.timeout_seconds")) {
        e.timeout_seconds = *v;
    }
    if (auto v = get<double>(root, "endpoint.temperature")) {
        e.temperature = *v;
    }
    if (auto v = get<std::size_t>(root, "endpoint.max_tokens")) {
        e.max_tokens = *v;
    }
    if (auto v = get<std::size_t>(root, "endpoint.concurrency")) {
        e.concurrency = *v;
    }
    if (auto v = get<std::size_t>(root, "endpoint.max_retries")) {
        e.max_retries = *v;
    }
    if (auto v = get<double>(root, "endpoint.backoff_seconds")) {
        e.backoff_seconds = *v;
    }
    return cfg;
}

inline StudyConfig read_config(const std::filesystem::path& path) {
    auto text = read_text_file(path);
    return parse_config(text, path.parent_path(), path.string());
}

inline std::vector<std::pair<std::string, std::string>> StudyConfig::provenance() const {
    std::vector<std::pair<std::string, std::string>> out;
    auto add = [&](std::string k, std::string v) { out.emplace_back(std::move(k), std::move(v)); };
    add("config", source.generic_string());
    for (std::size_t i = 0; i < matrices.size(); ++i) {
        add("data.matrices[" + std::to_string(i) + "]", matrices[i].generic_string());
    }
    add("study.granularity", std::string(to_string(granularity)));
    add("study.include_originals", include_originals ? "true" : "false");
    add("analysis.permutations", std::to_string(analysis.permutations));
    add("analysis.significance_level", format_double(analysis.significance_level));
    add("analysis.permutation_mode", std::string(to_string(analysis.permutation_mode)));
    add("analysis.kmeans_runs", std::to_string(analysis.kmeans_runs));
    add("analysis.random_trials", std::to_string(analysis.random_trials));
    add("analysis.standardize", analysis.standardize ? "true" : "false");
    add("analysis.seed", std::to_string(analysis.seed));
    add("analysis.percent_scope", std::string(to_string(analysis.percent_scope)));
    add("thresholds.default_n", format_double(thresholds.default_n));
    add("thresholds.sigma", format_double(thresholds.sigma));
    add("thresholds.p", format_double(thresholds.p));
    for (const auto& [bias, n] : thresholds.per_bias_n) {
        add("thresholds.n." + bias, format_double(n));
    }
    std::sort(out.begin(), out.end());
    return out;
}

/** Matrices and roster named by a config, joined into one study. */
struct Study {
    ScoreMatrix matrix;
    std::vector<ModelRun> roster;
    std::vector<std::string> warnings;
};

/**
 * Read every configured matrix and join them column-wise. Every column must be in the explicit
 * roster when one is given; otherwise the roster is derived from the column names.
 */
inline Study load_study(const StudyConfig& cfg) {
    if (cfg.matrices.empty()) {
        throw Error("config names no score matrices (data.matrices)");
    }
    Study study;
    for (std::size_t i = 0; i < cfg.matrices.size(); ++i) {
        auto m = read_score_matrix(cfg.matrices[i], cfg.granularity);
        study.matrix = i == 0 ? std::move(m) : study.matrix.concat_columns(m);
    }
    for (const auto& col : study.matrix.cols()) {
        if (cfg.roster.empty()) {
            study.roster.push_back(parse_run_id(col));
        } else if (auto run = find_run(cfg.roster, col)) {
            study.roster.push_back(*run);
        } else {
            throw Error("run '" + col + "' is not in the configured roster");
        }
    }
    return study;
}

/** Runs that enter the clustering analyses, honouring `study.include_originals`. */
inline std::vector<std::string> analysis_runs(const StudyConfig& cfg, const Study& study) {
    std::vector<std::string> out;
    for (const auto& run : study.roster) {
        if (cfg.include_originals || run.origin != Origin::original_full_finetune) {
            out.push_back(run.run_id);
        }
    }
    return out;
}

/** Clustering options from the analysis section; every stochastic step derives from `analysis.seed`. */
inline ClusteringOptions clustering_options(const StudyConfig& cfg) {
    ClusteringOptions o;
    o.permutation.permutations = cfg.analysis.permutations;
    o.permutation.level = cfg.analysis.significance_level;
    o.permutation.mode = cfg.analysis.permutation_mode;
    o.permutation.seed = cfg.analysis.seed;
    o.kmeans.runs = cfg.analysis.kmeans_runs;
    o.kmeans.first_seed = cfg.analysis.seed;
    o.random_trials = cfg.analysis.random_trials;
    o.random_seed = cfg.analysis.seed;
    return o;
}

}

#endif
