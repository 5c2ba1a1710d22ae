#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cogbias/cogbias.hpp"
#include "cogbias/harness_http.hpp"

namespace fs = std::filesystem;
using namespace cogbias;

namespace {

struct CommonFlags {
    std::string config;
    std::vector<std::string> matrices;
    std::string out = ".";
    std::string format = "md";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "Study config (TOML)");
    sub->add_option("--out", f.out, "Output directory")->capture_default_str();
    sub->add_option("--format", f.format, "Report format")->check(CLI::IsMember({"md", "csv", "json"}))->capture_default_str();
    sub->add_option("--seed", f.seed, "Seed for stochastic steps (overrides analysis.seed)");
}

io::StudyConfig load_config(const CommonFlags& f) {
    io::StudyConfig cfg;
    if (!f.config.empty()) {
        cfg = io::read_config(f.config);
    } else {
        cfg.source = "<flags>";
    }
    for (const auto& m : f.matrices) {
        cfg.matrices.emplace_back(m);
    }
    if (f.seed) {
        cfg.analysis.seed = *f.seed;
        cfg.simulate.seed = *f.seed;
    }
    return cfg;
}

AnalysisReport new_report(std::string command, const io::StudyConfig& cfg) {
    AnalysisReport r;
    r.command = std::move(command);
    r.provenance = cfg.provenance();
    r.config_text = cfg.text;
    return r;
}

void emit(const AnalysisReport& report, const CommonFlags& f) {
    for (const auto& path : write_report(report, report_format_from_string(f.format), f.out)) {
        std::cout << path.generic_string() << "\n";
    }
    for (const auto& w : report.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
}

BiasVectorSet study_vectors(const io::StudyConfig& cfg, const io::Study& study, AnalysisReport& report) {
    auto runs = io::analysis_runs(cfg, study);
    auto built = build_bias_vectors(study.matrix, runs);
    report.warnings.insert(report.warnings.end(), built.warnings.begin(), built.warnings.end());
    if (!built.dropped.empty()) {
        report.warnings.push_back(std::to_string(built.dropped.size()) + " feature(s) dropped because some runs lack them");
    }
    return cfg.analysis.standardize ? standardize(built.vectors) : built.vectors;
}

std::vector<ResponseRecord> load_responses(const io::StudyConfig& cfg, const std::string& flag, AnalysisReport& report) {
    fs::path path;
    if (!flag.empty()) {
        path = flag;
    } else if (cfg.responses) {
        path = *cfg.responses;
    } else {
        throw Error("no response log given (--responses or data.responses)");
    }
    auto log = io::read_responses(path);
    for (const auto& w : log.warnings) {
        report.warnings.push_back(path.generic_string() + ": " + w);
    }
    return std::move(log.records);
}

int run_validate(const CommonFlags& f, const std::string& responses) {
    auto cfg = load_config(f);
    auto report = new_report("validate", cfg);
    auto records = load_responses(cfg, responses, report);
    report.validation = validate_study(cfg.roster, records);
    emit(report, f);
    if (!report.validation->ok()) {
        std::cerr << report.validation->issues.size() << " validation issue(s)\n";
        return 1;
    }
    return 0;
}

int run_score(const CommonFlags& f, const std::string& responses, const std::string& granularity) {
    auto cfg = load_config(f);
    if (!granularity.empty()) {
        cfg.granularity = granularity_from_string(granularity);
    }
    auto report = new_report("score", cfg);
    auto records = load_responses(cfg, responses, report);
    auto scored = score_responses(records);
    auto matrix = aggregate_scores(scored.instances, cfg.granularity, scored.cells);
    fs::create_directories(f.out);
    auto matrix_path = fs::path(f.out) / "scores.csv";
    io::write_score_matrix(matrix_path, matrix);
    std::cout << matrix_path.generic_string() << "\n";
    report.scoring = ScoreSummary{cfg.granularity, matrix.num_rows(), matrix.num_cols(), "scores.csv", scored.coverage};
    emit(report, f);
    return 0;
}

int run_randomness(const CommonFlags& f) {
    auto cfg = load_config(f);
    auto report = new_report("randomness", cfg);
    auto study = io::load_study(cfg);
    report.randomness = randomness_report(study.matrix, study.roster, cfg.thresholds, cfg.analysis.percent_scope);
    emit(report, f);
    return 0;
}

int run_cluster(const CommonFlags& f) {
    auto cfg = load_config(f);
    auto report = new_report("cluster", cfg);
    auto study = io::load_study(cfg);
    auto vectors = study_vectors(cfg, study, report);
    auto clustering = cluster_study(vectors, study.roster, io::clustering_options(cfg));
    auto runs = clustering.run_ids;
    report.profiles.push_back({LabelScheme::pretraining, cluster_bias_profile(study.matrix, runs, clustering.pretraining)});
    report.profiles.push_back({LabelScheme::kmeans, cluster_bias_profile(study.matrix, runs, clustering.kmeans)});
    report.clustering = std::move(clustering);
    emit(report, f);
    return 0;
}

int run_pca(const CommonFlags& f) {
    auto cfg = load_config(f);
    auto report = new_report("pca", cfg);
    auto study = io::load_study(cfg);
    report.pca = pca_project(study_vectors(cfg, study, report));
    emit(report, f);
    return 0;
}

int run_separation(const CommonFlags& f, const std::string& matrix_flag, const std::vector<std::string>& pair_flags) {
    auto cfg = load_config(f);
    auto report = new_report("separation", cfg);
    fs::path path;
    if (!matrix_flag.empty()) {
        path = matrix_flag;
    } else if (cfg.separation_matrix) {
        path = *cfg.separation_matrix;
    } else {
        throw Error("no separation matrix given (--matrix or separation.matrix)");
    }
    auto matrix = io::read_score_matrix(path);
    auto pairs = cfg.separation_pairs;
    for (const auto& p : pair_flags) {
        auto colon = p.find(':');
        if (colon == std::string::npos) {
            throw Error("--pair expects run_a:run_b, got '" + p + "'");
        }
        pairs.emplace_back(p.substr(0, colon), p.substr(colon + 1));
    }
    if (pairs.empty()) {
        throw Error("no run pairs to compare (--pair or separation.pairs)");
    }
    for (const auto& [a, b] : pairs) {
        auto sa = scored_biases(matrix, a, cfg.thresholds);
        auto sb = scored_biases(matrix, b, cfg.thresholds);
        report.separation.push_back({a, b, separation_check(sa, sb, cfg.thresholds.sigma, cfg.thresholds.p)});
    }
    emit(report, f);
    return 0;
}

int run_simulate(const CommonFlags& f) {
    auto cfg = load_config(f);
    auto report = new_report("simulate", cfg);
    auto pop = generate_population(cfg.simulate);
    fs::create_directories(f.out);
    auto matrix_path = fs::path(f.out) / "population.csv";
    io::write_score_matrix(matrix_path, pop.matrix);
    std::cout << matrix_path.generic_string() << "\n";
    report.simulation = SimulationSummary{cfg.simulate, pop.roster, pop.pretraining, pop.instruction, "population.csv"};
    emit(report, f);
    return 0;
}

int run_administer(const CommonFlags& f, const std::string& cases_flag, const std::string& run_id_flag) {
    auto cfg = load_config(f);
    auto report = new_report("administer", cfg);
    fs::path cases_path;
    if (!cases_flag.empty()) {
        cases_path = cases_flag;
    } else if (cfg.cases) {
        cases_path = *cfg.cases;
    } else {
        throw Error("no test cases given (--cases or harness.cases)");
    }
    std::string run_id = !run_id_flag.empty() ? run_id_flag : cfg.administer_run_id.value_or("");
    if (run_id.empty()) {
        throw Error("no run id given (--run-id or harness.run_id)");
    }
    auto cases = read_cases(cases_path);
    HttpChatTransport transport(cfg.endpoint);
    auto result = administer(cases, transport, administer_options(cfg, run_id));
    fs::create_directories(f.out);
    auto responses_path = fs::path(f.out) / "responses.jsonl";
    io::write_responses(responses_path, result.records);
    std::cout << responses_path.generic_string() << "\n";
    report.administration = AdministerSummary{run_id, "responses.jsonl", result.stats};
    emit(report, f);
    if (result.stats.records > 0 && result.stats.failed_requests == result.stats.records) {
        std::cerr << "every request failed";
        if (!result.stats.errors.empty()) {
            std::cerr << " (" << result.stats.errors.front() << ")";
        }
        std::cerr << "\n";
        return 1;
    }
    return 0;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Seed-variability and bias-attribution analyses for language-model bias scores"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string responses, granularity, sep_matrix, cases, run_id;
    std::vector<std::string> pairs;

    auto validate = app.add_subcommand("validate", "Check a response log for structural defects");
    add_common(validate, flags);
    validate->add_option("--responses", responses, "Response log (JSONL)");

    auto score = app.add_subcommand("score", "Turn a response log into a score matrix");
    add_common(score, flags);
    score->add_option("--responses", responses, "Response log (JSONL)");
    score->add_option("--granularity", granularity, "bias-level or scenario-level")->check(CLI::IsMember({"bias-level", "scenario-level"}));

    auto randomness = app.add_subcommand("randomness", "Seed variability and aggregate agreement");
    add_common(randomness, flags);
    randomness->add_option("--matrix", flags.matrices, "Score matrix CSV (repeatable)");

    auto cluster = app.add_subcommand("cluster", "Clustering quality of pretraining, instruction, random and K-Means labelings");
    add_common(cluster, flags);
    cluster->add_option("--matrix", flags.matrices, "Score matrix CSV (repeatable)");

    auto pca = app.add_subcommand("pca", "Two-component PCA of the bias vectors");
    add_common(pca, flags);
    pca->add_option("--matrix", flags.matrices, "Score matrix CSV (repeatable)");

    auto separation = app.add_subcommand("separation", "Opposite significant bias directions between two runs");
    add_common(separation, flags);
    separation->add_option("--matrix", sep_matrix, "Score matrix CSV holding both runs");
    separation->add_option("--pair", pairs, "run_a:run_b (repeatable)");

    auto simulate = app.add_subcommand("simulate", "Synthetic population with planted effects");
    add_common(simulate, flags);

    auto admin = app.add_subcommand("administer", "Send test cases to a chat-completion endpoint");
    add_common(admin, flags);
    admin->add_option("--cases", cases, "Test cases (JSONL)");
    admin->add_option("--run-id", run_id, "run_id recorded on every response");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*validate) {
            return run_validate(flags, responses);
        }
        if (*score) {
            return run_score(flags, responses, granularity);
        }
        if (*randomness) {
            return run_randomness(flags);
        }
        if (*cluster) {
            return run_cluster(flags);
        }
        if (*pca) {
            return run_pca(flags);
        }
        if (*separation) {
            return run_separation(flags, sep_matrix, pairs);
        }
        if (*simulate) {
            return run_simulate(flags);
        }
        if (*admin) {
            return run_administer(flags, cases, run_id);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
