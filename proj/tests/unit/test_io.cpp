#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "cogbias/cogbias.hpp"
#include "helpers.hpp"

using namespace cogbias;
using testing_support::bundled_matrix;
using testing_support::roster_of;

namespace fs = std::filesystem;

namespace {

const char* kRecord =
    R"({"run_id":"olmo-tulu-s1","bias":"Anchoring","scenario_id":2,"instance_id":0,"condition":"control","scale":"likert7","answer_value":4,"answer_option":null,"k":1,"target_option":null})";

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("cogbias_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

AnalysisReport full_report() {
    auto m = bundled_matrix();
    auto roster = roster_of(m);
    auto vectors = build_bias_vectors(m).vectors;
    AnalysisReport r;
    r.command = "cluster";
    r.provenance = {{"analysis.seed", "0"}, {"data.matrices", "a.csv"}};
    r.config_text = "[analysis]\nseed = 0\n";
    r.warnings = {"something odd"};
    r.randomness = randomness_report(m, roster, ThresholdPolicy{});
    ClusteringOptions o;
    o.permutation.permutations = 20;
    r.clustering = cluster_study(vectors, roster, o);
    r.profiles.push_back({LabelScheme::pretraining, cluster_bias_profile(m, r.clustering->run_ids, r.clustering->pretraining)});
    r.pca = pca_project(vectors);
    auto t3 = io::read_score_matrix(COGBIAS_DATA_DIR "/table3_scores.csv");
    r.separation.push_back({"olmo-ft", "t5-ft", separation_check(scored_biases(t3, "olmo-ft", {}), scored_biases(t3, "t5-ft", {}))});
    auto pop = generate_population(PopulationOptions{});
    r.simulation = SimulationSummary{PopulationOptions{}, pop.roster, pop.pretraining, pop.instruction, "population.csv"};
    r.validation = ValidationReport{};
    r.scoring = ScoreSummary{Granularity::scenario_level, 60, 2, "scores.csv", Coverage{10, 1, 4, 1, 0, 0}};
    AdministerStats stats;
    stats.cases = 2;
    stats.records = 4;
    stats.answered = 3;
    stats.errors = {"HTTP 500"};
    r.administration = AdministerSummary{"m-x-s1", "responses.jsonl", stats};
    return r;
}

}

TEST(Csv, BundledMatricesHaveExpectedShape) {
    auto olmo = io::read_score_matrix(COGBIAS_DATA_DIR "/olmo_scores.csv");
    auto t5 = io::read_score_matrix(COGBIAS_DATA_DIR "/t5_scores.csv");
    EXPECT_EQ(olmo.num_rows(), 33u);
    EXPECT_EQ(olmo.num_cols(), 7u);
    EXPECT_EQ(t5.num_cols(), 7u);
    EXPECT_TRUE(olmo.at("MMLU", "olmo-tulu-s1"));
    EXPECT_EQ(*olmo.at("Anchoring", "olmo-tulu-s1"), 0.14);
}

TEST(Csv, RangeErrorNamesValueAndLine) {
    try {
        io::parse_score_matrix("feature,a\nAnchoring,0.2\nHalo Effect,1.5\n", Granularity::bias_level, "x.csv");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("1.5"), std::string::npos) << msg;
        EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("x.csv"), std::string::npos) << msg;
    }
}

TEST(Csv, StructuralErrors) {
    EXPECT_THROW(io::parse_score_matrix("feature,a\nAnchoring,0.2\nAnchoring,0.3\n", Granularity::bias_level), Error);
    EXPECT_THROW(io::parse_score_matrix("feature,a,b\nAnchoring,0.2\n", Granularity::bias_level), Error);
    EXPECT_THROW(io::parse_score_matrix("feature,a\nAnchoring,abc\n", Granularity::bias_level), Error);
    EXPECT_THROW(io::parse_score_matrix("", Granularity::bias_level), Error);
}

TEST(Csv, MissingCellsAndQuotedLabels) {
    auto m = io::parse_score_matrix("feature,a,b\n\"Anchoring\",,0.5\nMMLU:anatomy,0.4,\n", Granularity::bias_level);
    EXPECT_FALSE(m.at("Anchoring", "a"));
    EXPECT_EQ(m.at("Anchoring", "b"), 0.5);
    EXPECT_FALSE(m.at("MMLU:anatomy", "b"));
}

TEST(Csv, ShortestRoundTripIsExact) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<std::optional<double>> values;
    for (int i = 0; i < 200; ++i) {
        values.emplace_back(i % 17 == 0 ? std::optional<double>() : u(gen));
    }
    std::vector<std::string> rows;
    for (int i = 0; i < 100; ++i) {
        rows.push_back("m" + std::to_string(i));
    }
    ScoreMatrix m(Granularity::bias_level, rows, {"a", "b"}, values);
    auto text = io::format_score_matrix(m);
    EXPECT_EQ(io::parse_score_matrix(text, Granularity::bias_level), m);
    auto fixed = io::parse_score_matrix(io::format_score_matrix(m, 2), Granularity::bias_level);
    EXPECT_NEAR(*fixed.at(1, 0), *m.at(1, 0), 0.005 + 1e-12);
}

TEST(Jsonl, ParsesRecords) {
    std::string text = std::string(kRecord) + "\n\n" + kRecord + "\n" + kRecord;
    auto log = io::parse_responses(text);
    ASSERT_EQ(log.records.size(), 3u);
    EXPECT_TRUE(log.warnings.empty());
    EXPECT_EQ(log.records[0].bias.name, "Anchoring");
    EXPECT_EQ(log.records[0].answer_value, 4.0);
    EXPECT_FALSE(log.records[0].answer_option);
}

TEST(Jsonl, UnknownConditionNamesTheLine) {
    std::string bad = kRecord;
    bad.replace(bad.find("\"control\""), 9, "\"placebo\"");
    std::string text = std::string(kRecord) + "\n" + bad + "\n";
    try {
        io::parse_responses(text);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("unknown condition at line 2"), std::string::npos) << e.what();
    }
}

TEST(Jsonl, EmptyLogWarnsAndTypeErrorsThrow) {
    auto log = io::parse_responses("\n   \n");
    EXPECT_TRUE(log.records.empty());
    ASSERT_EQ(log.warnings.size(), 1u);
    EXPECT_EQ(log.warnings[0], "no response records");

    std::string bad = kRecord;
    bad.replace(bad.find("\"k\":1"), 5, "\"k\":\"1\"");
    EXPECT_THROW(io::parse_responses(bad), Error);
    EXPECT_THROW(io::parse_responses("{not json"), Error);
    std::string unknown_bias = kRecord;
    unknown_bias.replace(unknown_bias.find("Anchoring"), 9, "Gamblers");
    EXPECT_THROW(io::parse_responses(unknown_bias), Error);
}

TEST(Jsonl, FormatRoundTrip) {
    auto log = io::parse_responses(std::string(kRecord) + "\n" + kRecord);
    log.records[1].condition = Condition::treatment;
    log.records[1].answer_value.reset();
    log.records[1].answer_option = "B";
    auto again = io::parse_responses(io::format_responses(log.records));
    ASSERT_EQ(again.records.size(), 2u);
    EXPECT_EQ(again.records[1].condition, Condition::treatment);
    EXPECT_FALSE(again.records[1].answer_value);
    EXPECT_EQ(again.records[1].answer_option, "B");
}

TEST(Config, ParsesSectionsAndResolvesPaths) {
    const char* text = R"(
[data]
matrices = ["a.csv", "/abs/b.csv"]

[study]
granularity = "scenario-level"

[analysis]
permutations = 250
seed = 7
permutation_mode = "free"

[thresholds]
default_n = 500

[thresholds.n]
Certainty = 120

[roster.x-y-s1]
pretrain = "x"
instruction = "y"
origin = "seeded-replica"
seed = 1

[separation]
pairs = [["p", "q"]]

[simulate]
features = 40
noise_sigma = 0.3

[endpoint]
model = "m"
concurrency = 2
)";
    auto cfg = io::parse_config(text, "/base", "t.toml");
    ASSERT_EQ(cfg.matrices.size(), 2u);
    EXPECT_EQ(cfg.matrices[0], fs::path("/base/a.csv"));
    EXPECT_EQ(cfg.matrices[1], fs::path("/abs/b.csv"));
    EXPECT_EQ(cfg.granularity, Granularity::scenario_level);
    EXPECT_EQ(cfg.analysis.permutations, 250u);
    EXPECT_EQ(cfg.analysis.seed, 7u);
    EXPECT_EQ(cfg.analysis.permutation_mode, PermutationMode::free);
    EXPECT_EQ(cfg.thresholds.default_n, 500);
    EXPECT_EQ(cfg.thresholds.n_for("Certainty"), 120);
    ASSERT_EQ(cfg.roster.size(), 1u);
    EXPECT_EQ(cfg.roster[0].pretrain_id, "x");
    EXPECT_EQ(cfg.roster[0].seed, 1u);
    ASSERT_EQ(cfg.separation_pairs.size(), 1u);
    EXPECT_EQ(cfg.separation_pairs[0].second, "q");
    EXPECT_EQ(cfg.simulate.features, 40u);
    EXPECT_DOUBLE_EQ(cfg.simulate.noise_sigma, 0.3);
    EXPECT_EQ(cfg.endpoint.concurrency, 2u);
    EXPECT_EQ(cfg.text, text);

    auto clustering = io::clustering_options(cfg);
    EXPECT_EQ(clustering.permutation.seed, 7u);
    EXPECT_EQ(clustering.kmeans.first_seed, 7u);
}

TEST(Config, RejectsBadValues) {
    EXPECT_THROW(io::parse_config("[analysis]\npermutations = \"many\"\n", "/"), Error);
    EXPECT_THROW(io::parse_config("[study]\ngranularity = \"galaxy\"\n", "/"), Error);
    EXPECT_THROW(io::parse_config("not toml = = 3", "/"), Error);
    EXPECT_THROW(io::read_config("/definitely/not/here.toml"), Error);
}

TEST(Config, BundledStudyLoads) {
    auto cfg = io::read_config(COGBIAS_DATA_DIR "/reference.toml");
    auto study = io::load_study(cfg);
    EXPECT_EQ(study.matrix.num_cols(), 14u);
    EXPECT_EQ(study.roster.size(), 14u);
    EXPECT_EQ(io::analysis_runs(cfg, study).size(), 14u);
    auto prov = cfg.provenance();
    EXPECT_TRUE(std::is_sorted(prov.begin(), prov.end()));
}

TEST(Report, JsonRoundTripIsExact) {
    auto r = full_report();
    auto text = format_json(r);
    auto back = parse_report_json(text);
    EXPECT_TRUE(back == r);
    EXPECT_EQ(format_json(back), text);
}

TEST(Report, MarkdownClusteringTableLayout) {
    auto r = full_report();
    auto md = format_markdown(r);
    EXPECT_NE(md.find("| Granularity | Clustering | Silhouette | Calinski | Davies | Intra | Inter |"), std::string::npos);
    EXPECT_NE(md.find("| Bias Level | Random |"), std::string::npos);
    EXPECT_NE(md.find("|  | Pretraining |"), std::string::npos);
    EXPECT_LT(md.find("analysis.seed"), md.find("| Granularity |"));
    EXPECT_EQ(md, format_markdown(r));
}

TEST(Report, WritesEveryFormatDeterministically) {
    auto r = full_report();
    auto a = scratch("a"), b = scratch("b");
    for (auto f : {ReportFormat::markdown, ReportFormat::json, ReportFormat::csv}) {
        auto pa = write_report(r, f, a);
        auto pb = write_report(r, f, b);
        ASSERT_EQ(pa.size(), pb.size());
        ASSERT_FALSE(pa.empty());
        for (std::size_t i = 0; i < pa.size(); ++i) {
            EXPECT_EQ(pa[i].filename(), pb[i].filename());
            EXPECT_EQ(io::read_text_file(pa[i]), io::read_text_file(pb[i]));
        }
    }
    EXPECT_TRUE(fs::exists(a / "cluster.md"));
    EXPECT_TRUE(fs::exists(a / "cluster.json"));
    EXPECT_THROW(report_format_from_string("xml"), Error);
}
