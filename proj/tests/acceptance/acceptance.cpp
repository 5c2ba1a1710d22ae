// Acceptance checks on the bundled reference data. Prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "cogbias/cogbias.hpp"

using namespace cogbias;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << " [miss: " << what << "]";
        }
    }
};

bool near(double value, double target, double tol) {
    return std::abs(value - target) <= tol + 1e-9;
}

std::string fmt(double v, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

const GroupTable& group_named(const RandomnessReport& r, const std::string& name) {
    for (const auto& g : r.groups) {
        if (g.group.name() == name) {
            return g;
        }
    }
    throw Error("no seed group " + name);
}

int report(int number, const Check& c) {
    std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << number << ":" << c.detail.str() << "\n";
    return c.ok ? 0 : 1;
}

std::map<std::string, std::vector<std::string>> fixture(const std::string& name) {
    auto text = io::read_text_file(std::string(COGBIAS_TEST_DATA_DIR "/") + name);
    std::map<std::string, std::vector<std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (++n == 1 || io::trim(line).empty()) {
            continue;
        }
        auto cells = io::split_csv_line(line, n);
        auto key = io::trim(cells[0]);
        cells.erase(cells.begin());
        out[key] = cells;
    }
    return out;
}

Check threshold_check() {
    Check c;
    double t = neutrality_threshold(1000, 1.0, 0.05).threshold;
    c.detail << " threshold(n=1000) = " << fmt(t);
    c.require(near(t, 0.088, 0.001), "0.088 +- 0.001");
    return c;
}

Check seed_std_check(const io::Study& study) {
    Check c;
    std::vector<std::string> tulu{"olmo-tulu-s1", "olmo-tulu-s2", "olmo-tulu-s3"};
    std::size_t matched = 0, total = 0;
    double worst = 0;
    std::string worst_bias;
    for (const auto& [name, cells] : fixture("table4_std.csv")) {
        std::vector<double> seeds;
        for (const auto& run : tulu) {
            seeds.push_back(*study.matrix.at(bias(name).name, run));
        }
        double diff = std::abs(seed_std(seeds) - std::stod(cells[0]));
        ++total;
        if (diff <= 0.005 + 1e-9) {
            ++matched;
        } else if (diff > worst) {
            worst = diff;
            worst_bias = name;
        }
        if (name == "Anchoring" || name == "Framing Effect") {
            c.detail << " " << name << " " << fmt(seed_std(seeds), 3);
        }
    }
    c.detail << "; " << matched << "/" << total << " biases within 0.005";
    c.require(total == 32, "32 rows");
    c.require(matched == total, "worst " + worst_bias + " off by " + fmt(worst));
    return c;
}

Check table8_check(const RandomnessReport& r) {
    Check c;
    const auto& olmo = *group_named(r, "olmo-tulu").summary;
    const auto& t5 = *group_named(r, "t5-flan").summary;
    c.detail << " OLMo majority " << fmt(olmo.majority_pct, 2) << "% agg " << fmt(olmo.agg_pct, 2)
             << "%; T5 majority " << fmt(t5.majority_pct, 2) << "% agg " << fmt(t5.agg_pct, 2) << "%";
    c.require(near(olmo.majority_pct, 63.33, 3.4), "OLMo majority 63.33");
    c.require(near(t5.majority_pct, 60.00, 3.4), "T5 majority 60.00");
    c.require(near(olmo.agg_pct, 66.67, 3.4), "OLMo agg 66.67");
    c.require(near(t5.agg_pct, 66.67, 3.4), "T5 agg 66.67");
    return c;
}

Check correlation_check(const RandomnessReport& r) {
    Check c;
    double olmo = *group_named(r, "olmo-tulu").correlation;
    double t5 = *group_named(r, "t5-flan").correlation;
    c.detail << " r(OLMo) = " << fmt(olmo, 3) << ", r(T5) = " << fmt(t5, 3);
    c.require(near(olmo, 0.49, 0.05), "OLMo 0.49 +- 0.05");
    c.require(near(t5, 0.59, 0.05), "T5 0.59 +- 0.05");
    return c;
}

Check table1_check(const ClusteringReport& rep) {
    Check c;
    const auto& pre = rep.row(LabelScheme::pretraining);
    const auto& q = pre.quality;
    c.detail << " pretraining " << fmt(q.silhouette) << " / " << fmt(q.calinski_harabasz) << " / " << fmt(q.davies_bouldin)
             << " / " << fmt(q.mean_intra_distance) << " / " << fmt(q.mean_inter_distance);
    c.require(near(q.silhouette, 0.104, 0.03), "silhouette");
    c.require(near(q.calinski_harabasz, 2.753, 0.5), "calinski");
    c.require(near(q.davies_bouldin, 2.036, 0.3), "davies");
    c.require(near(q.mean_intra_distance, 1.183, 0.05), "intra");
    c.require(near(q.mean_inter_distance, 1.327, 0.05), "inter");
    const auto& ins = rep.row(LabelScheme::instruction).quality;
    const auto& rnd = rep.row(LabelScheme::random).quality;
    std::size_t ordered = 0;
    for (auto m : all_quality_metrics) {
        bool ok = better(m, metric_value(q, m), metric_value(ins, m)) && better(m, metric_value(ins, m), metric_value(rnd, m));
        ordered += ok;
        c.require(ok, "ordering on " + std::string(to_string(m)));
    }
    c.detail << "; ordering holds on " << ordered << "/5";
    c.require((*pre.significant)[0], "silhouette significance");
    c.require((*pre.significant)[1], "calinski significance");
    c.detail << "; significant sil=" << (*pre.significant)[0] << " ch=" << (*pre.significant)[1];
    return c;
}

Check kmeans_check(const ClusteringReport& rep) {
    Check c;
    double sil = rep.row(LabelScheme::kmeans).quality.silhouette;
    c.detail << " silhouette " << fmt(sil) << ", disagreements with pretraining " << rep.kmeans_disagreements << "/14 (seed "
             << rep.kmeans_seed << ", " << rep.kmeans_valid_runs << " valid restarts)";
    c.require(near(sil, 0.104, 0.03), "silhouette 0.104 +- 0.03");
    c.require(rep.kmeans_disagreements <= 2, "at most 2 disagreements");
    return c;
}

Check pca_check(const PcaProjection& p) {
    Check c;
    c.detail << " PC1 " << fmt(100 * p.explained[0], 2) << "%, PC2 " << fmt(100 * p.explained[1], 2) << "%";
    c.require(near(p.explained[0], 0.296, 0.03), "PC1 29.6%");
    c.require(near(p.explained[1], 0.183, 0.03), "PC2 18.3%");
    return c;
}

Check separation_check_rows(const io::StudyConfig& cfg) {
    Check c;
    auto m = io::read_score_matrix(*cfg.separation_matrix);
    auto rows = [&](const std::string& a, const std::string& b) {
        return separation_check(scored_biases(m, a, cfg.thresholds), scored_biases(m, b, cfg.thresholds), cfg.thresholds.sigma, cfg.thresholds.p);
    };
    auto ft = rows("olmo-ft", "t5-ft");
    auto base = rows("olmo-base", "t5-base");
    for (const auto& r : ft) {
        c.detail << " FT " << r.bias << "=" << (r.separated ? "separated" : "not");
        if (r.bias == "Certainty" || r.bias == "Belief Valid") {
            c.require(r.separated, "FT " + r.bias + " separated");
        }
    }
    for (const auto& r : base) {
        c.require(!r.separated, "Base " + r.bias + " not separated");
    }
    c.detail << "; Base rows separated: " << std::count_if(base.begin(), base.end(), [](const SeparationRow& r) { return r.separated; });
    return c;
}

Check property_check() {
    Check c;
    std::mt19937_64 gen(20240601);
    std::uniform_real_distribution<double> u(-1, 1);

    std::size_t sil_cases = 0, sil_bad = 0;
    for (int t = 0; t < 1000; ++t, ++sil_cases) {
        std::size_t n = 4 + gen() % 12, d = 1 + gen() % 6;
        BiasVectorSet set;
        set.features.assign(d, "f");
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> p(d);
            for (auto& v : p) {
                v = u(gen);
            }
            set.vectors.push_back({"r" + std::to_string(i), p});
        }
        std::vector<int> labels(n, 0);
        std::size_t ones = 2 + gen() % (n - 3);
        std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(ones), 1);
        std::shuffle(labels.begin(), labels.end(), gen);
        double s = cluster_quality(PointCloud(set), labels).silhouette;
        sil_bad += !(s >= -1 && s <= 1);
    }
    c.require(sil_bad == 0, "silhouette range");

    std::size_t score_bad = 0;
    std::uniform_int_distribution<int> likert(1, 7);
    for (int t = 0; t < 1000; ++t) {
        double a1 = likert(gen), a2 = likert(gen), scale = 0.1 + std::abs(u(gen)) * 10;
        int k = gen() % 2 ? 1 : -1;
        double s = score_scale_pair(a1, a2, k);
        score_bad += std::abs(score_scale_pair(a2, a1, k) + s) > 1e-12;
        score_bad += std::abs(score_scale_pair(a1, a2, -k) + s) > 1e-12;
        score_bad += std::abs(score_scale_pair(scale * a1, scale * a2, k) - s) > 1e-12;
    }
    c.require(score_bad == 0, "scale-pair properties");

    const int studies = 50;
    int rejections = 0;
    for (int s = 0; s < studies; ++s) {
        PopulationOptions o;
        o.seed = 7000 + static_cast<std::uint64_t>(s);
        o.pretrain_effect = 0;
        o.instruction_effect = 0;
        o.noise_sigma = 0.3;
        auto pop = generate_population(o);
        auto tests = permutation_test_all(PointCloud(population_vectors(pop)), pop.pretraining.labels,
                                          {100, 0.95, PermutationMode::size_preserving, static_cast<std::uint64_t>(s)});
        rejections += tests[0].significant;
    }
    double rate = static_cast<double>(rejections) / studies;
    c.require(rate <= 0.10, "null rejection rate");

    int ari_bad = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        PopulationOptions o;
        o.seed = s;
        o.pretrain_effect = 0.8;
        o.noise_sigma = 0.02;
        auto pop = generate_population(o);
        auto ref = kmeans_reference(population_vectors(pop), {2, 30, s});
        ari_bad += adjusted_rand_index(ref.labeling.labels, pop.pretraining.labels) != 1.0;
    }
    c.require(ari_bad == 0, "K-Means ARI on planted populations");

    auto cfg = io::read_config(COGBIAS_DATA_DIR "/reference.toml");
    auto study = io::load_study(cfg);
    AnalysisReport r;
    r.command = "roundtrip";
    r.provenance = cfg.provenance();
    r.config_text = cfg.text;
    r.randomness = randomness_report(study.matrix, study.roster, cfg.thresholds, cfg.analysis.percent_scope);
    auto vectors = build_bias_vectors(study.matrix).vectors;
    auto opts = io::clustering_options(cfg);
    opts.permutation.permutations = 20;
    r.clustering = cluster_study(vectors, study.roster, opts);
    r.pca = pca_project(vectors);
    bool round_trip = parse_report_json(format_json(r)) == r;
    c.require(round_trip, "JSON round trip");

    c.detail << " silhouette fuzz " << sil_cases << " cases (" << sil_bad << " out of range); scale-pair fuzz 1000 cases ("
             << score_bad << " violations); null rejection " << rejections << "/" << studies << " = " << fmt(100 * rate, 1)
             << "%; planted ARI failures " << ari_bad << "/10; JSON round trip " << (round_trip ? "equal" : "differs");
    return c;
}

std::string slurp(const fs::path& p) {
    return io::read_text_file(p);
}

Check determinism_check(const std::string& cli, const fs::path& work) {
    Check c;
    std::size_t compared = 0;
    for (const std::string cmd : {"cluster", "pca", "simulate"}) {
        for (const std::string format : {"md", "json", "csv"}) {
            fs::path dirs[2] = {work / (cmd + "_" + format + "_a"), work / (cmd + "_" + format + "_b")};
            for (const auto& d : dirs) {
                fs::remove_all(d);
                std::string line = "\"" + cli + "\" " + cmd + " --config \"" COGBIAS_DATA_DIR "/reference.toml\" --seed 0 --format " +
                                   format + " --out \"" + d.string() + "\" > /dev/null";
                if (std::system(line.c_str()) != 0) {
                    c.require(false, cmd + " --format " + format + " exited non-zero");
                }
            }
            if (!fs::exists(dirs[0])) {
                continue;
            }
            std::size_t files = 0;
            for (const auto& entry : fs::directory_iterator(dirs[0])) {
                ++files;
                auto other = dirs[1] / entry.path().filename();
                bool same = fs::exists(other) && slurp(entry.path()) == slurp(other);
                c.require(same, entry.path().filename().string() + " differs");
                compared += same;
            }
            std::size_t files_b = std::distance(fs::directory_iterator(dirs[1]), fs::directory_iterator());
            c.require(files == files_b && files > 0, cmd + " file sets");
        }
    }
    c.detail << " " << compared << " output files byte-identical across two runs of cluster, pca, simulate";
    return c;
}

}

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: acceptance <cogbias-cli> <work-dir>\n";
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path work = argv[2];
    fs::create_directories(work);

    try {
        auto cfg = io::read_config(COGBIAS_DATA_DIR "/reference.toml");
        auto study = io::load_study(cfg);
        auto randomness = randomness_report(study.matrix, study.roster, cfg.thresholds, cfg.analysis.percent_scope);
        auto vectors = build_bias_vectors(study.matrix, io::analysis_runs(cfg, study)).vectors;
        auto clustering = cluster_study(vectors, study.roster, io::clustering_options(cfg));
        auto pca = pca_project(vectors);

        int failures = 0;
        failures += report(1, threshold_check());
        failures += report(2, seed_std_check(study));
        failures += report(3, table8_check(randomness));
        failures += report(4, correlation_check(randomness));
        failures += report(5, table1_check(clustering));
        failures += report(6, kmeans_check(clustering));
        failures += report(7, pca_check(pca));
        failures += report(8, separation_check_rows(cfg));
        failures += report(9, property_check());
        failures += report(10, determinism_check(cli, work));
        std::cout << (10 - failures) << "/10 criteria pass\n";
        return failures == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
