#include <cmath>

#include <gtest/gtest.h>

#include "cogbias/attribution/kmeans.hpp"
#include "cogbias/attribution/permutation.hpp"
#include "cogbias/attribution/quality.hpp"
#include "cogbias/synthetic.hpp"

using namespace cogbias;

namespace {

double silhouette_of(const Population& pop, const Labeling& labeling) {
    return cluster_quality(population_vectors(pop), labeling).silhouette;
}

}

TEST(Population, ShapeNamesAndRoster) {
    PopulationOptions o;
    auto pop = generate_population(o);
    EXPECT_EQ(pop.matrix.num_rows(), 32u);
    EXPECT_EQ(pop.matrix.num_cols(), 12u);
    EXPECT_EQ(pop.matrix.rows().front(), "Anchoring");
    EXPECT_EQ(pop.matrix.cols().front(), "pa-ia-s0");
    EXPECT_EQ(pop.roster.size(), 12u);
    EXPECT_EQ(pop.pretraining.count(0), 6u);
    for (std::size_t i = 0; i < pop.roster.size(); ++i) {
        EXPECT_EQ(parse_run_id(pop.roster[i].run_id).pretrain_id, pop.roster[i].pretrain_id);
    }

    o.features = 90;
    auto wide = generate_population(o);
    EXPECT_EQ(wide.matrix.granularity(), Granularity::scenario_level);
    EXPECT_EQ(population_vectors(wide).dimension(), 90u);
}

TEST(Population, RejectsBadOptions) {
    PopulationOptions o;
    o.noise_sigma = -1;
    EXPECT_THROW(generate_population(o), Error);
    o = {};
    o.n_per_cell = 0;
    EXPECT_THROW(generate_population(o), Error);
    o = {};
    o.pretrain_ids = {"a"};
    EXPECT_THROW(generate_population(o), Error);
}

TEST(Population, DeterministicPerSeed) {
    PopulationOptions o;
    o.seed = 17;
    auto a = generate_population(o);
    auto b = generate_population(o);
    EXPECT_EQ(a.matrix, b.matrix);
    o.seed = 18;
    EXPECT_FALSE(generate_population(o).matrix == a.matrix);
}

TEST(Population, NoiselessPlantedClustersArePerfect) {
    PopulationOptions o;
    o.noise_sigma = 0;
    o.pretrain_effect = 0.6;
    o.instruction_effect = 0;
    auto pop = generate_population(o);
    EXPECT_DOUBLE_EQ(silhouette_of(pop, pop.pretraining), 1.0);
}

TEST(Population, PretrainingBeatsInstructionWhenItsEffectIsLarger) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        PopulationOptions o;
        o.seed = seed;
        o.pretrain_effect = 0.5;
        o.instruction_effect = 0.1;
        o.noise_sigma = 0.2;
        auto pop = generate_population(o);
        EXPECT_GT(silhouette_of(pop, pop.pretraining), silhouette_of(pop, pop.instruction)) << "seed " << seed;
    }
}

TEST(Population, SilhouetteGrowsWithPretrainingEffect) {
    // Paired sign test: the larger effect should win in nearly every seed.
    int wins = 0;
    const int seeds = 40;
    for (int seed = 0; seed < seeds; ++seed) {
        PopulationOptions lo, hi;
        lo.seed = hi.seed = static_cast<std::uint64_t>(seed);
        lo.pretrain_effect = 0.2;
        hi.pretrain_effect = 0.4;
        lo.noise_sigma = hi.noise_sigma = 0.2;
        auto a = generate_population(lo);
        auto b = generate_population(hi);
        wins += silhouette_of(b, b.pretraining) > silhouette_of(a, a.pretraining);
    }
    // P(X >= 30 | n = 40, p = 0.5) < 0.001.
    EXPECT_GE(wins, 30);
}

TEST(Population, KmeansRecoversPretrainingAsNoiseVanishes) {
    for (double noise : {0.2, 0.1, 0.05, 0.01}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            PopulationOptions o;
            o.seed = seed;
            o.noise_sigma = noise;
            o.pretrain_effect = 0.6;
            auto pop = generate_population(o);
            auto ref = kmeans_reference(population_vectors(pop), {2, 10, seed});
            double ari = adjusted_rand_index(ref.labeling.labels, pop.pretraining.labels);
            if (noise <= 0.05) {
                EXPECT_DOUBLE_EQ(ari, 1.0) << "noise " << noise << " seed " << seed;
            } else {
                EXPECT_GT(ari, 0.5) << "noise " << noise << " seed " << seed;
            }
        }
    }
}

TEST(Population, PermutationTestIsCalibratedUnderTheNull) {
    const int studies = 60;
    int rejections = 0;
    for (int s = 0; s < studies; ++s) {
        PopulationOptions o;
        o.seed = 1000 + static_cast<std::uint64_t>(s);
        o.pretrain_effect = 0;
        o.instruction_effect = 0;
        o.noise_sigma = 0.3;
        auto pop = generate_population(o);
        PointCloud cloud(population_vectors(pop));
        auto tests = permutation_test_all(cloud, pop.pretraining.labels, {100, 0.95, PermutationMode::size_preserving, static_cast<std::uint64_t>(s)});
        rejections += tests[0].significant;
    }
    EXPECT_LE(static_cast<double>(rejections) / studies, 0.10) << rejections << " of " << studies;
}

TEST(Population, PowerUnderPlantedEffect) {
    int rejections = 0;
    for (int s = 0; s < 20; ++s) {
        PopulationOptions o;
        o.seed = 500 + static_cast<std::uint64_t>(s);
        o.pretrain_effect = 0.5;
        o.noise_sigma = 0.2;
        auto pop = generate_population(o);
        auto tests = permutation_test_all(PointCloud(population_vectors(pop)), pop.pretraining.labels, {100, 0.95, PermutationMode::size_preserving, 1});
        rejections += tests[0].significant;
    }
    EXPECT_EQ(rejections, 20);
}
