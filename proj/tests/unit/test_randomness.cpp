#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cogbias/randomness.hpp"
#include "helpers.hpp"

using namespace cogbias;
using testing_support::bundled_matrix;
using testing_support::fixture;
using testing_support::roster_of;

namespace {

const GroupTable& group_named(const RandomnessReport& r, const std::string& name) {
    for (const auto& g : r.groups) {
        if (g.group.name() == name) {
            return g;
        }
    }
    throw Error("no group " + name);
}

double oracle_std(const std::vector<double>& x) {
    double m = 0;
    for (double v : x) {
        m += v;
    }
    m /= static_cast<double>(x.size());
    double ss = 0;
    for (double v : x) {
        ss += (v - m) * (v - m);
    }
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

}

TEST(SeedStd, WorkedExamples) {
    std::vector<double> anchoring{0.14, -0.03, 0.02};
    EXPECT_NEAR(seed_std(anchoring), 0.09, 0.005);
    std::vector<double> same{0.3, 0.3, 0.3};
    EXPECT_DOUBLE_EQ(seed_std(same), 0.0);
    std::vector<double> one{0.3};
    EXPECT_THROW(seed_std(one), Error);
}

TEST(SeedStd, BundledFramingAndAnchoring) {
    auto m = bundled_matrix();
    std::vector<std::string> tulu{"olmo-tulu-s1", "olmo-tulu-s2", "olmo-tulu-s3"};
    auto anchoring = internal::present_values(m, "Anchoring", tulu);
    auto framing = internal::present_values(m, "Framing Effect", tulu);
    EXPECT_NEAR(seed_std(anchoring), 0.09, 0.005);
    EXPECT_NEAR(seed_std(framing), 0.18, 0.005);
}

TEST(SeedStd, ShiftInvariantScaleEquivariantAndMatchesOracle) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> x(2 + gen() % 6);
        for (auto& v : x) {
            v = u(gen);
        }
        double s = seed_std(x);
        EXPECT_GE(s, 0.0);
        EXPECT_NEAR(s, oracle_std(x), 1e-12);
        double c = u(gen), a = 0.1 + std::abs(u(gen));
        std::vector<double> y;
        for (double v : x) {
            y.push_back(a * v + c);
        }
        EXPECT_NEAR(seed_std(y), a * s, 1e-9);
        std::shuffle(x.begin(), x.end(), gen);
        EXPECT_NEAR(seed_std(x), s, 1e-12);
    }
}

TEST(Threshold, WorkedExamples) {
    EXPECT_NEAR(neutrality_threshold(1000).threshold, 0.088, 0.001);
    EXPECT_NEAR(neutrality_threshold(2).threshold, 1.96, 0.001);
    EXPECT_NEAR(neutrality_threshold(250).threshold, 0.175, 0.001);
    EXPECT_THROW(neutrality_threshold(0), Error);
    EXPECT_THROW(neutrality_threshold(100, -1), Error);
    EXPECT_THROW(neutrality_threshold(100, 1, 1.5), Error);
}

TEST(Threshold, MonotoneInSampleSizeSigmaAndLevel) {
    double prev = neutrality_threshold(2).threshold;
    for (double n = 3; n < 5000; n *= 1.3) {
        double t = neutrality_threshold(n).threshold;
        EXPECT_LT(t, prev);
        prev = t;
    }
    EXPECT_LT(neutrality_threshold(500, 1.0).threshold, neutrality_threshold(500, 2.0).threshold);
    EXPECT_LT(neutrality_threshold(500, 1.0, 0.10).threshold, neutrality_threshold(500, 1.0, 0.01).threshold);
}

TEST(Majority, WorkedExamples) {
    std::vector<double> planning{0.09, 0.09, -0.16};
    auto r = majority_direction(planning, 0.088);
    EXPECT_EQ(r.direction, Direction::positive);
    EXPECT_FALSE(r.tie);

    std::vector<double> split{0.2, -0.2, 0.0};
    auto t = majority_direction(split, 0.088);
    EXPECT_TRUE(t.tie);
    EXPECT_EQ(t.direction, Direction::neutral);

    std::vector<double> quiet{0.01, -0.05, 0.2};
    EXPECT_EQ(majority_direction(quiet, 0.088).direction, Direction::neutral);
}

TEST(Majority, InvariantUnderSeedOrderAndMirrorsUnderNegation) {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> x(2 + gen() % 5);
        for (auto& v : x) {
            v = u(gen);
        }
        auto r = majority_direction(x, 0.088);
        std::vector<double> neg;
        for (double v : x) {
            neg.push_back(-v);
        }
        auto n = majority_direction(neg, 0.088);
        EXPECT_EQ(n.tie, r.tie);
        EXPECT_EQ(n.direction, mirror(r.direction));
        std::shuffle(x.begin(), x.end(), gen);
        EXPECT_EQ(majority_direction(x, 0.088), r);
    }
}

TEST(Agreement, PlanningFallacyRow) {
    auto m = bundled_matrix();
    auto report = randomness_report(m, roster_of(m), ThresholdPolicy{});
    const auto& tulu = group_named(report, "olmo-tulu");
    auto row = std::find_if(tulu.rows.begin(), tulu.rows.end(), [](const AgreementRow& r) { return r.bias == "Planning Fallacy"; });
    ASSERT_NE(row, tulu.rows.end());
    EXPECT_EQ(row->majority, Direction::positive);
    EXPECT_FALSE(row->majority_agree);
    EXPECT_TRUE(row->agg_similar);
}

TEST(Agreement, MeansAndMediansMatchPrintedTable) {
    auto m = bundled_matrix();
    auto report = randomness_report(m, roster_of(m), ThresholdPolicy{});
    auto printed = fixture("table8_flags.csv");
    ASSERT_EQ(printed.size(), 32u);
    for (const auto& [name, cells] : printed) {
        auto canonical = bias(name).name;
        for (const auto& [group, offset] : {std::pair{std::string("olmo-tulu"), 0}, std::pair{std::string("t5-flan"), 5}}) {
            const auto& table = group_named(report, group);
            auto row = std::find_if(table.rows.begin(), table.rows.end(), [&](const AgreementRow& r) { return r.bias == canonical; });
            ASSERT_NE(row, table.rows.end()) << canonical;
            EXPECT_NEAR(*row->reference, std::stod(cells[offset]), 1e-9) << group << " " << canonical;
            // Seed inputs and the printed mean are each rounded to 2 decimals.
            EXPECT_NEAR(row->mean, std::stod(cells[offset + 1]), 0.0101) << group << " " << canonical;
            EXPECT_NEAR(row->median, std::stod(cells[offset + 2]), 0.0051) << group << " " << canonical;
        }
    }
}

TEST(Agreement, AggregateSimilarityContainsMajorityAgreement) {
    auto m = bundled_matrix();
    auto report = randomness_report(m, roster_of(m), ThresholdPolicy{});
    for (const auto& g : report.groups) {
        for (const auto& row : g.rows) {
            if (row.majority_agree) {
                EXPECT_TRUE(row.agg_similar) << row.bias;
            }
            if (row.tie) {
                EXPECT_FALSE(row.majority_agree) << row.bias;
            }
        }
        if (g.summary) {
            EXPECT_GE(g.summary->agg_pct, g.summary->majority_pct);
            EXPECT_GE(g.summary->agg_pct_all, g.summary->majority_pct_all);
            EXPECT_EQ(g.summary->scope_count, 30u);
            EXPECT_EQ(g.summary->all_count, 32u);
        }
    }
}

TEST(Agreement, SummaryPercentages) {
    auto m = bundled_matrix();
    auto report = randomness_report(m, roster_of(m), ThresholdPolicy{});
    const auto& tulu = *group_named(report, "olmo-tulu").summary;
    const auto& flan = *group_named(report, "t5-flan").summary;
    EXPECT_NEAR(tulu.majority_pct, 63.33, 3.4);
    EXPECT_NEAR(flan.majority_pct, 60.00, 3.4);
    EXPECT_NEAR(tulu.agg_pct, 66.67, 3.4);
    EXPECT_NEAR(flan.agg_pct, 66.67, 3.4);
}

TEST(Variability, MeanOfRecomputedStds) {
    auto m = bundled_matrix();
    auto groups = seed_groups(roster_of(m));
    auto rows = variability_comparison(m, groups);
    for (const auto& row : rows) {
        const auto& g = *std::find_if(groups.begin(), groups.end(), [&](const SeedGroup& s) { return s.name() == row.group; });
        double total = 0;
        int count = 0;
        for (const auto& label : m.rows()) {
            if (metric_group_of(label) != row.metric_group || (find_bias(label) && !find_bias(label)->in_bias_vector())) {
                continue;
            }
            std::vector<double> x;
            for (const auto& run : g.members) {
                x.push_back(*m.at(label, run));
            }
            total += oracle_std(x);
            ++count;
        }
        EXPECT_EQ(static_cast<int>(row.metrics), count);
        EXPECT_NEAR(row.mean_std, total / count, 1e-12) << row.group << " " << row.metric_group;
    }
}

TEST(SeedGroups, BundledRosterHasFourGroupsWithReferences) {
    auto m = bundled_matrix();
    auto groups = seed_groups(roster_of(m));
    ASSERT_EQ(groups.size(), 4u);
    std::size_t with_reference = 0;
    for (const auto& g : groups) {
        EXPECT_EQ(g.members.size(), 3u);
        with_reference += g.reference.has_value();
    }
    EXPECT_EQ(with_reference, 2u);
}

TEST(Correlation, WorkedExamplesAndAffineInvariance) {
    std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1};
    EXPECT_NEAR(seed_mean_correlation(x, y), 1.0, 1e-12);
    EXPECT_NEAR(seed_mean_correlation(x, z), -1.0, 1e-12);
    std::vector<double> flat{1, 1, 1, 1};
    EXPECT_THROW(seed_mean_correlation(x, flat), Error);

    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> a(5 + gen() % 20), b(a.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            a[j] = u(gen);
            b[j] = u(gen);
        }
        double r = seed_mean_correlation(a, b);
        EXPECT_LE(std::abs(r), 1.0 + 1e-12);
        double s = 0.2 + std::abs(u(gen)), c = u(gen);
        std::vector<double> b2;
        for (double v : b) {
            b2.push_back(s * v + c);
        }
        EXPECT_NEAR(seed_mean_correlation(a, b2), r, 1e-9);
        EXPECT_NEAR(seed_mean_correlation(b, a), r, 1e-12);
    }
}

TEST(Correlation, BundledOlmo) {
    auto m = bundled_matrix();
    auto report = randomness_report(m, roster_of(m), ThresholdPolicy{});
    ASSERT_TRUE(group_named(report, "olmo-tulu").correlation);
    EXPECT_NEAR(*group_named(report, "olmo-tulu").correlation, 0.49, 0.05);
}

TEST(Agreement, PerBiasFlagsMatchPrintedTable) {
    auto m = bundled_matrix();
    auto report = randomness_report(m, roster_of(m), ThresholdPolicy{});
    for (const auto& [name, cells] : fixture("table8_flags.csv")) {
        auto canonical = bias(name).name;
        for (const auto& [group, offset] : {std::pair{std::string("olmo-tulu"), 0}, std::pair{std::string("t5-flan"), 5}}) {
            const auto& table = group_named(report, group);
            auto row = std::find_if(table.rows.begin(), table.rows.end(), [&](const AgreementRow& r) { return r.bias == canonical; });
            ASSERT_NE(row, table.rows.end()) << canonical;
            EXPECT_EQ(row->majority_agree, cells[offset + 3] == "True") << group << " " << canonical;
            EXPECT_EQ(row->agg_similar, cells[offset + 4] == "True") << group << " " << canonical;
        }
    }
}
