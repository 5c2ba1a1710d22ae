#ifndef COGBIAS_SYNTHETIC_HPP
#define COGBIAS_SYNTHETIC_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "attribution/vectors.hpp"
#include "random.hpp"
#include "types.hpp"

/**
 * @file synthetic.hpp
 * @brief Populations of bias vectors with planted pretraining and instruction effects.
 */

namespace cogbias {

struct PopulationOptions {
    /** Runs per (pretrain, instruction) cell of the 2 x 2 design. */
    std::size_t n_per_cell = 3;

    /** Number of features per vector. */
    std::size_t features = 32;

    /**
     * Per-feature offset magnitude. The two backbones sit at `+effect/2` and `-effect/2`
     * along a random sign pattern, so their centres are `effect * sqrt(features)` apart.
     */
    double pretrain_effect = 0.5;

    /** Same construction with an independent sign pattern for the instruction datasets. */
    double instruction_effect = 0.0;

    /** Standard deviation of the i.i.d. Gaussian noise added to every score before clipping. */
    double noise_sigma = 0.1;

    std::uint64_t seed = 0;

    std::vector<std::string> pretrain_ids{"pa", "pb"};
    std::vector<std::string> instruction_ids{"ia", "ib"};

    bool operator==(const PopulationOptions&) const = default;
};

struct Population {
    ScoreMatrix matrix;
    std::vector<ModelRun> roster;
    Labeling pretraining;
    Labeling instruction;
};

/**
 * Generate a population. Features are named after the 32 vector biases when there are at most 32,
 * otherwise they are scenario cells ("Anchoring#0", ...) and the matrix is scenario-level.
 * Run ids follow `<pretrain>-<instruction>-s<k>`; columns are ordered
 * by pretrain, then instruction, then replica. Scores are clipped to [-1, 1].
 * Deterministic for a given seed.
 */
inline Population generate_population(const PopulationOptions& options) {
    if (options.pretrain_effect < 0 || options.instruction_effect < 0 || options.noise_sigma < 0) {
        throw Error("effect magnitudes and noise must be non-negative");
    }
    if (options.pretrain_ids.size() != 2 || options.instruction_ids.size() != 2) {
        throw Error("the synthetic design is 2 x 2");
    }
    if (options.n_per_cell == 0 || options.features == 0) {
        throw Error("population needs at least one run per cell and one feature");
    }

    Rng rng(options.seed);
    std::vector<double> pretrain_sign(options.features), instruction_sign(options.features);
    for (auto& s : pretrain_sign) {
        s = rng.below(2) ? 1.0 : -1.0;
    }
    for (auto& s : instruction_sign) {
        s = rng.below(2) ? 1.0 : -1.0;
    }

    Population pop;
    pop.pretraining.scheme = LabelScheme::pretraining;
    pop.instruction.scheme = LabelScheme::instruction;
    // Up to 32 features reuse the vector-bias names; larger populations become scenario cells.
    std::vector<std::string> rows;
    auto names = vector_biases();
    auto structured = scenario_structured_biases();
    const bool scenario_level = options.features > names.size();
    for (std::size_t f = 0; f < options.features; ++f) {
        if (scenario_level) {
            rows.push_back(scenario_label(structured[f % structured.size()].name, static_cast<std::int64_t>(f / structured.size())));
        } else {
            rows.push_back(names[f].name);
        }
    }
    std::vector<std::string> cols;
    std::vector<std::vector<double>> columns;
    for (int p = 0; p < 2; ++p) {
        for (int i = 0; i < 2; ++i) {
            for (std::size_t r = 0; r < options.n_per_cell; ++r) {
                ModelRun run;
                run.pretrain_id = options.pretrain_ids[static_cast<std::size_t>(p)];
                run.instruction_id = options.instruction_ids[static_cast<std::size_t>(i)];
                run.seed = static_cast<std::uint32_t>(r);
                run.origin = Origin::seeded_replica;
                run.run_id = run.pretrain_id + "-" + run.instruction_id + "-s" + std::to_string(r);
                cols.push_back(run.run_id);
                pop.roster.push_back(run);
                pop.pretraining.labels.push_back(p);
                pop.instruction.labels.push_back(i);

                double p_side = p == 0 ? 0.5 : -0.5;
                double i_side = i == 0 ? 0.5 : -0.5;
                std::vector<double> column(options.features);
                for (std::size_t f = 0; f < options.features; ++f) {
                    double v = p_side * options.pretrain_effect * pretrain_sign[f] +
                               i_side * options.instruction_effect * instruction_sign[f] +
                               options.noise_sigma * rng.normal();
                    column[f] = std::clamp(v, -1.0, 1.0);
                }
                columns.push_back(std::move(column));
            }
        }
    }

    std::vector<std::optional<double>> values;
    values.reserve(rows.size() * cols.size());
    for (std::size_t f = 0; f < rows.size(); ++f) {
        for (const auto& column : columns) {
            values.emplace_back(column[f]);
        }
    }
    pop.matrix = ScoreMatrix(scenario_level ? Granularity::scenario_level : Granularity::bias_level, std::move(rows), std::move(cols), std::move(values));
    return pop;
}

/** The population as bias vectors, one per run. */
inline BiasVectorSet population_vectors(const Population& pop) {
    return build_bias_vectors(pop.matrix).vectors;
}

}

#endif
