#ifndef COGBIAS_RANDOM_HPP
#define COGBIAS_RANDOM_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace cogbias {

/**
 * Seeded generator with platform-independent sampling helpers.
 * The standard distributions are implementation-defined, so bounded integers and normals
 * are derived directly from the raw mt19937_64 stream to keep outputs byte-identical everywhere.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /**
     * Independent generator for trial `index` of a study seeded with `seed`.
     * Trials get their streams up front, so results do not depend on evaluation order.
     */
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix64(seed ^ splitmix64(index + 0x9E3779B97F4A7C15ULL)));
    }

    std::uint64_t next() { return engine_(); }

    /** Uniform integer in [0, n). */
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) {
            return 0;
        }
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /** Uniform double in [0, 1). */
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /** Standard normal via Box-Muller. */
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /** Fisher-Yates shuffle. */
    template<typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0;
    bool has_spare_ = false;
};

}

#endif
