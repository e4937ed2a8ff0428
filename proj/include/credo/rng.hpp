#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace credo {

// splitmix64 finalizer; bijective on 64-bit values.
std::uint64_t mix64(std::uint64_t x);

// Derives an independent substream seed from (seed, salt). Used everywhere a
// component needs per-item randomness that must not depend on execution
// order (per-tree, per-class, per-minority-point streams).
std::uint64_t substream(std::uint64_t seed, std::uint64_t salt);

// Stable across runs and platforms: FNV-1a over the name, mixed with the
// master seed. Adding a stage never perturbs another stage's randomness.
std::uint64_t stage_seed(std::uint64_t master_seed, std::string_view stage_name);

// Thin deterministic wrapper over mt19937_64. All derived draws (uniform
// reals, bounded integers, normals) are implemented here rather than with
// std::*_distribution so that sequences are identical across standard
// library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, bound); unbiased via rejection.
    std::uint64_t uniform_below(std::uint64_t bound);

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(
                        uniform_below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Standard normal via Box-Muller; the spare draw is cached.
    double normal();

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Draws an index with the given (normalized) probabilities.
    int categorical(std::span<const double> probs);

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace credo
