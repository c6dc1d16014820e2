#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace desksim {

// Deterministic splittable PRNG (splitmix64 core). The simulator never uses
// <random> distributions: their output is implementation-defined, and both
// the benchmark reports and the frozen test oracles rely on bit-stable draw
// sequences. Streams are derived by hashing a root seed with a tag path, so
// independent episodes (and independent sub-systems within an episode) can
// draw concurrently without sharing state.
class Rng {
   public:
    Rng() = default;
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kGamma)) {}

    // Derives an independent child stream; the parent is not advanced.
    Rng derive(std::uint64_t tag) const { return Rng(mix(state_ ^ mix(tag + kGamma))); }
    Rng derive(std::initializer_list<std::uint64_t> path) const {
        Rng r = *this;
        for (auto t : path) r = r.derive(t);
        return r;
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix(state_);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive range
        return lo + static_cast<std::int64_t>(uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Always consumes exactly one draw, so stream alignment does not depend
    // on the probability value.
    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; consumes exactly two draws per call.
    double normal(double mu, double sigma) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::uint64_t state() const { return state_; }

   private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t state_ = 0;
};

// Tags for the fixed sub-stream layout of an episode.
namespace stream {
inline constexpr std::uint64_t world = 1;
inline constexpr std::uint64_t observation = 2;
inline constexpr std::uint64_t scenario = 3;
}  // namespace stream

inline Rng episode_rng(std::uint64_t scenario_seed, std::uint64_t episode_seed) {
    return Rng(scenario_seed).derive({0x5eedULL, episode_seed});
}

}  // namespace desksim
