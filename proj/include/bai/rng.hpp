#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace bai {

/// SplitMix64 finalizer; used to derive independent engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Mixes a key into a seed so that (seed, key) pairs map to unrelated values.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept {
    return splitmix64(seed ^ splitmix64(key + 0x632BE59BD9B4E019ULL));
}

/**
 * Random stream identified by (master_seed, stream_id).
 *
 * The engine state is a pure function of the pair, so a trial draws the same
 * rewards no matter which worker runs it or in what order. A stream is not
 * thread-safe; give every concurrent caller its own.
 */
class RngStream {
public:
    using engine_type = std::mt19937_64;

    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id) {
        const std::uint64_t base = derive_seed(master_seed, stream_id);
        std::uint64_t words[4];
        std::uint64_t s = base;
        for (auto& w : words) {
            s = splitmix64(s);
            w = s;
        }
        std::seed_seq seq{
            static_cast<std::uint32_t>(words[0]), static_cast<std::uint32_t>(words[0] >> 32),
            static_cast<std::uint32_t>(words[1]), static_cast<std::uint32_t>(words[1] >> 32),
            static_cast<std::uint32_t>(words[2]), static_cast<std::uint32_t>(words[2] >> 32),
            static_cast<std::uint32_t>(words[3]), static_cast<std::uint32_t>(words[3] >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return normal_(engine_); }

    double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Gamma(shape, 1) variate.
    double gamma(double shape) {
        return std::gamma_distribution<double>(shape, 1.0)(engine_);
    }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    /// Uniform integer in [lo, hi].
    std::int64_t integer(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }

    engine_type& engine() noexcept { return engine_; }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    engine_type engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bai
