#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace oja::rng {

/// splitmix64: the fully-specified 64-bit generator used everywhere random
/// numbers are needed. Chosen over std engines because its output sequence
/// and our distribution transforms are defined bit-for-bit here, so fixtures
/// reproduce across platforms and languages.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

/// FNV-1a over a label, for deriving substream seeds from (seed, tag, index).
inline std::uint64_t hash_label(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    SplitMix64 s{seed ^ hash_label(tag) ^ (index * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL)};
    s.next();
    return s.next();
}

/// Deterministic distribution transforms over SplitMix64. The normal draw
/// uses Box-Muller with an explicit spare slot so the draw sequence is a
/// pure function of the seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_{seed} {}

    std::uint64_t next_u64() { return gen_.next(); }

    /// Uniform in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

    /// Uniform in (0,1), never exactly 0 (safe for log()).
    double next_open01() { return (static_cast<double>(gen_.next() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(gen_.next() % span);
    }

    bool bernoulli(double p) { return next_double() < p; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Exponential with the given rate; +inf when rate == 0.
    double exponential(double rate) {
        if (rate <= 0.0) return std::numeric_limits<double>::infinity();
        return -std::log(next_open01()) / rate;
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = next_open01();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    /// Geometric number of trials until first success, p in (0,1].
    std::int64_t geometric_trials(double p) {
        if (p >= 1.0) return 1;
        double u = next_open01();
        return 1 + static_cast<std::int64_t>(std::floor(std::log(u) / std::log1p(-p)));
    }

private:
    SplitMix64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace oja::rng
