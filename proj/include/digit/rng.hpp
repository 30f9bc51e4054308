#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace digit {

/// Deterministic split-stream generator (SplitMix64 core). A fixed seed
/// always produces the same stream, and split(key) derives an independent
/// child stream from (seed, key), so parallel consumers can each own a
/// stream that does not depend on scheduling order.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed), seed_(seed) {}

    uint64_t seed() const { return seed_; }

    uint64_t u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Child stream keyed by (current seed, key); independent of how much of
    /// this stream has been consumed.
    Rng split(uint64_t key) const {
        uint64_t z = seed_ ^ (0x9e3779b97f4a7c15ull * (key + 1));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return Rng(z ^ (z >> 31));
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = u64();
        while (v >= limit) v = u64();
        return v % n;
    }

    /// Standard normal (Box-Muller, cached spare).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 1.0 - uniform();  // avoid log(0)
        double a = std::sqrt(-2.0 * std::log(u));
        double b = 6.283185307179586 * uniform();
        spare_ = a * std::sin(b);
        has_spare_ = true;
        return a * std::cos(b);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Index draw proportional to the given nonnegative weights.
    size_t weighted(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw std::invalid_argument("Rng::weighted: total weight must be positive");
        double r = uniform() * total;
        double c = 0.0;
        for (size_t i = 0; i < weights.size(); ++i) {
            c += weights[i];
            if (r < c) return i;
        }
        return weights.size() - 1;
    }

private:
    uint64_t state_ = 0;
    uint64_t seed_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace digit
