#pragma once

// Deterministic random utilities. Everything here is self-contained so that
// seeded runs produce identical streams regardless of standard library
// distribution implementations.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace morton {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Mixes an arbitrary list of 64-bit values into one seed.
inline uint64_t mix_seed(std::initializer_list<uint64_t> parts) {
    uint64_t s = 0x9e3779b97f4a7c15ULL;
    for (uint64_t p : parts) {
        s ^= p + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        uint64_t st = s;
        s = splitmix64(st);
    }
    return s;
}

class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {
        // Warm up so that small consecutive seeds decorrelate.
        next_u64();
        next_u64();
    }

    uint64_t next_u64() { return splitmix64(state_); }

    // Unbiased integer in [0, bound) via rejection.
    uint64_t next_below(uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("rng bound must be positive");
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Inclusive integer range.
    int64_t next_int(int64_t lo, int64_t hi) {
        if (lo > hi) throw std::invalid_argument("rng range empty");
        return lo + static_cast<int64_t>(next_below(static_cast<uint64_t>(hi - lo) + 1));
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool next_bernoulli(double p) { return next_double() < p; }

    // Poisson via multiplication of uniforms; large means are split to keep
    // exp(-mean) away from underflow.
    uint64_t next_poisson(double mean) {
        if (mean < 0) throw std::invalid_argument("poisson mean must be non-negative");
        uint64_t total = 0;
        while (mean > 400.0) {
            total += next_poisson_small(400.0);
            mean -= 400.0;
        }
        return total + next_poisson_small(mean);
    }

    template <typename It>
    void shuffle(It first, It last) {
        auto n = static_cast<uint64_t>(last - first);
        for (uint64_t i = n; i > 1; --i) {
            uint64_t j = next_below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    uint64_t next_poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        double limit = std::exp(-mean);
        uint64_t k = 0;
        double prod = next_double();
        while (prod > limit) {
            ++k;
            prod *= next_double();
        }
        return k;
    }

    uint64_t state_;
};

// Walker alias sampler for fixed discrete distributions (used for the Zipf
// host pool; O(1) per draw).
class AliasSampler {
public:
    explicit AliasSampler(const std::vector<double>& weights) {
        size_t n = weights.size();
        if (n == 0) throw std::invalid_argument("alias table needs at least one weight");
        double total = 0;
        for (double w : weights) {
            if (w < 0) throw std::invalid_argument("alias weights must be non-negative");
            total += w;
        }
        if (total <= 0) throw std::invalid_argument("alias weights must sum to a positive value");
        prob_.resize(n);
        alias_.resize(n, 0);
        std::vector<double> scaled(n);
        std::vector<uint32_t> small, large;
        for (size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * static_cast<double>(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<uint32_t>(i));
        }
        while (!small.empty() && !large.empty()) {
            uint32_t s = small.back();
            small.pop_back();
            uint32_t l = large.back();
            large.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            (scaled[l] < 1.0 ? small : large).push_back(l);
        }
        for (uint32_t i : large) prob_[i] = 1.0;
        for (uint32_t i : small) prob_[i] = 1.0;
    }

    uint32_t sample(Rng& rng) const {
        uint64_t i = rng.next_below(prob_.size());
        return rng.next_double() < prob_[i] ? static_cast<uint32_t>(i) : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<uint32_t> alias_;
};

inline std::vector<double> zipf_weights(size_t n, double skew) {
    if (n == 0) throw std::invalid_argument("zipf pool must be non-empty");
    std::vector<double> w(n);
    for (size_t i = 0; i < n; ++i) w[i] = std::pow(static_cast<double>(i + 1), -skew);
    return w;
}

}  // namespace morton
