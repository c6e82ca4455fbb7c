#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "dispersia/errors.hpp"
#include "dispersia/special_functions.hpp"

// Self-contained random number generation. Everything here is fully
// specified by this header, so streams are bit-reproducible across
// platforms, compilers and thread counts. A stream is a value: the pair
// (master_seed, stream_index) determines the whole sequence.

namespace dispersia {

struct RngStream {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
    friend bool operator==(const RngStream&, const RngStream&) = default;
};

namespace detail {

// SplitMix64 finalizer (Stafford mix 13); also used to expand seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256++ engine seeded from an RngStream through a SplitMix64 chain.
class RandomEngine {
  public:
    explicit RandomEngine(RngStream stream) {
        std::uint64_t sm = detail::mix64(stream.master_seed) ^
                           detail::mix64(stream.stream_index + 0x632be59bd9b4e019ULL);
        for (auto& word : state_) {
            sm += 0x9e3779b97f4a7c15ULL;
            word = detail::mix64(sm);
        }
        state_[0] |= 1;  // the all-zero state is invalid for xoshiro
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1); safe as a log() argument.
    double next_open_double() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the paired deviate is cached.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(next_open_double()));
        const double theta = 2.0 * pi_const * next_double();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double next_exponential(double mean) { return -mean * std::log(next_open_double()); }

    // Marsaglia-Tsang squeeze/rejection, unit scale. Shapes below 1 are
    // boosted through Gamma(shape) = Gamma(shape+1) * U^(1/shape).
    double next_gamma(double shape) {
        if (shape < 1.0)
            return next_gamma(shape + 1.0) * std::pow(next_open_double(), 1.0 / shape);
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = next_normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = next_open_double();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double next_beta(double a, double b) {
        const double g1 = next_gamma(a);
        const double g2 = next_gamma(b);
        return g1 / (g1 + g2);
    }

    long next_poisson(double mean) {
        return mean <= 30.0 ? poisson_inversion(mean) : poisson_ptrs(mean);
    }

    // Binomial count. Large sizes are reduced with Knuth's beta-median
    // recursion (the i-th order statistic of size uniforms is Beta(i, size+1-i)),
    // small sizes finish with CDF inversion.
    long next_binomial(long size, double prob) {
        long base = 0;
        while (size > 64) {
            const long i = (size + 1) / 2;
            const double b = next_beta(static_cast<double>(i), static_cast<double>(size - i + 1));
            if (b <= prob) {
                base += i;
                size -= i;
                prob = (prob - b) / (1.0 - b);
            } else {
                size = i - 1;
                prob = prob / b;
            }
            if (prob <= 0.0) return base;
            if (prob >= 1.0) return base + size;
        }
        return base + binomial_inversion(size, prob);
    }

  private:
    long poisson_inversion(double mean) {
        const double u = next_double();
        double p = std::exp(-mean);
        double cum = p;
        long k = 0;
        while (u > cum && k < 2000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cum += p;
        }
        return k;
    }

    // Hormann's PTRS transformed-rejection sampler; exact for mean > 10 and
    // free of normal-approximation truncation.
    long poisson_ptrs(double mean) {
        const double log_mean = std::log(mean);
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = next_double() - 0.5;
            const double v = next_double();
            const double us = 0.5 - std::fabs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const double k = kf;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                k * log_mean - mean - std::lgamma(k + 1.0))
                return static_cast<long>(kf);
        }
    }

    long binomial_inversion(long size, double prob) {
        if (size <= 0) return 0;
        if (prob > 0.5) return size - binomial_inversion(size, 1.0 - prob);
        const double q = 1.0 - prob;
        const double ratio = prob / q;
        double f = std::pow(q, static_cast<double>(size));
        double cum = f;
        const double u = next_double();
        long k = 0;
        while (u > cum && k < size) {
            ++k;
            f *= ratio * static_cast<double>(size - k + 1) / static_cast<double>(k);
            cum += f;
        }
        return k;
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dispersia
