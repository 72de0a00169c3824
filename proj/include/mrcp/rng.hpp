#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include "mrcp/stats.hpp"

namespace mrcp {

// 64-bit FNV-1a over a label string.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// splitmix64 finalizer; good avalanche, stable across platforms.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a child seed from a master seed and a sequence of labels.
// Streams stay fixed when unrelated labels are added elsewhere.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::string_view> labels) {
    std::uint64_t h = mix64(master);
    for (auto l : labels) h = mix64(h ^ fnv1a(l));
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index) {
    std::uint64_t h = mix64(master ^ fnv1a(label));
    return mix64(h ^ (0x632be59bd9b4e019ULL * (index + 1)));
}

// Deterministic random source. Draws are produced by inverse-CDF transforms of
// mt19937_64 output so a stream consumes a fixed number of engine words per
// variate regardless of the standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform on the open interval (0,1); never returns an endpoint
    double uniform01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
    }

    double normal() { return normal_quantile(uniform01()); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Student t with 3 degrees of freedom: Z0 / sqrt((Z1^2+Z2^2+Z3^2)/3).
    double student_t3() {
        double z0 = normal();
        double z1 = normal(), z2 = normal(), z3 = normal();
        return z0 / std::sqrt((z1 * z1 + z2 * z2 + z3 * z3) / 3.0);
    }

    // unbiased integer in [0, n) by rejection
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace mrcp
