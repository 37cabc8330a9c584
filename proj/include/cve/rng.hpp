#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "cve/errors.hpp"

namespace cve {

/// Seeded random stream with samplers that are bit-reproducible across
/// platforms. std::mt19937_64 is fully specified by the standard; the
/// std::*_distribution adaptors are not, so the transformations live here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Independent substream addressed by an id path, e.g.
    /// rng.substream({model, rep}). Derivation depends only on the base
    /// seed and the path, not on how much of this stream was consumed.
    Rng substream(std::initializer_list<std::uint64_t> path) const {
        std::uint64_t s = mix(seed_ ^ 0x5DEECE66DULL);
        for (std::uint64_t id : path) s = mix(s ^ mix(id + 0x9E3779B97F4A7C15ULL));
        return Rng(s);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (two uniforms per draw).
    double normal() {
        double u1 = 1.0 - uniform01(); // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Gamma(shape, scale 1), Marsaglia-Tsang squeeze with the usual
    /// boost for shape < 1.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw InvalidArgument("gamma: shape must be positive");
        if (shape < 1.0) {
            double u = 1.0 - uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chisq(double df) { return 2.0 * gamma(0.5 * df); }

private:
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t mix(std::uint64_t z) { // splitmix64 finalizer
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace cve
