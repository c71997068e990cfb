#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace esim {

// Seedable generator used for all stochastic sampling. Draws are made
// through explicit inverse-CDF helpers (not std distributions) so that a
// given seed reproduces the same sample path on every platform/compiler.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1]; never returns 0, so log() is always safe.
    double uniform01() {
        const std::uint64_t bits = engine_() >> 11; // 53 random bits
        return static_cast<double>(bits + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    /// Index into `weights` with probability proportional to each entry.
    /// Zero-weight entries are never picked; `total` is the precomputed sum.
    std::size_t pick_weighted(std::span<const double> weights, double total) {
        double v = uniform01() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            v -= weights[i];
            if (v <= 0.0 && weights[i] > 0.0) return i;
        }
        // land on the last positive weight
        for (std::size_t i = weights.size(); i-- > 0;) {
            if (weights[i] > 0.0) return i;
        }
        return 0;
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

} // namespace esim
