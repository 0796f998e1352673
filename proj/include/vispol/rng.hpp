#pragma once

#include <cstdint>
#include <string_view>

namespace vispol {

// Counter-based pseudo-random generator (splitmix64 output function over a
// keyed counter). Streams can be split by label or index, so replications
// and per-record draws are reproducible regardless of evaluation order.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    // Uniform integer on [0, n); n must be positive.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via Box-Muller (two uniforms per draw).
    double normal();

    // Gamma(shape, 1) via Marsaglia-Tsang; shape must be positive.
    double gamma(double shape);

    // Derived independent streams. Children with distinct labels/indices
    // (or from distinct parents) are statistically independent.
    Rng split(std::uint64_t index) const;
    Rng split(std::string_view label) const;
    Rng split(std::string_view label, std::uint64_t index) const;

  private:
    Rng(std::uint64_t key, int);  // internal: key already mixed

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Inverse transform -ln(-ln u); u is clamped to [1e-300, 1 - 1e-16] so the
// result is always finite.
double gumbel_from_uniform(double u);

// Standard Gumbel draw.
double sample_gumbel(Rng& rng);

}  // namespace vispol
