#pragma once

#include <cstdint>
#include <random>

namespace sloth {

// Deterministic random stream. mt19937_64 output is fully specified by the
// standard; the float conversions below avoid std::uniform_real_distribution,
// whose mapping is implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  float next_float() {
    return static_cast<float>(next_u64() >> 40) * (1.0f / 16777216.0f);
  }

  // Uniform in [-scale, scale).
  float next_symmetric(float scale) { return (next_float() * 2.f - 1.f) * scale; }

  // Uniform integer in [0, bound). Rejection-free modulo is fine at desk scale.
  std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace sloth
