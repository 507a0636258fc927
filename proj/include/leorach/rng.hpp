#pragma once

#include <cstdint>
#include <random>

namespace leorach {

// Seedable generator used everywhere a random draw is needed. The std::*
// distribution classes are implementation-defined, so all draws go through
// the explicit methods below to keep runs reproducible bit-for-bit.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1) with 53 random bits
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // unbiased integer in [0, n), n >= 1
  int uniform_int(int n);

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  friend bool operator==(const Rng& a, const Rng& b) { return a.gen_ == b.gen_; }

private:
  std::mt19937_64 gen_;
};

// splitmix64-style mix for deriving independent sub-streams from one seed
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace leorach
