#pragma once

#include <cmath>
#include <cstdint>

namespace dphd {

namespace detail {

// splitmix64 finalizer; full-avalanche 64-bit mix
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based deterministic pseudorandom stream. Identical seed gives an
// identical sample sequence regardless of thread placement. When `disabled`
// is set, privacy mechanisms treat their input as pass-through; the raw
// stream itself stays live (shuffles, projections and synthetic draws still
// need randomness in noise-free test runs).
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed, bool disabled = false)
      : key_(detail::mix64(seed ^ 0xD1B54A32D192ED03ull)), disabled_(disabled) {}

  // Seed of the index-th child stream; per-index, not sequential, so sibling
  // streams are unaffected by one another.
  static std::uint64_t child_seed(std::uint64_t master_seed, std::uint64_t index) {
    return detail::mix64(master_seed) ^ detail::mix64(index + 0x632BE59BD9B4E019ull);
  }

  // Child stream for trial/config derivation; independent of draws made on
  // the parent.
  static NoiseSource child(std::uint64_t master_seed, std::uint64_t index,
                           bool disabled = false) {
    return NoiseSource(child_seed(master_seed, index), disabled);
  }

  NoiseSource spawn(std::uint64_t index) const {
    return NoiseSource(key_ ^ detail::mix64(index + 0xC2B2AE3D27D4EB4Full), disabled_);
  }

  bool disabled() const { return disabled_; }
  void set_disabled(bool v) { disabled_ = v; }

  std::uint64_t next_u64() { return detail::mix64(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }

  // uniform on the open interval (0, 1)
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  // inverse-CDF Laplace draw with the convention
  //   u ~ U(0,1);  x = -b * sgn(u - 1/2) * ln(1 - 2|u - 1/2|)
  double laplace(double scale) {
    const double t = uniform() - 0.5;
    const double s = (t > 0.0) ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
    return -scale * s * std::log(1.0 - 2.0 * std::abs(t));
  }

  // Box-Muller; consumes two uniforms per draw
  double normal(double stddev) {
    const double u1 = uniform();
    const double u2 = uniform();
    return stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Rademacher-style sign
  double sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool disabled_;
};

}  // namespace dphd
