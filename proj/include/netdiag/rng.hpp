#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace netdiag {

/// SplitMix64 (Steele, Lea & Flood). All randomness in the toolkit comes from
/// this generator so fixtures can be reproduced bit-for-bit elsewhere:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// uniform() takes the top 53 bits as a double in [0, 1). normal() is the
/// cosine branch of Box-Muller on two successive uniforms (u1 mapped to (0, 1]).
/// Independent streams are derived with `SplitMix64::stream(seed, id)`, whose
/// initial state is mix64(seed ^ mix64(id + 0x9E3779B97F4A7C15)) where mix64 is
/// the output function above applied to its argument.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix64(std::uint64_t z);
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t id);
  /// FNV-1a 64 of a label, used to name streams.
  static std::uint64_t hash_label(std::string_view label);

  std::uint64_t next();
  double uniform();
  double normal();
  /// floor(uniform() * n); n > 0.
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace netdiag
