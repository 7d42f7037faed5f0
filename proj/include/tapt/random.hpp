#pragma once

#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace tapt {

/// Seeded generator. Uniform draws are built from raw engine bits so streams
/// are identical across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Anything that yields uniform draws in [0, 1).
template <typename G>
concept UniformSource = requires(G g) {
  { g.uniform() } -> std::convertible_to<double>;
};

/// Independent stream derived from a base seed and a purpose tag (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream);

}  // namespace tapt
