#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace geig {

// Seeded stream with platform-independent draws (the std distributions are
// implementation-defined, which would break byte-identical outputs).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  bool coin() { return (engine_() >> 63) != 0; }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

  std::vector<double> vector(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = symmetric();
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace geig
