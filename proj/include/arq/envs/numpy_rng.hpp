#pragma once

#include <cstdint>
#include <random>

namespace arq::envs {

/// Random stream matching numpy's legacy RandomState for the two operations
/// the grid games consume.  std::mt19937 seeded with a scalar reproduces
/// RandomState's init_genrand stream exactly; rand() assembles a 53-bit
/// double from two 32-bit draws and choice2() masks a single draw, both
/// verified against numpy output.  This is what lets the committed trajectory
/// fixtures (generated by the numpy reference script) replay bit-for-bit.
class NumpyRng {
 public:
  explicit NumpyRng(std::uint32_t seed) : gen_(seed) {}

  void reseed(std::uint32_t seed) { gen_.seed(seed); }

  /// Uniform double in [0, 1); consumes two 32-bit draws (high part first).
  double rand() {
    std::uint32_t a = gen_();
    std::uint32_t b = gen_();
    return (static_cast<double>(a >> 5) * 67108864.0 + static_cast<double>(b >> 6)) / 9007199254740992.0;
  }

  /// RandomState.choice(2): one 32-bit draw, low bit.
  int choice2() { return static_cast<int>(gen_() & 1u); }

 private:
  std::mt19937 gen_;
};

}  // namespace arq::envs
