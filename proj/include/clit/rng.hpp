#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace clit {

// SplitMix64 finaliser; used to derive seeds from (base seed, labels).
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

// Philox4x32-10 (Salmon et al. 2011). Counter-based: the output block is a
// pure function of (key, counter), so independent substreams are just
// disjoint counter ranges.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// A stream of variates identified by (seed, stream id). Draw order is fixed,
// and all transforms are written out here rather than taken from <random>,
// whose distributions are implementation-defined.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  double uniform();        // (0, 1)
  double normal();         // N(0, 1), Box-Muller
  double exponential();    // Exp(1)
  std::uint64_t below(std::uint64_t bound);  // uniform on [0, bound)

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace clit
