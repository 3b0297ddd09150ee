#pragma once
#include <array>
#include <cstdint>

#include "loggas/util.hpp"

namespace loggas {

// Counter-based generator (Philox 4x32, 10 rounds) with per-stream keys.
// Chains own disjoint streams, so reproducibility is independent of how
// chains are scheduled onto threads.
class Rng {
  public:
    explicit Rng(uint64_t seed, uint64_t stream = 0);

    uint64_t next_u64();
    double uniform01();                       // in (0,1), 53-bit
    double uniform(double a, double b);
    double normal();                          // Box-Muller, cached pair
    double gamma(double shape);               // Marsaglia-Tsang, any shape > 0
    double chi(double k);                     // sqrt(chi-squared_k)

    static std::array<uint32_t, 4> block(const std::array<uint32_t, 4>& counter,
                                         const std::array<uint32_t, 2>& key);

  private:
    std::array<uint32_t, 2> key_{};
    uint64_t position_ = 0;  // low half of the counter
    uint64_t stream_ = 0;    // high half of the counter
    std::array<uint32_t, 4> buf_{};
    int buf_pos_ = 4;
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;

    uint32_t next_u32();
};

}  // namespace loggas
