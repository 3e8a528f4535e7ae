#pragma once

#include <cmath>
#include <cstdint>

#include "driftkernel/types.hpp"

namespace dk {

// Philox4x32-10 counter-based generator. Streams are addressed by
// (seed; path, step, block): any draw is reproducible independently of thread
// scheduling or worker count, which is what makes every randomized sweep in
// this library bit-stable under --workers.
struct Philox {
  static constexpr uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  static constexpr uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

  static inline void block(uint64_t seed, uint64_t path, uint64_t step,
                           uint32_t block_idx, uint32_t out[4]) {
    uint32_t c0 = static_cast<uint32_t>(path);
    uint32_t c1 = static_cast<uint32_t>(path >> 32);
    uint32_t c2 = static_cast<uint32_t>(step);
    uint32_t c3 = static_cast<uint32_t>(step >> 32) ^ block_idx;
    uint32_t k0 = static_cast<uint32_t>(seed);
    uint32_t k1 = static_cast<uint32_t>(seed >> 32);
    for (int r = 0; r < 10; ++r) {
      uint64_t p0 = static_cast<uint64_t>(kM0) * c0;
      uint64_t p1 = static_cast<uint64_t>(kM1) * c2;
      uint32_t h0 = static_cast<uint32_t>(p0 >> 32), l0 = static_cast<uint32_t>(p0);
      uint32_t h1 = static_cast<uint32_t>(p1 >> 32), l1 = static_cast<uint32_t>(p1);
      uint32_t n0 = h1 ^ c1 ^ k0, n1 = l1, n2 = h0 ^ c3 ^ k1, n3 = l0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += kW0; k1 += kW1;
    }
    out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
  }
};

// Sequential view of one (seed, path, step) stream: uniforms in (0,1),
// normals via Box-Muller. Cheap to construct; draws are counted so parallel
// consumers replay identically.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t path, uint64_t step)
      : seed_(seed), path_(path), step_(step) {}

  double uniform() {
    if (have_ == 0) refill();
    uint32_t hi = buf_[--have_];
    uint32_t lo = buf_[--have_];
    uint64_t v = (static_cast<uint64_t>(hi) << 32) | lo;
    // strictly inside (0,1): 53-bit mantissa, centered
    return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
  }

  // N(0,1) pair via Box-Muller; consumes exactly two uniforms.
  void normal_pair(double& z0, double& z1) {
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * kPi * u2;
    z0 = r * std::cos(th);
    z1 = r * std::sin(th);
  }

 private:
  void refill() {
    Philox::block(seed_, path_, step_, block_++, buf_);
    have_ = 4;
  }
  uint64_t seed_, path_, step_;
  uint32_t block_ = 0;
  uint32_t buf_[4] = {};
  int have_ = 0;
};

}  // namespace dk
