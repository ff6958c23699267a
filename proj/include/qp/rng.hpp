#pragma once

#include <cstdint>

namespace qp {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// A stream is identified by (seed, stream); replications get disjoint
// streams by construction, so parallel runs are reproducible: stream k of
// seed s always yields the same sequence regardless of scheduling.
class Philox {
 public:
  Philox(uint64_t seed, uint64_t stream = 0) {
    key_[0] = static_cast<uint32_t>(seed);
    key_[1] = static_cast<uint32_t>(seed >> 32);
    ctr_[0] = ctr_[1] = 0;
    ctr_[2] = static_cast<uint32_t>(stream);
    ctr_[3] = static_cast<uint32_t>(stream >> 32);
    have_ = 0;
  }

  uint32_t next_u32() {
    if (have_ == 0) {
      block();
      have_ = 4;
    }
    return out_[4 - have_--];
  }

  // uniform double in [0,1) with 53 random bits
  double next_double() {
    uint64_t hi = next_u32(), lo = next_u32();
    uint64_t v = ((hi << 32) | lo) >> 11;
    return static_cast<double>(v) * (1.0 / 9007199254740992.0);
  }

 private:
  static void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
  }

  void block() {
    uint32_t c0 = ctr_[0], c1 = ctr_[1], c2 = ctr_[2], c3 = ctr_[3];
    uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c0, hi0, lo0);
      mulhilo(0xCD9E8D57u, c2, hi1, lo1);
      uint32_t n0 = hi1 ^ c1 ^ k0, n1 = lo1, n2 = hi0 ^ c3 ^ k1, n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_[0] = c0;
    out_[1] = c1;
    out_[2] = c2;
    out_[3] = c3;
    if (++ctr_[0] == 0 && ++ctr_[1] == 0) ++ctr_[2];
  }

  uint32_t key_[2];
  uint32_t ctr_[4];
  uint32_t out_[4];
  int have_;
};

}  // namespace qp
