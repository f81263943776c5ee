#pragma once

#include <cstdint>
#include <limits>

namespace urnlab {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Counter-based generator (Philox2x64-10). A stream is keyed by
// (master_seed, stream_index), so parallel batches reproduce bit-identically
// regardless of scheduling or thread count.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t master_seed, std::uint64_t stream_index = 0) {
    std::uint64_t s = master_seed;
    std::uint64_t a = detail::splitmix64(s);
    s = master_seed ^ (0x9E3779B97F4A7C15ULL * (stream_index + 1));
    std::uint64_t b = detail::splitmix64(s);
    key_ = a ^ (b + 0x632BE59BD9B4E019ULL);
    ctr0_ = stream_index;
    ctr1_ = 0;
    have_ = 0;
  }

  std::uint64_t next_u64() {
    if (have_ == 0) fill_block();
    return buf_[--have_];
  }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // UniformRandomBitGenerator interface.
  std::uint64_t operator()() { return next_u64(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

 private:
  static constexpr std::uint64_t kMul = 0xD2B74407B1CE6E93ULL;
  static constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

  void fill_block() {
    std::uint64_t x0 = ctr0_, x1 = ctr1_, k = key_;
    for (int r = 0; r < 10; ++r) {
      __uint128_t prod = (__uint128_t)kMul * x0;
      std::uint64_t hi = std::uint64_t(prod >> 64);
      std::uint64_t lo = std::uint64_t(prod);
      x0 = hi ^ k ^ x1;
      x1 = lo;
      k += kWeyl;
    }
    buf_[1] = x0;
    buf_[0] = x1;
    have_ = 2;
    if (++ctr1_ == 0) ++ctr0_;  // 128-bit counter increment
  }

  std::uint64_t key_, ctr0_, ctr1_;
  std::uint64_t buf_[2];
  int have_;
};

}  // namespace urnlab
