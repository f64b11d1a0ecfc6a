#pragma once

#include <cstdint>
#include <vector>

namespace seqcf {

/// Stream roles keep independent random streams from colliding. Every
/// consumer of randomness owns a (key, role, cell) triple, so results do not
/// depend on scheduling or thread count.
enum class StreamRole : std::uint64_t {
  LatentUnit = 1,
  LatentTime = 2,
  Noise = 3,
  Treatment = 4,
  PolicyMc = 5,
  CapSample = 6,
  SubsampleCi = 7,
  PhiMc = 8,
  Generic = 9,
};

std::uint64_t mix64(std::uint64_t x);

/// Derives the per-replication key from (master seed, replication index).
std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t replication);

/// Counter-based stream (Philox-4x32-10). Cheap to construct, splittable by
/// (key, role, cell), and bit-reproducible on any platform with IEEE doubles.
class RngStream {
 public:
  RngStream(std::uint64_t key, StreamRole role, std::uint64_t cell = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform integer in {0, 1, ..., n-1}; n >= 1.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal via Box-Muller (second value cached).
  double normal();

  /// Draws m distinct indices from {0..n-1}, returned ascending.
  std::vector<int> sample_without_replacement(int n, int m);

 private:
  void refill();

  std::uint32_t key_[2];
  std::uint32_t ctr_hi_[2];  // role/cell words, fixed per stream
  std::uint64_t block_ = 0;  // low counter words, increment per refill
  std::uint32_t buf_[4];
  int pos_ = 4;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace seqcf
