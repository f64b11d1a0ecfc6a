#include "seqcf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "seqcf/errors.hpp"

namespace seqcf {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr[0] = hi1 ^ ctr[1] ^ key[0];
  ctr[1] = lo1;
  ctr[2] = hi0 ^ ctr[3] ^ key[1];
  ctr[3] = lo0;
}

inline void philox10(std::uint32_t ctr[4], std::uint32_t k0, std::uint32_t k1) {
  std::uint32_t key[2] = {k0, k1};
  for (int r = 0; r < 10; ++r) {
    philox_round(ctr, key);
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  // SplitMix64 finalizer.
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t replication) {
  return mix64(master_seed ^ mix64(replication + 0x51ED270B4C9A2D5Full));
}

RngStream::RngStream(std::uint64_t key, StreamRole role, std::uint64_t cell) {
  key_[0] = static_cast<std::uint32_t>(key);
  key_[1] = static_cast<std::uint32_t>(key >> 32);
  const std::uint64_t strm =
      mix64((static_cast<std::uint64_t>(role) << 56) ^ cell);
  ctr_hi_[0] = static_cast<std::uint32_t>(strm);
  ctr_hi_[1] = static_cast<std::uint32_t>(strm >> 32);
}

void RngStream::refill() {
  std::uint32_t ctr[4] = {static_cast<std::uint32_t>(block_),
                          static_cast<std::uint32_t>(block_ >> 32), ctr_hi_[0],
                          ctr_hi_[1]};
  philox10(ctr, key_[0], key_[1]);
  buf_[0] = ctr[0];
  buf_[1] = ctr[1];
  buf_[2] = ctr[2];
  buf_[3] = ctr[3];
  ++block_;
  pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
  if (pos_ >= 4) refill();
  return buf_[pos_++];
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
  if (n == 0) throw ArgumentError("uniform_int: n must be >= 1");
  // Rejection sampling for exact uniformity.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

std::vector<int> RngStream::sample_without_replacement(int n, int m) {
  if (m < 0 || m > n) {
    throw ArgumentError("sample_without_replacement: need 0 <= m <= n");
  }
  // Floyd's algorithm: m draws regardless of n.
  std::set<int> chosen;
  for (int j = n - m; j < n; ++j) {
    const int t = static_cast<int>(uniform_int(static_cast<std::uint64_t>(j) + 1));
    if (chosen.count(t)) {
      chosen.insert(j);
    } else {
      chosen.insert(t);
    }
  }
  return std::vector<int>(chosen.begin(), chosen.end());
}

}  // namespace seqcf
