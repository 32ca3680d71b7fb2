#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fcbench/hash.hpp"

namespace fcb {

// Standard estimate (1 - e^{-kn/m})^k.
inline double bloom_analytic_fpr(double m, double k, double n) {
  if (n <= 0) return 0.0;
  return std::pow(1.0 - std::exp(-k * n / m), k);
}

// Bits per element for a Bloom filter with target FPR eps.
inline double bloom_bits_per_element(double eps) {
  if (eps >= 1.0) return 0.0;
  return 1.44 * std::log2(1.0 / eps);
}

// Probe count round(ln2 * m / n), clamped to [1, 30].
inline unsigned bloom_optimal_hashes(std::uint64_t m, std::uint64_t n) {
  if (n == 0) return 1;
  const double k = std::round(std::log(2.0) * static_cast<double>(m) / static_cast<double>(n));
  return static_cast<unsigned>(std::clamp(k, 1.0, 30.0));
}

class BloomFilter {
 public:
  // m (27 bits) + k (5 bits); the seed is derived from the owning structure.
  static constexpr std::uint64_t kHeaderBits = 32;
  static constexpr unsigned kMaxHashes = 30;

  BloomFilter() = default;

  BloomFilter(std::uint64_t m, unsigned k, std::uint64_t seed) : m_(m), k_(k), seed_(seed), words_((m + 63) / 64, 0) {
    if (m < 1) throw std::invalid_argument("bloom filter needs at least one bit");
    if (k < 1 || k > kMaxHashes) throw std::invalid_argument("bloom hash count must be in [1, 30]");
  }

  // Sizes the bit array to `space_bits` minus the header and picks k for
  // `expected_n` keys.
  static BloomFilter build(std::uint64_t space_bits, std::uint64_t expected_n, std::uint64_t seed) {
    if (space_bits < 64) {
      throw std::invalid_argument("bloom filter space budget too small: " + std::to_string(space_bits) + " bits");
    }
    if (expected_n < 1) expected_n = 1;
    const std::uint64_t m = space_bits - kHeaderBits;
    return BloomFilter(m, bloom_optimal_hashes(m, expected_n), seed);
  }

  std::uint64_t hash(std::string_view key) const noexcept { return hash_key(key, seed_); }

  void insert(std::string_view key) { insert_hash(hash(key), k_); }
  bool contains(std::string_view key) const { return contains_hash(hash(key), k_); }

  // Probe with an explicit count; Ada-BF shares one array across groups
  // that use different k. Positions follow enhanced double hashing,
  // g_i = h1 + i*h2 + (i^3 - i)/6 mod m, so two keys sharing h2 cannot
  // share a shifted run of probes.
  void insert_hash(std::uint64_t h, unsigned k) {
    std::uint64_t pos = h, step = mix64(h);
    for (unsigned i = 0; i < k; ++i) {
      const std::uint64_t bit = pos % m_;
      words_[bit >> 6] |= std::uint64_t{1} << (bit & 63);
      pos += step;
      step += i + 1;
    }
    ++inserted_;
  }

  bool contains_hash(std::uint64_t h, unsigned k) const {
    if (m_ == 0) return false;
    std::uint64_t pos = h, step = mix64(h);
    for (unsigned i = 0; i < k; ++i) {
      const std::uint64_t bit = pos % m_;
      if (!(words_[bit >> 6] >> (bit & 63) & 1)) return false;
      pos += step;
      step += i + 1;
    }
    return true;
  }

  std::uint64_t bit_count() const noexcept { return m_; }
  unsigned hash_count() const noexcept { return k_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t inserted() const noexcept { return inserted_; }
  std::uint64_t size_bits() const noexcept { return m_ + kHeaderBits; }

  std::uint64_t set_bits() const noexcept {
    std::uint64_t n = 0;
    for (auto w : words_) n += static_cast<std::uint64_t>(std::popcount(w));
    return n;
  }

  double analytic_fpr() const {
    return bloom_analytic_fpr(static_cast<double>(m_), static_cast<double>(k_), static_cast<double>(inserted_));
  }

 private:
  std::uint64_t m_ = 0;
  unsigned k_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t inserted_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace fcb
