#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fcbench/bloom.hpp"
#include "fcbench/fingerprint.hpp"
#include "fcbench/hash.hpp"
#include "fcbench/quotient_filter.hpp"

namespace {

using namespace fcb;

std::string numbered(const char* prefix, std::uint64_t i) { return std::string(prefix) + std::to_string(i); }

double binomial_sigma(double p, double n) { return std::sqrt(p * (1 - p) / n); }

TEST(HashKey, DeterministicAndSeeded) {
  EXPECT_EQ(hash_key("", 7), hash_key("", 7));
  EXPECT_NE(hash_key("a", 1), hash_key("a", 2));
  EXPECT_NE(hash_key("a", 1), hash_key("b", 1));
}

TEST(HashKey, Avalanche) {
  std::mt19937_64 rng(42);
  double total = 0;
  constexpr int kTrials = 10000;
  for (int t = 0; t < kTrials; ++t) {
    std::string key(16, '\0');
    for (auto& c : key) c = static_cast<char>(rng() & 0xff);
    std::string flipped = key;
    flipped[0] = static_cast<char>(flipped[0] ^ 1);
    total += std::popcount(hash_key(key, 99) ^ hash_key(flipped, 99));
  }
  const double mean = total / kTrials;
  EXPECT_GE(mean, 24.0);
  EXPECT_LE(mean, 40.0);
}

TEST(Fingerprint, SplitTopBits) {
  const FingerprintScheme s(3, 4);
  const std::uint64_t h = std::uint64_t{0b1011010} << 57;
  const auto fp = split_fingerprint(h, s);
  EXPECT_EQ(fp.quotient, 5u);
  EXPECT_EQ(fp.remainder, 10u);
  EXPECT_EQ(split_fingerprint(0, FingerprintScheme(8, 8)), (SplitFingerprint{0, 0}));
  EXPECT_EQ(split_fingerprint(std::uint64_t{3} << 62, FingerprintScheme(1, 1)), (SplitFingerprint{1, 1}));
}

TEST(Fingerprint, ExtensionBitsFollowFingerprint) {
  const FingerprintScheme s(4, 4);
  const std::uint64_t h = 0xABCDEF0123456789ULL;
  EXPECT_EQ(fingerprint_bits(h, s), 0xABu);
  EXPECT_EQ(extension_bits(h, s, 4), 0xCu);
  EXPECT_EQ(extension_bits(h, s, 12), 0xCDEu);
  EXPECT_EQ(extension_bits(h, s, 0), 0u);
  EXPECT_EQ(extension_bits(h, s, 56), h & ((std::uint64_t{1} << 56) - 1));
}

TEST(Fingerprint, SchemeValidation) {
  EXPECT_THROW(FingerprintScheme(0, 4), std::invalid_argument);
  EXPECT_THROW(FingerprintScheme(33, 4), std::invalid_argument);
  EXPECT_THROW(FingerprintScheme(8, 0), std::invalid_argument);
  EXPECT_THROW(FingerprintScheme(8, 17), std::invalid_argument);
  EXPECT_EQ(FingerprintScheme(32, 16).p(), 48u);
  EXPECT_EQ(FingerprintScheme(10, 5).extension_capacity(), 49u);
}

TEST(Bloom, HashCountRule) {
  EXPECT_EQ(bloom_optimal_hashes(1000, 100), 7u);
  EXPECT_EQ(bloom_optimal_hashes(100, 100), 1u);
  EXPECT_EQ(bloom_optimal_hashes(1, 100), 1u);
  EXPECT_EQ(bloom_optimal_hashes(100000, 10), 30u);
  const auto f = BloomFilter::build(1000 + BloomFilter::kHeaderBits, 100, 1);
  EXPECT_EQ(f.bit_count(), 1000u);
  EXPECT_EQ(f.hash_count(), 7u);
  EXPECT_EQ(f.size_bits(), 1000u + BloomFilter::kHeaderBits);
  EXPECT_THROW(BloomFilter::build(63, 10, 1), std::invalid_argument);
}

TEST(Bloom, AnalyticFormula) {
  EXPECT_EQ(bloom_analytic_fpr(1024, 7, 0), 0.0);
  EXPECT_NEAR(bloom_analytic_fpr(100, 1, 100), 1 - std::exp(-1.0), 1e-12);
  // (1 - e^{-0.68359375})^7 evaluated independently.
  const double fill = 1 - std::exp(-7.0 * 100 / 1024);
  EXPECT_NEAR(bloom_analytic_fpr(1024, 7, 100), std::pow(fill, 7), 1e-15);
  EXPECT_NEAR(bloom_analytic_fpr(1024, 7, 100), 0.0073, 0.0002);
}

TEST(Bloom, EmptyAndNoFalseNegatives) {
  BloomFilter f(1024, 7, 3);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(f.contains(numbered("x", i)));
  for (int i = 0; i < 100; ++i) f.insert(numbered("k", i));
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(f.contains(numbered("k", i)));
}

TEST(Bloom, MonteCarloMatchesFill) {
  // Conditional on a built filter, a fresh key is a false positive with
  // probability (set bits / m)^k when probes behave independently.
  double fp = 0, queries = 0, conditional = 0;
  for (int s = 0; s < 10; ++s) {
    BloomFilter f(1024, 7, 1000 + s);
    for (int i = 0; i < 100; ++i) f.insert(numbered("pos", s * 1000 + i));
    const double p = std::pow(static_cast<double>(f.set_bits()) / 1024.0, 7);
    for (int i = 0; i < 100000; ++i) fp += f.contains(numbered("neg", s * 1000000 + i));
    conditional += p * 100000;
    queries += 100000;
  }
  const double p = conditional / queries;
  EXPECT_NEAR(fp / queries, p, 3 * binomial_sigma(p, queries));
}

TEST(Bloom, MonteCarloMatchesAnalytic) {
  // Across filters the fill itself varies: X = set bits has variance
  // m e^-l (1 - (1 + l) e^-l) with l = kn/m, and the FPR moves by about
  // k * FPR * sd(X)/E[X]. Both spreads enter the tolerance.
  constexpr int kFilters = 10;
  constexpr double m = 1024, k = 7, n = 100;
  double fp = 0, queries = 0;
  for (int s = 0; s < kFilters; ++s) {
    BloomFilter f(1024, 7, 2000 + s);
    for (int i = 0; i < 100; ++i) f.insert(numbered("pos", s * 1000 + i));
    for (int i = 0; i < 100000; ++i) fp += f.contains(numbered("neg", s * 1000000 + i));
    queries += 100000;
  }
  const double analytic = bloom_analytic_fpr(m, k, n);
  const double l = k * n / m;
  const double sd_x = std::sqrt(m * std::exp(-l) * (1 - (1 + l) * std::exp(-l)));
  const double sd_fill = k * analytic * sd_x / (m * (1 - std::exp(-l))) / std::sqrt(kFilters);
  const double sigma = std::hypot(binomial_sigma(analytic, queries), sd_fill);
  EXPECT_NEAR(fp / queries, analytic, 3 * sigma);
}

TEST(Bloom, FprAtTenBitsPerKey) {
  const std::uint64_t n = 10000;
  double fp = 0, q = 0;
  for (int s = 0; s < 3; ++s) {
    auto f = BloomFilter::build(10 * n + BloomFilter::kHeaderBits, n, s);
    for (std::uint64_t i = 0; i < n; ++i) f.insert(numbered("p", s * n + i));
    for (int i = 0; i < 100000; ++i) fp += f.contains(numbered("n", s * 1000000 + i));
    q += 100000;
  }
  const double expected = bloom_analytic_fpr(10.0 * n, 7, n);
  EXPECT_NEAR(fp / q, expected, 4 * binomial_sigma(expected, q));
}

// ---------------------------------------------------------------------------

std::set<std::uint64_t> oracle_insert(QuotientFilter& qf, std::set<std::uint64_t>& oracle, std::uint64_t h) {
  if (qf.insert_hash(h) == InsertStatus::ok) oracle.insert(fingerprint_bits(h, qf.scheme()));
  return oracle;
}

TEST(QuotientFilter, SizeFormula) {
  const QuotientFilter qf(FingerprintScheme(10, 5));
  EXPECT_EQ(qf.size_bits(), 1024u * 8 + QuotientFilter::kHeaderBits);
}

TEST(QuotientFilter, EmptyAndInserted) {
  QuotientFilter qf(FingerprintScheme(6, 4));
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(qf.contains_hash(hash_key(numbered("x", i), 1)));
  const auto h = hash_key("hello", 1);
  EXPECT_EQ(qf.insert_hash(h), InsertStatus::ok);
  EXPECT_TRUE(qf.contains_hash(h));
  EXPECT_EQ(qf.load(), 1u);
  EXPECT_EQ(qf.insert_hash(h), InsertStatus::ok);
  EXPECT_EQ(qf.load(), 1u);  // set semantics
}

TEST(QuotientFilter, SameQuotientRun) {
  const FingerprintScheme s(4, 4);
  QuotientFilter qf(s);
  const std::uint64_t a = std::uint64_t{0x35} << 56;  // quotient 3, remainder 5
  const std::uint64_t b = std::uint64_t{0x39} << 56;  // quotient 3, remainder 9
  qf.insert_hash(b);
  qf.insert_hash(a);
  EXPECT_TRUE(qf.contains_hash(a));
  EXPECT_TRUE(qf.contains_hash(b));
  EXPECT_TRUE(qf.layout_consistent());
  const auto decoded = qf.decode();
  ASSERT_EQ(decoded.size(), 2u);
  // Slot 3 holds the smaller remainder as run head, slot 4 the continuation.
  std::set<std::pair<std::uint64_t, std::uint64_t>> got;
  for (auto fp : decoded) got.insert({fp.quotient, fp.remainder});
  EXPECT_EQ(got, (std::set<std::pair<std::uint64_t, std::uint64_t>>{{3, 5}, {3, 9}}));
  EXPECT_FALSE(qf.contains_hash(std::uint64_t{0x37} << 56));
  EXPECT_FALSE(qf.contains_hash(std::uint64_t{0x49} << 56));
}

TEST(QuotientFilter, DecodeMatchesOracleQ4R4) {
  const FingerprintScheme s(4, 4);
  QuotientFilter qf(s);
  std::set<std::uint64_t> oracle;
  for (int i = 0; i < 50; ++i) oracle_insert(qf, oracle, hash_key(numbered("k", i), 9));
  std::set<std::uint64_t> decoded;
  for (auto fp : qf.decode()) decoded.insert((fp.quotient << s.r) | fp.remainder);
  EXPECT_EQ(decoded, oracle);
  EXPECT_TRUE(qf.layout_consistent());
  for (int i = 0; i < 10000; ++i) {
    const auto h = hash_key(numbered("q", i), 9);
    EXPECT_EQ(qf.contains_hash(h), oracle.count(fingerprint_bits(h, s)) > 0);
  }
}

TEST(QuotientFilter, RefusesBeyondMaxLoad) {
  const FingerprintScheme s(4, 8);
  QuotientFilter qf(s);
  EXPECT_EQ(qf.capacity(), 15u);
  std::uint64_t refused = 0;
  for (std::uint64_t fp = 0; fp < 40; ++fp) {
    const auto st = qf.insert_hash(((fp * 37) & 0xfff) << 52);
    refused += st == InsertStatus::full;
  }
  EXPECT_EQ(qf.load(), 15u);
  EXPECT_GT(refused, 0u);
  EXPECT_TRUE(qf.layout_consistent());
}

TEST(QuotientFilter, PropertyOracleEquivalenceAcrossSchemes) {
  std::mt19937_64 rng(5);
  for (unsigned q = 3; q <= 8; ++q) {
    for (unsigned r = 1; r <= 6; ++r) {
      const FingerprintScheme s(q, r);
      QuotientFilter qf(s);
      std::set<std::uint64_t> oracle;
      const auto target = static_cast<std::uint64_t>(0.9 * static_cast<double>(s.slots()));
      for (std::uint64_t i = 0; oracle.size() < target && i < 10 * target; ++i) {
        oracle_insert(qf, oracle, rng());
        ASSERT_TRUE(qf.layout_consistent()) << "q=" << q << " r=" << r << " after " << i;
      }
      for (int i = 0; i < 2000; ++i) {
        const auto h = rng();
        ASSERT_EQ(qf.contains_hash(h), oracle.count(fingerprint_bits(h, s)) > 0) << "q=" << q << " r=" << r;
      }
      std::set<std::uint64_t> decoded;
      for (auto fp : qf.decode()) decoded.insert((fp.quotient << r) | fp.remainder);
      EXPECT_EQ(decoded, oracle);
    }
  }
}

TEST(QuotientFilter, WrapAroundClusters) {
  const FingerprintScheme s(3, 4);
  QuotientFilter qf(s);
  std::set<std::uint64_t> oracle;
  // Everything lands on the last quotient and must wrap to slot 0 onwards.
  for (std::uint64_t rem = 0; rem < 5; ++rem) oracle_insert(qf, oracle, ((std::uint64_t{7} << 4) | rem) << 57);
  oracle_insert(qf, oracle, ((std::uint64_t{0} << 4) | 3) << 57);
  EXPECT_TRUE(qf.layout_consistent());
  for (std::uint64_t fp = 0; fp < 128; ++fp) EXPECT_EQ(qf.contains_hash(fp << 57), oracle.count(fp) > 0) << fp;
}

}  // namespace
