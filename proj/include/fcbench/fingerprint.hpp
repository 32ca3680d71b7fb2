#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fcb {

// (p, q, r) quotienting layout. The top q hash bits select a slot, the next
// r bits are stored as the remainder, and the 64 - p bits below them are
// reserved for adaptive extensions.
struct FingerprintScheme {
  unsigned q = 0;
  unsigned r = 0;

  FingerprintScheme() = default;
  FingerprintScheme(unsigned quotient_bits, unsigned remainder_bits) : q(quotient_bits), r(remainder_bits) {
    if (q < 1 || q > 32) throw std::invalid_argument("quotient bits must be in [1, 32], got " + std::to_string(q));
    if (r < 1 || r > 16) throw std::invalid_argument("remainder bits must be in [1, 16], got " + std::to_string(r));
    if (q + r > 48) throw std::invalid_argument("fingerprint bits q + r must not exceed 48");
  }

  unsigned p() const noexcept { return q + r; }
  std::uint64_t slots() const noexcept { return std::uint64_t{1} << q; }
  // Hash bits available for extensions beyond the fingerprint.
  unsigned extension_capacity() const noexcept { return 64 - p(); }
  // Target false-positive probability per occupied slot, 2^-r.
  double epsilon() const noexcept { return 1.0 / static_cast<double>(std::uint64_t{1} << r); }

  friend bool operator==(const FingerprintScheme&, const FingerprintScheme&) = default;
};

struct SplitFingerprint {
  std::uint64_t quotient = 0;
  std::uint64_t remainder = 0;

  friend bool operator==(const SplitFingerprint&, const SplitFingerprint&) = default;
};

inline SplitFingerprint split_fingerprint(std::uint64_t h, const FingerprintScheme& s) noexcept {
  const std::uint64_t top = h >> (64 - s.p());
  return {top >> s.r, top & ((std::uint64_t{1} << s.r) - 1)};
}

// The p-bit fingerprint (quotient and remainder concatenated).
inline std::uint64_t fingerprint_bits(std::uint64_t h, const FingerprintScheme& s) noexcept {
  return h >> (64 - s.p());
}

// `len` hash bits immediately below the top p bits, right-aligned.
inline std::uint64_t extension_bits(std::uint64_t h, const FingerprintScheme& s, unsigned len) noexcept {
  if (len == 0) return 0;
  const std::uint64_t below = h << s.p();  // drop fingerprint bits
  return below >> (64 - len);
}

}  // namespace fcb
