#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace fcb {

// MurmurHash64A (Austin Appleby, public domain). Stable across processes
// and platforms with the same endianness; every filter in the library
// derives its probe positions and fingerprints from this one function.
inline std::uint64_t hash_key(std::string_view key, std::uint64_t seed) noexcept {
  constexpr std::uint64_t m = 0xc6a4a7935bd1e995ULL;
  constexpr int r = 47;

  const auto len = key.size();
  std::uint64_t h = seed ^ (len * m);

  const char* data = key.data();
  const char* end = data + (len / 8) * 8;
  for (; data != end; data += 8) {
    std::uint64_t k;
    std::memcpy(&k, data, sizeof(k));
    k *= m;
    k ^= k >> r;
    k *= m;
    h ^= k;
    h *= m;
  }

  const auto* tail = reinterpret_cast<const unsigned char*>(data);
  switch (len & 7) {
    case 7: h ^= std::uint64_t(tail[6]) << 48; [[fallthrough]];
    case 6: h ^= std::uint64_t(tail[5]) << 40; [[fallthrough]];
    case 5: h ^= std::uint64_t(tail[4]) << 32; [[fallthrough]];
    case 4: h ^= std::uint64_t(tail[3]) << 24; [[fallthrough]];
    case 3: h ^= std::uint64_t(tail[2]) << 16; [[fallthrough]];
    case 2: h ^= std::uint64_t(tail[1]) << 8; [[fallthrough]];
    case 1:
      h ^= std::uint64_t(tail[0]);
      h *= m;
  }

  h ^= h >> r;
  h *= m;
  h ^= h >> r;
  return h;
}

// splitmix64 finalizer; used to derive secondary hashes from a primary one.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Maps a hash to a double in [0, 1).
constexpr double unit_interval(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

struct SeededHasher {
  std::uint64_t seed = 0;
  std::uint64_t operator()(std::string_view key) const noexcept { return hash_key(key, seed); }
};

// Folds a sequence of 64-bit values into one digest (order-sensitive).
class HashFold {
 public:
  explicit HashFold(std::uint64_t seed = 0) : state_(seed) {}
  void add(std::uint64_t v) noexcept { state_ = mix64(state_ ^ mix64(v + count_++)); }
  std::uint64_t digest() const noexcept { return mix64(state_ ^ count_); }

 private:
  std::uint64_t state_;
  std::uint64_t count_ = 0;
};

}  // namespace fcb
