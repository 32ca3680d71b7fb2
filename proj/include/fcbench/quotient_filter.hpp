#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string_view>
#include <utility>
#include <vector>

#include "fcbench/fingerprint.hpp"
#include "fcbench/hash.hpp"

namespace fcb {

enum class InsertStatus { ok, full };

// Fixed-width fields packed back to back in 64-bit words.
class PackedArray {
 public:
  PackedArray() = default;
  PackedArray(std::uint64_t count, unsigned width)
      : width_(width), mask_((std::uint64_t{1} << width) - 1), words_((count * width + 63) / 64 + 1, 0) {}

  std::uint64_t get(std::uint64_t i) const noexcept {
    const std::uint64_t bit = i * width_;
    const std::uint64_t word = bit >> 6;
    const unsigned off = bit & 63;
    std::uint64_t v = words_[word] >> off;
    if (off + width_ > 64) v |= words_[word + 1] << (64 - off);
    return v & mask_;
  }

  void set(std::uint64_t i, std::uint64_t value) noexcept {
    value &= mask_;
    const std::uint64_t bit = i * width_;
    const std::uint64_t word = bit >> 6;
    const unsigned off = bit & 63;
    words_[word] = (words_[word] & ~(mask_ << off)) | (value << off);
    if (off + width_ > 64) {
      const unsigned spill = 64 - off;
      words_[word + 1] = (words_[word + 1] & ~(mask_ >> spill)) | (value >> spill);
    }
  }

 private:
  unsigned width_ = 1;
  std::uint64_t mask_ = 1;
  std::vector<std::uint64_t> words_;
};

// Quotient filter with the three-bit (occupied, continuation, shifted)
// metadata scheme. Runs are kept sorted by quotient and then remainder, and
// elements are displaced rightward linear-probe style, so a slot never holds
// an element whose quotient is larger than its position.
//
// Fingerprints are stored with set semantics: inserting an existing
// (quotient, remainder) pair is a no-op.
class QuotientFilter {
 public:
  static constexpr std::uint64_t kHeaderBits = 64;
  static constexpr double kMaxLoad = 0.95;

  static constexpr std::uint64_t kOccupied = 1;
  static constexpr std::uint64_t kContinuation = 2;
  static constexpr std::uint64_t kShifted = 4;

  QuotientFilter() = default;

  explicit QuotientFilter(FingerprintScheme scheme)
      : scheme_(scheme),
        slots_(scheme.slots(), scheme.r + 3),
        capacity_(static_cast<std::uint64_t>(kMaxLoad * static_cast<double>(scheme.slots()))) {}

  const FingerprintScheme& scheme() const noexcept { return scheme_; }
  std::uint64_t slot_count() const noexcept { return scheme_.slots(); }
  std::uint64_t load() const noexcept { return load_; }
  std::uint64_t capacity() const noexcept { return capacity_; }
  double load_factor() const noexcept { return static_cast<double>(load_) / static_cast<double>(slot_count()); }

  std::uint64_t size_bits() const noexcept { return slot_count() * (scheme_.r + 3) + kHeaderBits; }

  bool contains(SplitFingerprint fp) const noexcept {
    if (!occupied(fp.quotient)) return false;
    std::uint64_t s = run_start(fp.quotient);
    do {
      const std::uint64_t rem = remainder(s);
      if (rem == fp.remainder) return true;
      if (rem > fp.remainder) return false;
      s = incr(s);
    } while (continuation(s));
    return false;
  }

  bool contains_hash(std::uint64_t h) const noexcept { return contains(split_fingerprint(h, scheme_)); }

  InsertStatus insert(SplitFingerprint fp) {
    if (contains(fp)) return InsertStatus::ok;
    if (load_ + 1 > capacity_) return InsertStatus::full;
    ++load_;

    if (is_empty(fp.quotient)) {
      write(fp.quotient, fp.remainder, kOccupied);
      return InsertStatus::ok;
    }

    // Re-encode the whole cluster with the new element merged in. The
    // cluster grows by exactly one slot, into the empty slot that ends it.
    std::uint64_t start = fp.quotient;
    while (shifted(start)) start = decr(start);

    std::vector<Entry> elems = decode_cluster(start);
    const Entry fresh{offset(start, fp.quotient), fp.remainder};
    auto it = elems.begin();
    while (it != elems.end() && (it->quotient_offset < fresh.quotient_offset ||
                                 (it->quotient_offset == fresh.quotient_offset && it->remainder < fresh.remainder))) {
      ++it;
    }
    elems.insert(it, fresh);
    encode_cluster(start, elems);
    return InsertStatus::ok;
  }

  InsertStatus insert_hash(std::uint64_t h) { return insert(split_fingerprint(h, scheme_)); }

  // Decode walk over every cluster; yields pairs in slot order starting from
  // the first cluster after an empty slot.
  std::vector<SplitFingerprint> decode() const {
    std::vector<SplitFingerprint> out;
    if (load_ == 0) return out;
    std::uint64_t e = 0;
    while (!is_empty(e)) e = incr(e);
    std::uint64_t i = incr(e);
    for (std::uint64_t visited = 0; visited < slot_count();) {
      if (is_empty(i)) {
        i = incr(i);
        ++visited;
        continue;
      }
      const std::uint64_t start = i;
      for (const Entry& el : decode_cluster(start)) {
        out.push_back({(start + el.quotient_offset) & (slot_count() - 1), el.remainder});
        i = incr(i);
        ++visited;
      }
    }
    return out;
  }

  // Per-slot metadata invariants: empty slots carry no bits, continuations
  // are shifted, shifted slots follow a non-empty slot, the number of run
  // starts equals the number of occupied bits, and runs are sorted.
  bool layout_consistent() const {
    std::uint64_t occupied_bits = 0, run_starts = 0, stored = 0;
    for (std::uint64_t i = 0; i < slot_count(); ++i) {
      const std::uint64_t meta = metadata(i);
      if (meta == 0) {
        if (remainder(i) != 0) return false;
        continue;
      }
      ++stored;
      if (meta & kOccupied) ++occupied_bits;
      if (!(meta & kContinuation)) ++run_starts;
      if ((meta & kContinuation) && !(meta & kShifted)) return false;
      if ((meta & kShifted) && is_empty(decr(i))) return false;
      if ((meta & kContinuation) && remainder(decr(i)) >= remainder(i)) return false;
    }
    return occupied_bits == run_starts && stored == load_;
  }

 private:
  struct Entry {
    std::uint64_t quotient_offset;
    std::uint64_t remainder;
  };

  std::uint64_t incr(std::uint64_t i) const noexcept { return (i + 1) & (slot_count() - 1); }
  std::uint64_t decr(std::uint64_t i) const noexcept { return (i - 1) & (slot_count() - 1); }
  std::uint64_t offset(std::uint64_t from, std::uint64_t to) const noexcept {
    return (to - from) & (slot_count() - 1);
  }

  std::uint64_t metadata(std::uint64_t i) const noexcept { return slots_.get(i) & 7; }
  std::uint64_t remainder(std::uint64_t i) const noexcept { return slots_.get(i) >> 3; }
  bool occupied(std::uint64_t i) const noexcept { return metadata(i) & kOccupied; }
  bool continuation(std::uint64_t i) const noexcept { return metadata(i) & kContinuation; }
  bool shifted(std::uint64_t i) const noexcept { return metadata(i) & kShifted; }
  bool is_empty(std::uint64_t i) const noexcept { return metadata(i) == 0; }

  void write(std::uint64_t i, std::uint64_t rem, std::uint64_t meta) noexcept { slots_.set(i, (rem << 3) | meta); }

  std::uint64_t run_start(std::uint64_t fq) const noexcept {
    std::uint64_t b = fq;
    while (shifted(b)) b = decr(b);
    std::uint64_t s = b;
    while (b != fq) {
      do s = incr(s);
      while (continuation(s));
      do b = incr(b);
      while (!occupied(b));
    }
    return s;
  }

  // Elements of the cluster beginning at `start`, quotients as offsets from
  // `start`.
  std::vector<Entry> decode_cluster(std::uint64_t start) const {
    std::vector<Entry> elems;
    std::deque<std::uint64_t> pending;
    std::uint64_t current = 0;
    for (std::uint64_t i = start; !is_empty(i); i = incr(i)) {
      if (occupied(i)) pending.push_back(offset(start, i));
      if (!continuation(i)) {
        current = pending.front();
        pending.pop_front();
      }
      elems.push_back({current, remainder(i)});
    }
    return elems;
  }

  void encode_cluster(std::uint64_t start, const std::vector<Entry>& elems) {
    for (std::uint64_t k = 0; k < elems.size(); ++k) write((start + k) & (slot_count() - 1), 0, 0);
    std::uint64_t pos = 0;
    for (std::size_t k = 0; k < elems.size(); ++k) {
      const Entry& el = elems[k];
      pos = (k == 0) ? el.quotient_offset : std::max(pos + 1, el.quotient_offset);
      std::uint64_t meta = 0;
      if (k > 0 && elems[k - 1].quotient_offset == el.quotient_offset) meta |= kContinuation;
      if (pos != el.quotient_offset) meta |= kShifted;
      write((start + pos) & (slot_count() - 1), el.remainder, meta);
    }
    for (const Entry& el : elems) {
      const std::uint64_t slot = (start + el.quotient_offset) & (slot_count() - 1);
      slots_.set(slot, slots_.get(slot) | kOccupied);
    }
  }

  FingerprintScheme scheme_{};
  PackedArray slots_;
  std::uint64_t capacity_ = 0;
  std::uint64_t load_ = 0;
};

}  // namespace fcb
