#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fcbench/fingerprint.hpp"
#include "fcbench/hash.hpp"
#include "fcbench/quotient_filter.hpp"

namespace fcb {

enum class ReportResult { adapted, not_a_fp };

// Extra hash bits stored for one element beyond its p-bit fingerprint.
struct Extension {
  std::uint64_t bits = 0;
  unsigned len = 0;

  friend bool operator==(const Extension&, const Extension&) = default;
};

// Side table of extensions keyed by the p-bit fingerprint (the anchor).
// An anchor with no entry has never been adapted: all of its elements match
// at length zero. Once an anchor has an entry, it holds one Extension per
// element, aligned index-for-index with the reverse-map chain.
class ExtensionStore {
 public:
  static constexpr unsigned kCountBits = 8;
  static constexpr unsigned kLengthBits = 6;

  std::vector<Extension>* find(std::uint64_t anchor) {
    auto it = entries_.find(anchor);
    return it == entries_.end() ? nullptr : &it->second;
  }
  const std::vector<Extension>* find(std::uint64_t anchor) const {
    auto it = entries_.find(anchor);
    return it == entries_.end() ? nullptr : &it->second;
  }
  std::vector<Extension>& create(std::uint64_t anchor, std::size_t members) {
    return entries_.emplace(anchor, std::vector<Extension>(members)).first->second;
  }

  std::size_t entry_count() const noexcept { return entries_.size(); }

  // Per entry: anchor id (p bits) and a member count; per member: a length
  // field plus the extension bits themselves.
  std::uint64_t size_bits(unsigned p) const noexcept {
    std::uint64_t bits = 0;
    for (const auto& [anchor, members] : entries_) {
      bits += p + kCountBits;
      for (const Extension& e : members) bits += kLengthBits + e.len;
    }
    return bits;
  }

  const std::unordered_map<std::uint64_t, std::vector<Extension>>& entries() const noexcept { return entries_; }

 private:
  std::unordered_map<std::uint64_t, std::vector<Extension>> entries_;
};

// Fingerprint -> original keys. Several keys may share one p-bit
// fingerprint; they chain in insertion order.
class ReverseMap {
 public:
  static constexpr std::uint64_t kEntryOverheadBits = 64;

  std::vector<std::string>* find(std::uint64_t anchor) {
    auto it = chains_.find(anchor);
    return it == chains_.end() ? nullptr : &it->second;
  }
  const std::vector<std::string>* find(std::uint64_t anchor) const {
    auto it = chains_.find(anchor);
    return it == chains_.end() ? nullptr : &it->second;
  }
  std::vector<std::string>& chain(std::uint64_t anchor) { return chains_[anchor]; }

  std::size_t key_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [anchor, keys] : chains_) n += keys.size();
    return n;
  }

  std::uint64_t size_bits() const noexcept {
    std::uint64_t bits = 0;
    for (const auto& [anchor, keys] : chains_) {
      bits += kEntryOverheadBits;
      for (const auto& k : keys) bits += 8 * k.size() + 32;
    }
    return bits;
  }

  const std::unordered_map<std::uint64_t, std::vector<std::string>>& chains() const noexcept { return chains_; }

 private:
  std::unordered_map<std::uint64_t, std::vector<std::string>> chains_;
};

struct AuditRow {
  std::uint64_t fingerprint;
  unsigned extension_len;
  std::uint64_t extension;
  std::string key;
};

// Adaptive quotient filter. A reported false positive y extends every
// stored fingerprint that still matches y by r more bits of its original
// key's hash (recovered through the reverse map) until it no longer matches.
// When the 64-bit hash runs out, the original key is kept exactly in an
// overflow set and y goes into a rejected set.
template <typename Hasher = SeededHasher>
class AdaptiveQF {
 public:
  static constexpr std::uint64_t kExactKeyOverheadBits = 32;

  explicit AdaptiveQF(FingerprintScheme scheme, Hasher hasher = {}) : base_(scheme), hasher_(std::move(hasher)) {}

  const FingerprintScheme& scheme() const noexcept { return base_.scheme(); }
  const QuotientFilter& base() const noexcept { return base_; }
  const ExtensionStore& extensions() const noexcept { return ext_; }
  const ReverseMap& reverse_map() const noexcept { return rmap_; }
  double epsilon() const noexcept { return scheme().epsilon(); }
  std::uint64_t hash(std::string_view key) const { return hasher_(key); }

  InsertStatus insert(std::string_view key) {
    const auto staged = insert_filter_part(key);
    if (staged.status == InsertStatus::full) return InsertStatus::full;
    insert_reverse_part(key, staged.hash);
    return InsertStatus::ok;
  }

  // insert() split in two so callers can attribute the fingerprint-table
  // work and the reverse-map bookkeeping separately.
  struct Staged {
    InsertStatus status;
    std::uint64_t hash;
  };

  Staged insert_filter_part(std::string_view key) {
    const std::uint64_t h = hasher_(key);
    return {base_.insert_hash(h), h};
  }

  void insert_reverse_part(std::string_view key, std::uint64_t h) {
    const std::uint64_t anchor = fingerprint_bits(h, scheme());
    auto& chain = rmap_.chain(anchor);
    if (std::find(chain.begin(), chain.end(), key) != chain.end()) return;
    const std::string owned(key);
    if (overflow_.count(owned)) return;
    rejected_.erase(owned);
    for (const auto& other : chain) {
      if (hasher_(other) == h) {
        overflow_.insert(owned);
        return;
      }
    }
    chain.push_back(owned);
    if (auto* members = ext_.find(anchor)) {
      // Join an adapted anchor at the longest length already in use there,
      // so earlier adaptations stay in force.
      unsigned len = 0;
      for (const auto& m : *members) len = std::max(len, m.len);
      members->push_back({extension_bits(h, scheme(), len), len});
    }
  }

  bool contains(std::string_view key) const {
    if (!overflow_.empty() && overflow_.count(std::string(key))) return true;
    const std::uint64_t h = hasher_(key);
    if (!base_.contains_hash(h)) return false;
    if (!rejected_.empty() && rejected_.count(std::string(key))) return false;
    const auto* members = ext_.find(fingerprint_bits(h, scheme()));
    if (members == nullptr) return true;
    for (const auto& m : *members) {
      if (matches(m, h)) return true;
    }
    return false;
  }

  ReportResult report_false_positive(std::string_view key) {
    if (!contains(key)) return ReportResult::not_a_fp;
    if (!overflow_.empty() && overflow_.count(std::string(key))) return ReportResult::not_a_fp;
    const std::uint64_t h = hasher_(key);
    const std::uint64_t anchor = fingerprint_bits(h, scheme());
    auto* chain = rmap_.find(anchor);
    if (chain == nullptr) return ReportResult::not_a_fp;
    if (std::find(chain->begin(), chain->end(), key) != chain->end()) return ReportResult::not_a_fp;

    auto* members = ext_.find(anchor);
    if (members == nullptr) members = &ext_.create(anchor, chain->size());

    const unsigned cap = scheme().extension_capacity();
    const unsigned step = scheme().r;
    for (std::size_t i = 0; i < members->size();) {
      Extension& m = (*members)[i];
      if (!matches(m, h)) {
        ++i;
        continue;
      }
      const std::uint64_t original = hasher_((*chain)[i]);
      while (matches(m, h) && m.len < cap) {
        m.len = std::min(m.len + step, cap);
        m.bits = extension_bits(original, scheme(), m.len);
      }
      if (matches(m, h)) {
        // Full 64-bit collision: keep the original exactly, reject y exactly.
        overflow_.insert((*chain)[i]);
        rejected_.insert(std::string(key));
        members->erase(members->begin() + static_cast<std::ptrdiff_t>(i));
        chain->erase(chain->begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      ++i;
    }
    ++adaptations_;
    return ReportResult::adapted;
  }

  // Fingerprint table + extensions + exact overflow/rejected sets. The
  // reverse map is excluded; see reverse_map_size_bits().
  std::uint64_t in_memory_size_bits() const {
    return base_.size_bits() + ext_.size_bits(scheme().p()) + exact_set_bits(overflow_) + exact_set_bits(rejected_);
  }
  std::uint64_t size_bits() const { return in_memory_size_bits(); }
  std::uint64_t reverse_map_size_bits() const { return rmap_.size_bits(); }

  std::uint64_t adaptations() const noexcept { return adaptations_; }
  const std::unordered_set<std::string>& overflow() const noexcept { return overflow_; }
  const std::unordered_set<std::string>& rejected() const noexcept { return rejected_; }

  // One row per key held in the reverse map, sorted by (fingerprint, key).
  std::vector<AuditRow> audit() const {
    std::vector<AuditRow> rows;
    for (const auto& [anchor, chain] : rmap_.chains()) {
      const auto* members = ext_.find(anchor);
      for (std::size_t i = 0; i < chain.size(); ++i) {
        const Extension e = members ? (*members)[i] : Extension{};
        rows.push_back({anchor, e.len, e.bits, chain[i]});
      }
    }
    std::sort(rows.begin(), rows.end(), [](const AuditRow& a, const AuditRow& b) {
      return a.fingerprint != b.fingerprint ? a.fingerprint < b.fingerprint : a.key < b.key;
    });
    return rows;
  }

  void write_audit_csv(std::ostream& out) const {
    out << "fingerprint,extension_len,extension,key\n";
    for (const auto& row : audit()) {
      out << row.fingerprint << ',' << row.extension_len << ',' << row.extension << ',' << row.key << '\n';
    }
  }

 private:
  bool matches(const Extension& m, std::uint64_t h) const noexcept {
    return m.bits == extension_bits(h, scheme(), m.len);
  }

  static std::uint64_t exact_set_bits(const std::unordered_set<std::string>& s) {
    std::uint64_t bits = 0;
    for (const auto& k : s) bits += 8 * k.size() + kExactKeyOverheadBits;
    return bits;
  }

  QuotientFilter base_;
  Hasher hasher_;
  ExtensionStore ext_;
  ReverseMap rmap_;
  std::unordered_set<std::string> overflow_;
  std::unordered_set<std::string> rejected_;
  std::uint64_t adaptations_ = 0;
};

}  // namespace fcb
