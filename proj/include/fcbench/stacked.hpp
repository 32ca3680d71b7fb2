#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fcbench/bloom.hpp"
#include "fcbench/hash.hpp"

namespace fcb {

// Frequently queried negatives N_F, most frequent first, and the
// probability psi that a negative query lands in N_F.
struct NegativeSample {
  std::vector<std::string> frequent;
  std::vector<std::uint64_t> counts;  // sample occurrences, parallel to `frequent`
  double psi = 0.0;

  // From the negative queries of a workload prefix. psi is the
  // Good-Turing estimate 1 - N1/N of the mass of already-seen negatives,
  // since the in-sample share of N_F is trivially one.
  static NegativeSample from_queries(std::span<const std::string_view> negative_queries) {
    std::unordered_map<std::string_view, std::uint64_t> freq;
    for (auto k : negative_queries) ++freq[k];
    std::vector<std::pair<std::string_view, std::uint64_t>> order(freq.begin(), freq.end());
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
    NegativeSample s;
    std::uint64_t singletons = 0;
    for (const auto& [k, c] : order) {
      s.frequent.emplace_back(k);
      s.counts.push_back(c);
      singletons += c == 1;
    }
    s.psi = negative_queries.empty()
                ? 0.0
                : 1.0 - static_cast<double>(singletons) / static_cast<double>(negative_queries.size());
    return s;
  }

  // The `n` most frequent entries, with psi scaled by their sample share.
  NegativeSample truncated(std::size_t n) const {
    NegativeSample out;
    n = std::min(n, frequent.size());
    out.frequent.assign(frequent.begin(), frequent.begin() + static_cast<std::ptrdiff_t>(n));
    out.counts.assign(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(n));
    std::uint64_t all = 0, kept = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) (i < n ? kept : all) += counts[i];
    all += kept;
    out.psi = all == 0 ? 0.0 : psi * static_cast<double>(kept) / static_cast<double>(all);
    return out;
  }
};

// Per-layer FPRs a_1..a_l, l odd. Odd layers hold positives, even layers
// hold frequent negatives.
struct LayerPlan {
  std::vector<double> fprs;

  std::size_t layers() const noexcept { return fprs.size(); }
  void validate() const {
    if (fprs.empty() || fprs.size() % 2 == 0) throw std::invalid_argument("stacked filter needs an odd layer count");
    for (double a : fprs) {
      if (!(a > 0 && a <= 1)) throw std::invalid_argument("layer FPR must be in (0, 1]");
    }
  }
};

inline double sf_expected_fpr(const LayerPlan& plan, double psi) {
  plan.validate();
  const auto& a = plan.fprs;
  const std::size_t l = a.size();
  double odd = 1.0;
  for (std::size_t i = 0; i < l; i += 2) odd *= a[i];
  double all = 1.0;
  for (double v : a) all *= v;
  double escapes = 0.0;
  for (std::size_t i = 1; i <= (l - 1) / 2; ++i) {
    double prefix = 1.0;
    for (std::size_t j = 1; j <= 2 * i - 1; ++j) prefix *= a[j - 1];
    escapes += prefix * (1.0 - a[2 * i - 1]);
  }
  return psi * odd + (1.0 - psi) * (all + escapes);
}

// Expected number of elements stored in layer i (1-based).
inline double sf_expected_population(const LayerPlan& plan, std::size_t i, double n_pos, double n_freq_neg) {
  const auto& a = plan.fprs;
  if (i % 2 == 1) {
    double pop = n_pos;
    for (std::size_t j = 2; j < i; j += 2) pop *= a[j - 1];
    return pop;
  }
  double pop = n_freq_neg;
  for (std::size_t j = 1; j < i; j += 2) pop *= a[j - 1];
  return pop;
}

inline double sf_expected_size(const LayerPlan& plan, double n_pos, double n_freq_neg) {
  plan.validate();
  double bits = 0;
  for (std::size_t i = 1; i <= plan.layers(); ++i) {
    bits += sf_expected_population(plan, i, n_pos, n_freq_neg) * bloom_bits_per_element(plan.fprs[i - 1]);
  }
  return bits;
}

// Size the planner charges for a plan: the theorem's sum plus one Bloom
// header per layer.
inline double sf_charged_size(const LayerPlan& plan, double n_pos, double n_freq_neg) {
  return sf_expected_size(plan, n_pos, n_freq_neg) + static_cast<double>(plan.layers() * BloomFilter::kHeaderBits);
}

struct StackedPlan {
  LayerPlan layers;
  NegativeSample sample;  // N_F actually used
  double expected_fpr = 1.0;
  double expected_size_bits = 0.0;
};

inline constexpr int kStackedGridMinExp = 1;
inline constexpr int kStackedGridMaxExp = 16;

// Grid search over l in {1, 3, 5} with a_odd, a_even in {2^-1 .. 2^-16}
// for a fixed N_F.
inline LayerPlan sf_plan_grid(std::size_t n_pos, std::size_t n_freq_neg, double psi, double budget_bits) {
  LayerPlan best;
  double best_fpr = 2.0;
  for (std::size_t l : {1u, 3u, 5u}) {
    // An empty negative layer rejects everything, so it cannot realize a_2.
    if (l > 1 && n_freq_neg == 0) break;
    for (int eo = kStackedGridMinExp; eo <= kStackedGridMaxExp; ++eo) {
      for (int ee = kStackedGridMinExp; ee <= (l == 1 ? kStackedGridMinExp : kStackedGridMaxExp); ++ee) {
        LayerPlan plan;
        for (std::size_t i = 1; i <= l; ++i) plan.fprs.push_back(std::ldexp(1.0, -(i % 2 == 1 ? eo : ee)));
        if (sf_charged_size(plan, static_cast<double>(n_pos), static_cast<double>(n_freq_neg)) > budget_bits) continue;
        const double fpr = sf_expected_fpr(plan, psi);
        if (fpr < best_fpr) {
          best_fpr = fpr;
          best = std::move(plan);
        }
      }
    }
  }
  if (best.fprs.empty()) {
    throw std::invalid_argument("stacked filter budget of " + std::to_string(static_cast<std::uint64_t>(budget_bits)) +
                                " bits cannot hold a single layer for " + std::to_string(n_pos) + " keys");
  }
  return best;
}

// Picks both the grid plan and how much of N_F to keep: prefixes of the
// frequency-sorted sample are tried at halving sizes.
inline StackedPlan sf_plan(std::size_t n_pos, const NegativeSample& sample, double budget_bits) {
  StackedPlan best;
  std::vector<std::size_t> sizes;
  for (std::size_t n = sample.frequent.size(); n > 0; n /= 2) sizes.push_back(n);
  sizes.push_back(0);
  bool found = false;
  for (std::size_t n : sizes) {
    NegativeSample kept = sample.truncated(n);
    LayerPlan plan;
    try {
      plan = sf_plan_grid(n_pos, n, kept.psi, budget_bits);
    } catch (const std::invalid_argument&) {
      continue;
    }
    const double fpr = sf_expected_fpr(plan, kept.psi);
    if (!found || fpr < best.expected_fpr ||
        (fpr == best.expected_fpr && plan.layers() < best.layers.layers())) {
      found = true;
      best.layers = std::move(plan);
      best.sample = std::move(kept);
      best.expected_fpr = fpr;
    }
  }
  if (!found) sf_plan_grid(n_pos, 0, 0.0, budget_bits);  // throws with the budget message
  best.expected_size_bits = sf_expected_size(best.layers, static_cast<double>(n_pos),
                                             static_cast<double>(best.sample.frequent.size()));
  return best;
}

// Lowers a_1 continuously until the charged size reaches `budget_bits`, so
// a grid plan can fill a size-matched allotment exactly.
inline StackedPlan sf_fill_budget(StackedPlan plan, std::size_t n_pos, double budget_bits) {
  const double n_f = static_cast<double>(plan.sample.frequent.size());
  auto size_at = [&](double log2_a1) {
    LayerPlan p = plan.layers;
    p.fprs[0] = std::exp2(log2_a1);
    return sf_charged_size(p, static_cast<double>(n_pos), n_f);
  };
  double lo = -60.0, hi = std::log2(plan.layers.fprs[0]);
  if (size_at(hi) >= budget_bits) return plan;
  for (int it = 0; it < 100; ++it) {
    const double mid = (lo + hi) / 2;
    (size_at(mid) > budget_bits ? lo : hi) = mid;
  }
  plan.layers.fprs[0] = std::exp2(hi);
  plan.expected_fpr = sf_expected_fpr(plan.layers, plan.sample.psi);
  plan.expected_size_bits = sf_expected_size(plan.layers, static_cast<double>(n_pos), n_f);
  return plan;
}

class StackedFilter {
 public:
  StackedFilter() = default;

  // Cascade construction; each layer is sized for its actual population.
  static StackedFilter build(std::span<const std::string_view> positives, std::span<const std::string> frequent,
                             const LayerPlan& plan, std::uint64_t seed) {
    plan.validate();
    StackedFilter f;
    std::vector<std::string_view> pos(positives.begin(), positives.end());
    std::vector<std::string_view> neg(frequent.begin(), frequent.end());
    for (std::size_t i = 0; i < plan.layers(); ++i) {
      const bool positive_layer = i % 2 == 0;
      auto& stored = positive_layer ? pos : neg;
      auto& other = positive_layer ? neg : pos;
      const auto n = static_cast<std::uint64_t>(stored.size());
      const auto m = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::ceil(static_cast<double>(n) * bloom_bits_per_element(plan.fprs[i]))));
      BloomFilter layer(m, bloom_optimal_hashes(m, std::max<std::uint64_t>(n, 1)), mix64(seed + i));
      for (auto k : stored) layer.insert(k);
      std::erase_if(other, [&](std::string_view k) { return !layer.contains(k); });
      f.layers_.push_back(std::move(layer));
      f.populations_.push_back(n);
    }
    return f;
  }

  bool contains(std::string_view key) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (!layers_[i].contains(key)) return i % 2 == 1;
    }
    return true;  // l is odd, so the last layer holds positives
  }

  std::size_t layer_count() const noexcept { return layers_.size(); }
  const std::vector<BloomFilter>& layers() const noexcept { return layers_; }
  const std::vector<std::uint64_t>& populations() const noexcept { return populations_; }

  std::uint64_t size_bits() const noexcept {
    std::uint64_t bits = 0;
    for (const auto& l : layers_) bits += l.size_bits();
    return bits;
  }

  // Realized per-layer FPRs from each layer's actual m, k and population.
  LayerPlan realized_plan() const {
    LayerPlan p;
    for (const auto& l : layers_) p.fprs.push_back(std::max(l.analytic_fpr(), 1e-300));
    return p;
  }

 private:
  std::vector<BloomFilter> layers_;
  std::vector<std::uint64_t> populations_;
};

}  // namespace fcb
