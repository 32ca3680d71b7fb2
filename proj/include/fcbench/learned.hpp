#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcbench/bloom.hpp"
#include "fcbench/dataset.hpp"
#include "fcbench/scorer.hpp"

namespace fcb {

// FPR of a model with false-positive rate f_m backed by a filter with f_b.
inline double learned_overall_fpr(double f_m, double f_b) { return f_m + (1.0 - f_m) * f_b; }

struct AdvantageBound {
  bool satisfied = false;
  bool unbounded = false;
  double model_bits_per_key = 0;  // zeta / n
  double bound = 0;               // right-hand side
  double margin = 0;              // bound - zeta / n
};

// Whether a learned filter is expected to beat a Bloom filter of the same
// size: zeta / n <= log_alpha(f_m + (1 - f_m) alpha^(b / f_n)) - b, where b is
// bits per key, alpha the fill rate and f_n the model's false-negative rate.
inline AdvantageBound learned_advantage_bound(double zeta_bits, double n, double alpha, double b, double f_m,
                                              double f_n) {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must be in (0, 1)");
  if (!(b > 0)) throw std::invalid_argument("bits per key must be positive");
  if (n <= 0) throw std::invalid_argument("n must be positive");
  AdvantageBound out;
  out.model_bits_per_key = zeta_bits / n;
  if (f_n <= 0) {
    out.unbounded = true;
    out.satisfied = true;
    out.bound = std::numeric_limits<double>::infinity();
    out.margin = std::numeric_limits<double>::infinity();
    return out;
  }
  const double inner = f_m + (1.0 - f_m) * std::pow(alpha, b / f_n);
  out.bound = std::log(inner) / std::log(alpha) - b;
  out.margin = out.bound - out.model_bits_per_key;
  out.satisfied = out.model_bits_per_key <= out.bound;
  return out;
}

// total = model + backup; construction requires a positive backup share.
struct LearnedBudget {
  std::uint64_t total_bits = 0;
  std::uint64_t model_bits = 0;

  std::int64_t backup_bits() const noexcept {
    return static_cast<std::int64_t>(total_bits) - static_cast<std::int64_t>(model_bits);
  }
  void require_backup(std::int64_t minimum) const {
    if (backup_bits() < minimum) {
      throw std::invalid_argument("learned filter budget leaves " + std::to_string(backup_bits()) +
                                  " backup bits (model uses " + std::to_string(model_bits) + " of " +
                                  std::to_string(total_bits) + ")");
    }
  }
};

inline std::vector<double> score_all(const Scorer& scorer, std::span<const Item> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(scorer.score(it));
  return out;
}

// ---------------------------------------------------------------------------
// Base learned Bloom filter: accept when s >= t, else ask the backup filter,
// which holds exactly the positives scoring below t.

class LearnedBloomFilter {
 public:
  LearnedBloomFilter(std::shared_ptr<const Scorer> scorer, double threshold, const LearnedBudget& budget,
                     std::span<const Item> positives, std::span<const double> positive_scores, std::uint64_t seed)
      : scorer_(std::move(scorer)), threshold_(threshold) {
    if (threshold < 0 || threshold > 1) throw std::invalid_argument("threshold must be in [0, 1]");
    budget.require_backup(64);
    std::size_t low = 0;
    for (double s : positive_scores) low += s < threshold;
    backup_ = BloomFilter::build(static_cast<std::uint64_t>(budget.backup_bits()), low, seed);
    for (std::size_t i = 0; i < positives.size(); ++i) {
      if (positive_scores[i] < threshold) backup_.insert(positives[i].key);
    }
  }

  LearnedBloomFilter(std::shared_ptr<const Scorer> scorer, double threshold, const LearnedBudget& budget,
                     std::span<const Item> positives, std::uint64_t seed)
      : LearnedBloomFilter(scorer, threshold, budget, positives, score_all(*scorer, positives), seed) {}

  bool contains(const Item& item) const { return contains_scored(item, scorer_->score(item)); }
  bool contains_scored(const Item& item, double s) const { return s >= threshold_ || backup_.contains(item.key); }

  double threshold() const noexcept { return threshold_; }
  // t = 0 accepts everything without consulting the backup.
  bool degenerate() const noexcept { return threshold_ <= 0.0; }
  const BloomFilter& backup() const noexcept { return backup_; }
  const Scorer& scorer() const noexcept { return *scorer_; }
  std::uint64_t size_bits() const { return scorer_->model_bits() + backup_.size_bits(); }

 private:
  std::shared_ptr<const Scorer> scorer_;
  double threshold_;
  BloomFilter backup_;
};

// Picks t among quantiles of the training-negative scores (and t = 1)
// minimizing P(neg s >= t) + P(neg s < t) * analytic backup FPR.
inline double choose_lbf_threshold(std::span<const double> positive_scores, std::span<const double> negative_scores,
                                   std::uint64_t backup_bits) {
  std::vector<double> pos(positive_scores.begin(), positive_scores.end());
  std::vector<double> neg(negative_scores.begin(), negative_scores.end());
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  std::vector<double> candidates{1.0};
  constexpr int kQuantiles = 256;
  for (int i = 0; i < kQuantiles && !neg.empty(); ++i) {
    candidates.push_back(neg[neg.size() * static_cast<std::size_t>(i) / kQuantiles]);
  }
  for (double s : neg) candidates.push_back(std::nextafter(s, 2.0));  // just above each distinct score
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.size() > 4096) {
    std::vector<double> thinned;
    for (std::size_t i = 0; i < candidates.size(); i += candidates.size() / 4096 + 1) thinned.push_back(candidates[i]);
    thinned.push_back(1.0);
    candidates = std::move(thinned);
  }

  const double m = static_cast<double>(backup_bits > BloomFilter::kHeaderBits ? backup_bits - BloomFilter::kHeaderBits : 1);
  double best_t = 1.0, best = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    if (t < 0 || t > 1) continue;
    const auto low = static_cast<double>(std::lower_bound(pos.begin(), pos.end(), t) - pos.begin());
    const double above = neg.empty() ? 0.0
                                     : static_cast<double>(neg.end() - std::lower_bound(neg.begin(), neg.end(), t)) /
                                           static_cast<double>(neg.size());
    const double k = bloom_optimal_hashes(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(std::max(low, 1.0)));
    const double est = learned_overall_fpr(above, bloom_analytic_fpr(m, k, low));
    if (est < best) {
      best = est;
      best_t = t;
    }
  }
  return best_t;
}

// ---------------------------------------------------------------------------
// Ada-BF: one shared bit array; keys are grouped by score and lower-score
// groups probe more bits.

struct AdaBFParams {
  unsigned k_min = 8;
  unsigned k_max = 11;
  double c_min = 2.1;
  double c_max = 2.6;
  double c_step = 0.1;
};

struct AdaBFPlan {
  double c = 0;
  std::vector<double> thresholds;       // strictly ascending cutpoints
  std::vector<unsigned> group_hashes;   // one per group, non-increasing
  std::vector<std::size_t> group_positives;
  std::vector<double> group_negative_mass;
  double estimated_fpr = 1.0;
  std::uint64_t bit_count = 0;

  std::size_t group_of(double s) const {
    return static_cast<std::size_t>(std::upper_bound(thresholds.begin(), thresholds.end(), s) - thresholds.begin());
  }
};

namespace detail {

// Group g (ascending score) receives c^(K-1-g) / sum of the negative mass.
inline std::vector<double> geometric_cumulative(double c, std::size_t groups) {
  std::vector<double> w(groups);
  double total = 0;
  for (std::size_t g = 0; g < groups; ++g) total += w[g] = std::pow(c, static_cast<double>(groups - 1 - g));
  std::vector<double> cum;
  double acc = 0;
  for (std::size_t g = 0; g + 1 < groups; ++g) cum.push_back((acc += w[g]) / total);
  return cum;
}

}  // namespace detail

// Cutpoints putting a fraction `cumulative[g]` of `sorted_negative_scores`
// below cutpoint g.
inline std::vector<double> adabf_cutpoints(std::span<const double> sorted_negative_scores,
                                           std::span<const double> cumulative) {
  std::vector<double> cuts;
  const std::size_t n = sorted_negative_scores.size();
  for (double f : cumulative) {
    auto idx = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
    idx = std::min(idx, n - 1);
    cuts.push_back(sorted_negative_scores[idx]);
  }
  return cuts;
}

inline AdaBFPlan plan_adabf(std::span<const double> positive_scores, std::span<const double> negative_scores,
                            std::uint64_t backup_bits, const AdaBFParams& params) {
  if (negative_scores.empty()) throw std::invalid_argument("Ada-BF needs training negative scores");
  if (params.k_min < 1 || params.k_max < params.k_min || params.k_max > BloomFilter::kMaxHashes) {
    throw std::invalid_argument("Ada-BF needs 1 <= k_min <= k_max <= 30");
  }
  if (backup_bits < 64) throw std::invalid_argument("Ada-BF backup budget too small");
  std::vector<double> neg(negative_scores.begin(), negative_scores.end());
  std::sort(neg.begin(), neg.end());
  const std::uint64_t m = backup_bits - BloomFilter::kHeaderBits;

  auto evaluate = [&](AdaBFPlan plan) {
    const std::size_t groups = plan.group_hashes.size();
    plan.group_positives.assign(groups, 0);
    plan.group_negative_mass.assign(groups, 0.0);
    for (double s : positive_scores) ++plan.group_positives[plan.group_of(s)];
    for (double s : neg) plan.group_negative_mass[plan.group_of(s)] += 1.0 / static_cast<double>(neg.size());
    double probes = 0;
    for (std::size_t g = 0; g < groups; ++g) probes += static_cast<double>(plan.group_positives[g]) * plan.group_hashes[g];
    const double fill = 1.0 - std::exp(-probes / static_cast<double>(m));
    plan.estimated_fpr = 0;
    for (std::size_t g = 0; g < groups; ++g) plan.estimated_fpr += plan.group_negative_mass[g] * std::pow(fill, plan.group_hashes[g]);
    plan.bit_count = m;
    return plan;
  };

  if (neg.front() == neg.back()) {
    AdaBFPlan single;
    single.group_hashes = {params.k_max};
    return evaluate(single);
  }

  const std::size_t groups = params.k_max - params.k_min + 1;
  AdaBFPlan best;
  const int steps = static_cast<int>(std::llround((params.c_max - params.c_min) / params.c_step));
  for (int i = 0; i <= std::max(steps, 0); ++i) {
    const double c = params.c_min + i * params.c_step;
    const auto raw = adabf_cutpoints(neg, detail::geometric_cumulative(c, groups));
    // Drop groups whose score interval is empty so cutpoints stay strictly
    // ascending; the surviving group keeps its own probe count.
    AdaBFPlan plan;
    plan.c = c;
    plan.group_hashes.push_back(params.k_max);
    for (std::size_t g = 0; g + 1 < groups; ++g) {
      const double cut = raw[g];
      const unsigned k_next = params.k_max - static_cast<unsigned>(g + 1);
      if (!plan.thresholds.empty() && cut <= plan.thresholds.back()) {
        plan.group_hashes.back() = k_next;
        continue;
      }
      plan.thresholds.push_back(cut);
      plan.group_hashes.push_back(k_next);
    }
    plan = evaluate(std::move(plan));
    if (best.group_hashes.empty() || plan.estimated_fpr < best.estimated_fpr) best = std::move(plan);
  }
  return best;
}

class AdaBF {
 public:
  AdaBF(std::shared_ptr<const Scorer> scorer, AdaBFPlan plan, std::uint64_t seed)
      : scorer_(std::move(scorer)), plan_(std::move(plan)), bits_(plan_.bit_count, plan_.group_hashes.front(), seed) {}

  // Builds from scratch: scores positives, plans, inserts.
  static AdaBF build(std::shared_ptr<const Scorer> scorer, std::span<const Item> positives,
                     std::span<const double> negative_scores, const LearnedBudget& budget, const AdaBFParams& params,
                     std::uint64_t seed) {
    budget.require_backup(64);
    const auto pos_scores = score_all(*scorer, positives);
    auto plan = plan_adabf(pos_scores, negative_scores, static_cast<std::uint64_t>(budget.backup_bits()), params);
    AdaBF f(std::move(scorer), std::move(plan), seed);
    for (std::size_t i = 0; i < positives.size(); ++i) f.insert_scored(positives[i], pos_scores[i]);
    return f;
  }

  void insert_scored(const Item& item, double s) {
    bits_.insert_hash(bits_.hash(item.key), plan_.group_hashes[plan_.group_of(s)]);
  }

  bool contains(const Item& item) const { return contains_scored(item, scorer_->score(item)); }
  bool contains_scored(const Item& item, double s) const {
    return bits_.contains_hash(bits_.hash(item.key), plan_.group_hashes[plan_.group_of(s)]);
  }

  const AdaBFPlan& plan() const noexcept { return plan_; }
  const BloomFilter& bits() const noexcept { return bits_; }
  std::uint64_t size_bits() const { return scorer_->model_bits() + bits_.size_bits(); }

 private:
  std::shared_ptr<const Scorer> scorer_;
  AdaBFPlan plan_;
  BloomFilter bits_;
};

// ---------------------------------------------------------------------------
// PLBF: the score axis is cut into N equal segments, grouped into k
// contiguous regions, each with its own backup filter at FPR f_j.

struct PartitionResult {
  std::vector<std::size_t> boundaries;  // k - 1 segment indices, region j = [b_{j-1}, b_j)
  double objective = -std::numeric_limits<double>::infinity();
};

// Contribution of a region with positive mass G and negative mass H to
// sum_j G_j log2(G_j / H_j). With all f_j < 1 the optimal per-region rates
// are f_j proportional to G_j / H_j and the total FPR is
// 2^(-budget / (1.44 n) - objective), so maximizing this sum minimizes FPR.
inline double plbf_region_term(double G, double H) {
  if (G <= 0) return 0.0;
  if (H <= 0) return std::numeric_limits<double>::infinity();
  return G * std::log2(G / H);
}

inline PartitionResult plbf_optimal_partition(std::span<const double> g, std::span<const double> h, std::size_t k) {
  const std::size_t n = g.size();
  if (h.size() != n) throw std::invalid_argument("histogram length mismatch");
  if (k < 1 || k > n) throw std::invalid_argument("PLBF needs 1 <= k <= N");
  std::vector<double> G(n + 1, 0.0), H(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    G[i + 1] = G[i] + g[i];
    H[i + 1] = H[i] + h[i];
  }
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  // best[j][i]: first i segments split into j regions.
  std::vector<std::vector<double>> best(k + 1, std::vector<double>(n + 1, kNone));
  std::vector<std::vector<std::size_t>> from(k + 1, std::vector<std::size_t>(n + 1, 0));
  best[0][0] = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    for (std::size_t i = j; i <= n - (k - j); ++i) {
      for (std::size_t s = j - 1; s < i; ++s) {
        if (best[j - 1][s] == kNone) continue;
        const double v = best[j - 1][s] + plbf_region_term(G[i] - G[s], H[i] - H[s]);
        if (v > best[j][i]) {
          best[j][i] = v;
          from[j][i] = s;
        }
      }
    }
  }
  PartitionResult out;
  out.objective = best[k][n];
  std::size_t i = n;
  for (std::size_t j = k; j > 1; --j) {
    i = from[j][i];
    out.boundaries.push_back(i);
  }
  std::reverse(out.boundaries.begin(), out.boundaries.end());
  return out;
}

// Objective of an explicit partition, summed region by region left to right.
inline double plbf_partition_objective(std::span<const double> g, std::span<const double> h,
                                       std::span<const std::size_t> boundaries) {
  double total = 0;
  std::size_t start = 0;
  for (std::size_t j = 0; j <= boundaries.size(); ++j) {
    const std::size_t end = j < boundaries.size() ? boundaries[j] : g.size();
    double G = 0, H = 0;
    for (std::size_t i = start; i < end; ++i) {
      G += g[i];
      H += h[i];
    }
    total += plbf_region_term(G, H);
    start = end;
  }
  return total;
}

struct PlbfPlan {
  std::size_t segments = 0;
  std::vector<std::size_t> boundaries;
  std::vector<double> region_positive_mass;
  std::vector<double> region_negative_mass;
  std::vector<std::size_t> region_positives;
  std::vector<double> region_fpr;          // target f_j; 1 = accept, 0 = no positives (reject)
  std::vector<std::uint64_t> region_bits;  // bit-array length per region, 0 when no filter
  double objective = 0;
  double expected_fpr = 0;                 // sum_j H_j * f_j

  std::size_t segment_of(double s) const {
    const auto seg = static_cast<std::size_t>(std::floor(s * static_cast<double>(segments)));
    return std::min(seg, segments - 1);
  }
  std::size_t region_of(double s) const {
    const std::size_t seg = segment_of(s);
    return static_cast<std::size_t>(std::upper_bound(boundaries.begin(), boundaries.end(), seg) - boundaries.begin());
  }
};

// Water-filling: f_j = min(1, mu * G_j / H_j), with mu set so the regions'
// bit arrays (1.44 log2(1/f_j) bits per positive) fill `array_bits`.
inline std::vector<double> plbf_region_fprs(std::span<const double> G, std::span<const double> H,
                                            std::span<const std::size_t> counts, double array_bits) {
  const std::size_t k = G.size();
  auto rates = [&](double log_mu) {
    std::vector<double> f(k);
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) f[j] = 0.0;
      else if (H[j] <= 0) f[j] = 1.0;
      else f[j] = std::min(1.0, std::exp2(log_mu) * G[j] / H[j]);
    }
    return f;
  };
  auto bits = [&](const std::vector<double>& f) {
    double total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0 && f[j] < 1.0) total += static_cast<double>(counts[j]) * bloom_bits_per_element(f[j]);
    }
    return total;
  };
  double lo = -200.0, hi = 64.0;  // log2(mu)
  for (int it = 0; it < 200; ++it) {
    const double mid = (lo + hi) / 2;
    (bits(rates(mid)) > array_bits ? lo : hi) = mid;
  }
  return rates(hi);
}

inline PlbfPlan plan_plbf(std::span<const double> positive_scores, std::span<const double> negative_scores,
                          std::uint64_t backup_bits, std::size_t segments, std::size_t regions) {
  if (positive_scores.empty()) throw std::invalid_argument("PLBF needs at least one positive");
  if (negative_scores.empty()) throw std::invalid_argument("PLBF needs training negative scores");
  if (regions < 1 || segments < regions) throw std::invalid_argument("PLBF needs N >= k >= 1");
  PlbfPlan plan;
  plan.segments = segments;

  std::vector<double> g(segments, 0.0), h(segments, 0.0);
  for (double s : positive_scores) g[plan.segment_of(s)] += 1.0;
  for (double s : negative_scores) h[plan.segment_of(s)] += 1.0;
  // Half a pseudo-count per segment keeps unseen segments from looking
  // negative-free.
  constexpr double kPseudo = 0.5;
  const double neg_total = static_cast<double>(negative_scores.size()) + kPseudo * static_cast<double>(segments);
  for (auto& v : g) v /= static_cast<double>(positive_scores.size());
  for (auto& v : h) v = (v + kPseudo) / neg_total;

  auto part = plbf_optimal_partition(g, h, regions);
  plan.boundaries = part.boundaries;
  plan.objective = part.objective;

  plan.region_positive_mass.assign(regions, 0.0);
  plan.region_negative_mass.assign(regions, 0.0);
  plan.region_positives.assign(regions, 0);
  for (std::size_t i = 0; i < segments; ++i) {
    const auto j = static_cast<std::size_t>(std::upper_bound(plan.boundaries.begin(), plan.boundaries.end(), i) -
                                            plan.boundaries.begin());
    plan.region_positive_mass[j] += g[i];
    plan.region_negative_mass[j] += h[i];
  }
  for (double s : positive_scores) ++plan.region_positives[plan.region_of(s)];

  // Headers come out of the budget too; iterate until the number of
  // regions that actually need a filter is stable.
  std::size_t with_filter = static_cast<std::size_t>(
      std::count_if(plan.region_positives.begin(), plan.region_positives.end(), [](std::size_t c) { return c > 0; }));
  for (int round = 0; round < 8; ++round) {
    const double array_bits =
        static_cast<double>(backup_bits) - static_cast<double>(with_filter * BloomFilter::kHeaderBits);
    plan.region_fpr = plbf_region_fprs(plan.region_positive_mass, plan.region_negative_mass, plan.region_positives,
                                       std::max(array_bits, 0.0));
    plan.region_bits.assign(regions, 0);
    std::size_t used = 0;
    for (std::size_t j = 0; j < regions; ++j) {
      if (plan.region_positives[j] == 0 || plan.region_fpr[j] >= 1.0) continue;
      const auto m = static_cast<std::uint64_t>(
          std::floor(static_cast<double>(plan.region_positives[j]) * bloom_bits_per_element(plan.region_fpr[j])));
      if (m == 0) {
        plan.region_fpr[j] = 1.0;
        continue;
      }
      plan.region_bits[j] = m;
      ++used;
    }
    if (used == with_filter) break;
    with_filter = used;
  }
  std::uint64_t total = 0;
  for (auto m : plan.region_bits) total += m > 0 ? m + BloomFilter::kHeaderBits : 0;
  for (std::size_t j = 0; j < regions && total > backup_bits; ++j) {
    const std::uint64_t cut = std::min(plan.region_bits[j] > 1 ? plan.region_bits[j] - 1 : 0, total - backup_bits);
    plan.region_bits[j] -= cut;
    total -= cut;
  }
  plan.expected_fpr = 0;
  for (std::size_t j = 0; j < regions; ++j) plan.expected_fpr += plan.region_negative_mass[j] * plan.region_fpr[j];
  return plan;
}

class PLBF {
 public:
  PLBF(std::shared_ptr<const Scorer> scorer, PlbfPlan plan, std::uint64_t seed)
      : scorer_(std::move(scorer)), plan_(std::move(plan)) {
    filters_.resize(plan_.region_bits.size());
    for (std::size_t j = 0; j < filters_.size(); ++j) {
      if (plan_.region_bits[j] == 0) continue;
      const auto m = plan_.region_bits[j];
      filters_[j] = BloomFilter(m, bloom_optimal_hashes(m, plan_.region_positives[j]), mix64(seed + j));
    }
  }

  static PLBF build(std::shared_ptr<const Scorer> scorer, std::span<const Item> positives,
                    std::span<const double> negative_scores, const LearnedBudget& budget, std::size_t segments,
                    std::size_t regions, std::uint64_t seed) {
    budget.require_backup(64);
    const auto pos_scores = score_all(*scorer, positives);
    auto plan = plan_plbf(pos_scores, negative_scores, static_cast<std::uint64_t>(budget.backup_bits()), segments, regions);
    PLBF f(std::move(scorer), std::move(plan), seed);
    for (std::size_t i = 0; i < positives.size(); ++i) f.insert_scored(positives[i], pos_scores[i]);
    return f;
  }

  void insert_scored(const Item& item, double s) {
    const std::size_t j = plan_.region_of(s);
    if (plan_.region_bits[j] > 0) filters_[j].insert(item.key);
  }

  bool contains(const Item& item) const { return contains_scored(item, scorer_->score(item)); }
  bool contains_scored(const Item& item, double s) const {
    const std::size_t j = plan_.region_of(s);
    if (plan_.region_bits[j] > 0) return filters_[j].contains(item.key);
    return plan_.region_positives[j] > 0;  // accept-all region, or a region with no positives
  }

  const PlbfPlan& plan() const noexcept { return plan_; }
  const std::vector<BloomFilter>& region_filters() const noexcept { return filters_; }
  bool region_accepts_all(std::size_t j) const { return plan_.region_bits[j] == 0 && plan_.region_positives[j] > 0; }

  std::uint64_t size_bits() const {
    std::uint64_t bits = scorer_->model_bits();
    for (std::size_t j = 0; j < filters_.size(); ++j) {
      if (plan_.region_bits[j] > 0) bits += filters_[j].size_bits();
    }
    return bits;
  }

 private:
  std::shared_ptr<const Scorer> scorer_;
  PlbfPlan plan_;
  std::vector<BloomFilter> filters_;
};

}  // namespace fcb
