#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fcbench/adaptive_qf.hpp"
#include "fcbench/bench/report.hpp"
#include "fcbench/bench/timing.hpp"
#include "fcbench/bloom.hpp"
#include "fcbench/dataset.hpp"
#include "fcbench/learned.hpp"
#include "fcbench/quotient_filter.hpp"
#include "fcbench/scorer.hpp"
#include "fcbench/stacked.hpp"

namespace fcb::bench {

enum class FilterKind { bloom, qf, aqf, lbf, adabf, plbf, stacked };

inline const std::vector<FilterKind> kAllFilters = {FilterKind::bloom, FilterKind::qf,   FilterKind::aqf,
                                                    FilterKind::lbf,   FilterKind::adabf, FilterKind::plbf,
                                                    FilterKind::stacked};

inline std::string filter_name(FilterKind k) {
  switch (k) {
    case FilterKind::bloom: return "bloom";
    case FilterKind::qf: return "qf";
    case FilterKind::aqf: return "aqf";
    case FilterKind::lbf: return "lbf";
    case FilterKind::adabf: return "adabf";
    case FilterKind::plbf: return "plbf";
    case FilterKind::stacked: return "stacked";
  }
  return "?";
}

inline FilterKind parse_filter_kind(std::string_view s) {
  for (auto k : kAllFilters) {
    if (filter_name(k) == s) return k;
  }
  throw std::invalid_argument("unknown filter '" + std::string(s) + "' (expected bloom, qf, aqf, lbf, adabf, plbf or stacked)");
}

inline bool is_learned(FilterKind k) { return k == FilterKind::lbf || k == FilterKind::adabf || k == FilterKind::plbf; }
inline bool is_adaptive(FilterKind k) { return k == FilterKind::aqf; }

inline Item item_at(const Dataset& ds, std::uint32_t i) { return {ds[i].key, ds[i].features}; }

// ---------------------------------------------------------------------------
// Model shared by every learned filter of one trial.

struct TrainedModel {
  std::shared_ptr<const Scorer> scorer;
  std::uint64_t model_bits = 0;
  std::uint64_t train_ns = 0;
  std::size_t leaves = 0;
  double neg_fraction = 0;
  std::vector<std::uint32_t> training_negatives;  // dataset indices
};

// `positive[i]` is the current label of record i, which differs from the
// file's label once keys have churned.
inline TrainedModel train_model(const Dataset& ds, const std::vector<bool>& positive, double neg_fraction,
                                std::size_t max_leaf_nodes, std::uint64_t seed) {
  TrainedModel m;
  const auto t0 = now_ns();
  std::vector<LabeledExample> train;
  for (auto i : sample_training_indices(positive, neg_fraction, seed)) {
    train.push_back({ds[i].key, ds[i].features, positive[i]});
    if (!positive[i]) m.training_negatives.push_back(static_cast<std::uint32_t>(i));
  }
  auto tree = train_decision_tree(train, max_leaf_nodes, seed);
  m.leaves = tree.leaf_count();
  auto scorer = std::make_shared<TreeScorer>(std::move(tree));
  m.model_bits = scorer->model_bits();
  m.scorer = std::move(scorer);
  m.train_ns = now_ns() - t0;
  m.neg_fraction = neg_fraction;
  return m;
}

inline std::vector<bool> file_labels(const Dataset& ds) {
  std::vector<bool> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = ds[i].positive;
  return out;
}

// Largest tree whose canonical encoding fits in `bits`.
inline std::size_t leaves_for_model_bits(std::uint64_t bits) {
  const std::uint64_t bytes = bits / 8;
  constexpr std::uint64_t per_leaf = DecisionTree::kInternalBytes + DecisionTree::kLeafBytes;
  const std::uint64_t fixed = DecisionTree::kHeaderBytes - DecisionTree::kInternalBytes;  // L leaves, L-1 internal
  if (bytes < DecisionTree::kHeaderBytes + DecisionTree::kLeafBytes) return 1;
  return static_cast<std::size_t>((bytes - fixed) / per_leaf);
}

// ---------------------------------------------------------------------------

struct LearnedParams {
  AdaBFParams adabf;
  std::size_t plbf_segments = 1000;
  std::size_t plbf_regions = 5;
};

struct BuildInputs {
  const Dataset* ds = nullptr;
  std::span<const std::uint32_t> positives;
  std::span<const std::uint32_t> stacked_sample;  // negative queries seen before construction
  const TrainedModel* model = nullptr;
  std::uint64_t budget_bits = 0;
  unsigned q = 0, r = 0;
  std::uint64_t seed = 0;
  LearnedParams learned;
};

class BenchFilter {
 public:
  virtual ~BenchFilter() = default;
  virtual FilterKind kind() const = 0;
  // Answers a workload query. `member` is the ground truth, used only for
  // false-positive feedback by adaptive filters.
  virtual bool query(const Item& item, bool member, QueryTimeline& tl) = 0;
  // Read-only answer; never adapts.
  virtual bool probe(const Item& item) const = 0;
  virtual std::uint64_t size_bits() const = 0;
  virtual std::uint64_t model_bits() const { return 0; }
  virtual nlohmann::json summary() const { return nlohmann::json::object(); }

  const BuildBreakdown& build_breakdown() const noexcept { return build_; }

 protected:
  BuildBreakdown build_;
};

namespace detail {

// Runs `body(tl)` under a fresh build timeline and records wall time.
// Teardown of the body's locals is charged to `tail`.
template <typename Body>
void timed_build(BuildBreakdown& out, std::uint64_t inserts, Body&& body, std::size_t tail = filter_inserts) {
  BuildTimeline tl;
  const auto wall0 = now_ns();
  tl.start();
  body(tl);
  tl.mark(tail);
  out.wall_ns += now_ns() - wall0;
  for (std::size_t i = 0; i < 4; ++i) out.ns[i] += tl.totals()[i];
  out.inserts = inserts;
}

class BloomBench final : public BenchFilter {
 public:
  explicit BloomBench(const BuildInputs& in) {
    timed_build(build_, in.positives.size(), [&](BuildTimeline& tl) {
      f_ = BloomFilter::build(in.budget_bits, in.positives.size(), in.seed);
      for (auto i : in.positives) f_.insert((*in.ds)[i].key);
      tl.mark(filter_inserts);
    });
  }
  FilterKind kind() const override { return FilterKind::bloom; }
  bool query(const Item& item, bool, QueryTimeline& tl) override {
    const bool a = f_.contains(item.key);
    tl.mark(filter_query);
    return a;
  }
  bool probe(const Item& item) const override { return f_.contains(item.key); }
  std::uint64_t size_bits() const override { return f_.size_bits(); }
  nlohmann::json summary() const override { return {{"m", f_.bit_count()}, {"k", f_.hash_count()}}; }

 private:
  BloomFilter f_;
};

class QfBench final : public BenchFilter {
 public:
  explicit QfBench(const BuildInputs& in) : seed_(in.seed) {
    timed_build(build_, in.positives.size(), [&](BuildTimeline& tl) {
      f_ = QuotientFilter(FingerprintScheme(in.q, in.r));
      for (auto i : in.positives) {
        if (f_.insert_hash(hash_key((*in.ds)[i].key, seed_)) == InsertStatus::full) {
          throw std::runtime_error("quotient filter full at q=" + std::to_string(in.q));
        }
      }
      tl.mark(filter_inserts);
    });
  }
  FilterKind kind() const override { return FilterKind::qf; }
  bool query(const Item& item, bool, QueryTimeline& tl) override {
    const bool a = probe(item);
    tl.mark(filter_query);
    return a;
  }
  bool probe(const Item& item) const override { return f_.contains_hash(hash_key(item.key, seed_)); }
  std::uint64_t size_bits() const override { return f_.size_bits(); }
  nlohmann::json summary() const override { return {{"q", f_.scheme().q}, {"r", f_.scheme().r}, {"load", f_.load()}}; }

 private:
  std::uint64_t seed_;
  QuotientFilter f_;
};

class AqfBench final : public BenchFilter {
 public:
  explicit AqfBench(const BuildInputs& in) : f_(FingerprintScheme(in.q, in.r), SeededHasher{in.seed}) {
    timed_build(build_, in.positives.size(), [&](BuildTimeline& tl) {
      for (auto i : in.positives) {
        const auto& key = (*in.ds)[i].key;
        const auto staged = f_.insert_filter_part(key);
        tl.mark(filter_inserts);
        if (staged.status == InsertStatus::full) {
          throw std::runtime_error("adaptive quotient filter full at q=" + std::to_string(in.q));
        }
        f_.insert_reverse_part(key, staged.hash);
        tl.mark(build_reverse_map_updates);
      }
    });
  }
  FilterKind kind() const override { return FilterKind::aqf; }
  bool query(const Item& item, bool member, QueryTimeline& tl) override {
    const bool a = f_.contains(item.key);
    tl.mark(filter_query);
    if (a && !member) {
      f_.report_false_positive(item.key);
      tl.mark(query_reverse_map_updates);
    }
    return a;
  }
  bool probe(const Item& item) const override { return f_.contains(item.key); }
  std::uint64_t size_bits() const override { return f_.size_bits(); }
  nlohmann::json summary() const override {
    return {{"q", f_.scheme().q},
            {"r", f_.scheme().r},
            {"adaptations", f_.adaptations()},
            {"reverse_map_bits", f_.reverse_map_size_bits()}};
  }
  const AdaptiveQF<>& filter() const noexcept { return f_; }

 private:
  AdaptiveQF<> f_;
};

// Scores every positive and the model's training negatives.
struct ScoredInputs {
  std::vector<Item> positives;
  std::vector<double> positive_scores;
  std::vector<double> negative_scores;
};

inline ScoredInputs score_inputs(const BuildInputs& in) {
  ScoredInputs s;
  s.positives.reserve(in.positives.size());
  for (auto i : in.positives) s.positives.push_back(item_at(*in.ds, i));
  s.positive_scores = score_all(*in.model->scorer, s.positives);
  s.negative_scores.reserve(in.model->training_negatives.size());
  for (auto i : in.model->training_negatives) s.negative_scores.push_back(in.model->scorer->score(item_at(*in.ds, i)));
  return s;
}

template <typename Filter>
class LearnedBench : public BenchFilter {
 public:
  bool query(const Item& item, bool, QueryTimeline& tl) override {
    const double s = scorer_->score(item);
    tl.mark(score_inference);
    const bool a = f_->contains_scored(item, s);
    tl.mark(filter_query);
    return a;
  }
  bool probe(const Item& item) const override { return f_->contains(item); }
  std::uint64_t size_bits() const override { return f_->size_bits(); }
  std::uint64_t model_bits() const override { return scorer_->model_bits(); }

 protected:
  explicit LearnedBench(const BuildInputs& in) : scorer_(in.model ? in.model->scorer : nullptr) {
    if (!scorer_) throw std::invalid_argument("learned filter built without a model");
    build_.ns[model_training] = in.model->train_ns;
    build_.wall_ns = in.model->train_ns;
  }
  static LearnedBudget budget(const BuildInputs& in) { return {in.budget_bits, in.model->model_bits}; }

  std::shared_ptr<const Scorer> scorer_;
  std::unique_ptr<Filter> f_;
};

class LbfBench final : public LearnedBench<LearnedBloomFilter> {
 public:
  explicit LbfBench(const BuildInputs& in) : LearnedBench(in) {
    const auto b = budget(in);
    b.require_backup(64);
    timed_build(build_, in.positives.size(), [&](BuildTimeline& tl) {
      const auto s = score_inputs(in);
      const double t = choose_lbf_threshold(s.positive_scores, s.negative_scores, static_cast<std::uint64_t>(b.backup_bits()));
      tl.mark(threshold_finding);
      f_ = std::make_unique<LearnedBloomFilter>(scorer_, t, b, s.positives, s.positive_scores, in.seed);
      tl.mark(filter_inserts);
    });
  }
  FilterKind kind() const override { return FilterKind::lbf; }
  nlohmann::json summary() const override {
    return {{"threshold", f_->threshold()}, {"backup_bits", f_->backup().size_bits()}, {"backup_keys", f_->backup().inserted()}};
  }
};

class AdaBfBench final : public LearnedBench<AdaBF> {
 public:
  explicit AdaBfBench(const BuildInputs& in) : LearnedBench(in) {
    const auto b = budget(in);
    b.require_backup(64);
    timed_build(build_, in.positives.size(), [&](BuildTimeline& tl) {
      const auto s = score_inputs(in);
      auto plan = plan_adabf(s.positive_scores, s.negative_scores, static_cast<std::uint64_t>(b.backup_bits()), in.learned.adabf);
      tl.mark(threshold_finding);
      f_ = std::make_unique<AdaBF>(scorer_, std::move(plan), in.seed);
      for (std::size_t i = 0; i < s.positives.size(); ++i) f_->insert_scored(s.positives[i], s.positive_scores[i]);
      tl.mark(filter_inserts);
    });
  }
  FilterKind kind() const override { return FilterKind::adabf; }
  nlohmann::json summary() const override {
    const auto& p = f_->plan();
    return {{"c", p.c}, {"thresholds", p.thresholds}, {"group_hashes", p.group_hashes}, {"bits", p.bit_count}};
  }
};

class PlbfBench final : public LearnedBench<PLBF> {
 public:
  explicit PlbfBench(const BuildInputs& in) : LearnedBench(in) {
    const auto b = budget(in);
    b.require_backup(64);
    timed_build(build_, in.positives.size(), [&](BuildTimeline& tl) {
      const auto s = score_inputs(in);
      auto plan = plan_plbf(s.positive_scores, s.negative_scores, static_cast<std::uint64_t>(b.backup_bits()),
                            in.learned.plbf_segments, in.learned.plbf_regions);
      tl.mark(threshold_finding);
      f_ = std::make_unique<PLBF>(scorer_, std::move(plan), in.seed);
      for (std::size_t i = 0; i < s.positives.size(); ++i) f_->insert_scored(s.positives[i], s.positive_scores[i]);
      tl.mark(filter_inserts);
    });
  }
  FilterKind kind() const override { return FilterKind::plbf; }
  nlohmann::json summary() const override {
    const auto& p = f_->plan();
    return {{"boundaries", p.boundaries}, {"region_fpr", p.region_fpr}, {"region_bits", p.region_bits}};
  }
};

class StackedBench final : public BenchFilter {
 public:
  // Relative size mismatch tolerated before re-fitting the first layer.
  static constexpr double kSizeSlack = 0.002;
  static constexpr int kFillAttempts = 8;

  explicit StackedBench(const BuildInputs& in) {
    timed_build(build_, in.positives.size(), [&](BuildTimeline& tl) {
      std::vector<std::string_view> pos;
      pos.reserve(in.positives.size());
      for (auto i : in.positives) pos.push_back((*in.ds)[i].key);
      std::vector<std::string_view> negq;
      negq.reserve(in.stacked_sample.size());
      for (auto i : in.stacked_sample) negq.push_back((*in.ds)[i].key);
      const auto sample = NegativeSample::from_queries(negq);
      const double target = static_cast<double>(in.budget_bits);
      const auto grid = sf_plan(pos.size(), sample, target);
      // Deep layers hold a handful of keys, so realized size jumps around;
      // keep the closest attempt.
      double fill = target, best = INFINITY;
      for (int attempt = 0; attempt < kFillAttempts; ++attempt) {
        auto plan = sf_fill_budget(grid, pos.size(), fill);
        tl.mark(threshold_finding);
        auto f = StackedFilter::build(pos, plan.sample.frequent, plan.layers, in.seed);
        tl.mark(filter_inserts);
        const double actual = static_cast<double>(f.size_bits());
        if (std::abs(actual - target) < best) {
          best = std::abs(actual - target);
          plan_ = std::move(plan);
          f_ = std::move(f);
        }
        if (best <= kSizeSlack * target) break;
        fill *= target / actual;
      }
    }, threshold_finding);
  }
  FilterKind kind() const override { return FilterKind::stacked; }
  bool query(const Item& item, bool, QueryTimeline& tl) override {
    const bool a = f_.contains(item.key);
    tl.mark(filter_query);
    return a;
  }
  bool probe(const Item& item) const override { return f_.contains(item.key); }
  std::uint64_t size_bits() const override { return f_.size_bits(); }
  nlohmann::json summary() const override {
    return {{"layer_fprs", plan_.layers.fprs},
            {"populations", f_.populations()},
            {"psi", plan_.sample.psi},
            {"frequent_negatives", plan_.sample.frequent.size()},
            {"expected_fpr", plan_.expected_fpr}};
  }
  const StackedFilter& filter() const noexcept { return f_; }
  const StackedPlan& plan() const noexcept { return plan_; }

 private:
  StackedPlan plan_;
  StackedFilter f_;
};

}  // namespace detail

inline std::unique_ptr<BenchFilter> build_filter(FilterKind kind, const BuildInputs& in) {
  switch (kind) {
    case FilterKind::bloom: return std::make_unique<detail::BloomBench>(in);
    case FilterKind::qf: return std::make_unique<detail::QfBench>(in);
    case FilterKind::aqf: return std::make_unique<detail::AqfBench>(in);
    case FilterKind::lbf: return std::make_unique<detail::LbfBench>(in);
    case FilterKind::adabf: return std::make_unique<detail::AdaBfBench>(in);
    case FilterKind::plbf: return std::make_unique<detail::PlbfBench>(in);
    case FilterKind::stacked: return std::make_unique<detail::StackedBench>(in);
  }
  throw std::invalid_argument("unknown filter kind");
}

}  // namespace fcb::bench
