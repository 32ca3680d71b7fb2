#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "fcbench/dataset.hpp"
#include "fcbench/decision_tree.hpp"
#include "fcbench/hash.hpp"

namespace fcb {

// Score function s(x) in [0, 1]; higher means more likely a member.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const Item& item) const = 0;
  // Bits charged against a learned filter's space budget.
  virtual std::uint64_t model_bits() const = 0;
};

class TreeScorer final : public Scorer {
 public:
  explicit TreeScorer(DecisionTree tree) : tree_(std::move(tree)), bits_(8 * tree_.size_bytes()) {}

  double score(const Item& item) const override { return tree_.score(item.features); }
  std::uint64_t model_bits() const override { return bits_; }
  const DecisionTree& tree() const noexcept { return tree_; }

 private:
  DecisionTree tree_;
  std::uint64_t bits_;
};

// Synthetic test scorer with exactly known behaviour. For a key with
// uniform hash variate u, s = sigmoid(+/-signal + logit(u)) where the sign is
// + for members. Non-members therefore exceed a threshold t with
// probability sigmoid(-logit(t) - signal); with signal 0 their scores are
// uniform on (0, 1).
class OracleScorer final : public Scorer {
 public:
  OracleScorer(std::unordered_set<std::string> members, double signal, std::uint64_t seed)
      : members_(std::move(members)), signal_(signal), seed_(seed) {}

  double score(const Item& item) const override {
    double u = unit_interval(hash_key(item.key, seed_));
    u = std::clamp(u, 1e-12, 1.0 - 1e-12);
    const double logit = std::log(u / (1.0 - u));
    const double z = (members_.count(std::string(item.key)) ? signal_ : -signal_) + logit;
    return 1.0 / (1.0 + std::exp(-z));
  }
  std::uint64_t model_bits() const override { return 0; }

  // P(s >= t) for a non-member.
  double negative_exceedance(double t) const {
    const double logit_t = std::log(t / (1.0 - t));
    return 1.0 / (1.0 + std::exp(logit_t + signal_));
  }

 private:
  std::unordered_set<std::string> members_;
  double signal_;
  std::uint64_t seed_;
};

// Indices of every positive plus floor(neg_fraction * n_neg) negatives
// sampled without replacement, ascending. `positive[i]` labels record i.
inline std::vector<std::size_t> sample_training_indices(const std::vector<bool>& positive, double neg_fraction,
                                                        std::uint64_t seed) {
  if (neg_fraction < 0 || neg_fraction > 1) throw std::invalid_argument("neg_fraction must be in [0, 1]");
  std::vector<std::size_t> chosen, negatives;
  for (std::size_t i = 0; i < positive.size(); ++i) (positive[i] ? chosen : negatives).push_back(i);
  const auto take = static_cast<std::size_t>(std::floor(neg_fraction * static_cast<double>(negatives.size()) + 1e-9));
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `take` slots become the sample.
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, negatives.size() - 1);
    std::swap(negatives[i], negatives[pick(rng)]);
  }
  chosen.insert(chosen.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

// Examples view into `ds`, which must outlive them.
inline std::vector<LabeledExample> build_training_set(const Dataset& ds, double neg_fraction, std::uint64_t seed) {
  std::vector<bool> positive(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) positive[i] = ds[i].positive;
  std::vector<LabeledExample> out;
  for (auto i : sample_training_indices(positive, neg_fraction, seed)) out.push_back({ds[i].key, ds[i].features, ds[i].positive});
  return out;
}

// Fraction of correctly classified examples averaged over the two classes,
// predicting positive when s >= threshold.
inline double balanced_accuracy(const Scorer& scorer, std::span<const LabeledExample> examples, double threshold = 0.5) {
  double tp = 0, pos = 0, tn = 0, neg = 0;
  for (const auto& ex : examples) {
    const bool predicted = scorer.score({ex.key, ex.features}) >= threshold;
    if (ex.positive) {
      ++pos;
      tp += predicted;
    } else {
      ++neg;
      tn += !predicted;
    }
  }
  const double tpr = pos > 0 ? tp / pos : 1.0;
  const double tnr = neg > 0 ? tn / neg : 1.0;
  return (tpr + tnr) / 2;
}

}  // namespace fcb
