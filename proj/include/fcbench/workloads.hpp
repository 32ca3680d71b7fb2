#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcbench/dataset.hpp"
#include "fcbench/hash.hpp"

namespace fcb {

// Queries are indices into the dataset's records.
using QuerySequence = std::vector<std::uint32_t>;

enum class WorkloadKind { one_pass, uniform, zipfian, adversarial, dynamic };

NLOHMANN_JSON_SERIALIZE_ENUM(WorkloadKind, {{WorkloadKind::one_pass, "one_pass"},
                                            {WorkloadKind::uniform, "uniform"},
                                            {WorkloadKind::zipfian, "zipfian"},
                                            {WorkloadKind::adversarial, "adversarial"},
                                            {WorkloadKind::dynamic, "dynamic"}})

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::uniform;
  std::uint64_t count = 1000000;
  double z = 1.5;
  double d = 0.10;
  std::uint64_t seed = 1;

  void validate() const {
    if (kind == WorkloadKind::zipfian && !(z > 0)) throw std::invalid_argument("zipfian workload needs z > 0");
    if (kind == WorkloadKind::adversarial && !(d > 0 && d < 1)) throw std::invalid_argument("adversarial d must be in (0, 1)");
    if (kind != WorkloadKind::one_pass && count < 1) throw std::invalid_argument("workload needs at least one query");
  }

  friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

inline void to_json(nlohmann::json& j, const WorkloadSpec& s) {
  j = nlohmann::json{{"kind", s.kind}, {"count", s.count}, {"z", s.z}, {"d", s.d}, {"seed", s.seed}};
}
inline void from_json(const nlohmann::json& j, WorkloadSpec& s) {
  j.at("kind").get_to(s.kind);
  j.at("count").get_to(s.count);
  j.at("z").get_to(s.z);
  j.at("d").get_to(s.d);
  j.at("seed").get_to(s.seed);
}

inline std::uint64_t query_set_hash(const QuerySequence& q, const Dataset& ds, std::uint64_t seed = 0) {
  HashFold fold(seed);
  for (auto i : q) fold.add(hash_key(ds[i].key, seed));
  return fold.digest();
}

inline QuerySequence gen_one_pass(std::size_t n, std::uint64_t seed) {
  QuerySequence q(n);
  std::iota(q.begin(), q.end(), 0u);
  std::mt19937_64 rng(seed);
  std::shuffle(q.begin(), q.end(), rng);
  return q;
}

inline QuerySequence gen_uniform(std::size_t n, std::uint64_t count, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("cannot draw queries from an empty dataset");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  QuerySequence q(count);
  for (auto& v : q) v = pick(rng);
  return q;
}

// Rank order of dataset indices: sorted by a seeded hash of the index, so a
// record's popularity does not depend on where it sits in the file.
inline std::vector<std::uint32_t> zipf_rank_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
  for (std::uint32_t i = 0; i < n; ++i) keyed[i] = {mix64(mix64(seed) ^ i), i};
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::uint32_t> order(n);
  for (std::size_t r = 0; r < n; ++r) order[r] = keyed[r].second;
  return order;
}

// P(rank i) for i = 1..n, proportional to 1 / i^z.
inline std::vector<double> zipf_probabilities(std::size_t n, double z) {
  std::vector<double> p(n);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) total += p[i] = std::pow(static_cast<double>(i + 1), -z);
  for (auto& v : p) v /= total;
  return p;
}

inline QuerySequence gen_zipfian(std::size_t n, std::uint64_t count, double z, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("cannot draw queries from an empty dataset");
  if (!(z > 0)) throw std::invalid_argument("zipfian workload needs z > 0");
  const auto order = zipf_rank_order(n, seed);
  std::vector<double> cdf(n);
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) cdf[i] = acc += std::pow(static_cast<double>(i + 1), -z);
  std::mt19937_64 rng(mix64(seed + 1));
  std::uniform_real_distribution<double> u(0.0, acc);
  QuerySequence q(count);
  for (auto& v : q) {
    const auto r = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u(rng)) - cdf.begin());
    v = order[std::min(r, n - 1)];
  }
  return q;
}

inline QuerySequence gen_workload(const Dataset& ds, const WorkloadSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case WorkloadKind::one_pass:
      return gen_one_pass(ds.size(), spec.seed);
    case WorkloadKind::zipfian:
      return gen_zipfian(ds.size(), spec.count, spec.z, spec.seed);
    default:
      return gen_uniform(ds.size(), spec.count, spec.seed);
  }
}

// ---------------------------------------------------------------------------
// Adversarial driver. Phase 1 (the first count/2 queries) is uniform and
// records false positives; phase 2 replaces every interval-th uniform query
// with the next recorded false positive, round robin. `report` is called on
// every false positive in both phases.

struct AdversarialOutcome {
  std::uint64_t queries = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t true_negatives = 0;
  std::uint64_t injected = 0;
  std::uint64_t interval = 0;
  std::uint64_t recorded = 0;  // distinct false positives found in phase 1
  bool no_false_positives_found = false;
};

inline std::uint64_t adversarial_interval(std::uint64_t count, double d) {
  const double half = static_cast<double>(count / 2);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(half / (d * static_cast<double>(count)))));
}

template <typename QueryFn, typename TruthFn, typename ReportFn>
AdversarialOutcome run_adversarial(std::size_t n, std::uint64_t count, double d, std::uint64_t seed, QueryFn&& query,
                                   TruthFn&& is_member, ReportFn&& report) {
  if (!(d > 0 && d < 1)) throw std::invalid_argument("adversarial d must be in (0, 1)");
  if (count % 2 != 0) throw std::invalid_argument("adversarial query count must be even");
  if (n == 0) throw std::invalid_argument("cannot draw queries from an empty dataset");
  AdversarialOutcome out;
  out.interval = adversarial_interval(count, d);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  std::vector<std::uint32_t> found;
  std::vector<bool> seen(n, false);

  auto issue = [&](std::uint32_t idx, bool record) {
    ++out.queries;
    const bool answer = query(idx);
    if (is_member(idx)) return;
    if (answer) {
      ++out.false_positives;
      if (record && !seen[idx]) {
        seen[idx] = true;
        found.push_back(idx);
      }
      report(idx);
    } else {
      ++out.true_negatives;
    }
  };

  const std::uint64_t half = count / 2;
  for (std::uint64_t i = 0; i < half; ++i) issue(pick(rng), true);
  out.recorded = found.size();
  out.no_false_positives_found = found.empty();
  std::size_t next = 0;
  for (std::uint64_t i = 0; i < count - half; ++i) {
    std::uint32_t idx = pick(rng);
    if (!found.empty() && (i + 1) % out.interval == 0) {
      idx = found[next++ % found.size()];
      ++out.injected;
    }
    issue(idx, false);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Churn: a replacement set of n_pos negatives swaps with the inserted set,
// n_pos/5 positions at a time. Churn j (from 0) swaps positions
// [n/5 * (j % 5), n/5 * (j % 5) + n/5), so ten churns return to the start.

inline constexpr int kChurnCount = 10;

struct ChurnSchedule {
  std::vector<std::uint32_t> live;         // currently inserted keys
  std::vector<std::uint32_t> replacement;  // keys waiting to be swapped in

  std::size_t window() const noexcept { return live.size() / 5; }
};

struct ChurnDelta {
  std::vector<std::uint32_t> removed;
  std::vector<std::uint32_t> added;
};

inline ChurnSchedule churn_schedule(const Dataset& ds, std::uint64_t seed) {
  if (ds.n_neg() < ds.n_pos()) {
    throw std::invalid_argument("churn needs at least as many negatives as positives (" + std::to_string(ds.n_neg()) +
                                " < " + std::to_string(ds.n_pos()) + ")");
  }
  ChurnSchedule s;
  for (auto i : ds.indices(true)) s.live.push_back(static_cast<std::uint32_t>(i));
  std::vector<std::uint32_t> neg;
  for (auto i : ds.indices(false)) neg.push_back(static_cast<std::uint32_t>(i));
  std::mt19937_64 rng(seed);
  std::shuffle(neg.begin(), neg.end(), rng);
  s.replacement.assign(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(s.live.size()));
  return s;
}

inline std::pair<std::size_t, std::size_t> churn_window(std::size_t n, int j) {
  const std::size_t start = n / 5 * static_cast<std::size_t>(j % 5);
  return {start, start + n / 5};
}

inline ChurnDelta churn_apply(ChurnSchedule& s, int j) {
  if (j < 0) throw std::invalid_argument("churn index must be non-negative");
  const auto [start, end] = churn_window(s.live.size(), j);
  ChurnDelta delta;
  for (std::size_t i = start; i < end; ++i) {
    delta.removed.push_back(s.live[i]);
    delta.added.push_back(s.replacement[i]);
    std::swap(s.live[i], s.replacement[i]);
  }
  return delta;
}

}  // namespace fcb
