#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcbench/quotient_filter.hpp"

namespace fcb::bench {

inline const std::vector<unsigned> kDefaultRValues = {5, 6, 7, 8, 9, 10, 11};

struct SizeMatchRow {
  unsigned r = 0;
  std::uint64_t aqf_bits = 0;
  std::int64_t learned_budget = 0;  // backup bits left after the model
  bool learned_feasible = false;
  std::uint64_t stacked_budget = 0;
};

struct SizeMatchPlan {
  std::uint64_t n = 0;
  unsigned q = 0;
  std::vector<SizeMatchRow> rows;

  const SizeMatchRow& row(unsigned r) const {
    for (const auto& x : rows) {
      if (x.r == r) return x;
    }
    throw std::out_of_range("no size-match row for r=" + std::to_string(r));
  }
};

// ceil(log2 n), raised by one when n keys would exceed the quotient
// filter's maximum load at that size.
inline unsigned size_match_q(std::uint64_t n) {
  if (n < 1) throw std::invalid_argument("size matching needs at least one key");
  auto q = static_cast<unsigned>(std::bit_width(n - 1));
  if (q == 0) q = 1;
  if (static_cast<double>(n) > QuotientFilter::kMaxLoad * static_cast<double>(std::uint64_t{1} << q)) ++q;
  return q;
}

// AQF size at empty load for each r; learned filters get that total minus
// the model, stacked filters get all of it.
inline SizeMatchPlan size_match_plan(std::uint64_t n, const std::vector<unsigned>& r_values, std::uint64_t model_bytes) {
  SizeMatchPlan plan;
  plan.n = n;
  plan.q = size_match_q(n);
  for (unsigned r : r_values) {
    SizeMatchRow row;
    row.r = r;
    row.aqf_bits = (std::uint64_t{1} << plan.q) * (r + 3) + QuotientFilter::kHeaderBits;
    row.learned_budget = static_cast<std::int64_t>(row.aqf_bits) - static_cast<std::int64_t>(8 * model_bytes);
    row.learned_feasible = 8 * model_bytes < row.aqf_bits && row.learned_budget >= 64;
    row.stacked_budget = row.aqf_bits;
    plan.rows.push_back(row);
  }
  return plan;
}

inline void to_json(nlohmann::json& j, const SizeMatchRow& r) {
  j = nlohmann::json{{"r", r.r},
                     {"aqf_bits", r.aqf_bits},
                     {"learned_budget", r.learned_budget},
                     {"learned_feasible", r.learned_feasible},
                     {"stacked_budget", r.stacked_budget}};
}
inline void to_json(nlohmann::json& j, const SizeMatchPlan& p) {
  j = nlohmann::json{{"n", p.n}, {"q", p.q}, {"rows", p.rows}};
}

}  // namespace fcb::bench
