#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fcbench/features.hpp"

namespace fcb {

struct Record {
  std::string key;
  bool positive = false;
  FeatureVector features;

  friend bool operator==(const Record&, const Record&) = default;
};

// What every filter is queried with: the key bytes plus its (possibly
// empty) feature vector. Non-learned filters ignore the features.
struct Item {
  std::string_view key;
  std::span<const double> features;
};

inline Item item_of(const Record& r) { return {r.key, r.features}; }

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Record> records) : records_(std::move(records)) { validate(); }

  const std::vector<Record>& records() const noexcept { return records_; }
  const Record& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t feature_dim() const noexcept { return records_.empty() ? 0 : records_.front().features.size(); }

  std::size_t n_pos() const noexcept { return n_pos_; }
  std::size_t n_neg() const noexcept { return records_.size() - n_pos_; }

  std::vector<std::size_t> indices(bool positive) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (records_[i].positive == positive) out.push_back(i);
    }
    return out;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) { return a.records_ == b.records_; }

 private:
  void validate() {
    std::unordered_set<std::string_view> seen;
    seen.reserve(records_.size());
    n_pos_ = 0;
    const std::size_t dim = feature_dim();
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      if (!seen.insert(r.key).second) throw std::invalid_argument("duplicate key in dataset: " + r.key);
      if (r.features.size() != dim) throw std::invalid_argument("inconsistent feature length at record " + std::to_string(i));
      for (double v : r.features) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature at record " + std::to_string(i));
      }
      n_pos_ += r.positive;
    }
  }

  std::vector<Record> records_;
  std::size_t n_pos_ = 0;
};

// ---------------------------------------------------------------------------
// CSV: header `key,label[,f1,...,fK]`, label in {0,1}. Keys must not contain
// commas or newlines.

enum class Featurize { none, url };

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline Dataset parse_dataset_csv(std::istream& in, Featurize featurize = Featurize::none) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_commas(line);
  if (header.size() < 2 || header[0] != "key" || header[1] != "label") {
    throw std::invalid_argument("dataset csv: header must start with key,label");
  }
  const std::size_t dim = header.size() - 2;

  std::vector<Record> records;
  std::unordered_map<std::string, std::size_t> first_line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = detail::split_commas(line);
    if (cols.size() != header.size()) {
      throw std::invalid_argument("dataset csv line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " columns");
    }
    Record r;
    r.key = std::string(cols[0]);
    if (r.key.empty()) throw std::invalid_argument("dataset csv line " + std::to_string(line_no) + ": empty key");
    if (cols[1] == "1") {
      r.positive = true;
    } else if (cols[1] != "0") {
      throw std::invalid_argument("dataset csv line " + std::to_string(line_no) + ": bad label '" +
                                  std::string(cols[1]) + "'");
    }
    if (auto [it, fresh] = first_line.emplace(r.key, line_no); !fresh) {
      throw std::invalid_argument("dataset csv line " + std::to_string(line_no) + ": duplicate key '" + r.key +
                                  "' (first seen on line " + std::to_string(it->second) + ")");
    }
    for (std::size_t c = 0; c < dim; ++c) {
      try {
        std::size_t used = 0;
        const std::string cell(cols[2 + c]);
        r.features.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw std::invalid_argument("dataset csv line " + std::to_string(line_no) + ": bad feature value");
      }
    }
    if (featurize == Featurize::url) {
      auto extra = featurize_url(r.key);
      r.features.insert(r.features.end(), extra.begin(), extra.end());
    }
    records.push_back(std::move(r));
  }
  return Dataset(std::move(records));
}

inline Dataset ingest_dataset(const std::string& path, Featurize featurize = Featurize::none) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  return parse_dataset_csv(in, featurize);
}

inline void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  out << "key,label";
  for (std::size_t c = 0; c < ds.feature_dim(); ++c) out << ",f" << (c + 1);
  out << '\n';
  char buf[64];
  for (const auto& r : ds.records()) {
    out << r.key << ',' << (r.positive ? '1' : '0');
    for (double v : r.features) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic datasets: positives and negatives draw features from unit
// Gaussians whose means lie separability * kSyntheticMaxDistance apart
// (Euclidean), split evenly across the feature dimensions.

inline constexpr double kSyntheticMaxDistance = 5.0;

struct SyntheticSpec {
  std::size_t n_pos = 10000;
  std::size_t n_neg = 100000;
  std::size_t feature_dim = 8;
  double separability = 0.9;
  std::uint64_t seed = 1;
  bool sort_by_label = false;  // positives first; exercises rank hashing
};

inline std::string random_key(std::mt19937_64& rng, std::size_t len = 16) {
  static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string key(len, '\0');
  for (auto& c : key) c = kAlphabet[rng() % kAlphabet.size()];
  return key;
}

inline Dataset gen_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.n_pos < 1 || spec.n_neg < 1) throw std::invalid_argument("synthetic dataset needs both classes");
  if (spec.feature_dim < 1) throw std::invalid_argument("synthetic dataset needs at least one feature");
  if (spec.separability < 0 || spec.separability > 1) throw std::invalid_argument("separability must be in [0,1]");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double shift = spec.separability * kSyntheticMaxDistance / std::sqrt(static_cast<double>(spec.feature_dim));

  std::vector<Record> records;
  records.reserve(spec.n_pos + spec.n_neg);
  std::unordered_set<std::string> keys;
  auto fresh_key = [&] {
    while (true) {
      auto k = random_key(rng);
      if (keys.insert(k).second) return k;
    }
  };
  for (std::size_t i = 0; i < spec.n_pos + spec.n_neg; ++i) {
    Record r;
    r.positive = i < spec.n_pos;
    r.key = fresh_key();
    r.features.resize(spec.feature_dim);
    for (auto& v : r.features) v = gauss(rng) + (r.positive ? shift : 0.0);
    records.push_back(std::move(r));
  }
  if (!spec.sort_by_label) std::shuffle(records.begin(), records.end(), rng);
  return Dataset(std::move(records));
}

}  // namespace fcb
