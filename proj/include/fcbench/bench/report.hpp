#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcbench/bench/timing.hpp"

namespace fcb::bench {

inline constexpr const char* kReportSchema = "fcbench/1";

// |Q_FP| / (|Q_FP| + |Q_N|); undefined without any negative query.
inline std::optional<double> compute_fpr(std::uint64_t q_fp, std::uint64_t q_tn) {
  if (q_fp + q_tn == 0) return std::nullopt;
  return static_cast<double>(q_fp) / static_cast<double>(q_fp + q_tn);
}

struct BuildBreakdown {
  std::array<std::uint64_t, 4> ns{};  // indexed by BuildPhase
  std::uint64_t wall_ns = 0;
  std::uint64_t inserts = 0;

  std::uint64_t sum() const noexcept { return ns[0] + ns[1] + ns[2] + ns[3]; }
  friend bool operator==(const BuildBreakdown&, const BuildBreakdown&) = default;
};

struct QueryBreakdown {
  std::array<std::uint64_t, 3> ns{};  // indexed by QueryPhase
  std::uint64_t wall_ns = 0;
  std::uint64_t queries = 0;

  std::uint64_t sum() const noexcept { return ns[0] + ns[1] + ns[2]; }
  friend bool operator==(const QueryBreakdown&, const QueryBreakdown&) = default;
};

// Instantaneous FPR on the probe set after `queries_done` queries.
struct Checkpoint {
  std::uint32_t index = 0;  // 1-based
  std::uint64_t queries_done = 0;
  std::uint32_t churns = 0;  // churns applied before this checkpoint
  std::uint64_t probe_false_positives = 0;
  std::uint64_t probe_negatives = 0;
  std::optional<double> fpr;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct TrialReport {
  std::string experiment;
  std::string filter;
  unsigned r = 0;
  int trial = 0;
  std::string aggregate;  // "" for a single trial, "median" for summary rows
  std::uint64_t seed = 0;
  std::uint64_t size_bits = 0;
  std::uint64_t model_bits = 0;
  std::uint64_t queries = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t true_negatives = 0;
  std::uint64_t false_negatives = 0;
  std::optional<double> fpr;
  std::vector<Checkpoint> checkpoints;
  BuildBreakdown build;
  QueryBreakdown query;
  std::uint64_t vectorization_ns = 0;
  std::uint64_t query_set_hash = 0;
  nlohmann::json details = nlohmann::json::object();

  void finish() { fpr = compute_fpr(false_positives, true_negatives); }
  // Copy with every clock-derived field zeroed.
  TrialReport without_timing() const {
    TrialReport t = *this;
    t.build = BuildBreakdown{{}, 0, build.inserts};
    t.query = QueryBreakdown{{}, 0, query.queries};
    t.vectorization_ns = 0;
    return t;
  }
  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

struct ReportDocument {
  std::string experiment;
  std::string dataset;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> notices;
  std::vector<TrialReport> reports;

  friend bool operator==(const ReportDocument&, const ReportDocument&) = default;
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }
inline std::optional<double> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}
inline double per_op(std::uint64_t ns, std::uint64_t ops) {
  return ops == 0 ? 0.0 : static_cast<double>(ns) / static_cast<double>(ops);
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const BuildBreakdown& b) {
  j = nlohmann::json{{"filter_inserts_ns", b.ns[filter_inserts]},
                     {"model_training_ns", b.ns[model_training]},
                     {"threshold_finding_ns", b.ns[threshold_finding]},
                     {"reverse_map_updates_ns", b.ns[build_reverse_map_updates]},
                     {"wall_ns", b.wall_ns},
                     {"inserts", b.inserts},
                     {"per_insert_ns", detail::per_op(b.sum(), b.inserts)}};
}
inline void from_json(const nlohmann::json& j, BuildBreakdown& b) {
  j.at("filter_inserts_ns").get_to(b.ns[filter_inserts]);
  j.at("model_training_ns").get_to(b.ns[model_training]);
  j.at("threshold_finding_ns").get_to(b.ns[threshold_finding]);
  j.at("reverse_map_updates_ns").get_to(b.ns[build_reverse_map_updates]);
  j.at("wall_ns").get_to(b.wall_ns);
  j.at("inserts").get_to(b.inserts);
}

inline void to_json(nlohmann::json& j, const QueryBreakdown& q) {
  j = nlohmann::json{{"filter_query_ns", q.ns[filter_query]},
                     {"score_inference_ns", q.ns[score_inference]},
                     {"reverse_map_updates_ns", q.ns[query_reverse_map_updates]},
                     {"wall_ns", q.wall_ns},
                     {"queries", q.queries},
                     {"filter_query_per_op_ns", detail::per_op(q.ns[filter_query], q.queries)},
                     {"score_inference_per_op_ns", detail::per_op(q.ns[score_inference], q.queries)},
                     {"reverse_map_updates_per_op_ns", detail::per_op(q.ns[query_reverse_map_updates], q.queries)}};
}
inline void from_json(const nlohmann::json& j, QueryBreakdown& q) {
  j.at("filter_query_ns").get_to(q.ns[filter_query]);
  j.at("score_inference_ns").get_to(q.ns[score_inference]);
  j.at("reverse_map_updates_ns").get_to(q.ns[query_reverse_map_updates]);
  j.at("wall_ns").get_to(q.wall_ns);
  j.at("queries").get_to(q.queries);
}

inline void to_json(nlohmann::json& j, const Checkpoint& c) {
  j = nlohmann::json{{"index", c.index},
                     {"queries_done", c.queries_done},
                     {"churns", c.churns},
                     {"probe_false_positives", c.probe_false_positives},
                     {"probe_negatives", c.probe_negatives},
                     {"fpr", detail::optional_json(c.fpr)}};
}
inline void from_json(const nlohmann::json& j, Checkpoint& c) {
  j.at("index").get_to(c.index);
  j.at("queries_done").get_to(c.queries_done);
  j.at("churns").get_to(c.churns);
  j.at("probe_false_positives").get_to(c.probe_false_positives);
  j.at("probe_negatives").get_to(c.probe_negatives);
  c.fpr = detail::optional_from(j.at("fpr"));
}

inline void to_json(nlohmann::json& j, const TrialReport& t) {
  j = nlohmann::json{{"experiment", t.experiment},
                     {"filter", t.filter},
                     {"r", t.r},
                     {"trial", t.trial},
                     {"aggregate", t.aggregate},
                     {"seed", t.seed},
                     {"size_bits", t.size_bits},
                     {"model_bits", t.model_bits},
                     {"queries", t.queries},
                     {"false_positives", t.false_positives},
                     {"true_negatives", t.true_negatives},
                     {"false_negatives", t.false_negatives},
                     {"fpr", detail::optional_json(t.fpr)},
                     {"checkpoints", t.checkpoints},
                     {"construction", t.build},
                     {"query", t.query},
                     {"vectorization_ns", t.vectorization_ns},
                     {"query_set_hash", t.query_set_hash},
                     {"details", t.details}};
}
inline void from_json(const nlohmann::json& j, TrialReport& t) {
  j.at("experiment").get_to(t.experiment);
  j.at("filter").get_to(t.filter);
  j.at("r").get_to(t.r);
  j.at("trial").get_to(t.trial);
  j.at("aggregate").get_to(t.aggregate);
  j.at("seed").get_to(t.seed);
  j.at("size_bits").get_to(t.size_bits);
  j.at("model_bits").get_to(t.model_bits);
  j.at("queries").get_to(t.queries);
  j.at("false_positives").get_to(t.false_positives);
  j.at("true_negatives").get_to(t.true_negatives);
  j.at("false_negatives").get_to(t.false_negatives);
  t.fpr = detail::optional_from(j.at("fpr"));
  j.at("checkpoints").get_to(t.checkpoints);
  j.at("construction").get_to(t.build);
  j.at("query").get_to(t.query);
  j.at("vectorization_ns").get_to(t.vectorization_ns);
  j.at("query_set_hash").get_to(t.query_set_hash);
  t.details = j.at("details");
}

inline void to_json(nlohmann::json& j, const ReportDocument& d) {
  j = nlohmann::json{{"schema", kReportSchema}, {"experiment", d.experiment}, {"dataset", d.dataset},
                     {"config", d.config},      {"notices", d.notices},       {"reports", d.reports}};
}
inline void from_json(const nlohmann::json& j, ReportDocument& d) {
  if (j.at("schema") != kReportSchema) {
    throw std::invalid_argument("unsupported report schema " + j.at("schema").dump() + ", expected " + kReportSchema);
  }
  j.at("experiment").get_to(d.experiment);
  j.at("dataset").get_to(d.dataset);
  d.config = j.at("config");
  j.at("notices").get_to(d.notices);
  j.at("reports").get_to(d.reports);
}

inline std::string report_json(const ReportDocument& doc) { return nlohmann::json(doc).dump(2) + "\n"; }
inline ReportDocument parse_report_json(std::string_view text) { return nlohmann::json::parse(text).get<ReportDocument>(); }

// ---------------------------------------------------------------------------
// CSV: one row per checkpoint, or one row for reports without checkpoints.

inline constexpr std::array<const char*, 29> kCsvColumns = {
    "experiment",          "filter",
    "r",                   "trial",
    "aggregate",           "seed",
    "size_bits",           "model_bits",
    "queries",             "false_positives",
    "true_negatives",      "false_negatives",
    "fpr",                 "checkpoint",
    "checkpoint_queries",  "churns",
    "checkpoint_fpr",      "build_filter_inserts_ns",
    "build_model_training_ns", "build_threshold_finding_ns",
    "build_reverse_map_updates_ns", "build_wall_ns",
    "query_filter_query_ns", "query_score_inference_ns",
    "query_reverse_map_updates_ns", "query_wall_ns",
    "vectorization_ns",    "query_set_hash",
    "details"};

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  return nlohmann::json(*v).dump();  // shortest round-trip form
}

}  // namespace detail

inline std::size_t csv_row_count(const std::vector<TrialReport>& reports) {
  std::size_t n = 0;
  for (const auto& r : reports) n += std::max<std::size_t>(1, r.checkpoints.size());
  return n;
}

inline void write_report_csv(std::ostream& out, const ReportDocument& doc) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out << (i ? "," : "") << kCsvColumns[i];
  out << '\n';
  for (const auto& t : doc.reports) {
    auto row = [&](const Checkpoint* c) {
      out << detail::csv_field(t.experiment) << ',' << detail::csv_field(t.filter) << ',' << t.r << ',' << t.trial
          << ',' << t.aggregate << ',' << t.seed << ',' << t.size_bits << ',' << t.model_bits << ',' << t.queries << ','
          << t.false_positives << ',' << t.true_negatives << ',' << t.false_negatives << ','
          << detail::csv_number(t.fpr) << ',';
      if (c != nullptr) {
        out << c->index << ',' << c->queries_done << ',' << c->churns << ',' << detail::csv_number(c->fpr) << ',';
      } else {
        out << ",,,,";
      }
      for (auto v : t.build.ns) out << v << ',';
      out << t.build.wall_ns << ',';
      for (auto v : t.query.ns) out << v << ',';
      out << t.query.wall_ns << ',' << t.vectorization_ns << ',' << t.query_set_hash << ','
          << detail::csv_field(t.details.dump()) << '\n';
    };
    if (t.checkpoints.empty()) {
      row(nullptr);
    } else {
      for (const auto& c : t.checkpoints) row(&c);
    }
  }
}

enum class ReportFormat { json, csv };

inline void emit_report(const ReportDocument& doc, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report to " + path);
  if (format == ReportFormat::json) {
    out << report_json(doc);
  } else {
    write_report_csv(out, doc);
  }
  if (!out) throw std::runtime_error("error while writing report to " + path);
}

}  // namespace fcb::bench
