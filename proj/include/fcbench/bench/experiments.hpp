#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fcbench/bench/filters.hpp"
#include "fcbench/bench/report.hpp"
#include "fcbench/bench/size_match.hpp"
#include "fcbench/bench/timing.hpp"
#include "fcbench/dataset.hpp"
#include "fcbench/features.hpp"
#include "fcbench/workloads.hpp"

namespace fcb::bench {

// ---------------------------------------------------------------------------
// Parallel cells

inline unsigned bench_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FCBENCH_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

// Runs cell(0..count-1) on up to `threads` workers. The first exception
// thrown by any cell is rethrown after all workers finish.
template <typename Cell>
void run_cells(std::size_t count, unsigned threads, Cell&& cell) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        cell(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  WorkloadSpec workload;
  std::vector<unsigned> r_values = kDefaultRValues;
  std::vector<FilterKind> filters = {FilterKind::bloom, FilterKind::aqf,  FilterKind::lbf,
                                     FilterKind::adabf, FilterKind::plbf, FilterKind::stacked};
  int trials = 3;
  std::uint64_t seed = 1;
  std::size_t max_leaf_nodes = 64;
  double neg_fraction = 0.30;
  double stacked_sample_fraction = 0.25;
  LearnedParams learned;
  std::size_t probe_size = 10000;
  bool retrain = false;
  unsigned threads = 0;  // 0: bench_threads()
  std::vector<double> model_shares = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> neg_fractions = {0.1, 0.3, 0.5, 0.9};
  double modelprop_bits_per_key = 10.0;
  bool url_features = false;  // time URL featurization separately

  unsigned worker_threads() const { return threads ? threads : bench_threads(); }
  bool any_learned() const { return std::any_of(filters.begin(), filters.end(), is_learned); }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  std::vector<std::string> names;
  for (auto k : c.filters) names.push_back(filter_name(k));
  j = nlohmann::json{{"workload", c.workload},
                     {"r", c.r_values},
                     {"filters", names},
                     {"trials", c.trials},
                     {"seed", c.seed},
                     {"max_leaf_nodes", c.max_leaf_nodes},
                     {"neg_fraction", c.neg_fraction},
                     {"stacked_sample_fraction", c.stacked_sample_fraction},
                     {"adabf", {{"k_min", c.learned.adabf.k_min},
                                {"k_max", c.learned.adabf.k_max},
                                {"c_min", c.learned.adabf.c_min},
                                {"c_max", c.learned.adabf.c_max}}},
                     {"plbf", {{"segments", c.learned.plbf_segments}, {"regions", c.learned.plbf_regions}}},
                     {"probe_size", c.probe_size},
                     {"retrain", c.retrain},
                     {"model_shares", c.model_shares},
                     {"neg_fractions", c.neg_fractions},
                     {"modelprop_bits_per_key", c.modelprop_bits_per_key}};
}

inline std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return mix64(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(trial + 1)));
}
inline std::uint64_t filter_seed(std::uint64_t tseed, FilterKind k, unsigned r) {
  return mix64(tseed + 31 * static_cast<std::uint64_t>(k) + 1009 * r);
}

inline std::vector<std::uint32_t> positive_indices(const std::vector<bool>& labels) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

// Negative queries among q[begin, end).
inline std::vector<std::uint32_t> negative_queries(const QuerySequence& q, std::size_t begin, std::size_t end,
                                                   const std::vector<bool>& labels) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = begin; i < end && i < q.size(); ++i) {
    if (!labels[q[i]]) out.push_back(q[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Query execution

struct QueryOutcome {
  std::uint64_t queries = 0, false_positives = 0, true_negatives = 0, false_negatives = 0;
  QueryBreakdown breakdown;
  nlohmann::json extra = nlohmann::json::object();
};

inline QueryOutcome run_sequence(BenchFilter& f, const Dataset& ds, const std::vector<bool>& labels,
                                 const QuerySequence& q) {
  QueryOutcome out;
  QueryTimeline tl;
  const auto wall0 = now_ns();
  tl.start();
  for (auto idx : q) {
    const bool member = labels[idx];
    const bool a = f.query(item_at(ds, idx), member, tl);
    if (member) {
      out.false_negatives += !a;
    } else {
      (a ? out.false_positives : out.true_negatives) += 1;
    }
  }
  out.breakdown.wall_ns = now_ns() - wall0;
  out.breakdown.ns = tl.totals();
  out.queries = out.breakdown.queries = q.size();
  return out;
}

inline QueryOutcome run_adversarial_sequence(BenchFilter& f, const Dataset& ds, const std::vector<bool>& labels,
                                             const WorkloadSpec& spec) {
  QueryOutcome out;
  QueryTimeline tl;
  const auto wall0 = now_ns();
  tl.start();
  const auto adv = run_adversarial(
      ds.size(), spec.count, spec.d, spec.seed,
      [&](std::uint32_t idx) {
        const bool member = labels[idx];
        const bool a = f.query(item_at(ds, idx), member, tl);
        out.false_negatives += member && !a;
        return a;
      },
      [&](std::uint32_t idx) { return static_cast<bool>(labels[idx]); }, [](std::uint32_t) {});
  out.breakdown.wall_ns = now_ns() - wall0;
  out.breakdown.ns = tl.totals();
  out.queries = out.breakdown.queries = adv.queries;
  out.false_positives = adv.false_positives;
  out.true_negatives = adv.true_negatives;
  out.extra = {{"injected", adv.injected},
               {"interval", adv.interval},
               {"recorded_false_positives", adv.recorded},
               {"no_false_positives_found", adv.no_false_positives_found}};
  return out;
}

inline TrialReport make_report(const std::string& experiment, const BenchFilter& f, unsigned r, int trial,
                               std::uint64_t seed, const QueryOutcome& o, std::uint64_t qhash) {
  TrialReport t;
  t.experiment = experiment;
  t.filter = filter_name(f.kind());
  t.r = r;
  t.trial = trial;
  t.seed = seed;
  t.size_bits = f.size_bits();
  t.model_bits = f.model_bits();
  t.queries = o.queries;
  t.false_positives = o.false_positives;
  t.true_negatives = o.true_negatives;
  t.false_negatives = o.false_negatives;
  t.build = f.build_breakdown();
  t.query = o.breakdown;
  t.query_set_hash = qhash;
  t.details = f.summary();
  for (const auto& [k, v] : o.extra.items()) t.details[k] = v;
  t.finish();
  return t;
}

// The base sequence every filter sees. Adversarial runs start from the
// same uniform draws and splice in each filter's own false positives.
inline QuerySequence base_queries(const Dataset& ds, const WorkloadSpec& spec) {
  if (spec.kind == WorkloadKind::adversarial || spec.kind == WorkloadKind::dynamic) {
    return gen_uniform(ds.size(), spec.count, spec.seed);
  }
  return gen_workload(ds, spec);
}

struct CellResult {
  std::optional<TrialReport> report;
  std::string notice;
};

inline std::vector<TrialReport> collect(std::vector<CellResult>& cells, ReportDocument& doc) {
  std::vector<TrialReport> out;
  for (auto& c : cells) {
    if (!c.notice.empty()) doc.notices.push_back(c.notice);
    if (c.report) out.push_back(std::move(*c.report));
  }
  return out;
}

inline std::string cell_label(FilterKind k, unsigned r, int trial) {
  return filter_name(k) + " r=" + std::to_string(r) + " trial=" + std::to_string(trial);
}

// ---------------------------------------------------------------------------
// FPR experiment: every (trial, r, filter) cell sees the same query set;
// learned filters of one trial share one model.

inline ReportDocument run_fpr_experiment(const Dataset& ds, const ExperimentConfig& cfg, const std::string& dataset_name = "") {
  cfg.workload.validate();
  ReportDocument doc;
  doc.experiment = "fpr";
  doc.dataset = dataset_name;
  doc.config = cfg;
  const auto labels = file_labels(ds);
  const auto positives = positive_indices(labels);
  if (positives.empty()) throw std::invalid_argument("dataset has no positive keys");
  const auto queries = base_queries(ds, cfg.workload);
  const auto qhash = query_set_hash(queries, ds);
  const auto sample_end = static_cast<std::size_t>(cfg.stacked_sample_fraction * static_cast<double>(queries.size()));
  const auto sample = negative_queries(queries, 0, sample_end, labels);

  std::vector<TrainedModel> models(static_cast<std::size_t>(cfg.trials));
  if (cfg.any_learned()) {
    run_cells(models.size(), cfg.worker_threads(), [&](std::size_t t) {
      models[t] = train_model(ds, labels, cfg.neg_fraction, cfg.max_leaf_nodes, trial_seed(cfg.seed, static_cast<int>(t)));
    });
  }

  const std::size_t per_trial = cfg.r_values.size() * cfg.filters.size();
  std::vector<CellResult> cells(per_trial * models.size());
  run_cells(cells.size(), cfg.worker_threads(), [&](std::size_t c) {
    const int trial = static_cast<int>(c / per_trial);
    const unsigned r = cfg.r_values[(c % per_trial) / cfg.filters.size()];
    const FilterKind kind = cfg.filters[c % cfg.filters.size()];
    const auto& model = models[static_cast<std::size_t>(trial)];
    const auto plan = size_match_plan(positives.size(), {r}, model.model_bits / 8);
    const auto& row = plan.rows.front();
    if (is_learned(kind) && !row.learned_feasible) {
      cells[c].notice = cell_label(kind, r, trial) + ": skipped, model (" + std::to_string(model.model_bits) +
                        " bits) leaves no backup space in " + std::to_string(row.aqf_bits) + " bits";
      return;
    }
    const auto tseed = trial_seed(cfg.seed, trial);
    BuildInputs in;
    in.ds = &ds;
    in.positives = positives;
    in.stacked_sample = sample;
    in.model = is_learned(kind) ? &model : nullptr;
    in.budget_bits = kind == FilterKind::stacked ? row.stacked_budget : row.aqf_bits;
    in.q = plan.q;
    in.r = r;
    in.seed = filter_seed(tseed, kind, r);
    in.learned = cfg.learned;
    std::unique_ptr<BenchFilter> f;
    try {
      f = build_filter(kind, in);
    } catch (const std::invalid_argument& e) {
      cells[c].notice = cell_label(kind, r, trial) + ": skipped, " + e.what();
      return;
    }
    const auto built_bits = f->size_bits();
    const auto outcome = cfg.workload.kind == WorkloadKind::adversarial ? run_adversarial_sequence(*f, ds, labels, cfg.workload)
                                                                        : run_sequence(*f, ds, labels, queries);
    cells[c].report = make_report("fpr", *f, r, trial, tseed, outcome, qhash);
    cells[c].report->details["workload"] = cfg.workload;
    cells[c].report->details["built_size_bits"] = built_bits;
  });
  doc.reports = collect(cells, doc);
  return doc;
}

// ---------------------------------------------------------------------------
// Dynamic experiment: 100 probe checkpoints, a churn at every tenth, and a
// rebuild of every filter after each churn.

inline constexpr int kCheckpoints = 100;

// `size` uniform draws of the current negatives.
inline std::vector<std::uint32_t> draw_probe_set(const std::vector<bool>& labels, std::size_t size, std::uint64_t seed) {
  std::vector<std::uint32_t> negatives;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) negatives.push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<std::uint32_t> out;
  if (negatives.empty()) return out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, negatives.size() - 1);
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) out.push_back(negatives[pick(rng)]);
  return out;
}

inline ReportDocument run_dynamic_experiment(const Dataset& ds, const ExperimentConfig& cfg, const std::string& dataset_name = "") {
  ReportDocument doc;
  doc.experiment = "dynamic";
  doc.dataset = dataset_name;
  doc.config = cfg;
  const std::uint64_t count = cfg.workload.count;
  if (count < kCheckpoints || count % kCheckpoints != 0) {
    throw std::invalid_argument("dynamic experiment needs a query count divisible by 100");
  }
  const auto original = churn_schedule(ds, cfg.seed);
  const unsigned r = cfg.r_values.front();
  const std::uint64_t step = count / kCheckpoints;
  const auto queries = gen_uniform(ds.size(), count, cfg.workload.seed);
  const auto qhash = query_set_hash(queries, ds);
  const auto window = static_cast<std::size_t>(cfg.stacked_sample_fraction * static_cast<double>(count));

  std::vector<std::vector<TrialReport>> per_trial(static_cast<std::size_t>(cfg.trials));
  std::vector<std::vector<std::string>> notices(per_trial.size());
  run_cells(per_trial.size(), cfg.worker_threads(), [&](std::size_t tr) {
    const int trial = static_cast<int>(tr);
    const auto tseed = trial_seed(cfg.seed, trial);
    auto schedule = original;
    auto labels = file_labels(ds);
    TrainedModel model;
    if (cfg.any_learned()) model = train_model(ds, labels, cfg.neg_fraction, cfg.max_leaf_nodes, tseed);
    const auto plan = size_match_plan(schedule.live.size(), {r}, model.model_bits / 8);
    const auto& row = plan.rows.front();

    struct Slot {
      FilterKind kind;
      std::unique_ptr<BenchFilter> filter;
      TrialReport report;
      QueryTimeline tl;
      BuildBreakdown builds;
    };
    std::vector<Slot> slots;
    for (auto k : cfg.filters) {
      if (is_learned(k) && !row.learned_feasible) {
        notices[tr].push_back(cell_label(k, r, trial) + ": skipped, model leaves no backup space");
        continue;
      }
      Slot s;
      s.kind = k;
      s.report.experiment = "dynamic";
      s.report.filter = filter_name(k);
      s.report.r = r;
      s.report.trial = trial;
      s.report.seed = tseed;
      s.report.query_set_hash = qhash;
      slots.push_back(std::move(s));
    }

    std::vector<std::uint32_t> sample;
    auto rebuild = [&](int epoch, std::size_t done) {
      const auto positives = positive_indices(labels);
      sample = negative_queries(queries, done >= window ? done - window : 0, done == 0 ? window : done, labels);
      for (auto& s : slots) {
        BuildInputs in;
        in.ds = &ds;
        in.positives = positives;
        in.stacked_sample = sample;
        in.model = is_learned(s.kind) ? &model : nullptr;
        in.budget_bits = row.aqf_bits;
        in.q = plan.q;
        in.r = r;
        in.seed = filter_seed(tseed + static_cast<std::uint64_t>(epoch), s.kind, r);
        in.learned = cfg.learned;
        s.filter = build_filter(s.kind, in);
        const auto& b = s.filter->build_breakdown();
        for (std::size_t i = 0; i < 4; ++i) s.builds.ns[i] += b.ns[i];
        s.builds.wall_ns += b.wall_ns;
        s.builds.inserts += b.inserts;
      }
    };
    rebuild(0, 0);
    auto probe = draw_probe_set(labels, cfg.probe_size, mix64(tseed + 7));

    std::vector<std::uint64_t> wall(slots.size(), 0);
    int churns = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto idx = queries[i];
      const bool member = labels[idx];
      const Item item = item_at(ds, idx);
      for (std::size_t f = 0; f < slots.size(); ++f) {
        auto& s = slots[f];
        const auto t0 = now_ns();
        s.tl.start();
        const bool a = s.filter->query(item, member, s.tl);
        wall[f] += now_ns() - t0;
        if (member) {
          s.report.false_negatives += !a;
        } else {
          (a ? s.report.false_positives : s.report.true_negatives) += 1;
        }
        ++s.report.queries;
      }
      if ((i + 1) % step != 0) continue;
      const auto k = static_cast<std::uint32_t>((i + 1) / step);
      for (auto& s : slots) {
        Checkpoint c;
        c.index = k;
        c.queries_done = i + 1;
        c.churns = static_cast<std::uint32_t>(churns);
        for (auto p : probe) c.probe_false_positives += s.filter->probe(item_at(ds, p));
        c.probe_negatives = probe.size();
        c.fpr = compute_fpr(c.probe_false_positives, c.probe_negatives - c.probe_false_positives);
        s.report.checkpoints.push_back(c);
      }
      if (k % 10 != 0) continue;
      const auto delta = churn_apply(schedule, churns);
      for (auto x : delta.removed) labels[x] = false;
      for (auto x : delta.added) labels[x] = true;
      ++churns;
      if (cfg.any_learned()) {
        if (cfg.retrain) {
          model = train_model(ds, labels, cfg.neg_fraction, cfg.max_leaf_nodes, mix64(tseed + static_cast<std::uint64_t>(churns)));
        } else {
          // Same tree; thresholds are re-fit on negatives under the new labels.
          model.training_negatives.clear();
          for (auto x : sample_training_indices(labels, cfg.neg_fraction, mix64(tseed + static_cast<std::uint64_t>(churns)))) {
            if (!labels[x]) model.training_negatives.push_back(static_cast<std::uint32_t>(x));
          }
        }
      }
      rebuild(churns, static_cast<std::size_t>(i + 1));
      probe = draw_probe_set(labels, cfg.probe_size, mix64(tseed + 7 + static_cast<std::uint64_t>(churns)));
    }

    auto live = schedule.live, first = original.live;
    std::sort(live.begin(), live.end());
    std::sort(first.begin(), first.end());
    const bool restored = live == first;
    for (std::size_t f = 0; f < slots.size(); ++f) {
      auto& s = slots[f];
      std::uint64_t missing = 0;
      for (auto p : schedule.live) missing += !s.filter->probe(item_at(ds, p));
      s.report.size_bits = s.filter->size_bits();
      s.report.model_bits = s.filter->model_bits();
      s.report.build = s.builds;
      s.report.query.ns = s.tl.totals();
      s.report.query.wall_ns = wall[f];
      s.report.query.queries = s.report.queries;
      s.report.details = s.filter->summary();
      s.report.details["churns"] = churns;
      s.report.details["live_set_restored"] = restored;
      s.report.details["final_missing_positives"] = missing;
      s.report.details["retrain"] = cfg.retrain;
      s.report.finish();
      per_trial[tr].push_back(std::move(s.report));
    }
  });
  for (std::size_t t = 0; t < per_trial.size(); ++t) {
    for (auto& n : notices[t]) doc.notices.push_back(std::move(n));
    for (auto& rep : per_trial[t]) doc.reports.push_back(std::move(rep));
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Timing experiment: sequential, one filter at a time.

inline std::uint64_t time_vectorization(const Dataset& ds, const QuerySequence& q) {
  const auto t0 = now_ns();
  double sink = 0;
  for (auto idx : q) sink += featurize_url(ds[idx].key)[0];
  const auto elapsed = now_ns() - t0;
  volatile double keep = sink;
  (void)keep;
  return elapsed;
}

// Index of the median element of `v` under `key` (lower median).
template <typename T, typename Key>
std::size_t median_index(const std::vector<T>& v, Key&& key) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key(v[a]) < key(v[b]); });
  return idx[(idx.size() - 1) / 2];
}

inline ReportDocument run_timing_experiment(const Dataset& ds, const ExperimentConfig& cfg, const std::string& dataset_name = "") {
  ReportDocument doc;
  doc.experiment = "timing";
  doc.dataset = dataset_name;
  doc.config = cfg;
  const auto labels = file_labels(ds);
  const auto positives = positive_indices(labels);
  const unsigned r = cfg.r_values.front();
  const auto queries = gen_uniform(ds.size(), cfg.workload.count, cfg.workload.seed);
  const auto qhash = query_set_hash(queries, ds);
  const auto sample_end = static_cast<std::size_t>(cfg.stacked_sample_fraction * static_cast<double>(queries.size()));
  const auto sample = negative_queries(queries, 0, sample_end, labels);

  std::vector<std::vector<TrialReport>> by_filter(cfg.filters.size());
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const auto tseed = trial_seed(cfg.seed, trial);
    TrainedModel model;
    if (cfg.any_learned()) model = train_model(ds, labels, cfg.neg_fraction, cfg.max_leaf_nodes, tseed);
    const auto plan = size_match_plan(positives.size(), {r}, model.model_bits / 8);
    const auto& row = plan.rows.front();
    const std::uint64_t vec_ns = cfg.url_features ? time_vectorization(ds, queries) : 0;
    for (std::size_t fi = 0; fi < cfg.filters.size(); ++fi) {
      const auto kind = cfg.filters[fi];
      if (is_learned(kind) && !row.learned_feasible) {
        doc.notices.push_back(cell_label(kind, r, trial) + ": skipped, model leaves no backup space");
        continue;
      }
      BuildInputs in;
      in.ds = &ds;
      in.positives = positives;
      in.stacked_sample = sample;
      in.model = is_learned(kind) ? &model : nullptr;
      in.budget_bits = row.aqf_bits;
      in.q = plan.q;
      in.r = r;
      in.seed = filter_seed(tseed, kind, r);
      in.learned = cfg.learned;
      auto f = build_filter(kind, in);
      const auto outcome = run_sequence(*f, ds, labels, queries);
      auto rep = make_report("timing", *f, r, trial, tseed, outcome, qhash);
      rep.vectorization_ns = vec_ns;
      rep.details["leaves"] = model.leaves;
      by_filter[fi].push_back(rep);
      doc.reports.push_back(std::move(rep));
    }
  }
  // Median rows: construction from the trial with the median build wall
  // time, queries from the trial with the median query wall time.
  for (auto& reps : by_filter) {
    if (reps.empty()) continue;
    const auto b = median_index(reps, [](const TrialReport& t) { return t.build.wall_ns; });
    const auto q = median_index(reps, [](const TrialReport& t) { return t.query.wall_ns; });
    TrialReport m = reps[q];
    m.build = reps[b].build;
    m.trial = -1;
    m.aggregate = "median";
    doc.reports.push_back(std::move(m));
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Model-proportion sweep: fixed total size, growing trees.

inline ReportDocument run_modelprop_experiment(const Dataset& ds, const ExperimentConfig& cfg, const std::string& dataset_name = "") {
  ReportDocument doc;
  doc.experiment = "modelprop";
  doc.dataset = dataset_name;
  doc.config = cfg;
  const auto labels = file_labels(ds);
  const auto positives = positive_indices(labels);
  const auto total = static_cast<std::uint64_t>(cfg.modelprop_bits_per_key * static_cast<double>(positives.size()));
  const auto queries = gen_uniform(ds.size(), cfg.workload.count, cfg.workload.seed);
  const auto qhash = query_set_hash(queries, ds);
  std::vector<FilterKind> learned;
  for (auto k : cfg.filters) {
    if (is_learned(k)) learned.push_back(k);
  }
  if (learned.empty()) throw std::invalid_argument("modelprop needs at least one learned filter");

  const std::size_t shares = cfg.model_shares.size();
  std::vector<TrainedModel> models(static_cast<std::size_t>(cfg.trials) * shares);
  run_cells(models.size(), cfg.worker_threads(), [&](std::size_t c) {
    const int trial = static_cast<int>(c / shares);
    const double share = cfg.model_shares[c % shares];
    const auto leaves = leaves_for_model_bits(static_cast<std::uint64_t>(share * static_cast<double>(total)));
    models[c] = train_model(ds, labels, cfg.neg_fraction, leaves, trial_seed(cfg.seed, trial));
  });
  std::vector<CellResult> cells(models.size() * learned.size());
  run_cells(cells.size(), cfg.worker_threads(), [&](std::size_t c) {
    const std::size_t m = c / learned.size();
    const auto kind = learned[c % learned.size()];
    const int trial = static_cast<int>(m / shares);
    const double share = cfg.model_shares[m % shares];
    const auto tseed = trial_seed(cfg.seed, trial);
    BuildInputs in;
    in.ds = &ds;
    in.positives = positives;
    in.model = &models[m];
    in.budget_bits = total;
    in.seed = filter_seed(tseed, kind, static_cast<unsigned>(m % shares));
    in.learned = cfg.learned;
    std::unique_ptr<BenchFilter> f;
    try {
      f = build_filter(kind, in);
    } catch (const std::invalid_argument& e) {
      cells[c].notice = filter_name(kind) + " share=" + std::to_string(share) + " trial=" + std::to_string(trial) +
                        ": skipped, " + e.what();
      return;
    }
    auto rep = make_report("modelprop", *f, 0, trial, tseed, run_sequence(*f, ds, labels, queries), qhash);
    rep.details["target_share"] = share;
    rep.details["model_share"] = static_cast<double>(models[m].model_bits) / static_cast<double>(total);
    rep.details["leaves"] = models[m].leaves;
    rep.details["total_bits"] = total;
    cells[c].report = std::move(rep);
  });
  doc.reports = collect(cells, doc);
  return doc;
}

// ---------------------------------------------------------------------------
// Train-proportion sweep: share of negatives in the training set.

inline ReportDocument run_trainprop_experiment(const Dataset& ds, const ExperimentConfig& cfg, const std::string& dataset_name = "") {
  ReportDocument doc;
  doc.experiment = "trainprop";
  doc.dataset = dataset_name;
  doc.config = cfg;
  const auto labels = file_labels(ds);
  const auto positives = positive_indices(labels);
  const unsigned r = cfg.r_values.front();
  const auto queries = gen_uniform(ds.size(), cfg.workload.count, cfg.workload.seed);
  const auto qhash = query_set_hash(queries, ds);
  std::vector<FilterKind> learned;
  for (auto k : cfg.filters) {
    if (is_learned(k)) learned.push_back(k);
  }
  if (learned.empty()) throw std::invalid_argument("trainprop needs at least one learned filter");

  const std::size_t props = cfg.neg_fractions.size();
  std::vector<TrainedModel> models(static_cast<std::size_t>(cfg.trials) * props);
  run_cells(models.size(), cfg.worker_threads(), [&](std::size_t c) {
    const int trial = static_cast<int>(c / props);
    models[c] = train_model(ds, labels, cfg.neg_fractions[c % props], cfg.max_leaf_nodes, trial_seed(cfg.seed, trial));
  });
  std::vector<CellResult> cells(models.size() * learned.size());
  run_cells(cells.size(), cfg.worker_threads(), [&](std::size_t c) {
    const std::size_t m = c / learned.size();
    const auto kind = learned[c % learned.size()];
    const int trial = static_cast<int>(m / props);
    const auto tseed = trial_seed(cfg.seed, trial);
    const auto plan = size_match_plan(positives.size(), {r}, models[m].model_bits / 8);
    const auto& row = plan.rows.front();
    if (!row.learned_feasible) {
      cells[c].notice = cell_label(kind, r, trial) + ": skipped, model leaves no backup space";
      return;
    }
    BuildInputs in;
    in.ds = &ds;
    in.positives = positives;
    in.model = &models[m];
    in.budget_bits = row.aqf_bits;
    in.q = plan.q;
    in.r = r;
    in.seed = filter_seed(tseed, kind, r);
    in.learned = cfg.learned;
    auto f = build_filter(kind, in);
    auto rep = make_report("trainprop", *f, r, trial, tseed, run_sequence(*f, ds, labels, queries), qhash);
    rep.details["neg_fraction"] = cfg.neg_fractions[m % props];
    rep.details["leaves"] = models[m].leaves;
    cells[c].report = std::move(rep);
  });
  doc.reports = collect(cells, doc);
  // Median-FPR trial per (filter, proportion).
  std::vector<TrialReport> medians;
  for (auto kind : learned) {
    for (double nf : cfg.neg_fractions) {
      std::vector<TrialReport> group;
      for (const auto& rep : doc.reports) {
        if (rep.filter == filter_name(kind) && rep.details.at("neg_fraction") == nf) group.push_back(rep);
      }
      if (group.empty()) continue;
      auto m = group[median_index(group, [](const TrialReport& t) { return t.fpr.value_or(0.0); })];
      m.trial = -1;
      m.aggregate = "median";
      medians.push_back(std::move(m));
    }
  }
  for (auto& m : medians) doc.reports.push_back(std::move(m));
  return doc;
}

// ---------------------------------------------------------------------------
// Dataset sources: a CSV path or "synthetic:key=value,...".

inline SyntheticSpec parse_synthetic_spec(std::string_view text) {
  SyntheticSpec spec;
  for (auto field : fcb::detail::split_commas(text)) {
    if (field.empty()) continue;
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("synthetic spec field '" + std::string(field) + "' lacks '='");
    const std::string key(field.substr(0, eq));
    const std::string value(field.substr(eq + 1));
    auto number = [&]<typename T>(T& out) {
      std::istringstream in(value);
      if (!(in >> out) || !in.eof()) throw std::invalid_argument("bad value '" + value + "' for synthetic spec key '" + key + "'");
    };
    if (key == "n_pos") {
      number(spec.n_pos);
    } else if (key == "n_neg") {
      number(spec.n_neg);
    } else if (key == "dim") {
      number(spec.feature_dim);
    } else if (key == "sep") {
      number(spec.separability);
    } else if (key == "seed") {
      number(spec.seed);
    } else if (key == "sorted") {
      spec.sort_by_label = value == "1" || value == "true";
    } else {
      throw std::invalid_argument("unknown synthetic spec key '" + key + "' (expected n_pos, n_neg, dim, sep, seed, sorted)");
    }
  }
  return spec;
}

inline Dataset load_dataset_source(const std::string& source, Featurize featurize) {
  constexpr std::string_view kPrefix = "synthetic:";
  if (source.starts_with(kPrefix)) return gen_synthetic_dataset(parse_synthetic_spec(std::string_view(source).substr(kPrefix.size())));
  return ingest_dataset(source, featurize);
}

}  // namespace fcb::bench
