#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "fcbench/bench/experiments.hpp"
#include "stats.hpp"

using namespace fcb;
using namespace fcb::bench;

namespace {

const Dataset& small_dataset() {
  static const Dataset ds = gen_synthetic_dataset({.n_pos = 2000, .n_neg = 10000, .feature_dim = 8, .separability = 0.9, .seed = 11});
  return ds;
}

ExperimentConfig small_config(WorkloadKind kind = WorkloadKind::uniform, std::uint64_t count = 20000) {
  ExperimentConfig cfg;
  cfg.workload.kind = kind;
  cfg.workload.count = count;
  cfg.workload.seed = 5;
  cfg.r_values = {6, 8};
  cfg.trials = 2;
  cfg.seed = 3;
  cfg.threads = 1;
  cfg.max_leaf_nodes = 16;
  cfg.learned.plbf_segments = 200;
  return cfg;
}

// Exact set membership; stands in for any filter with no false positives.
class ExactBench final : public BenchFilter {
 public:
  ExactBench(const Dataset& ds, std::span<const std::uint32_t> positives) {
    for (auto i : positives) keys_.insert(ds[i].key);
  }
  FilterKind kind() const override { return FilterKind::qf; }
  bool query(const Item& item, bool, QueryTimeline& tl) override {
    const bool a = probe(item);
    tl.mark(filter_query);
    return a;
  }
  bool probe(const Item& item) const override { return keys_.count(std::string(item.key)) != 0; }
  std::uint64_t size_bits() const override { return 0; }

 private:
  std::unordered_set<std::string> keys_;
};

const TrialReport* find(const ReportDocument& doc, const std::string& filter, unsigned r, int trial) {
  for (const auto& t : doc.reports) {
    if (t.filter == filter && t.r == r && t.trial == trial && t.aggregate.empty()) return &t;
  }
  return nullptr;
}

}  // namespace

// --- size matching ---------------------------------------------------------

TEST(SizeMatch, UrlDatasetGetsSixteenQuotientBits) {
  const auto plan = size_match_plan(55681, kDefaultRValues, 0);
  EXPECT_EQ(plan.q, 16u);
  ASSERT_EQ(plan.rows.size(), 7u);
  for (unsigned r = 5; r <= 11; ++r) {
    const auto& row = plan.row(r);
    EXPECT_EQ(row.aqf_bits, (1ull << 16) * (r + 3) + QuotientFilter::kHeaderBits);
    EXPECT_EQ(row.stacked_budget, row.aqf_bits);
    EXPECT_EQ(row.learned_budget, static_cast<std::int64_t>(row.aqf_bits));
    EXPECT_TRUE(row.learned_feasible);
  }
}

TEST(SizeMatch, LearnedBudgetSubtractsModel) {
  const auto plan = size_match_plan(1000, {7}, 100);
  EXPECT_EQ(plan.rows[0].learned_budget, static_cast<std::int64_t>(plan.rows[0].aqf_bits) - 800);
}

TEST(SizeMatch, OversizedModelIsInfeasible) {
  const auto base = size_match_plan(1000, {5}, 0).rows[0].aqf_bits;
  const auto plan = size_match_plan(1000, {5}, base / 8);
  EXPECT_FALSE(plan.rows[0].learned_feasible);
  EXPECT_LE(plan.rows[0].learned_budget, 0);
  EXPECT_FALSE(size_match_plan(1000, {5}, base / 8 + 10).rows[0].learned_feasible);
}

TEST(SizeMatch, QuotientBitsCoverLoadLimit) {
  EXPECT_EQ(size_match_q(1), 1u);
  EXPECT_EQ(size_match_q(972), 10u);
  EXPECT_EQ(size_match_q(1024), 11u);
  EXPECT_EQ(size_match_q(1000), 11u);  // 1000 > 0.95 * 1024
  EXPECT_EQ(size_match_q(900), 10u);
}

// --- fpr arithmetic --------------------------------------------------------

TEST(ComputeFpr, Cases) {
  EXPECT_DOUBLE_EQ(*compute_fpr(5, 95), 0.05);
  EXPECT_DOUBLE_EQ(*compute_fpr(0, 40), 0.0);
  EXPECT_DOUBLE_EQ(*compute_fpr(40, 0), 1.0);
  EXPECT_FALSE(compute_fpr(0, 0).has_value());
}

// --- report emission -------------------------------------------------------

TEST(Report, EmptyDocumentHasSchema) {
  ReportDocument doc;
  const auto text = report_json(doc);
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j.at("schema"), "fcbench/1");
  EXPECT_TRUE(j.at("reports").empty());
  EXPECT_EQ(parse_report_json(text), doc);
  EXPECT_EQ(report_json(parse_report_json(text)), text);
  std::ostringstream csv;
  write_report_csv(csv, doc);
  const auto text_csv = csv.str();
  EXPECT_EQ(std::count(text_csv.begin(), text_csv.end(), '\n'), 1);
}

TEST(Report, RejectsForeignSchema) {
  auto j = nlohmann::json::parse(report_json(ReportDocument{}));
  j["schema"] = "other/2";
  EXPECT_THROW(parse_report_json(j.dump()), std::exception);
}

TEST(Report, JsonRoundTripIsByteIdentical) {
  const auto doc = run_fpr_experiment(small_dataset(), small_config(), "small");
  ASSERT_FALSE(doc.reports.empty());
  const auto text = report_json(doc);
  const auto back = parse_report_json(text);
  EXPECT_EQ(back, doc);
  EXPECT_EQ(report_json(back), text);
}

TEST(Report, CsvRowPerCheckpoint) {
  auto cfg = small_config(WorkloadKind::uniform, 10000);
  cfg.filters = {FilterKind::bloom, FilterKind::aqf};
  cfg.trials = 1;
  cfg.probe_size = 500;
  const auto doc = run_dynamic_experiment(small_dataset(), cfg);
  std::ostringstream csv;
  write_report_csv(csv, doc);
  const auto text = csv.str();
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  std::size_t checkpoints = 0;
  for (const auto& t : doc.reports) checkpoints += t.checkpoints.size();
  EXPECT_EQ(checkpoints, 200u);
  EXPECT_EQ(lines, 1 + checkpoints);
  EXPECT_EQ(csv_row_count(doc.reports), checkpoints);
  // Header matches the documented columns.
  EXPECT_EQ(text.substr(0, text.find('\n')).rfind(std::string(kCsvColumns[0]) + ",", 0), 0u);
}

TEST(Report, CsvRowForReportWithoutCheckpoints) {
  const auto doc = run_fpr_experiment(small_dataset(), small_config());
  std::ostringstream csv;
  write_report_csv(csv, doc);
  const auto text = csv.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 1 + doc.reports.size());
}

TEST(Report, UnwritablePathThrows) {
  EXPECT_THROW(emit_report(ReportDocument{}, ReportFormat::json, "/nonexistent-dir/x/report.json"), std::runtime_error);
}

TEST(Report, EmitWritesFile) {
  const auto path = std::filesystem::temp_directory_path() / "fcbench_test_report.json";
  ReportDocument doc;
  doc.experiment = "fpr";
  emit_report(doc, ReportFormat::json, path.string());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), report_json(doc));
  std::filesystem::remove(path);
}

// --- fpr experiment --------------------------------------------------------

TEST(FprExperiment, OnePassOnExactFilterHasZeroFpr) {
  const auto& ds = small_dataset();
  const auto labels = file_labels(ds);
  const auto positives = positive_indices(labels);
  ExactBench f(ds, positives);
  const auto q = gen_one_pass(ds.size(), 9);
  const auto o = run_sequence(f, ds, labels, q);
  EXPECT_EQ(o.queries, ds.size());
  EXPECT_EQ(o.false_positives, 0u);
  EXPECT_EQ(o.false_negatives, 0u);
  EXPECT_EQ(o.true_negatives, ds.n_neg());
  EXPECT_DOUBLE_EQ(*compute_fpr(o.false_positives, o.true_negatives), 0.0);
}

TEST(FprExperiment, BloomTenBitsPerKeyMatchesAnalytic) {
  const auto ds = gen_synthetic_dataset({.n_pos = 10000, .n_neg = 50000, .seed = 21});
  const auto labels = file_labels(ds);
  const auto positives = positive_indices(labels);
  BuildInputs in;
  in.ds = &ds;
  in.positives = positives;
  in.budget_bits = 10 * positives.size() + BloomFilter::kHeaderBits;
  in.seed = 77;
  auto f = build_filter(FilterKind::bloom, in);
  const auto s = f->summary();
  const double m = s.at("m").get<double>(), k = s.at("k").get<double>(), n = 10000;
  EXPECT_EQ(m, 100000);
  const double analytic = std::pow(1 - std::exp(-k * n / m), k);
  const auto o = run_sequence(*f, ds, labels, gen_uniform(ds.size(), 100000, 4));
  const double neg = static_cast<double>(o.false_positives + o.true_negatives);
  const double fpr = static_cast<double>(o.false_positives) / neg;
  // Query sampling, the finite negative set, and the filter's fill.
  const double sigma = std::sqrt(analytic * (1 - analytic) * (1 / neg + 1 / 50000.0) +
                                 std::pow(fcb::testing::bloom_fill_sigma(m, k, n), 2));
  EXPECT_LT(fcb::testing::z_score(fpr, analytic, sigma), 3.0) << fpr << " vs " << analytic;
}

TEST(FprExperiment, DeterministicModuloTiming) {
  const auto& ds = small_dataset();
  auto cfg = small_config(WorkloadKind::zipfian);
  const auto a = run_fpr_experiment(ds, cfg);
  cfg.threads = 3;
  const auto b = run_fpr_experiment(ds, cfg);
  ASSERT_EQ(a.reports.size(), b.reports.size());
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    EXPECT_EQ(a.reports[i].without_timing(), b.reports[i].without_timing()) << a.reports[i].filter;
  }
  auto strip = [](ReportDocument d) {
    for (auto& t : d.reports) t = t.without_timing();
    return report_json(d);
  };
  EXPECT_EQ(strip(a), strip(b));
}

TEST(FprExperiment, SeedChangesResults) {
  const auto& ds = small_dataset();
  auto cfg = small_config();
  cfg.filters = {FilterKind::bloom};
  const auto a = run_fpr_experiment(ds, cfg);
  cfg.seed = 99;
  const auto b = run_fpr_experiment(ds, cfg);
  EXPECT_NE(a.reports[0].seed, b.reports[0].seed);
}

TEST(FprExperiment, EveryFilterSeesTheSameQuerySet) {
  const auto doc = run_fpr_experiment(small_dataset(), small_config());
  ASSERT_FALSE(doc.reports.empty());
  for (const auto& t : doc.reports) {
    EXPECT_EQ(t.query_set_hash, doc.reports[0].query_set_hash);
    EXPECT_EQ(t.queries, 20000u);
  }
}

TEST(FprExperiment, NoFalseNegativesAndExactCounts) {
  auto cfg = small_config();
  cfg.filters = kAllFilters;
  const auto doc = run_fpr_experiment(small_dataset(), cfg);
  EXPECT_EQ(doc.reports.size(), 2u * 2u * kAllFilters.size());
  for (const auto& t : doc.reports) {
    EXPECT_EQ(t.false_negatives, 0u) << t.filter;
    ASSERT_TRUE(t.fpr.has_value());
    EXPECT_DOUBLE_EQ(*t.fpr, static_cast<double>(t.false_positives) / static_cast<double>(t.false_positives + t.true_negatives));
  }
}

TEST(FprExperiment, SizesMatchThePlan) {
  const auto& ds = small_dataset();
  auto cfg = small_config();
  const auto doc = run_fpr_experiment(ds, cfg);
  for (unsigned r : cfg.r_values) {
    const auto aqf_bits = size_match_plan(ds.n_pos(), {r}, 0).rows[0].aqf_bits;
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const auto* aqf = find(doc, "aqf", r, trial);
      const auto* stacked = find(doc, "stacked", r, trial);
      ASSERT_TRUE(aqf && stacked);
      // Adaptations grow the filter during the run; the plan sizes it empty.
      EXPECT_EQ(aqf->details.at("built_size_bits"), aqf_bits);
      EXPECT_GE(aqf->size_bits, aqf_bits);
      EXPECT_LE(std::abs(static_cast<double>(stacked->size_bits) - static_cast<double>(aqf_bits)), 0.01 * aqf_bits);
      for (const char* name : {"lbf", "adabf", "plbf"}) {
        const auto* t = find(doc, name, r, trial);
        ASSERT_TRUE(t) << name;
        EXPECT_GT(t->model_bits, 0u);
        EXPECT_LE(t->size_bits, aqf_bits) << name;
      }
    }
  }
}

TEST(FprExperiment, LearnedFiltersShareOneModelPerTrial) {
  const auto doc = run_fpr_experiment(small_dataset(), small_config());
  for (int trial = 0; trial < 2; ++trial) {
    EXPECT_EQ(find(doc, "lbf", 6, trial)->model_bits, find(doc, "plbf", 8, trial)->model_bits);
    EXPECT_EQ(find(doc, "lbf", 6, trial)->build.ns[model_training], find(doc, "adabf", 6, trial)->build.ns[model_training]);
  }
}

TEST(FprExperiment, InfeasibleLearnedRowsAreSkippedWithNotice) {
  auto cfg = small_config();
  cfg.r_values = {5};
  cfg.trials = 1;
  cfg.max_leaf_nodes = 256;  // tree larger than the whole filter
  const auto doc = run_fpr_experiment(small_dataset(), cfg);
  EXPECT_EQ(doc.notices.size(), 3u);
  for (const auto& t : doc.reports) EXPECT_FALSE(is_learned(parse_filter_kind(t.filter)));
  EXPECT_NE(find(doc, "aqf", 5, 0), nullptr);
}

TEST(FprExperiment, AdversarialRecordsInjections) {
  auto cfg = small_config(WorkloadKind::adversarial, 20000);
  cfg.filters = {FilterKind::bloom, FilterKind::aqf};
  cfg.workload.d = 0.05;
  cfg.trials = 1;
  const auto doc = run_fpr_experiment(small_dataset(), cfg);
  const auto* bloom = find(doc, "bloom", 6, 0);
  const auto* aqf = find(doc, "aqf", 6, 0);
  ASSERT_TRUE(bloom && aqf);
  EXPECT_EQ(bloom->details.at("interval"), adversarial_interval(20000, 0.05));
  EXPECT_GT(bloom->details.at("injected").get<std::uint64_t>(), 0u);
  // Every injection into the static filter is a false positive again.
  EXPECT_GE(bloom->false_positives, bloom->details.at("injected").get<std::uint64_t>());
  EXPECT_LT(aqf->false_positives, bloom->false_positives);
  EXPECT_EQ(bloom->query_set_hash, query_set_hash(gen_uniform(small_dataset().size(), 20000, 5), small_dataset()));
}

// --- timing experiment -----------------------------------------------------

TEST(TimingExperiment, CategoriesPartitionWallTime) {
  auto cfg = small_config(WorkloadKind::uniform, 50000);
  cfg.r_values = {5};
  cfg.trials = 3;
  const auto doc = run_timing_experiment(small_dataset(), cfg);
  std::size_t medians = 0;
  for (const auto& t : doc.reports) {
    medians += t.aggregate == "median";
    EXPECT_LE(t.build.sum(), t.build.wall_ns) << t.filter;
    EXPECT_GE(static_cast<double>(t.build.sum()), 0.95 * static_cast<double>(t.build.wall_ns)) << t.filter;
    EXPECT_LE(t.query.sum(), t.query.wall_ns) << t.filter;
    EXPECT_GE(static_cast<double>(t.query.sum()), 0.95 * static_cast<double>(t.query.wall_ns)) << t.filter;
  }
  EXPECT_EQ(medians, cfg.filters.size());
}

TEST(TimingExperiment, CategoryAttribution) {
  auto cfg = small_config(WorkloadKind::uniform, 20000);
  cfg.r_values = {5};
  cfg.trials = 1;
  const auto doc = run_timing_experiment(small_dataset(), cfg);
  const auto* bloom = find(doc, "bloom", 5, 0);
  ASSERT_TRUE(bloom);
  EXPECT_EQ(bloom->build.ns[model_training], 0u);
  EXPECT_EQ(bloom->build.ns[build_reverse_map_updates], 0u);
  EXPECT_EQ(bloom->query.ns[query_reverse_map_updates], 0u);
  EXPECT_EQ(bloom->query.ns[score_inference], 0u);
  const auto* aqf = find(doc, "aqf", 5, 0);
  EXPECT_GT(aqf->build.ns[build_reverse_map_updates], 0u);
  EXPECT_GT(aqf->query.ns[query_reverse_map_updates], 0u);
  const auto* plbf = find(doc, "plbf", 5, 0);
  EXPECT_GT(plbf->build.ns[model_training], 0u);
  EXPECT_GT(plbf->build.ns[threshold_finding], 0u);
  EXPECT_GT(plbf->query.ns[score_inference], 0u);
  EXPECT_EQ(plbf->vectorization_ns, 0u);
}

TEST(TimingExperiment, MedianRowPicksMiddleTrial) {
  std::vector<int> v = {30, 10, 20};
  EXPECT_EQ(median_index(v, [](int x) { return x; }), 2u);
  v = {4, 1, 3, 2};
  EXPECT_EQ(v[median_index(v, [](int x) { return x; })], 2);
}

// --- dynamic experiment ----------------------------------------------------

TEST(DynamicExperiment, CheckpointsChurnsAndRoundTrip) {
  auto cfg = small_config(WorkloadKind::uniform, 20000);
  cfg.r_values = {5};
  cfg.trials = 1;
  cfg.probe_size = 2000;
  const auto doc = run_dynamic_experiment(small_dataset(), cfg);
  ASSERT_EQ(doc.reports.size(), cfg.filters.size());
  for (const auto& t : doc.reports) {
    ASSERT_EQ(t.checkpoints.size(), 100u) << t.filter;
    EXPECT_EQ(t.details.at("churns"), 10);
    EXPECT_TRUE(t.details.at("live_set_restored").get<bool>());
    EXPECT_EQ(t.details.at("final_missing_positives"), 0);
    EXPECT_EQ(t.false_negatives, 0u) << t.filter;
    EXPECT_EQ(t.queries, 20000u);
    for (std::size_t i = 0; i < 100; ++i) {
      const auto& c = t.checkpoints[i];
      EXPECT_EQ(c.index, i + 1);
      EXPECT_EQ(c.churns, i / 10);
      EXPECT_EQ(c.probe_negatives, 2000u);
      ASSERT_TRUE(c.fpr.has_value());
    }
  }
}

TEST(DynamicExperiment, AqfProbeFprNonIncreasingWithinPeriod) {
  auto cfg = small_config(WorkloadKind::uniform, 50000);
  cfg.r_values = {5};
  cfg.filters = {FilterKind::aqf};
  cfg.trials = 1;
  cfg.probe_size = 5000;
  const auto doc = run_dynamic_experiment(small_dataset(), cfg);
  const auto& cps = doc.reports.at(0).checkpoints;
  for (std::size_t i = 1; i < cps.size(); ++i) {
    if (cps[i].churns != cps[i - 1].churns) continue;
    const double p = *cps[i - 1].fpr;
    EXPECT_LE(*cps[i].fpr, p + 3 * fcb::testing::binomial_sigma(std::max(p, 1e-4), 5000)) << "checkpoint " << i + 1;
  }
}

TEST(DynamicExperiment, RejectsCountNotDivisibleByHundred) {
  auto cfg = small_config(WorkloadKind::uniform, 1050);
  EXPECT_THROW(run_dynamic_experiment(small_dataset(), cfg), std::invalid_argument);
}

TEST(DynamicExperiment, ProbeSetDrawsCurrentNegatives) {
  std::vector<bool> labels = {true, false, true, false, false};
  const auto p = draw_probe_set(labels, 1000, 3);
  EXPECT_EQ(p.size(), 1000u);
  for (auto i : p) EXPECT_FALSE(labels[i]);
}

// --- sweeps ----------------------------------------------------------------

TEST(ModelProp, SharesTrackTreeSize) {
  auto cfg = small_config();
  cfg.trials = 1;
  cfg.model_shares = {0.1, 0.5};
  const auto doc = run_modelprop_experiment(small_dataset(), cfg);
  ASSERT_EQ(doc.reports.size(), 6u);
  for (const auto& t : doc.reports) {
    EXPECT_TRUE(is_learned(parse_filter_kind(t.filter)));
    EXPECT_LE(t.size_bits, t.details.at("total_bits").get<std::uint64_t>() + 64);
    EXPECT_LE(t.details.at("model_share").get<double>(), t.details.at("target_share").get<double>() + 1e-9);
  }
}

TEST(TrainProp, OneRowPerProportionPlusMedians) {
  auto cfg = small_config();
  cfg.trials = 3;
  cfg.r_values = {8};
  cfg.filters = {FilterKind::plbf};
  const auto doc = run_trainprop_experiment(small_dataset(), cfg);
  EXPECT_EQ(doc.reports.size(), 4u * 3u + 4u);
  std::size_t medians = 0;
  for (const auto& t : doc.reports) medians += t.aggregate == "median";
  EXPECT_EQ(medians, 4u);
}

// --- dataset sources -------------------------------------------------------

TEST(DatasetSource, ParsesSyntheticSpec) {
  const auto s = parse_synthetic_spec("n_pos=100,n_neg=300,dim=4,sep=0.7,seed=9,sorted=1");
  EXPECT_EQ(s.n_pos, 100u);
  EXPECT_EQ(s.n_neg, 300u);
  EXPECT_EQ(s.feature_dim, 4u);
  EXPECT_DOUBLE_EQ(s.separability, 0.7);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_TRUE(s.sort_by_label);
  EXPECT_THROW(parse_synthetic_spec("n_pos=abc"), std::invalid_argument);
  EXPECT_THROW(parse_synthetic_spec("colour=3"), std::invalid_argument);
  EXPECT_THROW(parse_synthetic_spec("n_pos"), std::invalid_argument);
  const auto ds = load_dataset_source("synthetic:n_pos=50,n_neg=70", Featurize::none);
  EXPECT_EQ(ds.n_pos(), 50u);
  EXPECT_EQ(ds.n_neg(), 70u);
}

TEST(DatasetSource, IngestsSmallCsv) {
  std::istringstream in("key,label\nhttp://a.com/x,1\nhttp://b.org,0\nzzz,0\n");
  const auto ds = parse_dataset_csv(in, Featurize::url);
  EXPECT_EQ(ds.n_pos(), 1u);
  EXPECT_EQ(ds.n_neg(), 2u);
  EXPECT_EQ(ds.feature_dim(), featurize_url("x").size());
}

TEST(DatasetSource, DuplicateKeyNamesLine) {
  std::istringstream in("key,label\na,1\nb,0\na,0\n");
  try {
    parse_dataset_csv(in);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(DatasetSource, CsvRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "fcbench_test_ds.csv";
  {
    std::ofstream out(path);
    write_dataset_csv(out, small_dataset());
  }
  const auto back = load_dataset_source(path.string(), Featurize::none);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), small_dataset().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    ASSERT_EQ(back[i].key, small_dataset()[i].key);
    ASSERT_EQ(back[i].positive, small_dataset()[i].positive);
    ASSERT_EQ(back[i].features, small_dataset()[i].features);
  }
}

TEST(Parallel, RunsEveryCellOnceAndRethrows) {
  std::vector<int> hits(100, 0);
  run_cells(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(run_cells(10, 3, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}
