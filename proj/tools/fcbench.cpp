// fcbench: size-matched filter benchmarks.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fcbench/bench/experiments.hpp"

using namespace fcb;
using namespace fcb::bench;

namespace {

struct Options {
  std::string dataset;
  std::string featurize = "none";
  std::string workload = "uniform";
  std::uint64_t queries = 1000000;
  double z = 1.5;
  double d = 0.10;
  std::string r = "5..11";
  std::string filters = "bloom,aqf,lbf,adabf,plbf,stacked";
  int trials = 3;
  std::uint64_t seed = 1;
  bool retrain = false;
  std::string out = "-";
  std::string format = "json";
  std::size_t max_leaf_nodes = 64;
  double neg_fraction = 0.30;
  std::size_t probe_size = 10000;
  unsigned threads = 0;
  double bits_per_key = 10.0;
  std::vector<double> shares = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> neg_fractions = {0.1, 0.3, 0.5, 0.9};
};

// "5..11" or "5,7,9".
std::vector<unsigned> parse_r_values(const std::string& text) {
  std::vector<unsigned> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    const unsigned long v = std::stoul(s, &used);
    if (used != s.size() || v < 1 || v > 57) throw std::invalid_argument("bad r value '" + s + "'");
    return static_cast<unsigned>(v);
  };
  try {
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      const unsigned lo = number(text.substr(0, dots)), hi = number(text.substr(dots + 2));
      if (lo > hi) throw std::invalid_argument("empty r range '" + text + "'");
      for (unsigned r = lo; r <= hi; ++r) out.push_back(r);
    } else {
      std::stringstream ss(text);
      for (std::string part; std::getline(ss, part, ',');) out.push_back(number(part));
    }
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("bad --r '" + text + "' (expected LO..HI or a comma list)");
  }
  if (out.empty()) throw std::invalid_argument("--r lists no values");
  return out;
}

std::vector<FilterKind> parse_filters(const std::string& text) {
  std::vector<FilterKind> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    if (!part.empty()) out.push_back(parse_filter_kind(part));
  }
  if (out.empty()) throw std::invalid_argument("--filters lists no filters");
  return out;
}

WorkloadKind parse_workload(const std::string& s) {
  if (s == "one_pass") return WorkloadKind::one_pass;
  if (s == "uniform") return WorkloadKind::uniform;
  if (s == "zipfian") return WorkloadKind::zipfian;
  if (s == "adversarial") return WorkloadKind::adversarial;
  throw std::invalid_argument("unknown workload '" + s + "'");
}

ExperimentConfig make_config(const Options& o) {
  ExperimentConfig cfg;
  cfg.workload.kind = parse_workload(o.workload);
  cfg.workload.count = o.queries;
  cfg.workload.z = o.z;
  cfg.workload.d = o.d;
  cfg.workload.seed = o.seed;
  cfg.r_values = parse_r_values(o.r);
  cfg.filters = parse_filters(o.filters);
  cfg.trials = o.trials;
  cfg.seed = o.seed;
  cfg.retrain = o.retrain;
  cfg.max_leaf_nodes = o.max_leaf_nodes;
  cfg.neg_fraction = o.neg_fraction;
  cfg.probe_size = o.probe_size;
  cfg.threads = o.threads;
  cfg.modelprop_bits_per_key = o.bits_per_key;
  cfg.model_shares = o.shares;
  cfg.neg_fractions = o.neg_fractions;
  cfg.url_features = o.featurize == "url";
  return cfg;
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--dataset", o.dataset, "CSV path (key,label[,f1..]) or synthetic:n_pos=..,n_neg=..,dim=..,sep=..,seed=..")
      ->required();
  app->add_option("--featurize", o.featurize, "derive features from URL keys")->check(CLI::IsMember({"none", "url"}));
  app->add_option("--workload", o.workload, "query workload")
      ->check(CLI::IsMember({"one_pass", "uniform", "zipfian", "adversarial"}));
  app->add_option("--queries", o.queries, "number of queries");
  app->add_option("--z", o.z, "zipfian exponent")->check(CLI::PositiveNumber);
  app->add_option("--d", o.d, "adversarial injection fraction")->check(CLI::Range(0.0, 1.0));
  app->add_option("--r", o.r, "remainder bits: LO..HI or comma list");
  app->add_option("--filters", o.filters, "comma list of bloom,qf,aqf,lbf,adabf,plbf,stacked");
  app->add_option("--trials", o.trials, "trials")->check(CLI::PositiveNumber);
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--out", o.out, "output path, - for stdout");
  app->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--max-leaf-nodes", o.max_leaf_nodes, "decision tree leaf limit")->check(CLI::PositiveNumber);
  app->add_option("--neg-fraction", o.neg_fraction, "share of negatives used for training")->check(CLI::Range(0.0, 1.0));
  app->add_option("--threads", o.threads, "parallel cells (default: FCBENCH_THREADS or all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Size-matched benchmarks for Bloom, quotient, adaptive, learned and stacked filters"};
  app.require_subcommand(1);
  Options o;
  auto* fpr = app.add_subcommand("fpr", "false positive rate under a query workload");
  auto* dynamic = app.add_subcommand("dynamic", "instantaneous FPR under churn (uniform queries, first --r value)");
  auto* timing = app.add_subcommand("timing", "construction and query time breakdown (first --r value)");
  auto* modelprop = app.add_subcommand("modelprop", "sweep the model's share of a fixed total size");
  auto* trainprop = app.add_subcommand("trainprop", "sweep the negative share of the training set");
  for (auto* sub : {fpr, dynamic, timing, modelprop, trainprop}) add_common(sub, o);
  dynamic->add_flag("--retrain", o.retrain, "retrain models at every churn");
  dynamic->add_option("--probe-size", o.probe_size, "negatives drawn per checkpoint probe set")->check(CLI::PositiveNumber);
  modelprop->add_option("--bits-per-key", o.bits_per_key, "total size per positive key")->check(CLI::PositiveNumber);
  modelprop->add_option("--shares", o.shares, "target model shares")->delimiter(',');
  trainprop->add_option("--neg-fractions", o.neg_fractions, "training negative shares")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = make_config(o);
    const auto ds = load_dataset_source(o.dataset, o.featurize == "url" ? Featurize::url : Featurize::none);
    ReportDocument doc;
    if (fpr->parsed()) {
      doc = run_fpr_experiment(ds, cfg, o.dataset);
    } else if (dynamic->parsed()) {
      cfg.workload.kind = WorkloadKind::dynamic;
      doc = run_dynamic_experiment(ds, cfg, o.dataset);
    } else if (timing->parsed()) {
      doc = run_timing_experiment(ds, cfg, o.dataset);
    } else if (modelprop->parsed()) {
      doc = run_modelprop_experiment(ds, cfg, o.dataset);
    } else {
      doc = run_trainprop_experiment(ds, cfg, o.dataset);
    }
    for (const auto& n : doc.notices) std::cerr << "notice: " << n << '\n';
    const auto format = o.format == "csv" ? ReportFormat::csv : ReportFormat::json;
    if (o.out == "-") {
      if (format == ReportFormat::csv) {
        write_report_csv(std::cout, doc);
      } else {
        std::cout << report_json(doc);
      }
    } else {
      emit_report(doc, format, o.out);
    }
  } catch (const std::exception& e) {
    std::cerr << "fcbench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
