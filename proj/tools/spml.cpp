// Copyright 2026 The SPML Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// spml: command-line front end (simulate | train | sweep | evaluate | diagnose).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "spml/apl.hpp"
#include "spml/data.hpp"
#include "spml/experiment.hpp"
#include "spml/metrics.hpp"
#include "spml/model.hpp"
#include "spml/trainer.hpp"

namespace fs = std::filesystem;
using namespace spml;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kContract = 4 };

std::string command_echo(int argc, char** argv) {
  std::string out = "spml";
  for (int i = 1; i < argc; ++i) out += std::string(" ") + argv[i];
  return out;
}

/// Relative input paths fall back to the output root when absent in the
/// working directory, so artifacts written by one command feed the next.
std::string locate(const std::string& path) {
  if (path.empty() || fs::exists(path)) return path;
  const std::string rooted = resolve_output_path(path);
  return fs::exists(rooted) ? rooted : path;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& token) {
  const auto eq = token.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("expected key=value, got '" + token + "'");
  return {token.substr(0, eq), token.substr(eq + 1)};
}

/// Keyed CLI options; a flag given on the command line overrides the same
/// key read from --config.
const std::map<std::string, std::string> kKeyHelp = {
    {"n", "sample count"},
    {"c", "class count"},
    {"d", "feature dimension"},
    {"positives", "mean positives per sample"},
    {"spread", "class prototype scale"},
    {"noise", "feature noise sigma"},
    {"test-fraction", "held-out test fraction"},
    {"mask", "single-positive, missing:F or none"},
    {"seed", "random seed"},
    {"out", "output directory"},
    {"data", "dataset directory"},
    {"test", "test dataset directory"},
    {"val-fraction", "validation fraction of the pool"},
    {"split-seed", "train/validation split seed"},
    {"preset", "coco, voc, nus or cub"},
    {"loss", "an, em, em-apl, dw, ls, nls, entmin"},
    {"alpha", "unannotated entropy weight"},
    {"beta", "pseudo-label weight"},
    {"down-weight", "dw negative weight"},
    {"smoothing", "ls / nls epsilon"},
    {"entmin-weight", "entmin weight"},
    {"penalty", "none, l1 or l2"},
    {"lambda", "penalty coefficient"},
    {"theta", "pseudo-label percentage over the run"},
    {"warmup", "warm-up epochs"},
    {"apl-hard-labels", "record s = 0 (true/false)"},
    {"apl-positive", "positive pseudo-label percentage (0 = off)"},
    {"epochs", "training epochs"},
    {"batch-size", "minibatch size"},
    {"lr", "Adam learning rate"},
    {"hidden", "hidden units (0 = linear)"},
    {"threshold", "F1 threshold"},
    {"early-stopping", "true/false"},
};

struct KeyedOptions {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* cmd, const std::vector<std::string>& keys,
              const std::vector<std::string>& skip = {}) {
    cmd->add_option("--config", config_path, "key=value file (flags override it)");
    for (const auto& k : keys)
      if (std::find(skip.begin(), skip.end(), k) == skip.end())
        options[k] = cmd->add_option("--" + k, values[k], kKeyHelp.count(k) ? kKeyHelp.at(k) : "");
  }

  KeyValues collect() const {
    KeyValues kv;
    if (!config_path.empty()) kv = read_key_values(locate(config_path));
    for (const auto& [k, opt] : options)
      if (opt->count() > 0) kv[k] = values.at(k);
    return kv;
  }
};

// --- simulate ----------------------------------------------------------------

const std::vector<std::string> kSimulateKeys = {"n",    "c",    "d",    "positives",
                                                "spread", "noise", "test-fraction",
                                                "mask", "seed", "out"};

int cmd_simulate(const KeyValues& kv, const std::string& echo) {
  std::vector<std::string> problems;
  for (const auto& [k, v] : kv)
    if (k.rfind("info.", 0) != 0 &&
        std::find(kSimulateKeys.begin(), kSimulateKeys.end(), k) == kSimulateKeys.end())
      problems.push_back("unknown key '" + k + "'");

  SyntheticConfig sc;
  double test_fraction = 0.25;
  std::string mask = "single-positive";
  std::string out;
  auto num = [&](const std::string& key, auto& target) {
    const auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
      target = static_cast<std::remove_reference_t<decltype(target)>>(v);
    } catch (const std::exception&) {
      problems.push_back(key + ": '" + it->second + "' is not a number");
    }
  };
  num("n", sc.sample_count);
  num("c", sc.class_count);
  num("d", sc.feature_dim);
  num("positives", sc.positives_per_sample_mean);
  num("spread", sc.class_prototype_spread);
  num("noise", sc.noise_sigma);
  num("test-fraction", test_fraction);
  if (const auto it = kv.find("seed"); it != kv.end()) {
    try {
      sc.seed = std::stoull(it->second);
    } catch (const std::exception&) {
      problems.push_back("seed: '" + it->second + "' is not a 64-bit seed");
    }
  }
  if (const auto it = kv.find("mask"); it != kv.end()) mask = it->second;
  if (const auto it = kv.find("out"); it != kv.end()) out = it->second;

  std::optional<double> drop;
  if (mask.rfind("missing:", 0) == 0) {
    try {
      drop = std::stod(mask.substr(8));
    } catch (const std::exception&) {
      problems.push_back("mask: bad drop fraction in '" + mask + "'");
    }
  } else if (mask != "single-positive" && mask != "none") {
    problems.push_back("mask: '" + mask + "' is not single-positive, missing:F or none");
  }
  if (out.empty()) problems.push_back("out: an output directory is required");
  if (!(test_fraction >= 0 && test_fraction < 1))
    problems.push_back("test-fraction: must lie in [0, 1)");
  try {
    sc.validate();
  } catch (const ConfigError& e) {
    problems.emplace_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }

  const Dataset all = generate_synthetic(sc);
  Dataset pool = all;
  std::optional<Dataset> test;
  if (test_fraction > 0) {
    auto [p, t] = split_train_val(all, test_fraction, derive_seed(sc.seed, 3));
    pool = std::move(p);
    test = std::move(t);
  }
  const std::uint64_t mask_seed = derive_seed(sc.seed, 4);
  if (mask == "single-positive")
    pool.annotations = mask_single_positive(pool.ground_truth, mask_seed);
  else if (drop)
    pool.annotations = mask_missing_labels(pool.ground_truth, *drop, mask_seed);
  else
    pool.annotations = pool.ground_truth;

  const fs::path dir(resolve_output_path(out));
  fs::create_directories(dir);
  save_features(pool.features, (dir / kFeaturesFile).string());
  save_ground_truth(pool.ground_truth, (dir / kGroundTruthFile).string());
  save_annotations(pool.annotations, (dir / kAnnotationsFile).string());
  if (test) {
    save_features(test->features, (dir / kTestFeaturesFile).string());
    save_ground_truth(test->ground_truth, (dir / kTestGroundTruthFile).string());
  }
  const AnnotationStats stats = annotation_stats(pool.annotations, pool.ground_truth);
  write_annotation_stats_csv(stats, (dir / kStatsFile).string());

  KeyValues manifest = {{"n", std::to_string(sc.sample_count)},
                        {"c", std::to_string(sc.class_count)},
                        {"d", std::to_string(sc.feature_dim)},
                        {"positives", format_double(sc.positives_per_sample_mean)},
                        {"spread", format_double(sc.class_prototype_spread)},
                        {"noise", format_double(sc.noise_sigma)},
                        {"test-fraction", format_double(test_fraction)},
                        {"mask", mask},
                        {"seed", std::to_string(sc.seed)},
                        {"out", out}};
  manifest["info.command"] = echo;
  manifest["info.tool-version"] = kToolVersion;
  manifest["info.pool-rows"] = std::to_string(pool.size());
  manifest["info.test-rows"] = std::to_string(test ? test->size() : 0);
  manifest["info.unannotated-negative-proportion"] =
      format_double(stats.pooled_unannotated_negative_proportion());
  write_key_values(manifest, (dir / kManifestFile).string(),
                   {"spml dataset manifest; re-run with: spml simulate --config <this file>"});

  std::printf("wrote %lld pool rows, %lld test rows to %s\n",
              static_cast<long long>(pool.size()), static_cast<long long>(test ? test->size() : 0),
              dir.string().c_str());
  std::printf("unannotated negative proportion %.6f\n",
              stats.pooled_unannotated_negative_proportion());
  return kOk;
}

// --- train -------------------------------------------------------------------

ExperimentConfig resolve_experiment(KeyValues kv) {
  if (const auto it = kv.find("data"); it != kv.end()) it->second = locate(it->second);
  if (const auto it = kv.find("test"); it != kv.end()) it->second = locate(it->second);
  return ExperimentConfig::from_key_values(kv);
}

double best_val_map(const RunResult& r) {
  return r.best_epoch > 0 ? r.epochs.at(static_cast<std::size_t>(r.best_epoch - 1)).val_map
                          : std::numeric_limits<double>::quiet_NaN();
}

int cmd_train(const KeyValues& kv, const std::string& echo) {
  const ExperimentConfig cfg = resolve_experiment(kv);
  const RunResult r = run_experiment(cfg, echo);
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("best epoch %d of %zu%s, val mAP %.6f\n", r.best_epoch, r.epochs.size(),
              r.early_stopped ? " (early stop)" : "", best_val_map(r));
  if (r.test_report)
    std::printf("test mAP %.6f, micro-F1 %.6f, macro-F1 %.6f at threshold %.2f\n",
                r.test_report->ap.mean, r.test_report->f1.micro, r.test_report->f1.macro,
                r.test_report->f1.threshold);
  if (r.negative_precision)
    std::printf("negative pseudo-label precision %.6f (%zu labels)\n", *r.negative_precision,
                r.ledger.size());
  if (r.positive_precision)
    std::printf("positive pseudo-label precision %.6f\n", *r.positive_precision);
  std::printf("artifacts in %s\n", resolve_output_path(cfg.out_dir).c_str());
  return kOk;
}

// --- sweep -------------------------------------------------------------------

struct SweepRun {
  std::size_t config = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<double> val_map;
  std::optional<double> test_map;
  std::string failure;
};

// Both are accumulated relative to the first value, so identical runs give
// that value and a deviation of exactly 0.
double mean_offset(const std::vector<double>& v) {
  double shift = 0.0;
  for (double x : v) shift += x - v.front();
  return shift / static_cast<double>(v.size());
}

double mean(const std::vector<double>& v) { return v.front() + mean_offset(v); }

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double shift = mean_offset(v);
  double ss = 0.0;
  for (double x : v) ss += (x - v.front() - shift) * (x - v.front() - shift);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

int cmd_sweep(KeyValues base, const std::vector<std::string>& grid_axes,
              const std::vector<std::uint64_t>& seeds, int jobs, bool allow_failures,
              const std::string& echo) {
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (jobs < 1) throw ConfigError("jobs: must be >= 1");
  const auto out_it = base.find("out");
  if (out_it == base.end() || out_it->second.empty())
    throw ConfigError("out: an output directory is required");
  const std::string out = out_it->second;

  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& axis_text : grid_axes) {
    auto [key, values] = split_assignment(axis_text);
    auto list = split(values, ',');
    if (std::any_of(list.begin(), list.end(), [](const auto& s) { return s.empty(); }))
      throw ConfigError("grid: empty value in '" + axis_text + "'");
    axes.emplace_back(key, std::move(list));
  }
  std::vector<KeyValues> configs(1);
  for (const auto& [key, values] : axes) {
    std::vector<KeyValues> next;
    for (const auto& c : configs)
      for (const auto& v : values) {
        KeyValues kv = c;
        kv[key] = v;
        next.push_back(std::move(kv));
      }
    configs = std::move(next);
  }

  // Validate every configuration before any compute.
  std::vector<SweepRun> runs;
  for (std::size_t ci = 0; ci < configs.size(); ++ci)
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const auto seed = seeds[si];
      KeyValues kv = base;
      for (const auto& [k, v] : configs[ci]) kv[k] = v;
      kv["seed"] = std::to_string(seed);
      // A repeated seed gets its own directory: c000-s7, c000-s7-r1, ...
      const auto repeat = std::count(seeds.begin(), seeds.begin() + static_cast<std::ptrdiff_t>(si), seed);
      char prefix[16];
      std::snprintf(prefix, sizeof(prefix), "c%03zu", ci);
      std::string name = std::string(prefix) + "-s" + std::to_string(seed);
      if (repeat > 0) name += "-r" + std::to_string(repeat);
      kv["out"] = (fs::path(out) / name).string();
      (void)resolve_experiment(kv);
      runs.push_back({ci, seed, kv["out"], std::nullopt, std::nullopt, {}});
    }

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      SweepRun& run = runs[i];
      KeyValues kv = base;
      for (const auto& [k, v] : configs[run.config]) kv[k] = v;
      kv["seed"] = std::to_string(run.seed);
      kv["out"] = run.out;
      try {
        const RunResult r = run_experiment(resolve_experiment(kv), echo);
        run.val_map = best_val_map(r);
        if (r.test_report) run.test_map = r.test_report->ap.mean;
      } catch (const std::exception& e) {
        run.failure = e.what();
      }
      std::lock_guard lock(log_mutex);
      std::fprintf(stderr, "[%zu/%zu] %s %s\n", i + 1, runs.size(), run.out.c_str(),
                   run.failure.empty() ? "ok" : ("failed: " + run.failure).c_str());
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<int>(jobs, static_cast<int>(runs.size())); ++t)
    pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  const fs::path dir(resolve_output_path(out));
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "runs.csv");
    os << "config,seed,out,status,best_val_map,test_map\n";
    for (const auto& r : runs)
      os << r.config << ',' << r.seed << ',' << r.out << ',' << (r.failure.empty() ? "ok" : "failed")
         << ',' << (r.val_map ? format_double(*r.val_map) : "") << ','
         << (r.test_map ? format_double(*r.test_map) : "") << '\n';
  }

  struct Row {
    std::size_t config;
    std::size_t ok = 0, failed = 0;
    std::vector<double> val, test;
  };
  std::vector<Row> rows;
  for (std::size_t ci = 0; ci < configs.size(); ++ci) rows.push_back({ci, 0, 0, {}, {}});
  for (const auto& r : runs) {
    Row& row = rows[r.config];
    if (!r.failure.empty()) {
      ++row.failed;
      continue;
    }
    ++row.ok;
    if (r.val_map) row.val.push_back(*r.val_map);
    if (r.test_map) row.test.push_back(*r.test_map);
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    if (a.val.empty() != b.val.empty()) return !a.val.empty();
    return !a.val.empty() && mean(a.val) > mean(b.val);
  });

  std::ofstream os(dir / "leaderboard.csv");
  os << "rank,config";
  for (const auto& [key, values] : axes) os << ',' << key;
  os << ",runs,failed,mean_val_map,std_val_map,mean_test_map,std_test_map\n";
  for (std::size_t rank = 0; rank < rows.size(); ++rank) {
    const Row& row = rows[rank];
    os << rank + 1 << ',' << row.config;
    for (const auto& [key, values] : axes) os << ',' << configs[row.config].at(key);
    os << ',' << row.ok << ',' << row.failed;
    for (const auto* v : {&row.val, &row.test}) {
      if (v->empty())
        os << ",,";
      else
        os << ',' << format_double(mean(*v)) << ',' << format_double(sample_std(*v));
    }
    os << '\n';
  }
  std::ofstream(dir / kManifestFile) << "# spml sweep manifest\ninfo.command=" << echo
                                     << "\ninfo.tool-version=" << kToolVersion << '\n';

  const std::size_t failures = std::count_if(runs.begin(), runs.end(),
                                             [](const SweepRun& r) { return !r.failure.empty(); });
  std::printf("%zu runs, %zu failed; leaderboard in %s\n", runs.size(), failures,
              (dir / "leaderboard.csv").string().c_str());
  if (failures == 0) return kOk;
  if (allow_failures && failures < runs.size()) return kOk;
  return kFailure;
}

// --- evaluate ----------------------------------------------------------------

int cmd_evaluate(const std::string& checkpoint, const std::string& data_dir,
                 const std::string& split_name, double threshold, const std::string& out) {
  if (split_name != "test" && split_name != "pool")
    throw ConfigError("split: '" + split_name + "' is not test or pool");
  if (out.empty()) throw ConfigError("out: an output directory is required");
  const Mlp<double> model = load_checkpoint(locate(checkpoint));
  const fs::path dir(locate(data_dir));
  Dataset ds = split_name == "test"
                   ? load_dataset((dir / kTestFeaturesFile).string(),
                                  (dir / kTestGroundTruthFile).string())
                   : load_dataset((dir / kFeaturesFile).string(), (dir / kGroundTruthFile).string(),
                                  (dir / kAnnotationsFile).string());
  if (ds.feature_dim() != model.input_dim() || ds.class_count() != model.output_dim())
    throw DataError("checkpoint expects D=" + std::to_string(model.input_dim()) +
                    ", C=" + std::to_string(model.output_dim()) + "; data has D=" +
                    std::to_string(ds.feature_dim()) + ", C=" + std::to_string(ds.class_count()));
  const MetricsReport report = evaluate(model, ds, threshold);

  const fs::path od(resolve_output_path(out));
  fs::create_directories(od);
  write_metrics_report(report, (od / kMetricsFile).string());
  write_per_class_csv(report, (od / kPerClassFile).string());
  const MatrixXd probs = sigmoid(model.forward(ds.features));
  std::ofstream os(od / "pr_curve.csv");
  os << "class,threshold,precision,recall\n";
  for (Index c = 0; c < ds.class_count(); ++c) {
    const Eigen::VectorXi labels = ds.ground_truth.col(c);
    for (const auto& p : precision_recall_curve(probs.col(c), labels))
      os << c << ',' << format_double(p.threshold) << ',' << format_double(p.precision) << ','
         << format_double(p.recall) << '\n';
  }
  std::printf("mAP %.6f over %zu classes, micro-F1 %.6f, macro-F1 %.6f at threshold %.2f\n",
              report.ap.mean, report.ap.per_class.size() - report.ap.excluded.size(),
              report.f1.micro, report.f1.macro, report.f1.threshold);
  return kOk;
}

// --- diagnose ----------------------------------------------------------------

struct RunView {
  fs::path dir;
  ExperimentConfig cfg;
  ExperimentData data;
  KeyValues manifest;
  DistinguishabilityReport report;
  std::vector<EpochRecord> epochs;
};

RunView open_run(const std::string& path) {
  RunView v;
  v.dir = locate(path);
  const fs::path manifest = v.dir / kManifestFile;
  if (!fs::exists(manifest)) throw DataError("no " + std::string(kManifestFile) + " in " + v.dir.string());
  if (!fs::exists(v.dir / kCheckpointFile))
    throw DataError("no " + std::string(kCheckpointFile) + " in " + v.dir.string());
  v.manifest = read_key_values(manifest.string());
  v.cfg = resolve_experiment(v.manifest);
  v.data = load_experiment_data(v.cfg);
  const Mlp<double> model = load_checkpoint((v.dir / kCheckpointFile).string());
  v.report = distinguishability_report(model.forward(v.data.train.features),
                                       v.data.train.annotations, v.data.train.ground_truth);
  v.epochs = read_epoch_table((v.dir / kEpochsFile).string());
  return v;
}

int cmd_diagnose(const std::string& run_path, const std::string& compare_path, std::string out) {
  const RunView run = open_run(run_path);
  std::optional<RunView> cmp;
  if (!compare_path.empty()) {
    cmp = open_run(compare_path);
    if (cmp->report.per_class.size() != run.report.per_class.size())
      throw DataError("runs disagree on the class count");
  }
  const fs::path od = out.empty() ? run.dir / "diagnose" : fs::path(resolve_output_path(out));
  fs::create_directories(od);

  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  {
    std::ofstream os(od / "wasserstein.csv");
    os << "class,wasserstein" << (cmp ? ",compare_wasserstein,delta" : "") << '\n';
    for (std::size_t c = 0; c < run.report.per_class.size(); ++c) {
      const double a = run.report.per_class[c];
      os << c << ',' << cell(a);
      if (cmp) {
        const double b = cmp->report.per_class[c];
        os << ',' << cell(b) << ',' << cell(a - b);
      }
      os << '\n';
    }
  }
  {
    std::ofstream os(od / "trace.csv");
    os << "run,epoch,positive_loss,unannotated_loss,pseudo_loss,val_map\n";
    auto emit = [&](const char* name, const RunView& v) {
      if (const auto it = v.manifest.find("info.initial-positive-loss"); it != v.manifest.end())
        os << name << ",0," << it->second << ",,,\n";
      for (const auto& r : v.epochs)
        os << name << ',' << r.epoch << ',' << format_double(r.positive_loss) << ','
           << format_double(r.unannotated_loss) << ',' << format_double(r.pseudo_loss) << ','
           << format_double(r.val_map) << '\n';
    };
    emit("run", run);
    if (cmp) emit("compare", *cmp);
  }
  {
    std::ofstream os(od / "logit_medians.csv");
    os << "run,annotated_positive,unannotated_positive,unannotated_negative\n";
    auto emit = [&](const char* name, const RunView& v) {
      const auto& m = v.report.logit_medians;
      os << name << ',' << cell(m.annotated_positive) << ',' << cell(m.unannotated_positive) << ','
         << cell(m.unannotated_negative) << '\n';
    };
    emit("run", run);
    if (cmp) emit("compare", *cmp);
  }
  const AnnotationStats stats =
      annotation_stats(run.data.train.annotations, run.data.train.ground_truth);
  write_annotation_stats_csv(stats, (od / "imbalance.csv").string());

  KeyValues report;
  report["wasserstein_mean"] = format_double(run.report.mean);
  report["wasserstein_skipped_classes"] = std::to_string(run.report.skipped.size());
  report["unannotated_negative_proportion"] =
      format_double(stats.pooled_unannotated_negative_proportion());
  if (cmp) {
    report["compare_wasserstein_mean"] = format_double(cmp->report.mean);
    std::size_t above = 0, paired = 0;
    for (std::size_t c = 0; c < run.report.per_class.size(); ++c) {
      const double a = run.report.per_class[c], b = cmp->report.per_class[c];
      if (std::isnan(a) || std::isnan(b)) continue;
      ++paired;
      above += a > b;
    }
    report["classes_above_compare"] = std::to_string(above);
    report["classes_paired"] = std::to_string(paired);
  }
  const fs::path audit = run.dir / kAuditFile;
  if (fs::exists(audit)) {
    const auto ledger = read_audit_csv(audit.string());
    report["pseudo_labels"] = std::to_string(ledger.size());
    for (int polarity : {kNegative, kPositive}) {
      const bool any = std::any_of(ledger.begin(), ledger.end(),
                                   [&](const PseudoLabel& p) { return p.polarity == polarity; });
      if (!any) continue;
      const double prec = pseudo_label_precision(ledger, run.data.train.ground_truth, polarity);
      report[polarity == kNegative ? "negative_pseudo_label_precision"
                                   : "positive_pseudo_label_precision"] = format_double(prec);
      std::printf("%s pseudo-label precision %.6f\n", polarity == kNegative ? "negative" : "positive",
                  prec);
    }
  }
  write_key_values(report, (od / "report.txt").string());
  std::printf("mean wasserstein %.6f", run.report.mean);
  if (cmp) std::printf(" (compare %.6f)", cmp->report.mean);
  std::printf("\ndiagnostics in %s\n", od.string().c_str());
  return kOk;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "spml: configuration error: %s\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "spml: data error: %s\n", e.what());
    return kData;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "spml: contract error: %s\n", e.what());
    return kContract;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "spml: error: %s\n", e.what());
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-positive multi-label training toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  const std::string echo = command_echo(argc, argv);

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset and mask it");
  KeyedOptions sim_opts;
  sim_opts.attach(simulate, kSimulateKeys);
  std::vector<std::string> synthetic;
  simulate->add_option("--synthetic", synthetic, "generator settings as key=value (n c d positives spread noise)");

  auto* train_cmd = app.add_subcommand("train", "Train one model and write its artifacts");
  KeyedOptions train_opts;
  train_opts.attach(train_cmd, ExperimentConfig::keys(), {"apl-hard-labels"});
  bool hard_labels_flag = false, no_early_stop = false;
  train_cmd->add_flag("--apl-hard-labels", hard_labels_flag, "record hard pseudo-labels (s = 0)");
  train_cmd->add_flag("--no-early-stopping", no_early_stop, "train all epochs");

  auto* sweep = app.add_subcommand("sweep", "Run a configuration grid over seeds");
  KeyedOptions sweep_opts;
  sweep_opts.attach(sweep, ExperimentConfig::keys(), {"seed"});
  std::vector<std::string> grid;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  bool allow_failures = false;
  sweep->add_option("--grid", grid, "key=v1,v2,... (repeatable; cartesian product)");
  sweep->add_option("--seeds", seeds, "comma-separated seeds")->delimiter(',')->required();
  sweep->add_option("--jobs", jobs, "parallel runs");
  sweep->add_flag("--allow-failures", allow_failures, "exit 0 when at least one run succeeded");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a dataset");
  std::string checkpoint, data_dir, split_name = "test", eval_out;
  double threshold = 0.5;
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint.bin path")->required();
  eval_cmd->add_option("--data", data_dir, "dataset directory")->required();
  eval_cmd->add_option("--split", split_name, "test (test_*.csv) or pool (annotated files)");
  eval_cmd->add_option("--threshold", threshold, "F1 threshold");
  eval_cmd->add_option("--out", eval_out, "output directory")->required();

  auto* diagnose = app.add_subcommand("diagnose", "Distinguishability and loss-trace tables for a run");
  std::string run_dir, compare_dir, diag_out;
  diagnose->add_option("--run", run_dir, "run directory")->required();
  diagnose->add_option("--compare", compare_dir, "second run for paired comparison");
  diagnose->add_option("--out", diag_out, "output directory (default <run>/diagnose)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  return guarded([&] {
    if (*simulate) {
      KeyValues kv = sim_opts.collect();
      for (const auto& token : synthetic) {
        auto [k, v] = split_assignment(token);
        kv[k] = v;
      }
      return cmd_simulate(kv, echo);
    }
    if (*train_cmd) {
      KeyValues kv = train_opts.collect();
      if (hard_labels_flag) kv["apl-hard-labels"] = "true";
      if (no_early_stop) kv["early-stopping"] = "false";
      return cmd_train(kv, echo);
    }
    if (*sweep) return cmd_sweep(sweep_opts.collect(), grid, seeds, jobs, allow_failures, echo);
    if (*eval_cmd) return cmd_evaluate(checkpoint, data_dir, split_name, threshold, eval_out);
    return cmd_diagnose(run_dir, compare_dir, diag_out);
  });
}
