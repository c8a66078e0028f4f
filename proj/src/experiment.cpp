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

#include "spml/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spml/model.hpp"

namespace spml {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  KeyValues kv;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void write_key_values(const KeyValues& kv, const std::string& path,
                      const std::vector<std::string>& comments) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  for (const auto& c : comments) os << "# " << c << '\n';
  for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
  if (!os) throw DataError("failed writing " + path);
}

std::string resolve_output_path(const std::string& path) {
  const char* root = std::getenv(kOutputRootEnv);
  if (!root || !*root || fs::path(path).is_absolute()) return path;
  return (fs::path(root) / path).string();
}

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = {
      "data",       "test",          "out",       "val-fraction", "split-seed",
      "preset",     "loss",          "alpha",     "beta",         "down-weight",
      "smoothing",  "entmin-weight", "penalty",   "lambda",       "theta",
      "warmup",     "apl-hard-labels", "apl-positive", "epochs",   "batch-size",
      "lr",         "seed",          "hidden",    "threshold",    "early-stopping"};
  return k;
}

namespace {

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": '" + v + "' is not a number");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": '" + v + "' is not an integer");
  return out;
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || v[0] == '-')
    throw ConfigError(key + ": '" + v + "' is not a 64-bit seed");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

PenaltyKind parse_penalty(const std::string& v) {
  if (v == "none") return PenaltyKind::None;
  if (v == "l1") return PenaltyKind::L1;
  if (v == "l2") return PenaltyKind::L2;
  throw ConfigError("penalty: '" + v + "' is not one of none, l1, l2");
}

std::string to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::None: return "none";
    case PenaltyKind::L1: return "l1";
    case PenaltyKind::L2: return "l2";
  }
  return "none";
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_key_values(const KeyValues& kv) {
  ExperimentConfig cfg;
  std::vector<std::string> problems;
  const auto& known = keys();
  for (const auto& [k, v] : kv)
    if (k.rfind("info.", 0) != 0 && std::find(known.begin(), known.end(), k) == known.end())
      problems.push_back("unknown key '" + k + "'");

  TrainConfig& t = cfg.train;
  AplConfig apl;
  double apl_positive = 0.0;

  if (const auto it = kv.find("preset"); it != kv.end()) {
    try {
      const auto& p = find_preset(it->second);
      cfg.preset = it->second;
      t.batch_size = p.batch_size;
      t.learning_rate = p.learning_rate;
      t.loss.alpha = p.alpha;
      t.loss.beta = p.beta;
      apl.theta = p.theta;
      apl.warmup_epochs = p.warmup_epochs;
    } catch (const ConfigError& e) {
      problems.emplace_back(e.what());
    }
  }

  auto with = [&](const char* key, auto&& apply) {
    const auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      apply(it->second);
    } catch (const ConfigError& e) {
      problems.emplace_back(e.what());
    }
  };
  with("data", [&](const std::string& v) { cfg.data_dir = v; });
  with("test", [&](const std::string& v) { cfg.test_dir = v; });
  with("out", [&](const std::string& v) { cfg.out_dir = v; });
  with("val-fraction", [&](const std::string& v) { cfg.val_fraction = parse_real("val-fraction", v); });
  with("split-seed", [&](const std::string& v) { cfg.split_seed = parse_seed("split-seed", v); });
  with("loss", [&](const std::string& v) { t.loss.tag = parse_loss_tag(v); });
  with("alpha", [&](const std::string& v) { t.loss.alpha = parse_real("alpha", v); });
  with("beta", [&](const std::string& v) { t.loss.beta = parse_real("beta", v); });
  with("down-weight", [&](const std::string& v) { t.loss.down_weight = parse_real("down-weight", v); });
  with("smoothing", [&](const std::string& v) { t.loss.smoothing = parse_real("smoothing", v); });
  with("entmin-weight", [&](const std::string& v) { t.loss.entmin_weight = parse_real("entmin-weight", v); });
  with("penalty", [&](const std::string& v) { t.penalty.kind = parse_penalty(v); });
  with("lambda", [&](const std::string& v) { t.penalty.coefficient = parse_real("lambda", v); });
  with("theta", [&](const std::string& v) { apl.theta = parse_real("theta", v); });
  with("warmup", [&](const std::string& v) { apl.warmup_epochs = static_cast<int>(parse_int("warmup", v)); });
  with("apl-hard-labels", [&](const std::string& v) { apl.hard_labels = parse_bool("apl-hard-labels", v); });
  with("apl-positive", [&](const std::string& v) { apl_positive = parse_real("apl-positive", v); });
  with("epochs", [&](const std::string& v) { t.total_epochs = static_cast<int>(parse_int("epochs", v)); });
  with("batch-size", [&](const std::string& v) { t.batch_size = parse_int("batch-size", v); });
  with("lr", [&](const std::string& v) { t.learning_rate = parse_real("lr", v); });
  with("seed", [&](const std::string& v) { t.seed = parse_seed("seed", v); });
  with("hidden", [&](const std::string& v) { t.hidden_size = parse_int("hidden", v); });
  with("threshold", [&](const std::string& v) { t.threshold = parse_real("threshold", v); });
  with("early-stopping", [&](const std::string& v) { t.early_stopping = parse_bool("early-stopping", v); });

  if (apl_positive < 0) problems.emplace_back("apl-positive: must be >= 0");
  apl.enable_positive_pl = apl_positive > 0;
  if (apl.enable_positive_pl) apl.positive_proportion = apl_positive;
  apl.total_epochs = t.total_epochs;
  if (t.loss.tag == LossTag::EM_APL) {
    t.apl = apl;
  } else if (apl.hard_labels || apl.enable_positive_pl) {
    problems.emplace_back("apl-hard-labels / apl-positive require loss em-apl");
  }
  if (cfg.data_dir.empty()) problems.emplace_back("data: a dataset directory is required");
  if (cfg.out_dir.empty()) problems.emplace_back("out: an output directory is required");
  if (!(cfg.val_fraction > 0 && cfg.val_fraction < 1))
    problems.emplace_back("val-fraction: must lie in (0, 1)");
  try {
    t.validate();
  } catch (const ConfigError& e) {
    problems.emplace_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return cfg;
}

KeyValues ExperimentConfig::to_key_values() const {
  const TrainConfig& t = train;
  KeyValues kv;
  kv["data"] = data_dir;
  if (test_dir) kv["test"] = *test_dir;
  kv["out"] = out_dir;
  kv["val-fraction"] = format_double(val_fraction);
  kv["split-seed"] = std::to_string(split_seed);
  kv["loss"] = std::string(to_string(t.loss.tag));
  kv["alpha"] = format_double(t.loss.alpha);
  kv["beta"] = format_double(t.loss.beta);
  kv["down-weight"] = format_double(t.loss.down_weight);
  kv["smoothing"] = format_double(t.loss.smoothing);
  kv["entmin-weight"] = format_double(t.loss.entmin_weight);
  kv["penalty"] = to_string(t.penalty.kind);
  kv["lambda"] = format_double(t.penalty.coefficient);
  if (t.apl) {
    kv["theta"] = format_double(t.apl->theta);
    kv["warmup"] = std::to_string(t.apl->warmup_epochs);
    kv["apl-hard-labels"] = t.apl->hard_labels ? "true" : "false";
    kv["apl-positive"] = t.apl->enable_positive_pl ? format_double(t.apl->positive_proportion) : "0";
  }
  kv["epochs"] = std::to_string(t.total_epochs);
  kv["batch-size"] = std::to_string(t.batch_size);
  kv["lr"] = format_double(t.learning_rate);
  kv["seed"] = std::to_string(t.seed);
  kv["hidden"] = std::to_string(t.hidden_size);
  if (t.threshold) kv["threshold"] = format_double(*t.threshold);
  kv["early-stopping"] = t.early_stopping ? "true" : "false";
  return kv;
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.data_dir);
  const Dataset pool = load_dataset((dir / kFeaturesFile).string(), (dir / kGroundTruthFile).string(),
                                    (dir / kAnnotationsFile).string());
  ExperimentData data;
  data.features_fingerprint = fingerprint(pool.features);
  data.annotations_fingerprint = fingerprint(pool.annotations);
  auto [train, val] = split_train_val(pool, cfg.val_fraction, cfg.split_seed);
  data.train = std::move(train);
  data.val = std::move(val);

  // Test files: <data>/test_*.csv, or <test>/test_*.csv then <test>/*.csv.
  std::vector<std::pair<fs::path, fs::path>> candidates;
  const fs::path test_dir = cfg.test_dir ? fs::path(*cfg.test_dir) : dir;
  candidates.emplace_back(test_dir / kTestFeaturesFile, test_dir / kTestGroundTruthFile);
  if (cfg.test_dir) candidates.emplace_back(test_dir / kFeaturesFile, test_dir / kGroundTruthFile);
  for (const auto& [f, g] : candidates) {
    if (!fs::exists(f) || !fs::exists(g)) continue;
    Dataset test = load_dataset(f.string(), g.string());
    test.split = SplitTag::Test;
    data.test = std::move(test);
    break;
  }
  if (cfg.test_dir && !data.test) throw DataError("no test files found in " + test_dir.string());
  return data;
}

void write_epoch_table(std::span<const EpochRecord> records, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << "epoch,positive_loss,unannotated_loss,pseudo_loss,val_map,pseudo_labels\n";
  for (const auto& r : records)
    os << r.epoch << ',' << format_double(r.positive_loss) << ',' << format_double(r.unannotated_loss)
       << ',' << format_double(r.pseudo_loss) << ',' << format_double(r.val_map) << ','
       << r.pseudo_labels_assigned << '\n';
}

std::vector<EpochRecord> read_epoch_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  std::string line;
  std::getline(is, line);
  std::vector<EpochRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    EpochRecord r;
    char comma = 0;
    if (!(ss >> r.epoch >> comma >> r.positive_loss >> comma >> r.unannotated_loss >> comma >>
          r.pseudo_loss >> comma >> r.val_map >> comma >> r.pseudo_labels_assigned))
      throw ParseError(path + ": malformed epoch row '" + line + "'");
    out.push_back(r);
  }
  return out;
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& command_echo) {
  const fs::path out(resolve_output_path(cfg.out_dir));
  fs::create_directories(out);
  const ExperimentData data = load_experiment_data(cfg);

  RunResult result = train(cfg.train, data.train, data.val);
  const double threshold = cfg.train.eval_threshold();
  if (data.test) {
    MetricsReport report = evaluate(result.model, *data.test, threshold);
    report.distinguishability = distinguishability_report(
        result.model.forward(data.train.features), data.train.annotations, data.train.ground_truth);
    result.test_report = std::move(report);
    write_metrics_report(*result.test_report, (out / kMetricsFile).string());
    write_per_class_csv(*result.test_report, (out / kPerClassFile).string());
  }
  write_epoch_table(result.epochs, (out / kEpochsFile).string());
  {
    std::ofstream os(out / kTimingsFile);
    os << "epoch,seconds\n";
    for (const auto& r : result.epochs) os << r.epoch << ',' << format_double(r.seconds) << '\n';
  }
  save_checkpoint(result.model, (out / kCheckpointFile).string());
  if (!result.ledger.empty())
    write_audit_csv(result.ledger, &data.train.ground_truth, (out / kAuditFile).string());

  KeyValues kv = cfg.to_key_values();
  kv["info.command"] = command_echo;
  kv["info.tool-version"] = kToolVersion;
  kv["info.features-fingerprint"] = hex(data.features_fingerprint);
  kv["info.annotations-fingerprint"] = hex(data.annotations_fingerprint);
  if (data.test) kv["info.test-fingerprint"] = hex(fingerprint(data.test->features));
  kv["info.train-rows"] = std::to_string(data.train.size());
  kv["info.val-rows"] = std::to_string(data.val.size());
  kv["info.best-epoch"] = std::to_string(result.best_epoch);
  kv["info.early-stopped"] = result.early_stopped ? "true" : "false";
  kv["info.initial-positive-loss"] = format_double(result.initial_positive_loss);
  if (result.test_report) kv["info.test-map"] = format_double(result.test_report->ap.mean);
  if (result.negative_precision)
    kv["info.negative-pseudo-label-precision"] = format_double(*result.negative_precision);
  if (result.positive_precision)
    kv["info.positive-pseudo-label-precision"] = format_double(*result.positive_precision);
  write_key_values(kv, (out / kManifestFile).string(),
                   {"spml run manifest; re-run with: spml train --config <this file>"});
  return result;
}

}  // namespace spml
