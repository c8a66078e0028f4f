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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "spml/experiment.hpp"

using namespace spml;
namespace fs = std::filesystem;

namespace {

KeyValues minimal() { return {{"data", "d"}, {"out", "o"}}; }

std::string config_error(const KeyValues& kv) {
  try {
    ExperimentConfig::from_key_values(kv);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("key=value files") {
  const auto path = (fs::temp_directory_path() / "spml_test_kv.txt").string();
  std::ofstream(path) << "# comment\n  loss = em-apl \n\nalpha=0.2\nout=a=b\n";
  const KeyValues kv = read_key_values(path);
  CHECK(kv.size() == 3);
  CHECK(kv.at("loss") == "em-apl");
  CHECK(kv.at("out") == "a=b");
  write_key_values(kv, path, {"header"});
  CHECK(read_key_values(path) == kv);
  std::ofstream(path) << "loss em\n";
  CHECK_THROWS_AS(read_key_values(path), ParseError);
  fs::remove(path);
}

TEST_CASE("defaults, preset and explicit keys") {
  const auto base = ExperimentConfig::from_key_values(minimal());
  CHECK(base.train.loss.tag == LossTag::EM);
  CHECK(base.train.learning_rate == 1e-3);
  CHECK(base.train.batch_size == 8);
  CHECK_FALSE(base.train.apl.has_value());

  KeyValues kv = minimal();
  kv["preset"] = "coco";
  kv["loss"] = "em-apl";
  const auto preset = ExperimentConfig::from_key_values(kv);
  CHECK(preset.train.batch_size == 16);
  CHECK(preset.train.loss.alpha == 0.1);
  CHECK(preset.train.apl->warmup_epochs == 5);

  kv["alpha"] = "0.3";
  kv["batch-size"] = "4";
  kv["info.tool-version"] = "anything";
  const auto over = ExperimentConfig::from_key_values(kv);
  CHECK(over.train.loss.alpha == 0.3);
  CHECK(over.train.batch_size == 4);
  CHECK(over.train.loss.beta == preset.train.loss.beta);

  // to_key_values reproduces the same configuration.
  const auto again = ExperimentConfig::from_key_values(over.to_key_values());
  CHECK(again.to_key_values() == over.to_key_values());
}

TEST_CASE("every problem is reported at once") {
  KeyValues kv = minimal();
  kv["alpha"] = "abc";
  kv["epochs"] = "2.5";
  kv["colour"] = "red";
  const std::string msg = config_error(kv);
  CHECK(msg.find("alpha") != std::string::npos);
  CHECK(msg.find("epochs") != std::string::npos);
  CHECK(msg.find("colour") != std::string::npos);

  CHECK(config_error({{"out", "o"}}).find("data") != std::string::npos);
  KeyValues hard = minimal();
  hard["apl-hard-labels"] = "true";
  CHECK_FALSE(config_error(hard).empty());
  KeyValues preset = minimal();
  preset["preset"] = "imagenet";
  CHECK_FALSE(config_error(preset).empty());
  KeyValues warm = minimal();
  warm["loss"] = "em-apl";
  warm["warmup"] = "10";
  CHECK_FALSE(config_error(warm).empty());
}

TEST_CASE("output root") {
  ::setenv(kOutputRootEnv, "/tmp/spml-root", 1);
  CHECK(resolve_output_path("runs/a") == "/tmp/spml-root/runs/a");
  CHECK(resolve_output_path("/abs/path") == "/abs/path");
  ::unsetenv(kOutputRootEnv);
  CHECK(resolve_output_path("runs/a") == "runs/a");
}

TEST_CASE("epoch table round trip") {
  const auto path = (fs::temp_directory_path() / "spml_test_epochs.csv").string();
  std::vector<EpochRecord> rows(2);
  rows[0] = {1, 0.123456789012345678, 1.0 / 3.0, 0.0, 0.75, 0, 0.5};
  rows[1] = {2, 1e-17, 2.0 / 7.0, 0.25, 0.8, 12, 0.5};
  write_epoch_table(rows, path);
  const auto back = read_epoch_table(path);
  REQUIRE(back.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(back[k].epoch == rows[k].epoch);
    CHECK(back[k].positive_loss == rows[k].positive_loss);
    CHECK(back[k].unannotated_loss == rows[k].unannotated_loss);
    CHECK(back[k].pseudo_loss == rows[k].pseudo_loss);
    CHECK(back[k].val_map == rows[k].val_map);
    CHECK(back[k].pseudo_labels_assigned == rows[k].pseudo_labels_assigned);
  }
  fs::remove(path);
}

TEST_CASE("a run writes its artifacts and reproduces from its manifest") {
  const fs::path dir = fs::temp_directory_path() / "spml_test_experiment";
  fs::remove_all(dir);
  fs::create_directories(dir / "data");
  const Dataset all = generate_synthetic({.sample_count = 200, .feature_dim = 6, .class_count = 4, .seed = 2});
  auto [pool, test] = split_train_val(all, 0.25, 3);
  save_features(pool.features, (dir / "data" / kFeaturesFile).string());
  save_ground_truth(pool.ground_truth, (dir / "data" / kGroundTruthFile).string());
  save_annotations(mask_single_positive(pool.ground_truth, 4), (dir / "data" / kAnnotationsFile).string());
  save_features(test.features, (dir / "data" / kTestFeaturesFile).string());
  save_ground_truth(test.ground_truth, (dir / "data" / kTestGroundTruthFile).string());

  KeyValues kv{{"data", (dir / "data").string()}, {"out", (dir / "run1").string()},
               {"loss", "em-apl"}, {"epochs", "4"}, {"warmup", "2"}, {"lr", "0.01"},
               {"early-stopping", "false"}};
  const auto cfg = ExperimentConfig::from_key_values(kv);
  const auto r = run_experiment(cfg, "test");
  CHECK(r.test_report.has_value());
  for (const char* f : {kManifestFile, kEpochsFile, kTimingsFile, kMetricsFile, kPerClassFile,
                        kCheckpointFile, kAuditFile})
    CHECK(fs::exists(dir / "run1" / f));

  KeyValues manifest = read_key_values((dir / "run1" / kManifestFile).string());
  manifest["out"] = (dir / "run2").string();
  run_experiment(ExperimentConfig::from_key_values(manifest), "test");
  const auto a = read_epoch_table((dir / "run1" / kEpochsFile).string());
  const auto b = read_epoch_table((dir / "run2" / kEpochsFile).string());
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].val_map == b[k].val_map);
  CHECK(read_audit_csv((dir / "run1" / kAuditFile).string()).size() == r.ledger.size());
  fs::remove_all(dir);
}
