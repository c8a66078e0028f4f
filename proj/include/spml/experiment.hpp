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

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spml/data.hpp"
#include "spml/trainer.hpp"

namespace spml {

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr const char* kOutputRootEnv = "SPML_OUTPUT_ROOT";

// File names inside a dataset directory.
inline constexpr const char* kFeaturesFile = "features.csv";
inline constexpr const char* kGroundTruthFile = "ground_truth.csv";
inline constexpr const char* kAnnotationsFile = "annotations.csv";
inline constexpr const char* kTestFeaturesFile = "test_features.csv";
inline constexpr const char* kTestGroundTruthFile = "test_ground_truth.csv";
inline constexpr const char* kStatsFile = "stats.csv";

// File names inside a run directory.
inline constexpr const char* kManifestFile = "manifest.txt";
inline constexpr const char* kEpochsFile = "epochs.csv";
inline constexpr const char* kTimingsFile = "timings.csv";
inline constexpr const char* kMetricsFile = "metrics.txt";
inline constexpr const char* kPerClassFile = "per_class.csv";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kAuditFile = "apl_audit.csv";

/// Flat key=value text; '#' starts a comment line.
using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(const std::string& path);
void write_key_values(const KeyValues& kv, const std::string& path,
                      const std::vector<std::string>& comments = {});

/// Resolves a relative output path under $SPML_OUTPUT_ROOT when it is set.
std::string resolve_output_path(const std::string& path);

/// Everything needed to reproduce one training run.
struct ExperimentConfig {
  std::string data_dir;
  std::optional<std::string> test_dir;  // defaults to data_dir's test_* files
  std::string out_dir;
  double val_fraction = 0.2;
  std::uint64_t split_seed = 0;
  std::optional<std::string> preset;
  TrainConfig train;

  /// Keys understood by from_key_values (each is also a CLI flag).
  static const std::vector<std::string>& keys();
  /// Built-in defaults < preset < `kv`. Keys prefixed `info.` are ignored;
  /// any other unknown key, or any invalid value, is reported. All problems
  /// are collected into one ConfigError.
  static ExperimentConfig from_key_values(const KeyValues& kv);
  KeyValues to_key_values() const;
};

struct ExperimentData {
  Dataset train;
  Dataset val;
  std::optional<Dataset> test;
  std::uint64_t features_fingerprint = 0;
  std::uint64_t annotations_fingerprint = 0;
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg);

/// Trains, evaluates on the test split and writes manifest, epoch table,
/// metrics, checkpoint and (when pseudo-labeling ran) the audit file.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& command_echo);

void write_epoch_table(std::span<const EpochRecord> records, const std::string& path);
std::vector<EpochRecord> read_epoch_table(const std::string& path);

/// %.17g; round-trips doubles exactly.
std::string format_double(double v);

}  // namespace spml
