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

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include <doctest.h>

#include "spml/data.hpp"
#include "spml/trainer.hpp"

using namespace spml;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spml_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

GroundTruthMatrix gt_rows(std::initializer_list<std::initializer_list<int>> rows) {
  GroundTruthMatrix y(rows.size(), rows.begin()->size());
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (int v : row) y(i, j++) = v;
    ++i;
  }
  return y;
}

}  // namespace

TEST_CASE("synthetic generator invariants") {
  const SyntheticConfig cfg{.sample_count = 4, .feature_dim = 3, .class_count = 2,
                            .positives_per_sample_mean = 1, .seed = 7};
  const Dataset ds = generate_synthetic(cfg);
  CHECK(ds.size() == 4);
  CHECK(ds.class_count() == 2);
  for (Index i = 0; i < ds.size(); ++i) CHECK((ds.ground_truth.row(i).array() == 1).count() >= 1);
  CHECK(ds.annotations == ds.ground_truth);
  CHECK(((ds.ground_truth.array() == 1) || (ds.ground_truth.array() == -1)).all());

  const Dataset again = generate_synthetic(cfg);
  CHECK(again.features == ds.features);
  CHECK(again.ground_truth == ds.ground_truth);

  SyntheticConfig other = cfg;
  other.seed = 8;
  CHECK(generate_synthetic(other).features != ds.features);

  SyntheticConfig bad = cfg;
  bad.class_count = 0;
  CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);
  bad = cfg;
  bad.noise_sigma = -1;
  CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);
}

TEST_CASE("positives per sample track the configured mean") {
  const Dataset ds = generate_synthetic({.sample_count = 4000, .class_count = 20,
                                         .positives_per_sample_mean = 3.0, .seed = 3});
  const double mean = (ds.ground_truth.array() == 1).cast<double>().sum() / 4000.0;
  CHECK(mean == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("full-label linear model learns the generator") {
  const Dataset all = generate_synthetic(
      {.sample_count = 2000, .feature_dim = 20, .class_count = 10, .noise_sigma = 0.3, .seed = 1});
  auto [pool, test] = split_train_val(all, 0.25, 11);
  auto [train_set, val] = split_train_val(pool, 0.2, 12);
  // Fully observed labels with 0 for negatives: assume-negative is plain BCE here.
  train_set.annotations = (train_set.ground_truth.array() == 1).cast<int>();
  TrainConfig cfg;
  cfg.loss = LossKind{.tag = LossTag::AN};
  cfg.learning_rate = 1e-2;
  cfg.seed = 1;
  const RunResult r = train(cfg, train_set, val);
  CHECK(evaluate(r.model, test, 0.5).ap.mean > 0.9);
}

TEST_CASE("single-positive masking") {
  CHECK(mask_single_positive(gt_rows({{1, -1, -1}}), 5) == gt_rows({{1, 0, 0}}));

  const Dataset ds = generate_synthetic({.sample_count = 300, .class_count = 8,
                                         .positives_per_sample_mean = 3, .seed = 4});
  const AnnotationMatrix ann = mask_single_positive(ds.ground_truth, 9);
  for (Index i = 0; i < ann.rows(); ++i) {
    CHECK((ann.row(i).array() == 1).count() == 1);
    CHECK((ann.row(i).array() == 0).count() == ann.cols() - 1);
    for (Index j = 0; j < ann.cols(); ++j)
      if (ann(i, j) == 1) CHECK(ds.ground_truth(i, j) == 1);
  }
  CHECK(mask_single_positive(ds.ground_truth, 9) == ann);

  // Each positive is kept with equal probability.
  int first = 0;
  const int trials = 10000;
  for (int s = 0; s < trials; ++s) first += mask_single_positive(gt_rows({{1, 1, -1}}), s)(0, 0);
  CHECK(first / double(trials) == doctest::Approx(0.5).epsilon(0.04));

  CHECK_THROWS_AS(mask_single_positive(gt_rows({{1, -1}, {-1, -1}}), 1), DataError);
  try {
    mask_single_positive(gt_rows({{1, -1}, {-1, -1}}), 1);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("missing-label masking") {
  const Dataset c4 = generate_synthetic({.sample_count = 50, .class_count = 4, .seed = 2});
  CHECK(mask_missing_labels(c4.ground_truth, 0.0, 1) == c4.ground_truth);
  const AnnotationMatrix half = mask_missing_labels(c4.ground_truth, 0.5, 1);
  for (Index i = 0; i < half.rows(); ++i) CHECK((half.row(i).array() == 0).count() == 2);

  const Dataset c20 = generate_synthetic({.sample_count = 50, .class_count = 20, .seed = 2});
  const AnnotationMatrix most = mask_missing_labels(c20.ground_truth, 0.9, 3);
  for (Index i = 0; i < most.rows(); ++i) {
    CHECK((most.row(i).array() == 0).count() == 18);
    for (Index j = 0; j < most.cols(); ++j)
      if (most(i, j) != 0) CHECK(most(i, j) == c20.ground_truth(i, j));
  }
  CHECK_THROWS_AS(mask_missing_labels(c4.ground_truth, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(mask_missing_labels(c4.ground_truth, -0.1, 1), ConfigError);
}

TEST_CASE("train/validation split") {
  const Dataset ten = generate_synthetic({.sample_count = 10, .class_count = 3, .seed = 1});
  Dataset masked = ten;
  masked.annotations = mask_single_positive(ten.ground_truth, 1);
  auto [tr, va] = split_train_val(masked, 0.2, 5);
  CHECK(tr.size() == 8);
  CHECK(va.size() == 2);
  CHECK(va.split == SplitTag::Val);
  CHECK(va.annotations == va.ground_truth);

  std::multiset<std::vector<double>> rows_in, rows_out;
  for (Index i = 0; i < ten.size(); ++i)
    rows_in.insert({ten.features.row(i).begin(), ten.features.row(i).end()});
  for (const Dataset* d : {&tr, &va})
    for (Index i = 0; i < d->size(); ++i)
      rows_out.insert({d->features.row(i).begin(), d->features.row(i).end()});
  CHECK(rows_in == rows_out);

  const auto val_rows = validation_rows(5717, 0.2, 1);
  CHECK(val_rows.size() == 1143);
  CHECK(5717 - val_rows.size() == 4574);
  CHECK(std::set<Index>(val_rows.begin(), val_rows.end()).size() == 1143);
  CHECK(validation_rows(5717, 0.2, 1) == val_rows);

  CHECK_THROWS_AS(split_train_val(ten, 0.01, 1), ConfigError);
  CHECK_THROWS_AS(split_train_val(ten, 1.0, 1), ConfigError);
}

TEST_CASE("loading CSV datasets") {
  const fs::path dir = scratch_dir("load");
  write_text(dir / "x.csv", "f0,f1\n0.5,1\n-2,3.25\n1e-3,0\n");
  write_text(dir / "y.csv", "c0,c1\n1,0\n0,1\n1,1\n");
  write_text(dir / "a.csv", "1,0\n0,1\n-1,1\n");
  const Dataset ds =
      load_dataset((dir / "x.csv").string(), (dir / "y.csv").string(), (dir / "a.csv").string());
  CHECK(ds.size() == 3);
  CHECK(ds.class_count() == 2);
  CHECK(ds.features(1, 1) == 3.25);
  CHECK(ds.ground_truth == gt_rows({{1, -1}, {-1, 1}, {1, 1}}));
  CHECK(ds.annotations(2, 0) == -1);

  const Dataset plain = load_dataset((dir / "x.csv").string(), (dir / "y.csv").string());
  CHECK(plain.annotations == plain.ground_truth);

  write_text(dir / "bad_a.csv", "1,0\n0,2\n0,1\n");
  try {
    load_dataset((dir / "x.csv").string(), (dir / "y.csv").string(), (dir / "bad_a.csv").string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 1") != std::string::npos);
    CHECK(msg.find("column 1") != std::string::npos);
  }
  write_text(dir / "bad_y.csv", "1,0\n-1,1\n1,1\n");
  CHECK_THROWS_AS(load_dataset((dir / "x.csv").string(), (dir / "bad_y.csv").string()), ParseError);
  write_text(dir / "short_y.csv", "1,0\n0,1\n");
  CHECK_THROWS_AS(load_dataset((dir / "x.csv").string(), (dir / "short_y.csv").string()),
                  DataError);
  write_text(dir / "ragged.csv", "1,0\n0\n1,1\n");
  CHECK_THROWS_AS(read_feature_csv((dir / "ragged.csv").string()), ParseError);
  CHECK_THROWS_AS(read_feature_csv((dir / "missing.csv").string()), DataError);

  // Writers round-trip exactly.
  save_features(ds.features, (dir / "x2.csv").string());
  save_ground_truth(ds.ground_truth, (dir / "y2.csv").string());
  save_annotations(ds.annotations, (dir / "a2.csv").string());
  const Dataset back = load_dataset((dir / "x2.csv").string(), (dir / "y2.csv").string(),
                                    (dir / "a2.csv").string());
  CHECK(back.features == ds.features);
  CHECK(back.ground_truth == ds.ground_truth);
  CHECK(back.annotations == ds.annotations);
  fs::remove_all(dir);
}

TEST_CASE("strict validation rejects contradicting annotations") {
  Dataset ds = generate_synthetic({.sample_count = 5, .class_count = 3, .seed = 1});
  ds.annotations = ds.ground_truth;
  ds.annotations(0, 0) = -ds.ground_truth(0, 0);
  CHECK_THROWS_AS(ds.validate(true), DataError);
  CHECK_NOTHROW(ds.validate(false));
}

TEST_CASE("annotation statistics") {
  // One kept positive per row, k positives in ground truth.
  const GroundTruthMatrix gt = gt_rows({{1, 1, 1, -1}, {1, -1, -1, -1}, {-1, 1, 1, -1}});
  const AnnotationMatrix ann = mask_single_positive(gt, 2);
  const AnnotationStats st = annotation_stats(ann, gt);
  Index unannotated_pos = 0;
  for (auto v : st.unannotated_positive) unannotated_pos += v;
  CHECK(unannotated_pos == (3 - 1) + (1 - 1) + (2 - 1));

  // Brute-force recount on random 5x3 instances.
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> tri(-1, 1), bin(0, 1);
  for (int rep = 0; rep < 50; ++rep) {
    GroundTruthMatrix g(5, 3);
    AnnotationMatrix a(5, 3);
    for (Index i = 0; i < g.size(); ++i) {
      g(i) = bin(rng) ? 1 : -1;
      a(i) = tri(rng);
    }
    const AnnotationStats s = annotation_stats(a, g);
    for (Index c = 0; c < 3; ++c) {
      Index ap = 0, up = 0, un = 0, an = 0;
      for (Index n = 0; n < 5; ++n) {
        if (a(n, c) == 1) ++ap;
        if (a(n, c) == -1) ++an;
        if (a(n, c) == 0 && g(n, c) == 1) ++up;
        if (a(n, c) == 0 && g(n, c) == -1) ++un;
      }
      CHECK(s.annotated_positive[c] == ap);
      CHECK(s.unannotated_positive[c] == up);
      CHECK(s.unannotated_negative[c] == un);
      CHECK(s.annotated_negative[c] == an);
      const double expect = up + un == 0 ? 0.0 : double(un) / double(up + un);
      CHECK(s.unannotated_negative_proportion[c] == doctest::Approx(expect).epsilon(1e-15));
    }
  }
}

TEST_CASE("pooled unannotated-negative proportion at a COCO-like density") {
  // 50 rows, 80 classes, 147 positives (2.94 per row), one kept per row.
  GroundTruthMatrix gt = GroundTruthMatrix::Constant(50, 80, -1);
  Index placed = 0;
  for (Index i = 0; i < 50; ++i) {
    const Index k = i < 47 ? 3 : 2;
    for (Index j = 0; j < k; ++j) gt(i, (i + 7 * j) % 80) = 1;
    placed += k;
  }
  REQUIRE(placed == 147);
  const AnnotationMatrix ann = mask_single_positive(gt, 1);
  const double pooled = annotation_stats(ann, gt).pooled_unannotated_negative_proportion();
  // Per average row: 77.06 unannotated negatives among 79 unannotated labels.
  CHECK(pooled == doctest::Approx(3853.0 / 3950.0).epsilon(1e-15));
  CHECK(pooled == doctest::Approx(77.06 / 79.0).epsilon(1e-12));
}

TEST_CASE("statistics file round trip") {
  const fs::path dir = scratch_dir("stats");
  const Dataset ds = generate_synthetic({.sample_count = 40, .class_count = 5,
                                         .positives_per_sample_mean = 2, .seed = 6});
  const AnnotationMatrix ann = mask_single_positive(ds.ground_truth, 6);
  const AnnotationStats st = annotation_stats(ann, ds.ground_truth);
  write_annotation_stats_csv(st, (dir / "stats.csv").string());
  std::ifstream is(dir / "stats.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header.rfind("class,annotated_positive", 0) == 0);
  for (Index c = 0; c < 5; ++c) {
    std::string line;
    REQUIRE(std::getline(is, line));
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    REQUIRE(cells.size() == 7);
    CHECK(std::stoll(cells[1]) == st.annotated_positive[c]);
    CHECK(std::stod(cells[5]) == st.unannotated_negative_proportion[c]);
  }
  fs::remove_all(dir);
}
