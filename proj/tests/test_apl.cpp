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
#include <random>
#include <set>

#include <doctest.h>

#include "spml/apl.hpp"

using namespace spml;

namespace {

AplConfig schedule(int total, int warmup, double theta) {
  AplConfig cfg;
  cfg.total_epochs = total;
  cfg.warmup_epochs = warmup;
  cfg.theta = theta;
  return cfg;
}

VectorXd column(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("per-epoch schedule") {
  CHECK(plan_schedule(schedule(10, 5, 90)) == doctest::Approx(18.0));
  CHECK(per_epoch_count(18.0, 1000) == 180);
  CHECK(per_epoch_count(plan_schedule(schedule(10, 5, 90)), 1000) == 180);
  CHECK(per_epoch_count(18.0, 9) == 1);
  CHECK(per_epoch_count(18.0, 5) == 0);

  // Sum over post-warm-up epochs never exceeds theta percent of the pool.
  for (Index pool : {7, 100, 1000, 4321}) {
    AplState st(schedule(10, 5, 90), AnnotationMatrix::Zero(pool, 1));
    CHECK(5 * st.negative_quota(0) <= pool * 90 / 100);
  }
  CHECK_THROWS_AS(plan_schedule(schedule(5, 5, 90)), ConfigError);
  CHECK_THROWS_AS(plan_schedule(schedule(10, 5, 0)), ConfigError);
  CHECK_THROWS_AS(plan_schedule(schedule(10, 5, 101)), ConfigError);
}

TEST_CASE("lowest-probability selection") {
  const std::vector<Index> pool{0, 1, 2, 3};
  const VectorXd p = column({0.9, 0.2, 0.5, 0.1});
  const auto picked = select_extreme(pool, p, 2, true);
  REQUIRE(picked.size() == 2);
  CHECK(pool[picked[0]] == 3);
  CHECK(pool[picked[1]] == 1);

  const VectorXd tied = column({0.3, 0.3, 0.3});
  const std::vector<Index> pool3{0, 1, 2};
  const auto t = select_extreme(pool3, tied, 2, true);
  CHECK(pool3[t[0]] == 0);
  CHECK(pool3[t[1]] == 1);
  CHECK(select_extreme(pool3, tied, 5, true).size() == 3);
}

TEST_CASE("apply_epoch assigns soft negatives") {
  // 4 samples, one class, 50% per epoch: two labels at epoch 1.
  AnnotationMatrix ann = AnnotationMatrix::Zero(4, 1);
  SoftLabelStore soft;
  AplState st(schedule(2, 1, 50), ann);
  CHECK(st.negative_quota(0) == 2);
  const MatrixXd probs = column({0.9, 0.2, 0.5, 0.1});
  const auto batch = st.apply_epoch(1, probs, ann, soft);
  REQUIRE(batch.size() == 2);
  CHECK(batch[0].sample == 3);
  CHECK(batch[0].soft_label == 0.1);
  CHECK(batch[1].sample == 1);
  CHECK(batch[1].soft_label == 0.2);
  CHECK(ann(3, 0) == -1);
  CHECK(ann(1, 0) == -1);
  CHECK(ann(0, 0) == 0);
  CHECK(*soft.find(3, 0) == 0.1);
  CHECK(st.pool_size(0) == 2);
  CHECK(st.original_pool_size(0) == 4);

  // Same epoch again: nothing changes.
  CHECK(st.apply_epoch(1, probs, ann, soft).empty());
  CHECK(st.ledger().size() == 2);

  AplConfig hard = schedule(2, 1, 50);
  hard.hard_labels = true;
  AnnotationMatrix ann2 = AnnotationMatrix::Zero(4, 1);
  SoftLabelStore soft2;
  AplState hs(hard, ann2);
  hs.apply_epoch(1, probs, ann2, soft2);
  CHECK(*soft2.find(3, 0) == 0.0);
}

TEST_CASE("sequencing and shape errors") {
  AnnotationMatrix ann = AnnotationMatrix::Zero(4, 2);
  SoftLabelStore soft;
  AplState st(schedule(10, 5, 90), ann);
  const MatrixXd probs = MatrixXd::Constant(4, 2, 0.5);
  CHECK_THROWS_AS(st.apply_epoch(4, probs, ann, soft), SequencingError);
  CHECK_THROWS_AS(st.apply_epoch(10, probs, ann, soft), SequencingError);
  st.apply_epoch(6, probs, ann, soft);
  CHECK_THROWS_AS(st.apply_epoch(5, probs, ann, soft), SequencingError);
  CHECK_THROWS_AS(st.apply_epoch(7, MatrixXd::Constant(3, 2, 0.5), ann, soft), ContractError);
  CHECK(*st.last_applied_epoch() == 6);
}

TEST_CASE("a full run labels each entry at most once") {
  const Index n = 200, c = 5;
  AnnotationMatrix ann = AnnotationMatrix::Zero(n, c);
  for (Index i = 0; i < n; ++i) ann(i, i % c) = 1;
  SoftLabelStore soft;
  AplState st(schedule(10, 5, 90), ann);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int e = 5; e < 10; ++e) {
    MatrixXd probs(n, c);
    for (Index k = 0; k < probs.size(); ++k) probs(k) = u(rng);
    st.apply_epoch(e, probs, ann, soft);
  }
  std::set<std::pair<Index, Index>> seen;
  for (const auto& pl : st.ledger()) {
    CHECK(seen.insert({pl.sample, pl.cls}).second);
    CHECK(pl.polarity == -1);
    CHECK(pl.epoch >= 5);
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < c; ++j)
      if (ann(i, j) == -1) CHECK(soft.contains(i, j));
  for (Index j = 0; j < c; ++j) {
    CHECK(st.original_pool_size(j) == 160);
    CHECK(st.pool_size(j) == 160 - 5 * 28);
  }
  CHECK(st.warnings().empty());
}

TEST_CASE("pseudo-label precision") {
  GroundTruthMatrix gt(2, 2);
  gt << -1, -1, 1, -1;
  std::vector<PseudoLabel> ledger{{5, 0, 0, 0.1, -1}, {5, 0, 1, 0.2, -1}};
  CHECK(pseudo_label_precision(ledger, gt) == 1.0);
  ledger.push_back({6, 1, 1, 0.2, -1});
  ledger.push_back({6, 1, 0, 0.3, -1});
  CHECK(pseudo_label_precision(ledger, gt) == 0.75);
  CHECK_THROWS_AS(pseudo_label_precision({}, gt), StateError);
  CHECK_THROWS_AS(pseudo_label_precision(ledger, gt, kPositive), StateError);
}

TEST_CASE("positive mirror") {
  AplConfig cfg = schedule(2, 1, 50);
  AnnotationMatrix ann = AnnotationMatrix::Zero(2, 1);
  AplState off(cfg, ann);
  CHECK_THROWS_AS(off.select_positives(0, column({0.9, 0.2})), ConfigError);

  cfg.enable_positive_pl = true;
  cfg.positive_proportion = 50;
  AplState st(cfg, ann);
  SoftLabelStore soft;
  const auto batch = st.apply_epoch(1, column({0.9, 0.2}), ann, soft);
  REQUIRE(batch.size() == 2);
  CHECK(ann(1, 0) == -1);
  CHECK(ann(0, 0) == 1);
  CHECK(batch[1].polarity == 1);
  CHECK(batch[1].sample == 0);
  CHECK_FALSE(soft.contains(0, 0));
}

TEST_CASE("pool exhaustion warns") {
  AplConfig cfg = schedule(2, 1, 100);
  cfg.enable_positive_pl = true;
  cfg.positive_proportion = 100;
  AnnotationMatrix ann = AnnotationMatrix::Zero(3, 1);
  AplState st(cfg, ann);
  SoftLabelStore soft;
  st.apply_epoch(1, column({0.1, 0.5, 0.9}), ann, soft);
  CHECK(st.warnings().size() == 1);
  CHECK(st.ledger().size() == 3);
}

TEST_CASE("audit file round trip") {
  const auto path = (std::filesystem::temp_directory_path() / "spml_test_audit.csv").string();
  GroundTruthMatrix gt(2, 2);
  gt << -1, 1, -1, -1;
  const std::vector<PseudoLabel> ledger{{5, 0, 0, 0.123456789012345678, -1},
                                        {6, 1, 1, 1e-9, -1}, {6, 0, 1, 1.0, 1}};
  write_audit_csv(ledger, &gt, path);
  const auto back = read_audit_csv(path);
  REQUIRE(back.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(back[k].epoch == ledger[k].epoch);
    CHECK(back[k].sample == ledger[k].sample);
    CHECK(back[k].cls == ledger[k].cls);
    CHECK(back[k].soft_label == ledger[k].soft_label);
    CHECK(back[k].polarity == ledger[k].polarity);
  }
  std::filesystem::remove(path);
}
