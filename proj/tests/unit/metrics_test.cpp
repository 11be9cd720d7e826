/* Copyright 2026 The UDOS Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "oracles.hpp"
#include "toy_fixture.hpp"
#include "udos/errors.hpp"
#include "udos/metrics.hpp"

namespace udos {
namespace {

TEST(Report, FromCounts) {
  const std::vector<std::size_t> a = {1, 0, 1, 1};
  const auto r = report_from_counts(a, 0.7, 0, "person", std::nullopt);
  EXPECT_DOUBLE_EQ(r.b_img, 0.75);
  EXPECT_DOUBLE_EQ(r.b_ins, 0.75);
  EXPECT_EQ(r.n, 4u);
  const std::vector<std::size_t> b = {2, 0, 1};
  const auto s = report_from_counts(b, 0.7, 0, "person", 3.0);
  EXPECT_DOUBLE_EQ(s.b_img, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.b_ins, 1.0);
  const std::vector<std::size_t> none = {0, 0};
  EXPECT_EQ(report_from_counts(none, 0.7, 0, "person", std::nullopt).b_img, 0.0);
}

TEST(Report, CountQualifying) {
  DetectionSet d(3);
  d[0].p_obj = 0.9;
  d[1].p_obj = 0.7;  // not strictly above
  d[2].p_obj = 0.95;
  d[2].class_id = 2;
  EXPECT_EQ(count_qualifying(d, 0.7, std::nullopt), 2u);
  EXPECT_EQ(count_qualifying(d, 0.7, 0), 1u);
  EXPECT_EQ(count_qualifying(d, 0.7, 1), 0u);
}

TEST(Report, Json) {
  const std::vector<std::size_t> a = {1, 2};
  const auto doc = nlohmann::json::parse(report_json(report_from_counts(a, 0.7, 3, "stop sign", 4.5)));
  EXPECT_EQ(doc["class_name"], "stop sign");
  EXPECT_EQ(doc["b_ins"], 1.5);
  EXPECT_EQ(doc["v_linf"], 4.5);
  EXPECT_EQ(doc["n"], 2);
}

class MetricsOnToy : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = testing::toy_dataset();
    curated_ = curate(data_, testing::toy_detector(), 1, 0.7, 40);
    ASSERT_GE(curated_.size(), 10u);
  }
  PerturbationD random_v(std::uint64_t seed, double xi) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-xi, xi);
    auto v = PerturbationD::zeros_like(curated_.image(0), xi);
    for (Eigen::Index i = 0; i < v.data.size(); ++i) v.data.array()[i] = u(rng);
    return v;
  }
  std::vector<Image> images() const {
    std::vector<Image> out;
    for (std::size_t i = 0; i < curated_.size(); ++i) out.push_back(curated_.image(i));
    return out;
  }

  std::shared_ptr<const Dataset> data_;
  CuratedDataset curated_;
};

TEST_F(MetricsOnToy, EqualsNaiveRecount) {
  const auto& w = testing::toy_detector();
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto v = seed == 0 ? PerturbationD::zeros_like(curated_.image(0), 0.0) : random_v(seed, 40.0);
    for (double theta : {0.3, 0.7, 0.9}) {
      const auto counts = oracle::naive_counts(w, images(), v.data, theta, curated_.target_class.id);
      const auto r = evaluate_blind_degree(curated_, w, v, theta);
      EXPECT_EQ(r.b_img, oracle::naive_image_level(counts));
      EXPECT_EQ(r.b_ins, oracle::naive_instance_level(counts));
      EXPECT_EQ(image_blind_degree(curated_, w, v, theta), r.b_img);
      EXPECT_EQ(instance_blind_degree(curated_, w, v, theta), r.b_ins);
      EXPECT_EQ(qualifying_counts(curated_, w, v, theta), counts);
      EXPECT_GE(r.b_ins, r.b_img);
    }
  }
}

TEST_F(MetricsOnToy, NonIncreasingInTheta) {
  const auto& w = testing::toy_detector();
  const auto v = random_v(5, 30.0);
  double prev_img = 2.0, prev_ins = 1e9;
  for (double theta = 0.05; theta < 1.0; theta += 0.05) {
    const auto r = evaluate_blind_degree(curated_, w, v, theta);
    EXPECT_LE(r.b_img, prev_img);
    EXPECT_LE(r.b_ins, prev_ins);
    prev_img = r.b_img;
    prev_ins = r.b_ins;
    for (std::size_t i = 0; i < 5; ++i) {
      if (!indicator(w, curated_.image(i), v, theta, 1)) {
        EXPECT_FALSE(indicator(w, curated_.image(i), v, std::min(theta + 0.05, 0.999), 1));
      }
    }
  }
}

TEST_F(MetricsOnToy, ThetaOneBlindsEverything) {
  const auto v = PerturbationD::zeros_like(curated_.image(0), 0.0);
  EXPECT_EQ(evaluate_blind_degree(curated_, testing::toy_detector(), v, 1.0).b_img, 0.0);
}

TEST(Metrics, EmptyCuratedSetIsRejected) {
  CuratedDataset c;
  c.source = testing::toy_dataset();
  EXPECT_THROW(evaluate_blind_degree(c, testing::toy_detector(), PerturbationD::zeros(64, 64, 3, 0.0), 0.7),
               ConfigError);
}

BlindDegreeCurve curve(int id, std::string name, std::vector<double> b_img) {
  BlindDegreeCurve c{id, std::move(name), {}};
  for (std::size_t i = 0; i < b_img.size(); ++i) {
    c.samples.push_back({static_cast<int>(i * 10), static_cast<double>(i), b_img[i], 2 * b_img[i]});
  }
  return c;
}

TEST(Ranking, AreaIsTrapezoidal) {
  const auto c = curve(0, "a", {1.0, 0.5, 0.0});
  EXPECT_DOUBLE_EQ(curve_area(c, SweepAxis::kEpoch, BlindLevel::kImage), 10 * 0.75 + 10 * 0.25);
  EXPECT_DOUBLE_EQ(curve_area(c, SweepAxis::kNorm, BlindLevel::kInstance), 2.0);
}

TEST(Ranking, DominatingCurveRanksFirst) {
  const std::vector<BlindDegreeCurve> cs = {curve(0, "low", {1.0, 0.2, 0.1}), curve(1, "high", {1.0, 0.9, 0.8})};
  const auto col = rank_resilience(cs, SweepAxis::kEpoch, BlindLevel::kImage);
  ASSERT_EQ(col.order.size(), 2u);
  EXPECT_EQ(col.order[0].class_name, "high");
  EXPECT_FALSE(col.order[0].tied);
}

TEST(Ranking, OrderMatchesSortOracle) {
  const std::vector<double> levels = {0.9, 0.5, 0.7, 0.3, 0.1};
  std::vector<BlindDegreeCurve> cs;
  for (int i = 0; i < 5; ++i) cs.push_back(curve(i, "c" + std::to_string(i), {1.0, levels[i], levels[i]}));
  const auto col = rank_resilience(cs, SweepAxis::kNorm, BlindLevel::kImage);
  std::vector<int> want = {0, 1, 2, 3, 4};
  std::sort(want.begin(), want.end(), [&](int a, int b) { return levels[a] > levels[b]; });
  for (int i = 0; i < 5; ++i) EXPECT_EQ(col.order[i].class_id, want[i]);
}

TEST(Ranking, TiesFallBackToFinalValueThenId) {
  // Equal areas, different final values.
  const std::vector<BlindDegreeCurve> a = {curve(0, "a", {0.5, 0.5, 0.0}), curve(1, "b", {1.0, 0.0, 0.5})};
  const auto col = rank_resilience(a, SweepAxis::kNorm, BlindLevel::kImage);
  EXPECT_EQ(col.order[0].class_name, "b");
  EXPECT_FALSE(col.order[0].tied);
  // Identical curves: class id decides and both are flagged.
  const std::vector<BlindDegreeCurve> b = {curve(3, "z", {1.0, 0.5}), curve(2, "y", {1.0, 0.5})};
  const auto tie = rank_resilience(b, SweepAxis::kEpoch, BlindLevel::kImage);
  EXPECT_EQ(tie.order[0].class_id, 2);
  EXPECT_TRUE(tie.order[0].tied);
  EXPECT_TRUE(tie.order[1].tied);
  const auto table = render_ranking_table(rank_all(b, b));
  EXPECT_NE(table.find("y*"), std::string::npos);
}

TEST(Ranking, GridMismatchIsRejected) {
  const std::vector<BlindDegreeCurve> cs = {curve(0, "a", {1.0, 0.5}), curve(1, "b", {1.0, 0.5, 0.2})};
  EXPECT_THROW(rank_resilience(cs, SweepAxis::kEpoch, BlindLevel::kImage), ConfigError);
}

TEST(Ranking, AllColumnsArePermutations) {
  std::vector<BlindDegreeCurve> cs;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 5; ++i) cs.push_back(curve(i, "c" + std::to_string(i), {1.0, u(rng), u(rng), u(rng)}));
  const ResilienceRanking r = rank_all(cs, cs);
  for (const RankColumn* col : {&r.epoch_image, &r.epoch_instance, &r.norm_image, &r.norm_instance}) {
    std::vector<int> ids;
    for (const auto& e : col->order) ids.push_back(e.class_id);
    std::sort(ids.begin(), ids.end());
    EXPECT_EQ(ids, (std::vector<int>{0, 1, 2, 3, 4}));
  }
  const auto doc = nlohmann::json::parse(ranking_json(r));
  EXPECT_EQ(doc["norm_instance"]["order"].size(), 5u);
  EXPECT_NE(render_ranking_table(r).find("Instance"), std::string::npos);
}

}  // namespace
}  // namespace udos
