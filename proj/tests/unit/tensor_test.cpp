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

#include "udos/tensor.hpp"

namespace udos {
namespace {

Image random_tensor(std::mt19937_64& rng, double lo, double hi, int h = 5, int w = 7, int c = 3) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image t(h, w, c);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.array()[i] = u(rng);
  return t;
}

TEST(ImageTensor, InterleavedLayout) {
  Image t(2, 3, 3);
  t(1, 2, 0) = 5.0;
  t(0, 1, 2) = 7.0;
  EXPECT_EQ(t.array()[(1 * 3 + 2) * 3 + 0], 5.0);
  EXPECT_EQ(t.array()[(0 * 3 + 1) * 3 + 2], 7.0);
}

TEST(ImageTensor, RejectsBadShapes) {
  EXPECT_THROW(Image(0, 3, 3), ConfigError);
  EXPECT_THROW(Image(2, 2, 3, Image::Array::Zero(11)), ConfigError);
}

TEST(ImageTensor, CastRoundTrip) {
  std::mt19937_64 rng(1);
  const Image t = random_tensor(rng, -3, 3);
  const auto f = t.cast<float>();
  EXPECT_EQ(f.height(), 5);
  EXPECT_NEAR(f.cast<double>().array()[4], t.array()[4], 1e-6);
}

TEST(Norms, ZeroTensorIsZeroForEveryNorm) {
  const Image z(4, 4, 3);
  for (NormKind p : {NormKind::kL0, NormKind::kL1, NormKind::kL2, NormKind::kLinf}) {
    EXPECT_EQ(compute_norm(z, p), 0.0);
  }
}

TEST(Norms, OneHotMagnitudeThree) {
  Image t(3, 3, 3);
  t(1, 1, 2) = -3.0;
  EXPECT_EQ(compute_norm(t, NormKind::kL0), 1.0);
  EXPECT_EQ(compute_norm(t, NormKind::kL1), 3.0);
  EXPECT_EQ(compute_norm(t, NormKind::kL2), 3.0);
  EXPECT_EQ(compute_norm(t, NormKind::kLinf), 3.0);
}

TEST(Norms, MatchElementwiseOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Image t = random_tensor(rng, -10, 10);
    double l0 = 0, l1 = 0, l2 = 0, linf = 0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double a = std::abs(t.array()[i]);
      l0 += a != 0.0;
      l1 += a;
      l2 += a * a;
      linf = std::max(linf, a);
    }
    l2 = std::sqrt(l2);
    EXPECT_EQ(compute_norm(t, NormKind::kL0), l0);
    EXPECT_NEAR(compute_norm(t, NormKind::kL1), l1, 1e-9 * l1);
    EXPECT_NEAR(compute_norm(t, NormKind::kL2), l2, 1e-9 * l2);
    EXPECT_EQ(compute_norm(t, NormKind::kLinf), linf);
    EXPECT_NEAR(normalized_l1(t), l1 / static_cast<double>(t.size()), 1e-12);
  }
}

TEST(ProjectLinf, ClampsEntriesToBudget) {
  PerturbationD v{Image(1, 1, 2), 10.0};
  v.data.array() << -20.0, 5.0;
  const PerturbationD p = project_linf(v, 10.0);
  EXPECT_EQ(p.data.array()[0], -10.0);
  EXPECT_EQ(p.data.array()[1], 5.0);
}

TEST(ProjectLinf, MatchesClampOracleAndIsIdempotent) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double xi = 0.5 + trial;
    PerturbationD v{random_tensor(rng, -30, 30), xi};
    const PerturbationD once = project_linf(v, xi);
    for (Eigen::Index i = 0; i < v.data.size(); ++i) {
      EXPECT_EQ(once.data.array()[i], std::min(xi, std::max(-xi, v.data.array()[i])));
    }
    EXPECT_EQ(project_linf(once, xi), once);
    EXPECT_LE(compute_norm(once, NormKind::kLinf), xi);
  }
}

TEST(ProjectLinf, WithinBudgetIsUnchanged) {
  std::mt19937_64 rng(4);
  PerturbationD v{random_tensor(rng, -2, 2), 2.0};
  EXPECT_EQ(project_linf(v, 2.0), v);
}

TEST(ProjectLinf, ZeroBudgetGivesZero) {
  std::mt19937_64 rng(5);
  PerturbationD v{random_tensor(rng, -2, 2), 0.0};
  EXPECT_EQ(compute_norm(project_linf(v, 0.0), NormKind::kLinf), 0.0);
  EXPECT_THROW(project_linf(v, -1.0), ConfigError);
}

TEST(ApplyPerturbation, ClampsToIntensityScale) {
  Image img(1, 1, 3);
  img.array() << 250.0, 3.0, 100.0;
  Image v(1, 1, 3);
  v.array() << 10.0, -10.0, 1.5;
  const Image out = apply_perturbation(img, v);
  EXPECT_EQ(out.array()[0], 255.0);
  EXPECT_EQ(out.array()[1], 0.0);
  EXPECT_EQ(out.array()[2], 101.5);
  EXPECT_THROW(apply_perturbation(img, Image(1, 2, 3)), ConfigError);
}

}  // namespace
}  // namespace udos
