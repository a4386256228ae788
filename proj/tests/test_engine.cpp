/*
 * Copyright 2026 The MACQ Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include "support.hpp"

namespace macq {
namespace {

using testing::random_point;

EngineConfig levels_only(std::vector<double> levels) {
  EngineConfig cfg;
  cfg.levels = std::move(levels);
  return cfg;
}

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double max_abs(const std::vector<Matrix>& blocks) {
  double out = 0.0;
  for (const auto& b : blocks) out = std::max(out, max_abs(b));
  return out;
}

double max_offdiag(const std::vector<Matrix>& blocks) {
  double out = 0.0;
  for (const auto& b : blocks) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      for (Eigen::Index k = 0; k < b.cols(); ++k) {
        if (j != k) out = std::max(out, std::abs(b(j, k)));
      }
    }
  }
  return out;
}

TEST(Engine, ConstantModel) {
  const auto p = make_synthetic("linear", 2000, 1);
  const AttributionEngine engine(make_constant_model(5, -0.7), p.data.standardized);
  const AttributionReport r = engine.analyze(Vector::Constant(5, 0.3));
  EXPECT_EQ(max_abs(r.S), 0.0);
  EXPECT_EQ(max_abs(r.T), 0.0);
  EXPECT_EQ(r.residuals_first_order.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.residuals_second_order.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(max_abs(Matrix(engine.individual(Vector::Zero(5), {0, 1, 2, 3, 4}).omega)), 0.0);
}

TEST(Engine, ThreeAtomLinearFixture) {
  // theta in {1, 3, 5}; conditioning on theta = 3 isolates x = 1
  const auto p = make_synthetic("linear-3atom", 3000, 1);
  const AttributionEngine engine(p.model, p.data.standardized, levels_only({2.0 / 3.0}));
  const Matrix S = engine.first_order(Vector::Zero(1));
  EXPECT_NEAR(S(0, 0), 2.0, 1e-9);
  EXPECT_EQ(engine.grid().quantiles(0), 3.0);
}

TEST(Engine, FourAtomQuadraticFixture) {
  // theta = x^2 on {-2,-1,1,2}; the level theta = 4 holds x in {-2, 2}
  const auto p = make_synthetic("quadratic-4atom", 4000, 1);
  const AttributionEngine engine(p.model, p.data.standardized, levels_only({0.75}));
  EXPECT_EQ(engine.grid().quantiles(0), 4.0);
  const AttributionReport r = engine.analyze(Vector::Zero(1));
  EXPECT_NEAR(r.S(0, 0), 8.0, 1e-9);  // E[x * 2x]
  EXPECT_NEAR(r.T[0](0, 0), 8.0, 1e-9);  // E[x^2 * 2]
}

TEST(Engine, ProductModelInteractionEqualsLevelValue) {
  const auto p = make_synthetic("product", 10000, 2);
  const AttributionEngine engine(p.model, p.data.standardized);
  const AttributionReport r = engine.analyze(Vector::Zero(2));
  // x1 x2 * d2theta/dx1dx2 = theta instance by instance
  const Vector smoothed_theta = engine.smoother().smooth(engine.derivatives().values);
  for (std::size_t l = 0; l < r.T.size(); ++l) {
    EXPECT_NEAR(r.T[l](0, 1), smoothed_theta(static_cast<Eigen::Index>(l)), 1e-10);
    EXPECT_EQ(r.T[l](0, 0), 0.0);
    // V1 = S1 - T12/2 - T11/2 with T11 = 0
    EXPECT_NEAR(r.V(static_cast<Eigen::Index>(l), 0), r.S(static_cast<Eigen::Index>(l), 0) - 0.5 * r.T[l](0, 1), 1e-12);
  }
  // exchangeable features: x_j theta_j = theta for both j
  EXPECT_LT(max_abs(Matrix(r.V.col(0) - r.V.col(1))), 1e-6);
}

TEST(Engine, LinearModelProperties) {
  const auto p = make_synthetic("linear", 3000, 3);
  const AttributionEngine engine(p.model, p.data.standardized);
  Rng rng(1);
  const Vector a = random_point(rng, 5);
  const AttributionReport r = engine.analyze(a);
  EXPECT_LT(max_abs(r.T), 1e-12);
  EXPECT_LT((r.C1 - r.C2).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((r.C1 - r.C22).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(max_abs(Matrix(r.V - r.S)), 1e-12);
  EXPECT_TRUE(r.interactions.empty());
  EXPECT_TRUE(screen_interactions(r.T, 1e-9).empty());
  const auto ic = engine.individual(a, {0, 3});
  const auto& beta = std::static_pointer_cast<const LinearModel>(p.model)->coefficients();
  for (Eigen::Index i = 0; i < 50; ++i) {
    EXPECT_DOUBLE_EQ(ic.omega(i, 0), beta(0) * (p.data.standardized(i, 0) - a(0)));
    EXPECT_DOUBLE_EQ(ic.omega(i, 1), beta(3) * (p.data.standardized(i, 3) - a(3)));
  }
}

TEST(Engine, LinearExactOnAtoms) {
  const auto p = make_synthetic("linear-3atom", 3000, 1);
  const AttributionEngine engine(p.model, p.data.standardized, levels_only({0.2, 0.5, 0.9}));
  for (double a0 : {0.0, -1.5, 4.0}) {
    const AttributionReport r = engine.analyze(Vector::Constant(1, a0));
    EXPECT_LT(r.residuals_first_order.cwiseAbs().maxCoeff(), 1e-6) << a0;
    EXPECT_LT((r.C1 - r.quantiles).cwiseAbs().maxCoeff(), 1e-9) << a0;
  }
}

TEST(Engine, AdditiveModelHasNoInteractions) {
  const auto p = make_synthetic("additive-tanh", 4000, 4);
  const AttributionEngine engine(p.model, p.data.standardized);
  const AttributionReport r = engine.analyze(Vector::Constant(3, 0.2));
  EXPECT_LT(max_offdiag(r.T), 1e-8);
  EXPECT_LT((r.C2 - r.C22).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_GT(max_abs(r.T), 1e-3);  // diagonal curvature is present
}

TEST(Engine, CurveIdentities) {
  const auto p = make_synthetic("nonlinear", 5000, 5);
  const AttributionEngine engine(p.model, p.data.standardized);
  Rng rng(2);
  for (int t = 0; t < 3; ++t) {
    const Vector a = random_point(rng, 4, 0.5);
    const AttributionReport r = engine.analyze(a);
    for (std::size_t l = 0; l < r.levels.size(); ++l) {
      const auto li = static_cast<Eigen::Index>(l);
      const Matrix& T = r.T[l];
      EXPECT_LT(max_abs(Matrix(T - T.transpose())), 1e-10);
      const double c1 = r.reference_value + r.S.row(li).sum();
      double diag = 0.0, off = 0.0;
      for (int j = 0; j < 4; ++j) {
        diag += T(j, j);
        for (int k = j + 1; k < 4; ++k) off += T(j, k);
      }
      EXPECT_NEAR(r.C1(li), c1, 1e-12);
      EXPECT_NEAR(r.C2(li), c1 - 0.5 * diag, 1e-12);
      EXPECT_NEAR(r.C22(li), c1 - 0.5 * diag - off, 1e-12);
      EXPECT_NEAR(r.reference_value + r.V.row(li).sum(), r.C22(li), 1e-12);
      EXPECT_EQ(r.residuals_first_order(li), std::abs(r.quantiles(li) - r.C1(li)));
    }
    EXPECT_NO_THROW(validate_attribution(r));
  }
}

TEST(Engine, SmoothingIsLinearAcrossFeatures) {
  const auto p = make_synthetic("nonlinear", 3000, 6);
  const AttributionEngine engine(p.model, p.data.standardized);
  const Vector a = Vector::Constant(4, 0.1);
  const auto ic = engine.individual(a, {0, 1, 2, 3});
  const Vector total = engine.smoother().smooth(Vector(ic.omega.rowwise().sum()));
  const Vector summed = ic.band_mean.rowwise().sum();
  EXPECT_LT((total - summed).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Engine, ReferenceShiftConsistency) {
  const auto p = make_synthetic("nonlinear", 3000, 7);
  Vector a(4);
  a << 0.3, -0.2, 0.5, 1.0;
  const AttributionEngine direct(p.model, p.data.standardized);
  RowMatrix shifted = p.data.standardized.rowwise() - a.transpose();
  const AttributionEngine moved(std::make_shared<ShiftedModel>(p.model, a), shifted);
  const AttributionReport r1 = direct.analyze(a);
  const AttributionReport r2 = moved.analyze(Vector::Zero(4));
  EXPECT_LT(max_abs(Matrix(r1.S - r2.S)), 1e-10);
  for (std::size_t l = 0; l < r1.T.size(); ++l) EXPECT_LT(max_abs(Matrix(r1.T[l] - r2.T[l])), 1e-10);
  EXPECT_LT((r1.C22 - r2.C22).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(r1.reference_value, r2.reference_value, 1e-14);
}

TEST(Engine, PlantedInteractionScreening) {
  const auto p = make_synthetic("planted-interaction", 10000, 8);
  const AttributionEngine engine(p.model, p.data.standardized);
  const AttributionReport r = engine.analyze(Vector::Zero(3));
  ASSERT_EQ(r.interactions.size(), 1u);
  EXPECT_EQ(r.interactions[0].j, 0);
  EXPECT_EQ(r.interactions[0].k, 1);
  // enumeration over {-1,0,1}^2: T12 = 3 x1 x2 takes values in {-3, 0, 3}
  EXPECT_NEAR(r.interactions[0].max_abs, 3.0, 0.3);
  EXPECT_EQ(screen_interactions(r.T, 0.0).size(), 1u);
}

TEST(Engine, ZeroThresholdReturnsAllNonzeroPairs) {
  const auto net = testing::bench_network(4, 3);
  const auto p = make_synthetic("nonlinear", 2000, 9);
  const AttributionEngine engine(net, p.data.standardized);
  const auto pairs = screen_interactions(engine.second_order(Vector::Zero(4)), 0.0);
  EXPECT_EQ(pairs.size(), 6u);
  for (std::size_t i = 1; i < pairs.size(); ++i) EXPECT_GE(pairs[i - 1].max_abs, pairs[i].max_abs);
}

TEST(Engine, InputChecks) {
  const auto p = make_synthetic("linear", 500, 1);
  const AttributionEngine engine(p.model, p.data.standardized);
  EXPECT_THROW(engine.analyze(Vector::Zero(4)), ShapeError);
  EXPECT_THROW(engine.individual(Vector::Zero(5), {7}), ArgumentError);
  EXPECT_THROW(AttributionEngine(p.model, RowMatrix::Zero(10, 4)), ShapeError);
}

// ---------------------------------------------------------------------------
// Reference point objective

TEST(Reference, LinearModelObjectiveVanishes) {
  const auto p = make_synthetic("linear-3atom", 3000, 1);
  const AttributionEngine engine(p.model, p.data.standardized);
  const ReferenceObjective G(engine);
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const Vector a = random_point(rng, 1, 3.0);
    EXPECT_LT(G.value(a), 1e-10);
    EXPECT_LT(G.gradient(a).cwiseAbs().maxCoeff(), 1e-10);
  }
  const auto st = optimize_reference(G, Vector::Constant(1, 0.4), {});
  for (double g : st.objective) EXPECT_LT(g, 1e-10);
  EXPECT_LT(std::abs(st.best_a(0) - 0.4), 1e-12);
}

TEST(Reference, ConstantModelObjectiveVanishes) {
  const auto p = make_synthetic("nonlinear", 1000, 1);
  const AttributionEngine engine(make_constant_model(4, 2.0), p.data.standardized);
  const ReferenceObjective G(engine);
  EXPECT_EQ(G.value(Vector::Constant(4, 3.0)), 0.0);
  EXPECT_EQ(G.value(Vector::Zero(4)), 0.0);
}

// Enumeration oracle for quadratic models on atoms: the second-order Taylor
// expansion is exact, so every conditional residual is F^{-1} - E[theta | level]
// and both sides coincide on a tie block.
TEST(Reference, QuadraticObjectiveMatchesEnumerationOracle) {
  const auto p = make_synthetic("quadratic-4atom", 4000, 1);
  const AttributionEngine engine(p.model, p.data.standardized);
  const ReferenceObjective G(engine);
  for (double a : {0.0, 5.0, -2.5}) EXPECT_LT(G.value(Vector::Constant(1, a)), 1e-9) << a;

  Matrix A(2, 2);
  A << 1.0, 0.4, 0.4, -0.5;
  const auto model = std::make_shared<AnalyticModel>(
      "xAx", 2, [A](const Vector& x) { return x.dot(A * x); },
      [A](const Vector& x) { return Vector(2.0 * A * x); }, [A](const Vector&) { return Matrix(2.0 * A); });
  RowMatrix X(3000, 2);
  for (int i = 0; i < 3000; ++i) {
    X(i, 0) = static_cast<double>(i % 3) - 1.0;
    X(i, 1) = static_cast<double>((i / 3) % 2);
  }
  const AttributionEngine e2(model, X, levels_only({0.1, 0.3, 0.5, 0.7, 0.9}));
  const ReferenceObjective G2(e2);
  for (const Vector& a : {Vector(Vector::Zero(2)), Vector(Vector::Constant(2, 5.0))}) {
    EXPECT_LT(G2.value(a), 1e-9);
  }
}

TEST(Reference, ObjectiveIsNonNegative) {
  const auto p = make_synthetic("nonlinear", 3000, 2);
  const AttributionEngine engine(p.model, p.data.standardized);
  const ReferenceObjective G(engine);
  Rng rng(4);
  for (int t = 0; t < 20; ++t) EXPECT_GE(G.value(random_point(rng, 4, 2.0)), 0.0);
}

TEST(Reference, GradientMatchesFiniteDifferences) {
  const auto p = make_synthetic("nonlinear", 3000, 3);
  const AttributionEngine engine(p.model, p.data.standardized);
  const ReferenceObjective G(engine);
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const Vector a = random_point(rng, 4, 0.7);
    const Vector g = G.gradient(a);
    Vector fd(4);
    for (int j = 0; j < 4; ++j) {
      const double h = 1e-6;
      Vector up = a, dn = a;
      up(j) += h;
      dn(j) -= h;
      fd(j) = (G.value(up) - G.value(dn)) / (2.0 * h);
    }
    EXPECT_LT((g - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Reference, GradientEquivariantUnderFeatureSwap) {
  const auto model = std::make_shared<AnalyticModel>(
      "sym", 2,
      [](const Vector& x) { return std::tanh(x(0)) + std::tanh(x(1)) + 0.5 * x(0) * x(0) * x(1) * x(1); },
      [](const Vector& x) {
        Vector g(2);
        g(0) = 1.0 - std::pow(std::tanh(x(0)), 2) + x(0) * x(1) * x(1);
        g(1) = 1.0 - std::pow(std::tanh(x(1)), 2) + x(1) * x(0) * x(0);
        return g;
      },
      [](const Vector& x) {
        Matrix h(2, 2);
        const double t0 = std::tanh(x(0)), t1 = std::tanh(x(1));
        h(0, 0) = -2.0 * t0 * (1.0 - t0 * t0) + x(1) * x(1);
        h(1, 1) = -2.0 * t1 * (1.0 - t1 * t1) + x(0) * x(0);
        h(0, 1) = h(1, 0) = 2.0 * x(0) * x(1);
        return h;
      });
  const auto p = make_synthetic("product", 3000, 6);
  RowMatrix swapped(p.data.standardized.rows(), 2);
  swapped.col(0) = p.data.standardized.col(1);
  swapped.col(1) = p.data.standardized.col(0);
  const AttributionEngine e1(model, p.data.standardized), e2(model, swapped);
  const ReferenceObjective G1(e1), G2(e2);
  Vector a(2), b(2);
  a << 0.3, -0.4;
  b << -0.4, 0.3;
  const Vector g1 = G1.gradient(a), g2 = G2.gradient(b);
  EXPECT_NEAR(g1(0), g2(1), 1e-10);
  EXPECT_NEAR(g1(1), g2(0), 1e-10);
  EXPECT_NEAR(G1.value(a), G2.value(b), 1e-10);
  const Vector diag = Vector::Constant(2, 0.25);
  const Vector gd1 = G1.gradient(diag), gd2 = G2.gradient(diag);
  EXPECT_NEAR(gd1(0), gd2(1), 1e-10);
}

TEST(Reference, SingleStepHasPrescribedLength) {
  const auto p = make_synthetic("nonlinear", 3000, 4);
  const AttributionEngine engine(p.model, p.data.standardized);
  const ReferenceObjective G(engine);
  DescentConfig cfg;
  cfg.steps = 1;
  const Vector a0 = Vector::Zero(4);
  const auto st = optimize_reference(G, a0, cfg);
  const Vector g = G.gradient(a0);
  const Vector step = st.a - a0;
  EXPECT_NEAR(step.norm(), 1e-2, 1e-15);
  EXPECT_LT((step + 1e-2 * g / g.norm()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(st.iteration, 1);
}

TEST(Reference, NonlinearModelHalvesObjective) {
  const auto p = make_synthetic("nonlinear", 10000, 1);
  const AttributionEngine engine(p.model, p.data.standardized);
  const ReferenceObjective G(engine);
  DescentConfig cfg;
  cfg.steps = 100;
  const auto st = optimize_reference(G, Vector::Zero(4), cfg);
  EXPECT_LE(st.best_value, 0.5 * st.objective.front());
  for (std::size_t t = 1; t < st.best_objective.size(); ++t) {
    EXPECT_LE(st.best_objective[t], st.best_objective[t - 1]);
  }
  EXPECT_NEAR(G.value(st.best_a), st.best_value, 1e-12);
}

TEST(Reference, BacktrackingNeverIncreases) {
  const auto p = make_synthetic("nonlinear", 3000, 5);
  const AttributionEngine engine(p.model, p.data.standardized);
  const ReferenceObjective G(engine);
  DescentConfig cfg;
  cfg.steps = 200;
  cfg.rate = 0.2;
  cfg.backtracking = true;
  const auto st = optimize_reference(G, Vector::Zero(4), cfg);
  for (std::size_t t = 1; t < st.objective.size(); ++t) EXPECT_LE(st.objective[t], st.objective[t - 1] + 1e-12);
}

}  // namespace
}  // namespace macq
