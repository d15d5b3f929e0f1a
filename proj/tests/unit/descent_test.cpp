#include "floorlab/descent.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace floorlab {
namespace {

bool on_sphere(std::span<const double> w, double tol) {
  const double r = std::sqrt(static_cast<double>(w.size()));
  return std::abs(norm2(w) - r) <= tol * r;
}

TEST(DescentConfigTest, ValidatesFields) {
  DescentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.step_size = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.grad_tol = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.max_steps = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(RandomSpherePoint, OneSpinIsPlusOrMinusOne) {
  RngStream s(1);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_sphere_point(1, s);
    EXPECT_NEAR(std::abs(p[0]), 1.0, 1e-15);
  }
}

TEST(RandomSpherePoint, CoordinatesAreCentred) {
  constexpr int kDraws = 10000;
  RngStream s(2);
  double sums[3] = {0, 0, 0};
  for (int d = 0; d < kDraws; ++d) {
    const auto p = random_sphere_point(3, s);
    EXPECT_TRUE(on_sphere(p.coords(), 1e-12));
    for (int i = 0; i < 3; ++i) sums[i] += p[static_cast<std::size_t>(i)];
  }
  // Each coordinate has variance 1 on S^2(sqrt 3).
  for (double s_i : sums) EXPECT_LT(std::abs(s_i / kDraws), 3.0 / std::sqrt(double(kDraws)));
}

TEST(GradientDescent, FlatLandscapeStopsImmediately) {
  const CouplingTensor x(4, std::vector<double>(64, 0.0), 1.0, 0);
  RngStream s(3);
  const auto rec = gradient_descent(x, random_sphere_point(4, s), DescentConfig{});
  EXPECT_EQ(rec.steps_taken, 0u);
  EXPECT_EQ(rec.stop_reason, StopReason::kGradientBelowTol);
  EXPECT_EQ(rec.terminal_energy, 0.0);
}

TEST(GradientDescent, OneSpinNeverMoves) {
  const CouplingTensor x(1, {2.0}, 1.0, 0);
  for (double start : {1.0, -1.0}) {
    const auto rec = gradient_descent(x, SpherePoint({start}), DescentConfig{});
    EXPECT_EQ(rec.steps_taken, 0u);
    EXPECT_EQ(rec.sphere_point()[0], start);
    EXPECT_EQ(rec.terminal_energy, 2.0 * start);
  }
}

TEST(GradientDescent, EveryIterateStaysOnSphere) {
  RngStream s(4);
  const auto x = sample_couplings(20, 1.0, s);
  DescentConfig cfg;
  cfg.step_size = 0.05;
  std::size_t visits = 0;
  bool all_on = true;
  gradient_descent(x, random_sphere_point(20, s), cfg,
                   [&](std::size_t, double, std::span<const double> w) {
                     ++visits;
                     all_on = all_on && on_sphere(w, 1e-10);
                   });
  EXPECT_GT(visits, 10u);
  EXPECT_TRUE(all_on);
}

TEST(GradientDescent, SmallStepEnergyIsNonIncreasing) {
  RngStream s(5);
  const auto x = sample_couplings(30, 1.0, s);
  DescentConfig cfg;
  cfg.step_size = 0.01;
  cfg.record_every = 1;
  const auto rec = gradient_descent(x, random_sphere_point(30, s), cfg);
  ASSERT_GT(rec.trace.size(), 2u);
  for (std::size_t i = 1; i < rec.trace.size(); ++i) {
    EXPECT_LE(rec.trace[i].value, rec.trace[i - 1].value + 1e-9 * 30) << i;
  }
  EXPECT_EQ(rec.stop_reason, StopReason::kGradientBelowTol);
  EXPECT_LT(rec.final_grad_norm, cfg.grad_tol);
}

TEST(GradientDescent, TerminalEnergyMatchesTerminalPoint) {
  RngStream s(6);
  const auto x = sample_couplings(15, 1.0, s);
  const auto rec = gradient_descent(x, random_sphere_point(15, s), DescentConfig{});
  const double h = hamiltonian(x, rec.sphere_point());
  EXPECT_LT(std::abs(rec.terminal_energy - h), 1e-10 * std::abs(h));
  EXPECT_DOUBLE_EQ(rec.normalized_energy, rec.terminal_energy / 15.0);
}

TEST(GradientDescent, TraceStrideAndBudget) {
  RngStream s(7);
  const auto x = sample_couplings(10, 1.0, s);
  DescentConfig cfg;
  cfg.step_size = 0.02;
  cfg.max_steps = 50;
  cfg.grad_tol = 1e-300;
  cfg.record_every = 10;
  const auto rec = gradient_descent(x, random_sphere_point(10, s), cfg);
  EXPECT_EQ(rec.stop_reason, StopReason::kMaxSteps);
  EXPECT_EQ(rec.steps_taken, 50u);
  ASSERT_EQ(rec.trace.size(), 6u);
  for (std::size_t i = 0; i < rec.trace.size(); ++i) {
    EXPECT_DOUBLE_EQ(rec.trace[i].budget, 0.02 * 10.0 * double(i));
  }
}

TEST(GradientDescent, DeterministicForSameInputs) {
  RngStream s(8);
  const auto x = sample_couplings(12, 1.0, s);
  const auto w0 = random_sphere_point(12, s);
  DescentConfig cfg;
  cfg.record_every = 3;
  const auto a = gradient_descent(x, w0, cfg);
  const auto b = gradient_descent(x, w0, cfg);
  EXPECT_EQ(a.sphere_point(), b.sphere_point());
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].value, b.trace[i].value);
}

TEST(GradientDescent, HugeStepTriggersDivergenceStop) {
  RngStream s(9);
  const auto x = sample_couplings(10, 1.0, s);
  DescentConfig cfg;
  cfg.step_size = 50.0;
  cfg.divergence_window = 1;
  cfg.max_steps = 10000;
  const auto rec = gradient_descent(x, random_sphere_point(10, s), cfg);
  EXPECT_EQ(rec.stop_reason, StopReason::kDivergence);
  EXPECT_LT(rec.steps_taken, cfg.max_steps);
}

TEST(StopReasonText, Names) {
  EXPECT_EQ(to_string(StopReason::kGradientBelowTol), "gradient-below-tol");
  EXPECT_EQ(to_string(StopReason::kMaxSteps), "max-steps");
  EXPECT_EQ(to_string(StopReason::kDivergence), "divergence");
}

TEST(SgdSpinGlass, SinglePieceIsBitIdenticalToGradientDescent) {
  RngStream field_stream = derive_stream(21, "couplings", 0);
  RngStream tensor_stream = derive_stream(21, "couplings", 0);
  const auto field = decompose_field(16, 1, field_stream);
  const auto x = sample_couplings(16, 1.0, tensor_stream);
  RngStream init = derive_stream(21, "init", 0);
  const auto w0 = random_sphere_point(16, init);
  DescentConfig cfg;
  cfg.record_every = 1;
  cfg.step_size = 0.05;
  std::vector<std::vector<double>> gd_path, sgd_path;
  const auto gd = gradient_descent(x, w0, cfg, [&](std::size_t, double, std::span<const double> w) {
    gd_path.emplace_back(w.begin(), w.end());
  });
  const auto sgd =
      sgd_spin_glass(field, w0, cfg, PassOrder::kCyclic, derive_stream(21, "sgd-order", 0),
                     [&](std::size_t, double, std::span<const double> w) {
                       sgd_path.emplace_back(w.begin(), w.end());
                     });
  EXPECT_EQ(gd_path, sgd_path);
  EXPECT_EQ(gd.sphere_point(), sgd.sphere_point());
  EXPECT_EQ(gd.steps_taken, sgd.steps_taken);
  EXPECT_EQ(gd.stop_reason, sgd.stop_reason);
  ASSERT_EQ(gd.trace.size(), sgd.trace.size());
  for (std::size_t i = 0; i < gd.trace.size(); ++i) {
    EXPECT_EQ(gd.trace[i].value, sgd.trace[i].value);
    EXPECT_EQ(gd.trace[i].budget, sgd.trace[i].budget);
  }
}

TEST(SgdSpinGlass, CyclicEpochDisplacementEqualsFullGradient) {
  // At frozen w, the sub-field gradients of one epoch sum to the full gradient.
  RngStream s(22);
  const auto field = decompose_field(9, 5, s);
  const auto w = random_sphere_point(9, s);
  auto full = euclidean_gradient(field.summed(), w);
  std::vector<double> acc(9, 0.0);
  for (std::size_t p = 0; p < 5; ++p) {
    const auto g = euclidean_gradient(field.subfield(p), w);
    for (std::size_t i = 0; i < 9; ++i) acc[i] += g[i];
  }
  for (std::size_t i = 0; i < 9; ++i)
    EXPECT_NEAR(acc[i], full[i], 1e-12 * (1.0 + std::abs(full[i])));
}

TEST(SgdSpinGlass, IteratesStayOnSphereAndStopUsesFullField) {
  RngStream s(23);
  const auto field = decompose_field(12, 4, s);
  DescentConfig cfg;
  cfg.step_size = 0.02;
  bool all_on = true;
  const auto rec =
      sgd_spin_glass(field, random_sphere_point(12, s), cfg, PassOrder::kUniform, RngStream(5),
                     [&](std::size_t, double, std::span<const double> w) {
                       all_on = all_on && on_sphere(w, 1e-10);
                     });
  EXPECT_TRUE(all_on);
  const double h = hamiltonian(field.summed(), rec.sphere_point());
  EXPECT_LT(std::abs(rec.terminal_energy - h), 1e-10 * std::abs(h));
}

TEST(RefineWithGd, NeverRaisesEnergy) {
  RngStream s(24);
  const auto field = decompose_field(20, 10, s);
  DescentConfig sgd_cfg;
  sgd_cfg.step_size = 0.05;
  sgd_cfg.max_steps = 300;
  const auto sgd = sgd_spin_glass(field, random_sphere_point(20, s), sgd_cfg);
  const auto refined = refine_with_gd(field, sgd.sphere_point(), DescentConfig{});
  EXPECT_LE(refined.terminal_energy, sgd.terminal_energy + 1e-12);
  const auto again = refine_with_gd(field, refined.sphere_point(), DescentConfig{});
  EXPECT_LE(again.steps_taken, 1u);
  EXPECT_NEAR(again.terminal_energy, refined.terminal_energy, 1e-9);
}

TEST(TripartiteDescent, FlatLandscapeStopsImmediately) {
  const CouplingTensor x(3, std::vector<double>(27, 0.0), 1.0, 0);
  RngStream s(25);
  const auto rec = tripartite_descent(x, random_product_point(3, s), DescentConfig{});
  EXPECT_EQ(rec.steps_taken, 0u);
  EXPECT_EQ(rec.terminal_energy, 0.0);
}

TEST(TripartiteDescent, EachFactorStaysOnItsSphere) {
  RngStream s(26);
  const auto x = sample_couplings(15, 1.0, s);
  DescentConfig cfg;
  cfg.step_size = 0.05;
  bool all_on = true;
  const auto rec = tripartite_descent(
      x, random_product_point(15, s), cfg, [&](std::size_t, double, std::span<const double> w) {
        for (std::size_t f = 0; f < 3; ++f) {
          all_on = all_on && on_sphere(w.subspan(f * 15, 15), 1e-10);
        }
      });
  EXPECT_TRUE(all_on);
  const double h = tripartite_hamiltonian(x, rec.product_point());
  EXPECT_LT(std::abs(rec.terminal_energy - h), 1e-10 * std::abs(h));
  EXPECT_EQ(rec.stop_reason, StopReason::kGradientBelowTol);
}

}  // namespace
}  // namespace floorlab
