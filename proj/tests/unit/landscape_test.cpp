#include "floorlab/landscape.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "floorlab/errors.hpp"

namespace floorlab {
namespace {

// Independent oracles: direct transcriptions of the energy sums, no shared code
// with the library's fused sweep.
double oracle_energy(std::size_t n, const std::vector<double>& x, const std::vector<double>& a,
                     const std::vector<double>& b, const std::vector<double>& c) {
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) h += x[(i * n + j) * n + k] * a[i] * b[j] * c[k];
    }
  }
  return h / static_cast<double>(n);
}

double oracle_energy(std::size_t n, const std::vector<double>& x, const std::vector<double>& w) {
  return oracle_energy(n, x, w, w, w);
}

std::vector<double> gaussian(std::size_t count, std::uint64_t key) {
  RngStream s(key);
  std::vector<double> v(count);
  s.fill_normal(v, 1.0);
  return v;
}

std::vector<double> on_sphere(std::size_t n, std::uint64_t key) {
  auto v = gaussian(n, key);
  double norm = 0.0;
  for (double e : v) norm += e * e;
  const double scale = std::sqrt(static_cast<double>(n) / norm);
  for (double& e : v) e *= scale;
  return v;
}

CouplingTensor tensor_from(std::size_t n, std::vector<double> entries) {
  return CouplingTensor(n, std::move(entries), 1.0, 0);
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

TEST(TheoryConstantsTest, Values) {
  EXPECT_DOUBLE_EQ(TheoryConstants::e_zero, 1.657);
  EXPECT_DOUBLE_EQ(TheoryConstants::e_infinity, 1.633);
}

TEST(SampleCouplings, ReproducibleWithSameStream) {
  RngStream a(5), b(5);
  const auto x = sample_couplings(2, 1.0, a);
  const auto y = sample_couplings(2, 1.0, b);
  ASSERT_EQ(x.entries().size(), 8u);
  EXPECT_TRUE(std::equal(x.entries().begin(), x.entries().end(), y.entries().begin()));
}

TEST(SampleCouplings, EntryVarianceWithinThreeStandardErrors) {
  for (double sigma : {1.0, 0.5}) {
    RngStream s(17);
    const auto x = sample_couplings(30, sigma, s);
    const auto e = x.entries();
    const double m = static_cast<double>(e.size());
    double sum = 0.0, sum2 = 0.0;
    for (double v : e) {
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / m;
    const double var = (sum2 - m * mean * mean) / (m - 1.0);
    const double target = sigma * sigma;
    EXPECT_LT(std::abs(var - target), 3.0 * target * std::sqrt(2.0 / (m - 1.0))) << sigma;
  }
}

TEST(SampleCouplings, RejectsBadArguments) {
  RngStream s(1);
  EXPECT_THROW(sample_couplings(0, 1.0, s), std::invalid_argument);
  EXPECT_THROW(sample_couplings(2, 0.0, s), std::invalid_argument);
}

TEST(Hamiltonian, ZeroFieldIsZero) {
  const auto x = tensor_from(3, std::vector<double>(27, 0.0));
  EXPECT_EQ(hamiltonian(x, on_sphere(3, 1)), 0.0);
}

TEST(Hamiltonian, OneSpinHandCase) {
  const auto x = tensor_from(1, {2.5});
  EXPECT_DOUBLE_EQ(hamiltonian(x, SpherePoint({1.0})), 2.5);
  EXPECT_DOUBLE_EQ(hamiltonian(x, SpherePoint({-1.0})), -2.5);
}

TEST(Hamiltonian, TwoSpinIntegerTensorMatchesOracle) {
  const std::vector<double> ints{1, -2, 3, 4, -5, 6, 7, -8};
  const auto x = tensor_from(2, ints);
  const std::vector<double> w{std::sqrt(2.0), 0.0};
  // Only x_000 survives: (1/2) * 1 * (sqrt 2)^3 = sqrt 2.
  EXPECT_NEAR(hamiltonian(x, w), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(hamiltonian(x, w), oracle_energy(2, ints, w), 1e-15);
  const auto v = on_sphere(2, 9);
  EXPECT_NEAR(hamiltonian(x, v), oracle_energy(2, ints, v), 1e-13);
}

TEST(Hamiltonian, RandomInstancesMatchOracle) {
  for (std::size_t n : {2u, 5u, 20u}) {
    const auto entries = gaussian(n * n * n, 100 + n);
    const auto x = tensor_from(n, entries);
    const auto w = on_sphere(n, 200 + n);
    EXPECT_LT(rel_err(hamiltonian(x, w), oracle_energy(n, entries, w)), 1e-12) << n;
    EXPECT_LT(rel_err(evaluate_field(x, w).energy, oracle_energy(n, entries, w)), 1e-12) << n;
  }
}

TEST(Hamiltonian, OddSymmetryIsExact) {
  RngStream s(4);
  const auto x = sample_couplings(7, 1.0, s);
  const SpherePoint w = retract_to_sphere(gaussian(7, 8));
  EXPECT_EQ(hamiltonian(x, w.negated()), -hamiltonian(x, w));
}

TEST(Hamiltonian, PointwiseVarianceIsN) {
  // Fixed w, 2000 coupling draws: H is Gaussian with variance n.
  constexpr std::size_t kN = 50;
  constexpr int kDraws = 2000;
  const SpherePoint w = retract_to_sphere(gaussian(kN, 77));
  RngStream s(2718);
  std::vector<double> h(kDraws);
  for (int d = 0; d < kDraws; ++d)
    h[static_cast<std::size_t>(d)] = hamiltonian(sample_couplings(kN, 1.0, s), w);
  double mean = 0.0;
  for (double v : h) mean += v;
  mean /= kDraws;
  double ss = 0.0;
  for (double v : h) ss += (v - mean) * (v - mean);
  const double var = ss / (kDraws - 1);
  const double se = kN * std::sqrt(2.0 / (kDraws - 1));
  EXPECT_LT(std::abs(var - kN), 3.0 * se);
  EXPECT_LT(std::abs(mean), 3.0 * std::sqrt(kN / double(kDraws)));
}

TEST(Hamiltonian, DimensionMismatchThrows) {
  RngStream s(1);
  const auto x = sample_couplings(3, 1.0, s);
  EXPECT_THROW(hamiltonian(x, std::vector<double>{1.0, 1.0}), std::invalid_argument);
}

TEST(EuclideanGradient, OneSpinHandCase) {
  const auto x = tensor_from(1, {1.5});
  const auto g = euclidean_gradient(x, SpherePoint({1.0}));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0], 4.5);
}

TEST(EuclideanGradient, ZeroFieldZeroGradient) {
  const auto x = tensor_from(4, std::vector<double>(64, 0.0));
  for (double v : euclidean_gradient(x, on_sphere(4, 2))) EXPECT_EQ(v, 0.0);
}

TEST(EuclideanGradient, MatchesCentralDifferences) {
  constexpr double kStep = 1e-5;
  for (std::size_t n : {2u, 5u, 20u}) {
    const auto entries = gaussian(n * n * n, 300 + n);
    const auto x = tensor_from(n, entries);
    const auto w = on_sphere(n, 400 + n);
    const auto g = euclidean_gradient(x, w);
    const auto fused = evaluate_field(x, w).gradient;
    for (std::size_t i = 0; i < n; ++i) {
      auto plus = w, minus = w;
      plus[i] += kStep;
      minus[i] -= kStep;
      const double fd =
          (oracle_energy(n, entries, plus) - oracle_energy(n, entries, minus)) / (2.0 * kStep);
      EXPECT_LT(rel_err(g[i], fd), 1e-5) << "n=" << n << " i=" << i;
      EXPECT_LT(rel_err(fused[i], g[i]), 1e-12);
    }
  }
}

TEST(TangentialGradient, OrthogonalToW) {
  for (std::size_t n : {2u, 5u, 20u}) {
    RngStream s(n);
    const auto x = sample_couplings(n, 1.0, s);
    const SpherePoint w = retract_to_sphere(gaussian(n, 50 + n));
    const auto t = tangential_gradient(x, w);
    const auto g = euclidean_gradient(x, w);
    EXPECT_LT(std::abs(dot(t, w.coords())), 1e-10 * norm2(g) * norm2(w.coords())) << n;
  }
}

TEST(TangentialGradient, OneSpinIsZero) {
  const auto x = tensor_from(1, {3.0});
  for (double s : {1.0, -1.0}) EXPECT_EQ(tangential_gradient(x, SpherePoint({s}))[0], 0.0);
}

TEST(TangentialGradient, ProjectionHandCase) {
  std::vector<double> g{2.0, 0.0};
  const std::vector<double> w{std::sqrt(2.0), 0.0};
  project_to_tangent(g, w);
  EXPECT_NEAR(g[0], 0.0, 1e-15);
  EXPECT_EQ(g[1], 0.0);
}

TEST(TangentialGradient, MatchesDerivativeAlongSphereCurves) {
  // d/dt H(retract(w + t v)) at t = 0 equals <tangential grad, v> for tangent v.
  constexpr double kStep = 1e-5;
  for (std::size_t n : {2u, 5u, 20u}) {
    const auto entries = gaussian(n * n * n, 500 + n);
    const auto x = tensor_from(n, entries);
    const SpherePoint w = retract_to_sphere(gaussian(n, 600 + n));
    const auto t = tangential_gradient(x, w);
    auto v = gaussian(n, 700 + n);
    project_to_tangent(v, w.coords());
    auto curve = [&](double step) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = w[i] + step * v[i];
      const auto q = retract_to_sphere(p);
      return oracle_energy(n, entries, std::vector<double>(q.coords().begin(), q.coords().end()));
    };
    const double fd = (curve(kStep) - curve(-kStep)) / (2.0 * kStep);
    EXPECT_LT(rel_err(dot(t, v), fd), 1e-5) << n;
  }
}

TEST(Retraction, HandCase) {
  const auto p = retract_to_sphere(std::vector<double>{3.0, 4.0});
  EXPECT_NEAR(p[0], std::sqrt(2.0) * 0.6, 1e-15);
  EXPECT_NEAR(p[1], std::sqrt(2.0) * 0.8, 1e-15);
}

TEST(Retraction, IdempotentOnSphere) {
  const auto w = on_sphere(9, 3);
  const auto p = retract_to_sphere(w);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(p[i], w[i], 1e-14);
}

TEST(Retraction, NormIsSqrtN) {
  for (std::size_t n : {1u, 3u, 100u}) {
    auto v = gaussian(n, 10 + n);
    for (double& e : v) e *= 1e3;
    const auto p = retract_to_sphere(v);
    EXPECT_LT(std::abs(norm2(p.coords()) - std::sqrt(double(n))), 1e-12 * std::sqrt(double(n)));
  }
}

TEST(Retraction, ZeroVectorIsDegenerate) {
  EXPECT_THROW(retract_to_sphere(std::vector<double>{0.0, 0.0}), DegenerateInputError);
}

TEST(SpherePointTest, RejectsOffSphereCoordinates) {
  EXPECT_THROW(SpherePoint({1.0, 1.0 + 1e-6}), std::invalid_argument);
  EXPECT_NO_THROW(SpherePoint({1.0, 1.0}));
}

TEST(Tripartite, ZeroFieldIsZero) {
  const auto x = tensor_from(2, std::vector<double>(8, 0.0));
  const auto w = on_sphere(2, 1);
  EXPECT_EQ(tripartite_hamiltonian(x, w, w, w), 0.0);
  const auto ev = tripartite_gradient(x, w, w, w);
  for (const auto* g : {&ev.grad1, &ev.grad2, &ev.grad3}) {
    for (double v : *g) EXPECT_EQ(v, 0.0);
  }
}

TEST(Tripartite, DiagonalRestrictionIsHamiltonian) {
  RngStream s(6);
  const auto x = sample_couplings(6, 1.0, s);
  const auto w = on_sphere(6, 2);
  EXPECT_LT(rel_err(tripartite_hamiltonian(x, w, w, w), hamiltonian(x, w)), 1e-13);
}

TEST(Tripartite, TwoSpinIntegerTensorMatchesOracle) {
  const std::vector<double> ints{3, 1, -4, 1, 5, -9, 2, 6};
  const auto x = tensor_from(2, ints);
  const auto a = on_sphere(2, 1), b = on_sphere(2, 2), c = on_sphere(2, 3);
  EXPECT_NEAR(tripartite_hamiltonian(x, a, b, c), oracle_energy(2, ints, a, b, c), 1e-13);
}

TEST(Tripartite, OneSpinProductRule) {
  const auto x = tensor_from(1, {2.0});
  const std::vector<double> a{1.0}, b{-1.0}, c{1.0};
  const auto ev = tripartite_gradient(x, a, b, c);
  EXPECT_DOUBLE_EQ(ev.energy, -2.0);
  EXPECT_DOUBLE_EQ(ev.grad1[0], -2.0);
  EXPECT_DOUBLE_EQ(ev.grad2[0], 2.0);
  EXPECT_DOUBLE_EQ(ev.grad3[0], -2.0);
}

TEST(Tripartite, GradientsMatchCentralDifferences) {
  constexpr double kStep = 1e-5;
  for (std::size_t n : {2u, 5u, 20u}) {
    const auto entries = gaussian(n * n * n, 800 + n);
    const auto x = tensor_from(n, entries);
    std::vector<std::vector<double>> f{on_sphere(n, 1), on_sphere(n, 2), on_sphere(n, 3)};
    const auto ev = tripartite_gradient(x, f[0], f[1], f[2]);
    EXPECT_LT(rel_err(ev.energy, oracle_energy(n, entries, f[0], f[1], f[2])), 1e-12);
    const std::vector<double>* grads[3] = {&ev.grad1, &ev.grad2, &ev.grad3};
    for (int which = 0; which < 3; ++which) {
      for (std::size_t i = 0; i < n; ++i) {
        auto plus = f, minus = f;
        plus[which][i] += kStep;
        minus[which][i] -= kStep;
        const double fd = (oracle_energy(n, entries, plus[0], plus[1], plus[2]) -
                           oracle_energy(n, entries, minus[0], minus[1], minus[2])) /
                          (2.0 * kStep);
        EXPECT_LT(rel_err((*grads[which])[i], fd), 1e-5) << n << " " << which << " " << i;
      }
    }
  }
}

TEST(Decomposition, SinglePieceEqualsSampleCouplings) {
  RngStream a(31), b(31);
  const auto field = decompose_field(6, 1, a);
  const auto x = sample_couplings(6, 1.0, b);
  ASSERT_EQ(field.p_count(), 1u);
  const auto f = field.summed().entries();
  const auto e = x.entries();
  ASSERT_EQ(f.size(), e.size());
  for (std::size_t i = 0; i < e.size(); ++i) EXPECT_EQ(f[i], e[i]);
  EXPECT_EQ(field.subfield(0).sigma(), 1.0);
}

TEST(Decomposition, SummedEntriesHaveUnitVariance) {
  RngStream s(44);
  const auto field = decompose_field(30, 4, s);
  EXPECT_DOUBLE_EQ(field.subfield(0).sigma(), 0.5);
  const auto e = field.summed().entries();
  const double m = static_cast<double>(e.size());
  double sum = 0.0, sum2 = 0.0;
  for (double v : e) {
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / m;
  const double var = (sum2 - m * mean * mean) / (m - 1.0);
  EXPECT_LT(std::abs(var - 1.0), 3.0 * std::sqrt(2.0 / (m - 1.0)));
}

TEST(Decomposition, EnergyIsLinearInSubfields) {
  for (std::size_t p : {1u, 3u, 10u}) {
    RngStream s(p);
    const auto field = decompose_field(8, p, s);
    for (std::uint64_t k = 0; k < 5; ++k) {
      const auto w = on_sphere(8, 900 + k);
      double parts = 0.0;
      for (const auto& sub : field.subfields()) parts += hamiltonian(sub, w);
      EXPECT_LT(rel_err(hamiltonian(field.summed(), w), parts), 1e-10);
    }
  }
}

TEST(Decomposition, MemoryAccounting) {
  EXPECT_EQ(CouplingTensor::bytes_for(100), 8'000'000u);
  EXPECT_EQ(DecomposedField::bytes_for(50, 10), 11u * 125'000u * 8u);
}

}  // namespace
}  // namespace floorlab
