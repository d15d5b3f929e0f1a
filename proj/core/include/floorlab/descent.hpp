#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "floorlab/landscape.hpp"
#include "floorlab/rng.hpp"

namespace floorlab {

struct DescentConfig {
  double step_size = 0.01;
  /// Threshold on the tangential gradient norm.
  double grad_tol = 1e-5;
  std::size_t max_steps = 1'000'000;
  /// Trace stride in steps; 0 disables the trace.
  std::size_t record_every = 0;
  /// Consecutive energy increases that count as divergence.
  std::size_t divergence_window = 100;

  /// Throws std::invalid_argument on a non-positive step, tolerance or cap.
  void validate() const;
};

enum class StopReason { kGradientBelowTol, kMaxSteps, kDivergence };

std::string_view to_string(StopReason reason);

/// One trace sample: energy for spin glasses, training cost for networks.
struct TracePoint {
  /// Cumulative step_size * steps.
  double budget = 0.0;
  double value = 0.0;
};

struct DescentRecord {
  explicit DescentRecord(std::variant<SpherePoint, ProductSpherePoint> point)
      : terminal_point(std::move(point)) {}

  std::variant<SpherePoint, ProductSpherePoint> terminal_point;
  double terminal_energy = 0.0;
  double normalized_energy = 0.0;
  std::size_t steps_taken = 0;
  StopReason stop_reason = StopReason::kMaxSteps;
  /// Tangential gradient norm at the terminal point (full field).
  double final_grad_norm = 0.0;
  std::vector<TracePoint> trace;

  [[nodiscard]] const SpherePoint& sphere_point() const {
    return std::get<SpherePoint>(terminal_point);
  }
  [[nodiscard]] const ProductSpherePoint& product_point() const {
    return std::get<ProductSpherePoint>(terminal_point);
  }
};

/// Called before every update with the current iterate. For the product
/// sphere the span holds the three factors back to back.
using IterateObserver =
    std::function<void(std::size_t step, double energy, std::span<const double> point)>;

/// Sub-field visiting order for minibatch-1 SGD.
enum class PassOrder { kCyclic, kUniform };

/// Uniform point on S^{n-1}(sqrt(n)) from n Gaussian draws.
SpherePoint random_sphere_point(std::size_t n, RngStream& stream);
ProductSpherePoint random_product_point(std::size_t n, RngStream& stream);

DescentRecord gradient_descent(const CouplingTensor& x, const SpherePoint& w0,
                               const DescentConfig& cfg, const IterateObserver& observer = {});

/// Each step follows the tangential gradient of one sub-field. Stopping,
/// tracing and the terminal energy use the full summed field; the gradient
/// test runs once per epoch of P steps. `stream` drives kUniform only.
DescentRecord sgd_spin_glass(const DecomposedField& field, const SpherePoint& w0,
                             const DescentConfig& cfg, PassOrder order = PassOrder::kCyclic,
                             RngStream stream = RngStream{}, const IterateObserver& observer = {});

/// Plain GD on the summed field starting from `start`.
DescentRecord refine_with_gd(const DecomposedField& field, const SpherePoint& start,
                             const DescentConfig& cfg);

/// GD on the product of three spheres; each factor is retracted separately.
DescentRecord tripartite_descent(const CouplingTensor& x, const ProductSpherePoint& p0,
                                 const DescentConfig& cfg, const IterateObserver& observer = {});

}  // namespace floorlab
