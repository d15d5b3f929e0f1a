#include "floorlab/descent.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "floorlab/errors.hpp"

namespace floorlab {

void DescentConfig::validate() const {
  if (!(step_size > 0.0)) throw std::invalid_argument("DescentConfig: step_size must be > 0");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("DescentConfig: grad_tol must be > 0");
  if (max_steps < 1) throw std::invalid_argument("DescentConfig: max_steps must be >= 1");
  if (divergence_window < 1) {
    throw std::invalid_argument("DescentConfig: divergence_window must be >= 1");
  }
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kGradientBelowTol:
      return "gradient-below-tol";
    case StopReason::kMaxSteps:
      return "max-steps";
    case StopReason::kDivergence:
      return "divergence";
  }
  return "unknown";
}

namespace {

/// w <- sqrt(n) (w - step g) / |w - step g|, in place.
void step_and_retract(std::span<double> w, std::span<const double> g, double step) {
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * g[i];
  const double norm = norm2(w);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateInputError("descent step left the sphere (norm " + std::to_string(norm) + ")");
  }
  const double scale = std::sqrt(static_cast<double>(w.size())) / norm;
  for (double& v : w) v *= scale;
}

/// Tracks consecutive energy increases for the divergence stop.
class DivergenceMonitor {
 public:
  explicit DivergenceMonitor(std::size_t window) : window_(window) {}

  /// Returns true when the run should stop as divergent.
  bool observe(double energy) {
    if (!std::isfinite(energy)) return true;
    if (has_last_ && energy > last_) {
      ++rising_;
    } else {
      rising_ = 0;
    }
    last_ = energy;
    has_last_ = true;
    return rising_ >= window_;
  }

 private:
  std::size_t window_;
  std::size_t rising_ = 0;
  double last_ = 0.0;
  bool has_last_ = false;
};

DescentRecord finish(SpherePoint point, double energy, std::size_t steps, StopReason reason,
                     double grad_norm, std::vector<TracePoint> trace) {
  DescentRecord rec(std::move(point));
  rec.terminal_energy = energy;
  rec.normalized_energy = energy / static_cast<double>(rec.sphere_point().n());
  rec.steps_taken = steps;
  rec.stop_reason = reason;
  rec.final_grad_norm = grad_norm;
  rec.trace = std::move(trace);
  return rec;
}

}  // namespace

SpherePoint random_sphere_point(std::size_t n, RngStream& stream) {
  if (n == 0) throw std::invalid_argument("random_sphere_point: n must be >= 1");
  std::vector<double> v(n);
  // A Gaussian vector is zero with probability 0; redraw regardless.
  do {
    stream.fill_normal(v, 1.0);
  } while (norm2(v) == 0.0);
  return retract_to_sphere(v);
}

ProductSpherePoint random_product_point(std::size_t n, RngStream& stream) {
  auto a = random_sphere_point(n, stream);
  auto b = random_sphere_point(n, stream);
  auto c = random_sphere_point(n, stream);
  return ProductSpherePoint(std::move(a), std::move(b), std::move(c));
}

DescentRecord gradient_descent(const CouplingTensor& x, const SpherePoint& w0,
                               const DescentConfig& cfg, const IterateObserver& observer) {
  cfg.validate();
  if (x.n() != w0.n()) throw std::invalid_argument("gradient_descent: dimension mismatch");
  std::vector<double> w(w0.coords().begin(), w0.coords().end());
  std::vector<TracePoint> trace;
  DivergenceMonitor monitor(cfg.divergence_window);

  for (std::size_t step = 0;; ++step) {
    auto eval = evaluate_field(x, w);
    project_to_tangent(eval.gradient, w);
    const double gnorm = norm2(eval.gradient);
    if (cfg.record_every > 0 && step % cfg.record_every == 0) {
      trace.push_back({cfg.step_size * static_cast<double>(step), eval.energy});
    }
    if (observer) observer(step, eval.energy, w);

    std::optional<StopReason> reason;
    if (monitor.observe(eval.energy) || !std::isfinite(gnorm)) {
      reason = StopReason::kDivergence;
    } else if (gnorm < cfg.grad_tol) {
      reason = StopReason::kGradientBelowTol;
    } else if (step >= cfg.max_steps) {
      reason = StopReason::kMaxSteps;
    }
    if (reason) {
      return finish(SpherePoint(std::move(w)), eval.energy, step, *reason, gnorm, std::move(trace));
    }
    step_and_retract(w, eval.gradient, cfg.step_size);
  }
}

DescentRecord sgd_spin_glass(const DecomposedField& field, const SpherePoint& w0,
                             const DescentConfig& cfg, PassOrder order, RngStream stream,
                             const IterateObserver& observer) {
  cfg.validate();
  if (field.n() != w0.n()) throw std::invalid_argument("sgd_spin_glass: dimension mismatch");
  const std::size_t p_count = field.p_count();
  std::vector<double> w(w0.coords().begin(), w0.coords().end());
  std::vector<TracePoint> trace;
  DivergenceMonitor monitor(cfg.divergence_window);

  for (std::size_t step = 0;; ++step) {
    const bool epoch_boundary = step % p_count == 0;
    const bool record = cfg.record_every > 0 && step % cfg.record_every == 0;
    const bool at_cap = step >= cfg.max_steps;

    std::optional<FieldEvaluation> full;
    double gnorm = 0.0;
    if (epoch_boundary || record || at_cap) {
      full = evaluate_field(field.summed(), w);
      project_to_tangent(full->gradient, w);
      gnorm = norm2(full->gradient);
      if (record) trace.push_back({cfg.step_size * static_cast<double>(step), full->energy});
    }
    if (observer) observer(step, full ? full->energy : std::nan(""), w);

    std::optional<StopReason> reason;
    if (epoch_boundary) {
      if (monitor.observe(full->energy) || !std::isfinite(gnorm)) {
        reason = StopReason::kDivergence;
      } else if (gnorm < cfg.grad_tol) {
        reason = StopReason::kGradientBelowTol;
      }
    }
    if (!reason && at_cap) reason = StopReason::kMaxSteps;
    if (reason) {
      return finish(SpherePoint(std::move(w)), full->energy, step, *reason, gnorm,
                    std::move(trace));
    }

    const std::size_t p = order == PassOrder::kCyclic ? step % p_count : stream.below(p_count);
    if (p_count == 1) {
      // The single sub-field is the summed field; reuse its gradient.
      step_and_retract(w, full->gradient, cfg.step_size);
    } else {
      auto sub = evaluate_field(field.subfield(p), w);
      project_to_tangent(sub.gradient, w);
      step_and_retract(w, sub.gradient, cfg.step_size);
    }
  }
}

DescentRecord refine_with_gd(const DecomposedField& field, const SpherePoint& start,
                             const DescentConfig& cfg) {
  return gradient_descent(field.summed(), start, cfg);
}

DescentRecord tripartite_descent(const CouplingTensor& x, const ProductSpherePoint& p0,
                                 const DescentConfig& cfg, const IterateObserver& observer) {
  cfg.validate();
  const std::size_t n = p0.n();
  if (x.n() != n) throw std::invalid_argument("tripartite_descent: dimension mismatch");
  // Factors stored back to back: [w1 | w2 | w3].
  std::vector<double> w(3 * n);
  std::copy(p0.w1.coords().begin(), p0.w1.coords().end(), w.begin());
  std::copy(p0.w2.coords().begin(), p0.w2.coords().end(), w.begin() + n);
  std::copy(p0.w3.coords().begin(), p0.w3.coords().end(), w.begin() + 2 * n);
  const std::span<double> f1(w.data(), n), f2(w.data() + n, n), f3(w.data() + 2 * n, n);

  std::vector<TracePoint> trace;
  DivergenceMonitor monitor(cfg.divergence_window);
  for (std::size_t step = 0;; ++step) {
    auto eval = tripartite_gradient(x, f1, f2, f3);
    project_to_tangent(eval.grad1, f1);
    project_to_tangent(eval.grad2, f2);
    project_to_tangent(eval.grad3, f3);
    const double gnorm = std::sqrt(dot(eval.grad1, eval.grad1) + dot(eval.grad2, eval.grad2) +
                                   dot(eval.grad3, eval.grad3));
    if (cfg.record_every > 0 && step % cfg.record_every == 0) {
      trace.push_back({cfg.step_size * static_cast<double>(step), eval.energy});
    }
    if (observer) observer(step, eval.energy, w);

    std::optional<StopReason> reason;
    if (monitor.observe(eval.energy) || !std::isfinite(gnorm)) {
      reason = StopReason::kDivergence;
    } else if (gnorm < cfg.grad_tol) {
      reason = StopReason::kGradientBelowTol;
    } else if (step >= cfg.max_steps) {
      reason = StopReason::kMaxSteps;
    }
    if (reason) {
      ProductSpherePoint point(SpherePoint(std::vector<double>(f1.begin(), f1.end())),
                               SpherePoint(std::vector<double>(f2.begin(), f2.end())),
                               SpherePoint(std::vector<double>(f3.begin(), f3.end())));
      DescentRecord rec(std::move(point));
      rec.terminal_energy = eval.energy;
      rec.normalized_energy = eval.energy / static_cast<double>(n);
      rec.steps_taken = step;
      rec.stop_reason = *reason;
      rec.final_grad_norm = gnorm;
      rec.trace = std::move(trace);
      return rec;
    }
    step_and_retract(f1, eval.grad1, cfg.step_size);
    step_and_retract(f2, eval.grad2, cfg.step_size);
    step_and_retract(f3, eval.grad3, cfg.step_size);
  }
}

}  // namespace floorlab
