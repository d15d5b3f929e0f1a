#include "floorlab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "floorlab/errors.hpp"
#include "floorlab/parallel.hpp"

namespace floorlab {

std::string landscape_label(LandscapeKind kind, std::size_t p_count) {
  switch (kind) {
    case LandscapeKind::kCoupled:
      return "coupled";
    case LandscapeKind::kTripartite:
      return "tripartite";
    case LandscapeKind::kDecomposed:
      return "decomposed(" + std::to_string(p_count) + ")";
  }
  return "unknown";
}

std::size_t landscape_bytes(const EnsembleSpec& spec) {
  if (spec.kind == LandscapeKind::kDecomposed) {
    return DecomposedField::bytes_for(spec.n, spec.p_count);
  }
  return CouplingTensor::bytes_for(spec.n);
}

void check_budget(const EnsembleSpec& spec) {
  const std::size_t bytes = landscape_bytes(spec);
  if (bytes > spec.memory_budget_bytes) {
    throw BudgetError("landscape " + landscape_label(spec.kind, spec.p_count) +
                      " at n=" + std::to_string(spec.n) + " needs " + std::to_string(bytes) +
                      " bytes; memory budget is " + std::to_string(spec.memory_budget_bytes));
  }
}

namespace {

void validate(const EnsembleSpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("EnsembleSpec: trials must be >= 1");
  if (spec.n < 1) throw std::invalid_argument("EnsembleSpec: n must be >= 1");
  if (spec.kind == LandscapeKind::kDecomposed && spec.p_count < 1) {
    throw std::invalid_argument("EnsembleSpec: P must be >= 1");
  }
  spec.descent.validate();
  if (spec.refine) spec.refine_descent.validate();
  check_budget(spec);
}

TrialResult run_trial(const EnsembleSpec& spec, std::size_t t, const CouplingTensor* shared_tensor,
                      const DecomposedField* shared_field) {
  const std::uint64_t landscape_index = spec.fresh_couplings_per_trial ? t : 0;
  RngStream init = derive_stream(spec.master_seed, "init", t);
  TrialResult out;
  out.index = t;

  DescentRecord rec = [&] {
    switch (spec.kind) {
      case LandscapeKind::kCoupled: {
        std::optional<CouplingTensor> own;
        if (shared_tensor == nullptr) {
          RngStream s = derive_stream(spec.master_seed, "couplings", landscape_index);
          own = sample_couplings(spec.n, 1.0, s);
        }
        const CouplingTensor& x = own ? *own : *shared_tensor;
        return gradient_descent(x, random_sphere_point(spec.n, init), spec.descent);
      }
      case LandscapeKind::kTripartite: {
        std::optional<CouplingTensor> own;
        if (shared_tensor == nullptr) {
          RngStream s = derive_stream(spec.master_seed, "couplings", landscape_index);
          own = sample_couplings(spec.n, 1.0, s);
        }
        const CouplingTensor& x = own ? *own : *shared_tensor;
        return tripartite_descent(x, random_product_point(spec.n, init), spec.descent);
      }
      case LandscapeKind::kDecomposed: {
        std::optional<DecomposedField> own;
        if (shared_field == nullptr) {
          RngStream s = derive_stream(spec.master_seed, "couplings", landscape_index);
          own = decompose_field(spec.n, spec.p_count, s);
        }
        const DecomposedField& field = own ? *own : *shared_field;
        auto sgd = sgd_spin_glass(field, random_sphere_point(spec.n, init), spec.descent,
                                  spec.pass_order, derive_stream(spec.master_seed, "sgd-order", t));
        if (spec.refine) {
          auto refined = refine_with_gd(field, sgd.sphere_point(), spec.refine_descent);
          out.refined_normalized_energy = refined.normalized_energy;
          out.refine_steps = refined.steps_taken;
        }
        return sgd;
      }
    }
    throw std::logic_error("run_trial: unknown landscape kind");
  }();

  out.normalized_energy = rec.normalized_energy;
  out.steps = rec.steps_taken;
  out.stop_reason = rec.stop_reason;
  out.budget_consumed = spec.descent.step_size * static_cast<double>(rec.steps_taken);
  return out;
}

}  // namespace

EnsembleReport summarize_trials(std::string landscape, std::size_t n,
                                std::vector<TrialResult> trials, double bin_width) {
  std::sort(trials.begin(), trials.end(),
            [](const TrialResult& a, const TrialResult& b) { return a.index < b.index; });
  EnsembleReport report;
  report.landscape = std::move(landscape);
  report.n = n;
  report.normalized_energies.reserve(trials.size());
  std::vector<double> refined;
  for (const auto& t : trials) {
    report.normalized_energies.push_back(t.normalized_energy);
    report.stop_reason_counts[std::string(to_string(t.stop_reason))]++;
    if (t.refined_normalized_energy) refined.push_back(*t.refined_normalized_energy);
  }
  report.summary = summarize(report.normalized_energies);
  report.histogram = histogram(report.normalized_energies, bin_width);
  report.floor_gap = report.summary.mean + TheoryConstants::e_infinity;
  if (!refined.empty()) report.refined_summary = summarize(refined);
  report.trials = std::move(trials);
  return report;
}

EnsembleReport run_ensemble(const EnsembleSpec& spec) {
  validate(spec);
  std::optional<CouplingTensor> shared_tensor;
  std::optional<DecomposedField> shared_field;
  if (!spec.fresh_couplings_per_trial) {
    RngStream s = derive_stream(spec.master_seed, "couplings", 0);
    if (spec.kind == LandscapeKind::kDecomposed) {
      shared_field = decompose_field(spec.n, spec.p_count, s);
    } else {
      shared_tensor = sample_couplings(spec.n, 1.0, s);
    }
  }

  std::size_t workers = spec.workers == 0 ? default_worker_count() : spec.workers;
  if (spec.fresh_couplings_per_trial) {
    // Each in-flight trial owns a landscape.
    workers = std::min(workers,
                       std::max<std::size_t>(1, spec.memory_budget_bytes / landscape_bytes(spec)));
  }

  std::vector<TrialResult> results(spec.trials);
  parallel_for(spec.trials, workers, [&](std::size_t t) {
    results[t] = run_trial(spec, t, shared_tensor ? &*shared_tensor : nullptr,
                           shared_field ? &*shared_field : nullptr);
  });
  return summarize_trials(landscape_label(spec.kind, spec.p_count), spec.n, std::move(results),
                          spec.bin_width);
}

std::vector<BandRow> band_width_vs_dimension(const EnsembleSpec& base,
                                             std::span<const std::size_t> dims) {
  if (dims.empty()) throw std::invalid_argument("band_width_vs_dimension: no dimensions");
  std::vector<std::size_t> sorted(dims.begin(), dims.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<BandRow> rows;
  for (std::size_t n : sorted) {
    EnsembleSpec spec = base;
    spec.n = n;
    const auto report = run_ensemble(spec);
    rows.push_back({n, report.summary.mean, report.summary.std, report.summary.iqr()});
  }
  return rows;
}

std::vector<SpinComparisonRow> compare_gd_sgd_spin(const EnsembleSpec& base,
                                                   std::span<const std::size_t> p_values,
                                                   double budget) {
  if (p_values.empty()) throw std::invalid_argument("compare_gd_sgd_spin: no P values");
  if (!(budget > 0.0)) throw std::invalid_argument("compare_gd_sgd_spin: budget must be > 0");
  const auto steps = static_cast<std::size_t>(std::llround(budget / base.descent.step_size));
  std::vector<SpinComparisonRow> rows;
  for (std::size_t p : p_values) {
    EnsembleSpec spec = base;
    spec.kind = LandscapeKind::kDecomposed;
    spec.p_count = p;
    spec.descent.max_steps = std::max<std::size_t>(steps, 1);
    spec.refine = true;
    auto report = run_ensemble(spec);
    SpinComparisonRow row;
    row.p_count = p;
    row.mean = report.summary.mean;
    row.std = report.summary.std;
    row.refined_mean = report.refined_summary->mean;
    row.refined_std = report.refined_summary->std;
    row.report = std::move(report);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace floorlab
