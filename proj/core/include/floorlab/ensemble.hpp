#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floorlab/descent.hpp"
#include "floorlab/stats.hpp"

namespace floorlab {

enum class LandscapeKind { kCoupled, kTripartite, kDecomposed };

std::string landscape_label(LandscapeKind kind, std::size_t p_count);

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{2} << 30;  // 2 GiB
inline constexpr double kDefaultBinWidth = 0.01;

struct EnsembleSpec {
  LandscapeKind kind = LandscapeKind::kCoupled;
  /// Sub-field count for kDecomposed; ignored otherwise.
  std::size_t p_count = 1;
  std::size_t n = 100;
  std::size_t trials = 200;
  /// false: every trial descends the same landscape from a new start.
  bool fresh_couplings_per_trial = true;
  DescentConfig descent;
  PassOrder pass_order = PassOrder::kCyclic;
  /// kDecomposed only: follow SGD with GD on the summed field.
  bool refine = false;
  /// Descent settings for the refinement stage.
  DescentConfig refine_descent;
  std::uint64_t master_seed = 0;
  std::size_t memory_budget_bytes = kDefaultMemoryBudget;
  /// 0 means default_worker_count().
  std::size_t workers = 0;
  double bin_width = kDefaultBinWidth;
};

struct TrialResult {
  std::size_t index = 0;
  double normalized_energy = 0.0;
  std::size_t steps = 0;
  StopReason stop_reason = StopReason::kMaxSteps;
  double budget_consumed = 0.0;
  /// Set when the spec asks for GD refinement.
  std::optional<double> refined_normalized_energy;
  std::size_t refine_steps = 0;
};

struct EnsembleReport {
  std::string landscape;
  std::size_t n = 0;
  /// Ordered by trial index.
  std::vector<TrialResult> trials;
  std::vector<double> normalized_energies;
  Summary summary;
  Histogram histogram;
  /// mean - (-e_infinity).
  double floor_gap = 0.0;
  std::map<std::string, std::size_t> stop_reason_counts;
  std::optional<Summary> refined_summary;
};

/// Bytes a single landscape of this spec occupies.
std::size_t landscape_bytes(const EnsembleSpec& spec);

/// Throws BudgetError if one landscape exceeds the memory budget.
void check_budget(const EnsembleSpec& spec);

EnsembleReport run_ensemble(const EnsembleSpec& spec);

/// Statistics over a finished set of trials (any order; sorted by index).
EnsembleReport summarize_trials(std::string landscape, std::size_t n,
                                std::vector<TrialResult> trials, double bin_width);

struct BandRow {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  double iqr = 0.0;
};

/// One ensemble per dimension under `base` (its n is overridden); rows are
/// ordered by n.
std::vector<BandRow> band_width_vs_dimension(const EnsembleSpec& base,
                                             std::span<const std::size_t> dims);

struct SpinComparisonRow {
  std::size_t p_count = 0;
  double mean = 0.0;
  double std = 0.0;
  double refined_mean = 0.0;
  double refined_std = 0.0;
  EnsembleReport report;
};

/// SGD ensembles for each P at a shared step_size * steps budget, each
/// followed by GD refinement on the summed field. `base` supplies n,
/// trials, seed and step size; its max_steps is replaced by the budget.
std::vector<SpinComparisonRow> compare_gd_sgd_spin(const EnsembleSpec& base,
                                                   std::span<const std::size_t> p_values,
                                                   double budget);

}  // namespace floorlab
