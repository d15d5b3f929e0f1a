#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace floorlab {

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  /// Sample standard deviation (n - 1 denominator); 0 for a single value.
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;

  [[nodiscard]] double iqr() const { return q3 - q1; }
};

/// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

/// Throws std::invalid_argument on empty input.
Summary summarize(std::span<const double> values);

struct Histogram {
  /// counts.size() + 1 edges; bin b is [edges[b], edges[b+1]).
  std::vector<double> edges;
  std::vector<std::size_t> counts;

  [[nodiscard]] std::size_t total() const;
  /// Index of the first bin with the largest count.
  [[nodiscard]] std::size_t modal_bin() const;
  [[nodiscard]] double bin_center(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
};

/// Left-closed bins of `bin_width` starting at min(values); the last bin
/// contains max(values).
Histogram histogram(std::span<const double> values, double bin_width);

}  // namespace floorlab
