#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "floorlab/rng.hpp"

namespace floorlab {

/// Energy-per-spin landmarks of the spherical 3-spin model.
struct TheoryConstants {
  /// Magnitude of the ground-state lower bound, -E0 * N.
  static constexpr double e_zero = 1.657;
  /// Magnitude of the floor, -E_inf * N.
  static constexpr double e_infinity = 1.633;
};
static_assert(TheoryConstants::e_infinity < TheoryConstants::e_zero);

/// Dense i.i.d. Gaussian 3-tensor, entry (i,j,k) at i*n*n + j*n + k.
class CouplingTensor {
 public:
  CouplingTensor(std::size_t n, std::vector<double> entries, double sigma, std::uint64_t seed_tag);

  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] std::span<const double> entries() const { return entries_; }
  [[nodiscard]] double sigma() const { return sigma_; }
  [[nodiscard]] std::uint64_t seed_tag() const { return seed_tag_; }

  [[nodiscard]] double at(std::size_t i, std::size_t j, std::size_t k) const {
    return entries_[(i * n_ + j) * n_ + k];
  }

  static std::size_t bytes_for(std::size_t n) { return n * n * n * sizeof(double); }

 private:
  std::size_t n_;
  std::vector<double> entries_;
  double sigma_;
  std::uint64_t seed_tag_;
};

/// Point of S^{n-1}(sqrt(n)); construction checks the norm.
class SpherePoint {
 public:
  /// Throws std::invalid_argument if |coords| differs from sqrt(n) by more
  /// than 1e-12 relative.
  explicit SpherePoint(std::vector<double> coords);

  [[nodiscard]] std::size_t n() const { return coords_.size(); }
  [[nodiscard]] std::span<const double> coords() const { return coords_; }
  [[nodiscard]] double operator[](std::size_t i) const { return coords_[i]; }

  [[nodiscard]] SpherePoint negated() const;

  friend bool operator==(const SpherePoint&, const SpherePoint&) = default;

 private:
  struct Unchecked {};
  SpherePoint(std::vector<double> coords, Unchecked) : coords_(std::move(coords)) {}
  friend SpherePoint retract_to_sphere(std::span<const double> v);

  std::vector<double> coords_;
};

/// Three independent factors, each on its own sphere of radius sqrt(n).
struct ProductSpherePoint {
  ProductSpherePoint(SpherePoint a, SpherePoint b, SpherePoint c);

  [[nodiscard]] std::size_t n() const { return w1.n(); }

  SpherePoint w1;
  SpherePoint w2;
  SpherePoint w3;
};

/// Sum of P independent sub-fields with entries ~ Gaussian(0, 1/P).
/// The summed tensor is materialized alongside the sub-fields.
class DecomposedField {
 public:
  explicit DecomposedField(std::vector<CouplingTensor> subfields);

  [[nodiscard]] std::size_t p_count() const { return subfields_.size(); }
  [[nodiscard]] std::size_t n() const { return summed_.n(); }
  [[nodiscard]] const CouplingTensor& subfield(std::size_t p) const { return subfields_.at(p); }
  [[nodiscard]] std::span<const CouplingTensor> subfields() const { return subfields_; }
  [[nodiscard]] const CouplingTensor& summed() const { return summed_; }

  /// Bytes held for P sub-fields of dimension n plus the summed field.
  static std::size_t bytes_for(std::size_t n, std::size_t p_count);

 private:
  std::vector<CouplingTensor> subfields_;
  CouplingTensor summed_;
};

/// Energy and ambient gradient from a single pass over the tensor.
struct FieldEvaluation {
  double energy = 0.0;
  std::vector<double> gradient;
};

struct TripartiteEvaluation {
  double energy = 0.0;
  std::vector<double> grad1;
  std::vector<double> grad2;
  std::vector<double> grad3;
};

CouplingTensor sample_couplings(std::size_t n, double sigma, RngStream& stream);

/// P sub-fields drawn back to back from `stream`, so P = 1 reproduces
/// sample_couplings(n, 1, stream) exactly.
DecomposedField decompose_field(std::size_t n, std::size_t p_count, RngStream& stream);

// The span overloads evaluate the polynomial on all of R^n; the sphere is
// only a constraint on the caller.
double hamiltonian(const CouplingTensor& x, std::span<const double> w);
double hamiltonian(const CouplingTensor& x, const SpherePoint& w);

std::vector<double> euclidean_gradient(const CouplingTensor& x, std::span<const double> w);
std::vector<double> euclidean_gradient(const CouplingTensor& x, const SpherePoint& w);

FieldEvaluation evaluate_field(const CouplingTensor& x, std::span<const double> w);

/// g - (<g, w> / n) w with g the ambient gradient.
std::vector<double> tangential_gradient(const CouplingTensor& x, const SpherePoint& w);

/// Removes the radial component of `g` at `w` in place.
void project_to_tangent(std::span<double> g, std::span<const double> w);

/// sqrt(n) * v / |v|; throws DegenerateInputError for a zero vector.
SpherePoint retract_to_sphere(std::span<const double> v);

double tripartite_hamiltonian(const CouplingTensor& x, std::span<const double> w1,
                              std::span<const double> w2, std::span<const double> w3);
double tripartite_hamiltonian(const CouplingTensor& x, const ProductSpherePoint& p);

TripartiteEvaluation tripartite_gradient(const CouplingTensor& x, std::span<const double> w1,
                                         std::span<const double> w2, std::span<const double> w3);
TripartiteEvaluation tripartite_gradient(const CouplingTensor& x, const ProductSpherePoint& p);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace floorlab
