#include "floorlab/landscape.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "floorlab/errors.hpp"

namespace floorlab {

namespace {

void require_dims(const CouplingTensor& x, std::size_t n, const char* what) {
  if (x.n() != n) {
    throw std::invalid_argument(std::string(what) + ": tensor dimension " + std::to_string(x.n()) +
                                " does not match point dimension " + std::to_string(n));
  }
}

CouplingTensor sum_of(std::span<const CouplingTensor> parts) {
  if (parts.empty()) throw std::invalid_argument("DecomposedField: no sub-fields");
  const std::size_t n = parts.front().n();
  std::vector<double> total(parts.front().entries().begin(), parts.front().entries().end());
  double variance = parts.front().sigma() * parts.front().sigma();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    require_dims(parts[p], n, "DecomposedField");
    const auto e = parts[p].entries();
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += e[i];
    variance += parts[p].sigma() * parts[p].sigma();
  }
  return CouplingTensor(n, std::move(total), std::sqrt(variance), parts.front().seed_tag());
}

/// Returns <row, w> and adds scale * row into acc. Four partial sums keep
/// the reduction off a single dependency chain.
double dot_axpy(const double* __restrict row, const double* __restrict w, double scale,
                double* __restrict acc, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t l = 0;
  for (; l + 4 <= n; l += 4) {
    s0 += row[l] * w[l];
    s1 += row[l + 1] * w[l + 1];
    s2 += row[l + 2] * w[l + 2];
    s3 += row[l + 3] * w[l + 3];
    acc[l] += scale * row[l];
    acc[l + 1] += scale * row[l + 1];
    acc[l + 2] += scale * row[l + 2];
    acc[l + 3] += scale * row[l + 3];
  }
  for (; l < n; ++l) {
    s0 += row[l] * w[l];
    acc[l] += scale * row[l];
  }
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

CouplingTensor::CouplingTensor(std::size_t n, std::vector<double> entries, double sigma,
                               std::uint64_t seed_tag)
    : n_(n), entries_(std::move(entries)), sigma_(sigma), seed_tag_(seed_tag) {
  if (n_ == 0) throw std::invalid_argument("CouplingTensor: n must be >= 1");
  if (entries_.size() != n_ * n_ * n_) {
    throw std::invalid_argument("CouplingTensor: expected " + std::to_string(n_ * n_ * n_) +
                                " entries, got " + std::to_string(entries_.size()));
  }
}

SpherePoint::SpherePoint(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw std::invalid_argument("SpherePoint: empty coordinates");
  const double radius = std::sqrt(static_cast<double>(coords_.size()));
  const double norm = norm2(coords_);
  if (std::abs(norm - radius) > 1e-12 * radius) {
    throw std::invalid_argument("SpherePoint: norm " + std::to_string(norm) +
                                " is not sqrt(n) = " + std::to_string(radius));
  }
}

SpherePoint SpherePoint::negated() const {
  std::vector<double> v(coords_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = -coords_[i];
  return SpherePoint(std::move(v), Unchecked{});
}

ProductSpherePoint::ProductSpherePoint(SpherePoint a, SpherePoint b, SpherePoint c)
    : w1(std::move(a)), w2(std::move(b)), w3(std::move(c)) {
  if (w1.n() != w2.n() || w1.n() != w3.n()) {
    throw std::invalid_argument("ProductSpherePoint: factor dimensions differ");
  }
}

DecomposedField::DecomposedField(std::vector<CouplingTensor> subfields)
    : subfields_(std::move(subfields)), summed_(sum_of(subfields_)) {}

std::size_t DecomposedField::bytes_for(std::size_t n, std::size_t p_count) {
  return (p_count + 1) * CouplingTensor::bytes_for(n);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

CouplingTensor sample_couplings(std::size_t n, double sigma, RngStream& stream) {
  if (n == 0) throw std::invalid_argument("sample_couplings: n must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("sample_couplings: sigma must be > 0");
  const std::uint64_t tag = stream.key();
  std::vector<double> entries(n * n * n);
  stream.fill_normal(entries, sigma);
  return CouplingTensor(n, std::move(entries), sigma, tag);
}

DecomposedField decompose_field(std::size_t n, std::size_t p_count, RngStream& stream) {
  if (p_count == 0) throw std::invalid_argument("decompose_field: P must be >= 1");
  const double sigma = 1.0 / std::sqrt(static_cast<double>(p_count));
  std::vector<CouplingTensor> parts;
  parts.reserve(p_count);
  for (std::size_t p = 0; p < p_count; ++p) parts.push_back(sample_couplings(n, sigma, stream));
  return DecomposedField(std::move(parts));
}

FieldEvaluation evaluate_field(const CouplingTensor& x, std::span<const double> w) {
  const std::size_t n = w.size();
  require_dims(x, n, "evaluate_field");
  const auto e = x.entries();
  // One sweep: row (j,k) gives A_jk = sum_l x_jkl w_l, and the third-slot
  // term sum_jk w_j w_k x_jkl accumulates into `slot3`.
  std::vector<double> contracted(n * n);
  std::vector<double> slot3(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double* row = e.data() + (j * n + k) * n;
      const double wjk = w[j] * w[k];
      contracted[j * n + k] = dot_axpy(row, w.data(), wjk, slot3.data(), n);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  FieldEvaluation out;
  out.gradient.assign(n, 0.0);
  double energy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double row_dot = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = contracted[j * n + k];
      row_dot += a * w[k];
      out.gradient[k] += a * w[j];  // slot 2: sum_j A_jl w_j
    }
    out.gradient[j] += row_dot;  // slot 1: sum_k A_lk w_k
    energy += row_dot * w[j];
  }
  for (std::size_t l = 0; l < n; ++l) out.gradient[l] = (out.gradient[l] + slot3[l]) * inv_n;
  out.energy = energy * inv_n;
  return out;
}

double hamiltonian(const CouplingTensor& x, std::span<const double> w) {
  const std::size_t n = w.size();
  require_dims(x, n, "hamiltonian");
  const auto e = x.entries();
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double plane = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double* row = e.data() + (i * n + j) * n;
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += row[k] * w[k];
      plane += acc * w[j];
    }
    energy += plane * w[i];
  }
  return energy / static_cast<double>(n);
}

double hamiltonian(const CouplingTensor& x, const SpherePoint& w) {
  return hamiltonian(x, w.coords());
}

std::vector<double> euclidean_gradient(const CouplingTensor& x, std::span<const double> w) {
  return evaluate_field(x, w).gradient;
}

std::vector<double> euclidean_gradient(const CouplingTensor& x, const SpherePoint& w) {
  return euclidean_gradient(x, w.coords());
}

void project_to_tangent(std::span<double> g, std::span<const double> w) {
  const double radial = dot(g, w) / static_cast<double>(w.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= radial * w[i];
}

std::vector<double> tangential_gradient(const CouplingTensor& x, const SpherePoint& w) {
  auto g = euclidean_gradient(x, w.coords());
  project_to_tangent(g, w.coords());
  return g;
}

SpherePoint retract_to_sphere(std::span<const double> v) {
  if (v.empty()) throw DegenerateInputError("retract_to_sphere: empty vector");
  const double norm = norm2(v);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateInputError("retract_to_sphere: vector norm is " + std::to_string(norm));
  }
  const double scale = std::sqrt(static_cast<double>(v.size())) / norm;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * scale;
  return SpherePoint(std::move(out), SpherePoint::Unchecked{});
}

TripartiteEvaluation tripartite_gradient(const CouplingTensor& x, std::span<const double> w1,
                                         std::span<const double> w2, std::span<const double> w3) {
  const std::size_t n = w1.size();
  require_dims(x, n, "tripartite_gradient");
  if (w2.size() != n || w3.size() != n) {
    throw std::invalid_argument("tripartite_gradient: factor dimensions differ");
  }
  const auto e = x.entries();
  TripartiteEvaluation out;
  out.grad1.assign(n, 0.0);
  out.grad2.assign(n, 0.0);
  out.grad3.assign(n, 0.0);
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double* row = e.data() + (i * n + j) * n;
      const double ab = w1[i] * w2[j];
      const double c_ij = dot_axpy(row, w3.data(), ab, out.grad3.data(), n);
      out.grad1[i] += c_ij * w2[j];
      out.grad2[j] += c_ij * w1[i];
      energy += c_ij * ab;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t l = 0; l < n; ++l) {
    out.grad1[l] *= inv_n;
    out.grad2[l] *= inv_n;
    out.grad3[l] *= inv_n;
  }
  out.energy = energy * inv_n;
  return out;
}

TripartiteEvaluation tripartite_gradient(const CouplingTensor& x, const ProductSpherePoint& p) {
  return tripartite_gradient(x, p.w1.coords(), p.w2.coords(), p.w3.coords());
}

double tripartite_hamiltonian(const CouplingTensor& x, std::span<const double> w1,
                              std::span<const double> w2, std::span<const double> w3) {
  const std::size_t n = w1.size();
  require_dims(x, n, "tripartite_hamiltonian");
  if (w2.size() != n || w3.size() != n) {
    throw std::invalid_argument("tripartite_hamiltonian: factor dimensions differ");
  }
  const auto e = x.entries();
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double plane = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double* row = e.data() + (i * n + j) * n;
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += row[k] * w3[k];
      plane += acc * w2[j];
    }
    energy += plane * w1[i];
  }
  return energy / static_cast<double>(n);
}

double tripartite_hamiltonian(const CouplingTensor& x, const ProductSpherePoint& p) {
  return tripartite_hamiltonian(x, p.w1.coords(), p.w2.coords(), p.w3.coords());
}

}  // namespace floorlab
