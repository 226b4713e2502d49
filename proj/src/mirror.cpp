#include "ismd/mirror.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace ismd {

std::optional<MirrorKind> parse_mirror_kind(std::string_view token) {
  if (token == "euclidean") return MirrorKind::euclidean;
  if (token == "entropy") return MirrorKind::entropy;
  return std::nullopt;
}

std::string_view to_string(MirrorKind kind) {
  return kind == MirrorKind::euclidean ? "euclidean" : "entropy";
}

MirrorMap::MirrorMap(MirrorKind kind, Index dimension, double scale)
    : kind_(kind), dimension_(dimension), scale_(scale) {
  if (dimension < 1) throw ValidationError("mirror map dimension must be positive");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ValidationError("mirror map scale must be a positive finite number");
  }
}

void MirrorMap::check_dimension(Index n) const {
  if (n != dimension_) {
    throw ValidationError("mirror map of dimension " + std::to_string(dimension_) +
                          " applied to a vector of size " + std::to_string(n));
  }
}

void MirrorMap::grad_conjugate(const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) const {
  check_dimension(z.size());
  if (!z.allFinite()) throw DomainError("grad_conjugate: non-finite mirror-space input");
  if (kind_ == MirrorKind::euclidean) {
    out = z / scale_;
    return;
  }
  // softmax(z / c) with max-subtraction; clamp keeps every coordinate strictly
  // positive even when the spread of z exceeds the exponent range.
  const double zmax = z.maxCoeff();
  out = ((z.array() - zmax) / scale_).exp().max(std::numeric_limits<double>::min());
  out /= out.sum();
}

Vector MirrorMap::grad_conjugate(const Eigen::Ref<const Vector>& z) const {
  Vector out(z.size());
  grad_conjugate(z, out);
  return out;
}

double MirrorMap::conjugate(const Eigen::Ref<const Vector>& z) const {
  check_dimension(z.size());
  if (!z.allFinite()) throw DomainError("conjugate: non-finite mirror-space input");
  if (kind_ == MirrorKind::euclidean) return z.squaredNorm() / (2.0 * scale_);
  const double zmax = z.maxCoeff();
  return zmax + scale_ * std::log(((z.array() - zmax) / scale_).exp().sum());
}

double MirrorMap::potential(const Eigen::Ref<const Vector>& x) const {
  check_dimension(x.size());
  if (kind_ == MirrorKind::euclidean) return 0.5 * scale_ * x.squaredNorm();
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) throw DomainError("entropy potential: negative coordinate");
    if (x[i] > 0.0) acc += x[i] * std::log(x[i]);
  }
  return scale_ * acc;
}

Vector MirrorMap::grad_potential(const Eigen::Ref<const Vector>& x) const {
  check_dimension(x.size());
  if (kind_ == MirrorKind::euclidean) return scale_ * x;
  if ((x.array() <= 0.0).any()) {
    throw DomainError("entropy gradient undefined on the simplex boundary");
  }
  return scale_ * (x.array().log() + 1.0).matrix();
}

double MirrorMap::bregman(const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& y) const {
  check_dimension(x.size());
  check_dimension(y.size());
  if (kind_ == MirrorKind::euclidean) return 0.5 * scale_ * (x - y).squaredNorm();
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0)) {
      throw DomainError("KL divergence undefined: second argument has a zero coordinate at index " +
                        std::to_string(i));
    }
    if (x[i] < 0.0) throw DomainError("KL divergence: negative coordinate in first argument");
    if (x[i] > 0.0) acc += x[i] * std::log(x[i] / y[i]);
  }
  // On the simplex the linear terms of sum x log x - x cancel; off the simplex
  // the generalized form keeps the divergence non-negative.
  acc += y.sum() - x.sum();
  return scale_ * std::max(acc, 0.0);
}

double MirrorMap::diameter() const {
  if (kind_ == MirrorKind::euclidean) return std::numeric_limits<double>::infinity();
  return std::sqrt(2.0 * scale_ * std::log(static_cast<double>(dimension_)));
}

double MirrorMap::conjugate_laplacian_bound() const {
  if (kind_ == MirrorKind::euclidean) return static_cast<double>(dimension_) / scale_;
  return 1.0 / scale_;
}

Vector project_to_simplex(const Eigen::Ref<const Vector>& y) {
  const Index n = y.size();
  if (n == 0) throw ValidationError("cannot project an empty vector onto the simplex");
  Vector sorted = y;
  std::sort(sorted.data(), sorted.data() + n, std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  return (y.array() - tau).max(0.0).matrix();
}

}  // namespace ismd
