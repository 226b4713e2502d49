#pragma once

#include <optional>
#include <string_view>

#include "ismd/types.hpp"

namespace ismd {

enum class MirrorKind { euclidean, entropy };

// Config/CLI tokens are "euclidean" and "entropy".
std::optional<MirrorKind> parse_mirror_kind(std::string_view token);
std::string_view to_string(MirrorKind kind);

/// Mirror map Phi together with its conjugate, scaled as c * Phi_base.
///
/// euclidean: Phi(x) = (c/2)|x|^2 on R^d, grad Phi*(z) = z / c.
/// entropy:   Phi(x) = c * sum x log x on the simplex,
///            grad Phi*(z) = softmax(z / c), Phi*(z) = c * logsumexp(z / c).
///
/// The strong-convexity constant mu equals c (w.r.t. |.|_2 for euclidean and
/// |.|_1 for entropy), so the conjugate gradient is (1/c)-Lipschitz.
class MirrorMap {
 public:
  MirrorMap(MirrorKind kind, Index dimension, double scale = 1.0);

  static MirrorMap euclidean(Index dimension, double scale = 1.0) {
    return {MirrorKind::euclidean, dimension, scale};
  }
  static MirrorMap entropy(Index dimension, double scale = 1.0) {
    return {MirrorKind::entropy, dimension, scale};
  }

  MirrorKind kind() const { return kind_; }
  Index dimension() const { return dimension_; }
  double mu() const { return scale_; }

  /// Primal image of a mirror-space point. Throws DomainError on non-finite input.
  void grad_conjugate(const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) const;
  Vector grad_conjugate(const Eigen::Ref<const Vector>& z) const;

  double conjugate(const Eigen::Ref<const Vector>& z) const;
  double potential(const Eigen::Ref<const Vector>& x) const;

  /// A representative of grad Phi(x); for entropy it is defined up to a
  /// multiple of the all-ones vector.
  Vector grad_potential(const Eigen::Ref<const Vector>& x) const;

  /// D_Phi(x, y) = Phi(x) - Phi(y) - grad Phi(y)^T (x - y).
  double bregman(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) const;

  double lipschitz_of_conjugate() const { return 1.0 / scale_; }

  /// Phi-diameter of the constraint set, sup sqrt(2 D_Phi(x, x')). For the
  /// simplex this is attained between a vertex and the barycenter; the
  /// euclidean map has unbounded domain and returns +inf.
  double diameter() const;

  /// Upper bound on the Laplacian of Phi*: sum_i s_i (1 - s_i) <= 1 for the
  /// softmax, d for the quadratic map (both divided by the scale).
  double conjugate_laplacian_bound() const;

 private:
  void check_dimension(Index n) const;

  MirrorKind kind_;
  Index dimension_;
  double scale_;
};

/// Euclidean projection onto the probability simplex (sort-based).
Vector project_to_simplex(const Eigen::Ref<const Vector>& y);

}  // namespace ismd
