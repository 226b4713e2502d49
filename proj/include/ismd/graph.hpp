#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ismd/types.hpp"

namespace ismd {

// Structure hint used to pick a cheaper drift evaluation; the weight matrix is
// always stored and is authoritative for everything else.
enum class GraphStructure { general, mean_field, independent };

/// Doubly stochastic symmetric interaction weights A with strength theta.
/// The Laplacian L = Diag(A 1) - A is stored unscaled; spectral quantities are
/// reported for theta * L.
class InteractionGraph {
 public:
  /// Validates A (non-negative, symmetric, unit row and column sums within tol).
  InteractionGraph(Matrix weights, double theta = 1.0,
                   GraphStructure structure = GraphStructure::general, double tol = 1e-9);

  static InteractionGraph mean_field(Index n, double theta = 1.0);
  /// Identity weights: no interaction, drift identically zero.
  static InteractionGraph independent(Index n);
  static InteractionGraph erdos_renyi(Index n, double p, std::uint64_t seed, double theta = 1.0,
                                      int max_retries = 1000);
  /// Reads an N x N comma-separated matrix.
  static InteractionGraph from_csv(const std::string& path, double theta = 1.0);

  Index size() const { return static_cast<Index>(weights_.rows()); }
  const Matrix& weights() const { return weights_; }
  const Matrix& laplacian() const { return laplacian_; }
  double theta() const { return theta_; }
  GraphStructure structure() const { return structure_; }
  bool singleton() const { return size() == 1; }
  int retries() const { return retries_; }

  /// Second-smallest eigenvalue of theta * L. Throws for N = 1.
  double algebraic_connectivity() const;
  /// Same value, but 0 for a single particle.
  double lambda_min_nonzero() const { return lambda_min_; }
  /// Spectral norm of theta * L (its largest eigenvalue).
  double laplacian_norm() const { return lambda_max_; }
  /// Eigenvalues of theta * L in ascending order.
  const Vector& spectrum() const { return spectrum_; }
  bool connected() const { return singleton() || lambda_min_ > 1e-12; }

  /// Number of off-diagonal nonzero weights (messages per round).
  std::int64_t communication_per_round() const { return offdiag_nnz_; }

  /// out_i = theta * sum_j A_ij (Z_j - Z_i) = -theta (L Z)_i.
  void drift(const Matrix& z, Matrix& out) const;
  Matrix drift(const Matrix& z) const;

 private:
  void finalize();

  Matrix weights_;
  Matrix laplacian_;
  Vector row_sums_;
  Vector spectrum_;
  double theta_;
  GraphStructure structure_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
  std::int64_t offdiag_nnz_ = 0;
  int retries_ = 0;
};

/// First violated doubly-stochastic invariant as a readable message, or
/// nothing if A is non-negative, symmetric and has unit row/column sums.
std::optional<std::string> check_doubly_stochastic(const Matrix& a, double tol = 1e-9);

/// Alternating row/column scaling of a non-negative matrix with positive diagonal.
/// Returns the number of sweeps used; throws if tol is not reached in max_sweeps.
int sinkhorn_balance(Matrix& a, double tol = 1e-10, int max_sweeps = 100000);

}  // namespace ismd
