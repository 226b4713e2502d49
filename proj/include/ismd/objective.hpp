#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "ismd/types.hpp"

namespace ismd {

// Identifies one stochastic-gradient draw; equal keys give equal draws.
struct SampleKey {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t particle = 0;
};

// f(x) = 0.5 x^T H x - c^T x + constant.
struct QuadraticForm {
  Eigen::MatrixXd hessian;
  Vector linear;
  double constant = 0.0;
};

class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string_view kind() const = 0;
  virtual Index dimension() const = 0;
  virtual double value(const Eigen::Ref<const Vector>& x) const = 0;
  virtual void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const = 0;
  Vector gradient(const Eigen::Ref<const Vector>& x) const;

  /// Stochastic gradient for the given draw. Defaults to the exact gradient.
  virtual void sampled_gradient(const Eigen::Ref<const Vector>& x, const SampleKey& key,
                                Eigen::Ref<Vector> out) const;
  virtual bool is_stochastic() const { return false; }

  /// Bound on |grad f| over the simplex.
  virtual double lipschitz() const = 0;
  /// Strong-convexity modulus of f in the euclidean norm (0 if only convex).
  virtual double strong_convexity() const { return 0.0; }
  virtual std::optional<QuadraticForm> quadratic_form() const { return std::nullopt; }

 protected:
  void check_dimension(Index n) const;
};

/// f(x) = c^T x.
class LinearObjective final : public Objective {
 public:
  explicit LinearObjective(Vector costs);
  std::string_view kind() const override { return "linear"; }
  Index dimension() const override { return costs_.size(); }
  double value(const Eigen::Ref<const Vector>& x) const override;
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
  using Objective::gradient;
  double lipschitz() const override { return costs_.norm(); }
  std::optional<QuadraticForm> quadratic_form() const override;

 private:
  Vector costs_;
};

/// f(x) = 0.5 x^T Q x - c^T x with Q symmetric positive semidefinite.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Eigen::MatrixXd q, Vector c);
  std::string_view kind() const override { return "quadratic"; }
  Index dimension() const override { return c_.size(); }
  double value(const Eigen::Ref<const Vector>& x) const override;
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
  using Objective::gradient;
  double lipschitz() const override;
  double strong_convexity() const override { return lambda_min_; }
  std::optional<QuadraticForm> quadratic_form() const override { return QuadraticForm{q_, c_, 0.0}; }

  const Eigen::MatrixXd& hessian() const { return q_; }
  const Vector& linear() const { return c_; }

 private:
  Eigen::MatrixXd q_;
  Vector c_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

/// f(x) = (1/m) |W x - b|^2 = (1/m) sum_i (W_i x - b_i)^2 with optional
/// mini-batch gradients over S of the m rows, drawn without replacement.
class LeastSquares final : public Objective {
 public:
  LeastSquares(Eigen::MatrixXd w, Vector b, Index batch_size = 0);

  std::string_view kind() const override { return "least_squares"; }
  Index dimension() const override { return w_.cols(); }
  Index rows() const { return w_.rows(); }
  Index batch_size() const { return batch_; }
  void set_batch_size(Index s);
  /// Splits the rows into `k` contiguous blocks; particle p then draws its
  /// mini-batches from block p mod k only (heterogeneous local data). The
  /// objective itself is unchanged. k = 1 restores shared data.
  void set_shards(Index k);
  Index shards() const { return shards_; }

  double value(const Eigen::Ref<const Vector>& x) const override;
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
  using Objective::gradient;
  void sampled_gradient(const Eigen::Ref<const Vector>& x, const SampleKey& key,
                        Eigen::Ref<Vector> out) const override;
  bool is_stochastic() const override { return batch_ < w_.rows() || shards_ > 1; }

  /// Row indices of the mini-batch for a draw (sorted).
  std::vector<Index> batch_indices(const SampleKey& key) const;

  double lipschitz() const override;
  double strong_convexity() const override;
  std::optional<QuadraticForm> quadratic_form() const override;

  const Eigen::MatrixXd& design() const { return w_; }
  const Vector& target() const { return b_; }
  const Vector& singular_values() const { return singular_; }
  double condition_number() const;

 private:
  Eigen::MatrixXd w_;
  Vector b_;
  Index batch_;
  Index shards_ = 1;
  Eigen::MatrixXd h_;  // (2/m) W^T W
  Vector c_;           // (2/m) W^T b
  Vector singular_;    // descending
};

/// W = U S V^T with Haar-like orthogonal U, V (QR of Gaussian matrices) and
/// singular values geometrically spaced from s_max down to s_max/cond; b ~ N(0, I_m).
LeastSquares generate_least_squares(Index m, Index d, double cond, std::uint64_t seed,
                                    Index batch_size = 0, double s_max = 1.0);

}  // namespace ismd
