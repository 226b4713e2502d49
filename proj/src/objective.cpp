#include "ismd/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ismd/rng.hpp"

namespace ismd {

Vector Objective::gradient(const Eigen::Ref<const Vector>& x) const {
  Vector out(dimension());
  gradient(x, out);
  return out;
}

void Objective::sampled_gradient(const Eigen::Ref<const Vector>& x, const SampleKey&,
                                 Eigen::Ref<Vector> out) const {
  gradient(x, out);
}

void Objective::check_dimension(Index n) const {
  if (n != dimension()) {
    throw ValidationError(std::string(kind()) + " objective of dimension " +
                          std::to_string(dimension()) + " evaluated at a vector of size " +
                          std::to_string(n));
  }
}

// ---------------------------------------------------------------- linear

LinearObjective::LinearObjective(Vector costs) : costs_(std::move(costs)) {
  if (costs_.size() == 0) throw ValidationError("linear objective needs at least one cost");
}

double LinearObjective::value(const Eigen::Ref<const Vector>& x) const {
  check_dimension(x.size());
  return costs_.dot(x);
}

void LinearObjective::gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
  check_dimension(x.size());
  out = costs_;
}

std::optional<QuadraticForm> LinearObjective::quadratic_form() const {
  return QuadraticForm{Eigen::MatrixXd::Zero(costs_.size(), costs_.size()), -costs_, 0.0};
}

// ---------------------------------------------------------------- quadratic

QuadraticObjective::QuadraticObjective(Eigen::MatrixXd q, Vector c)
    : q_(std::move(q)), c_(std::move(c)) {
  if (q_.rows() != q_.cols() || q_.rows() != c_.size() || c_.size() == 0) {
    throw ValidationError("quadratic objective: Q must be square and match c");
  }
  if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q_.cwiseAbs().maxCoeff())) {
    throw ValidationError("quadratic objective: Q must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q_, Eigen::EigenvaluesOnly);
  lambda_min_ = std::max(0.0, es.eigenvalues().minCoeff());
  lambda_max_ = es.eigenvalues().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, lambda_max_)) {
    throw ValidationError("quadratic objective: Q must be positive semidefinite");
  }
}

double QuadraticObjective::value(const Eigen::Ref<const Vector>& x) const {
  check_dimension(x.size());
  return 0.5 * x.dot(q_ * x) - c_.dot(x);
}

void QuadraticObjective::gradient(const Eigen::Ref<const Vector>& x,
                                  Eigen::Ref<Vector> out) const {
  check_dimension(x.size());
  out.noalias() = q_ * x;
  out -= c_;
}

double QuadraticObjective::lipschitz() const {
  // Over the simplex |x|_2 <= 1.
  return lambda_max_ + c_.norm();
}

// ---------------------------------------------------------------- least squares

LeastSquares::LeastSquares(Eigen::MatrixXd w, Vector b, Index batch_size)
    : w_(std::move(w)), b_(std::move(b)) {
  if (w_.rows() == 0 || w_.cols() == 0) throw ValidationError("least squares: empty design");
  if (w_.rows() != b_.size()) {
    throw ValidationError("least squares: W has " + std::to_string(w_.rows()) +
                          " rows but b has " + std::to_string(b_.size()) + " entries");
  }
  set_batch_size(batch_size == 0 ? w_.rows() : batch_size);
  const double m = static_cast<double>(w_.rows());
  h_ = (2.0 / m) * (w_.transpose() * w_);
  c_ = (2.0 / m) * (w_.transpose() * b_);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(w_);
  singular_ = svd.singularValues();
}

void LeastSquares::set_batch_size(Index s) {
  if (s < 1 || s > w_.rows()) {
    throw ValidationError("batch size " + std::to_string(s) + " must lie in [1, m=" +
                          std::to_string(w_.rows()) + "]");
  }
  batch_ = s;
}

void LeastSquares::set_shards(Index k) {
  if (k < 1 || k > w_.rows()) {
    throw ValidationError("shard count " + std::to_string(k) + " must lie in [1, m=" +
                          std::to_string(w_.rows()) + "]");
  }
  shards_ = k;
}

double LeastSquares::value(const Eigen::Ref<const Vector>& x) const {
  check_dimension(x.size());
  return (w_ * x - b_).squaredNorm() / static_cast<double>(w_.rows());
}

void LeastSquares::gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
  check_dimension(x.size());
  out.noalias() = h_ * x;
  out -= c_;
}

std::vector<Index> LeastSquares::batch_indices(const SampleKey& key) const {
  const Index m = w_.rows();
  const Index s = static_cast<Index>(key.particle % static_cast<std::uint64_t>(shards_));
  const Index lo = s * m / shards_, hi = (s + 1) * m / shards_;
  std::vector<Index> all(static_cast<std::size_t>(hi - lo));
  std::iota(all.begin(), all.end(), lo);
  const Index take = std::min(batch_, hi - lo);
  if (take == hi - lo) return all;
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(take));
  CounterRng rng(key.seed, Stream::minibatch, key.step, key.particle);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), take, rng);
  return picked;
}

void LeastSquares::sampled_gradient(const Eigen::Ref<const Vector>& x, const SampleKey& key,
                                    Eigen::Ref<Vector> out) const {
  if (batch_ == w_.rows() && shards_ == 1) {
    gradient(x, out);
    return;
  }
  check_dimension(x.size());
  out.setZero();
  const auto rows = batch_indices(key);
  for (Index i : rows) {
    const double r = w_.row(i).dot(x) - b_[i];
    out += r * w_.row(i).transpose();
  }
  out *= 2.0 / static_cast<double>(rows.size());
}

double LeastSquares::lipschitz() const {
  const double smax = singular_[0];
  return 2.0 * smax * (smax + b_.norm()) / static_cast<double>(w_.rows());
}

double LeastSquares::strong_convexity() const {
  if (w_.rows() < w_.cols()) return 0.0;
  const double smin = singular_[singular_.size() - 1];
  return 2.0 * smin * smin / static_cast<double>(w_.rows());
}

std::optional<QuadraticForm> LeastSquares::quadratic_form() const {
  return QuadraticForm{h_, c_, b_.squaredNorm() / static_cast<double>(w_.rows())};
}

double LeastSquares::condition_number() const {
  const double smin = singular_[singular_.size() - 1];
  return smin > 0.0 ? singular_[0] / smin : std::numeric_limits<double>::infinity();
}

namespace {

// Orthonormal columns from the QR factorization of a Gaussian matrix, with the
// sign convention diag(R) > 0.
Eigen::MatrixXd random_orthonormal(Index rows, Index cols, CounterRng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Index j = 0; j < cols; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

}  // namespace

LeastSquares generate_least_squares(Index m, Index d, double cond, std::uint64_t seed,
                                    Index batch_size, double s_max) {
  if (!(s_max > 0.0)) throw ValidationError("least squares: largest singular value must be positive");
  if (m < 1 || d < 1) throw ValidationError("least squares: m and d must be positive");
  if (!(cond >= 1.0)) throw ValidationError("least squares: condition number must be >= 1");
  const Index r = std::min(m, d);
  CounterRng rng(seed, Stream::problem, 0);
  const Eigen::MatrixXd u = random_orthonormal(m, r, rng);
  const Eigen::MatrixXd v = random_orthonormal(d, r, rng);
  Vector s(r);
  for (Index i = 0; i < r; ++i) {
    s[i] = r == 1 ? s_max : s_max * std::pow(cond, -static_cast<double>(i) / static_cast<double>(r - 1));
  }
  Eigen::MatrixXd w = u * s.asDiagonal() * v.transpose();
  std::normal_distribution<double> normal;
  Vector b(m);
  for (Index i = 0; i < m; ++i) b[i] = normal(rng);
  return LeastSquares(std::move(w), std::move(b), batch_size);
}

}  // namespace ismd
