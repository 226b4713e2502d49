#include "ismd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace ismd {

double frank_wolfe_gap(const Objective& obj, const Eigen::Ref<const Vector>& x) {
  const Vector g = obj.gradient(x);
  return std::max(0.0, g.dot(x) - g.minCoeff());
}

namespace {

Vector softmax(const Vector& z) {
  Vector x = (z.array() - z.maxCoeff()).exp().max(std::numeric_limits<double>::min());
  return x / x.sum();
}

double kl(const Vector& x, const Vector& y) {
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] > 0.0) acc += x[i] * std::log(x[i] / y[i]);
  return std::max(acc, 0.0);
}

// Minimizer of the quadratic restricted to the face spanned by `support`,
// i.e. H_SS x_S - nu 1 = c_S, 1^T x_S = 1. Returns false if the system is
// inconsistent.
bool solve_face(const QuadraticForm& q, const std::vector<Index>& support, Vector& x) {
  const Index k = static_cast<Index>(support.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  Vector rhs(k + 1);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) kkt(a, b) = q.hessian(support[a], support[b]);
    kkt(a, k) = -1.0;
    kkt(k, a) = 1.0;
    rhs[a] = q.linear[support[a]];
  }
  rhs[k] = 1.0;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
  const Vector sol = cod.solve(rhs);
  if ((kkt * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) return false;
  x.setZero();
  for (Index a = 0; a < k; ++a) x[support[a]] = sol[a];
  return true;
}

// Active-set refinement started from the support of an interior iterate.
bool polish(const Objective& obj, const QuadraticForm& q, const Vector& x0, double tol,
            Vector& out) {
  const Index d = x0.size();
  std::vector<Index> support;
  const double thresh = 1e-6 * x0.maxCoeff();
  for (Index i = 0; i < d; ++i)
    if (x0[i] > thresh) support.push_back(i);
  // Dense face solves are cubic in the support; wait until mirror descent has thinned it.
  if (support.size() > 400) return false;
  Vector x(d);
  for (Index round = 0; round < 2 * d + 10 && !support.empty(); ++round) {
    if (!solve_face(q, support, x)) return false;
    // Drop coordinates that went negative, most negative first.
    Index worst = -1;
    for (Index i : support)
      if (x[i] < -1e-14 && (worst < 0 || x[i] < x[worst])) worst = i;
    if (worst >= 0) {
      support.erase(std::find(support.begin(), support.end(), worst));
      continue;
    }
    x = x.cwiseMax(0.0);
    x /= x.sum();
    const Vector g = obj.gradient(x);
    const double gap = std::max(0.0, g.dot(x) - g.minCoeff());
    if (gap <= tol) {
      out = x;
      return true;
    }
    // Add the coordinate with the smallest gradient if it is outside.
    Index best;
    g.minCoeff(&best);
    if (std::find(support.begin(), support.end(), best) != support.end()) return false;
    support.push_back(best);
    std::sort(support.begin(), support.end());
  }
  return false;
}

}  // namespace

MinimizerCertificate certify_minimizer(const Objective& obj, double tol, long max_iter) {
  if (!(tol > 0.0)) throw ValidationError("certificate tolerance must be positive");
  const Index d = obj.dimension();
  const auto quad = obj.quadratic_form();
  Vector z = Vector::Zero(d);
  Vector x = softmax(z);
  Vector g = obj.gradient(x);
  double fx = obj.value(x);
  double step = 1.0 / std::max(1e-12, obj.lipschitz());
  double gap = std::max(0.0, g.dot(x) - g.minCoeff());
  long it = 0;
  for (; it < max_iter && gap > tol; ++it) {
    if (quad && it % 25 == 0) {
      Vector refined;
      if (polish(obj, *quad, x, tol, refined)) {
        x = refined;
        gap = frank_wolfe_gap(obj, x);
        break;
      }
    }
    // Backtracking: sufficient decrease w.r.t. the KL proximal model.
    for (int bt = 0; bt < 200; ++bt) {
      const Vector z_new = z - step * g;
      const Vector x_new = softmax(z_new);
      const double f_new = obj.value(x_new);
      if (f_new <= fx + g.dot(x_new - x) + kl(x_new, x) / step + 1e-15 * std::abs(fx)) {
        z = z_new;
        x = x_new;
        fx = f_new;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    // Keep the mirror point well scaled; softmax is shift invariant.
    z.array() -= z.maxCoeff();
    g = obj.gradient(x);
    gap = std::max(0.0, g.dot(x) - g.minCoeff());
  }
  if (gap > tol) {
    std::ostringstream msg;
    msg << "certification failed: Frank-Wolfe gap " << gap << " above tolerance " << tol
        << " after " << it << " iterations";
    throw CertificationError(msg.str(), gap);
  }
  MinimizerCertificate cert;
  cert.x_star = x;
  cert.fw_gap = gap;
  cert.f_star = obj.value(x) - gap;
  cert.tolerance = tol;
  cert.iterations = it;
  return cert;
}

OUStationary ou_stationary(const Eigen::MatrixXd& drift, const Vector& shift, double sigma) {
  const Index n = drift.rows();
  if (drift.cols() != n || shift.size() != n) {
    throw ValidationError("OU oracle: drift must be square and match the shift vector");
  }
  if ((drift - drift.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + drift.norm())) {
    throw ValidationError("OU oracle: drift matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(drift);
  const Vector& lam = es.eigenvalues();
  if (!(lam[0] > 1e-12 * std::max(1.0, lam[n - 1]))) {
    std::ostringstream msg;
    msg << "OU oracle: drift matrix is singular or indefinite (smallest eigenvalue " << lam[0]
        << ")";
    throw ValidationError(msg.str());
  }
  const Eigen::MatrixXd& u = es.eigenvectors();
  OUStationary out;
  out.drift = drift;
  out.mean = u * (lam.cwiseInverse().asDiagonal() * (u.transpose() * shift));
  // M S + S M = sigma^2 I has the solution S = U diag(sigma^2 / (2 lambda)) U^T.
  const Vector var = (sigma * sigma) * (2.0 * lam).cwiseInverse();
  out.covariance = u * var.asDiagonal() * u.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.residual = (drift * out.covariance + out.covariance * drift -
                  sigma * sigma * Eigen::MatrixXd::Identity(n, n))
                     .norm();
  return out;
}

OUStationary ou_stationary(const QuadraticObjective& obj, const InteractionGraph& g, double sigma,
                           double eta) {
  const Index n = g.size();
  const Index d = obj.dimension();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n * d, n * d);
  Vector b(n * d);
  const Eigen::MatrixXd& lap = g.laplacian();
  for (Index i = 0; i < n; ++i) {
    m.block(i * d, i * d, d, d) += eta * obj.hessian();
    b.segment(i * d, d) = eta * obj.linear();
    for (Index j = 0; j < n; ++j) {
      m.block(i * d, j * d, d, d).diagonal().array() += g.theta() * lap(i, j);
    }
  }
  return ou_stationary(m, b, sigma);
}

}  // namespace ismd
