#pragma once

#include "ismd/graph.hpp"
#include "ismd/objective.hpp"

namespace ismd {

struct MinimizerCertificate {
  Vector x_star;
  double f_star = 0.0;
  double fw_gap = 0.0;
  double tolerance = 0.0;
  long iterations = 0;
};

/// Frank-Wolfe gap on the simplex, grad f(x)^T x - min_i grad f(x)_i. By
/// convexity it bounds f(x) - min f from above.
double frank_wolfe_gap(const Objective& obj, const Eigen::Ref<const Vector>& x);

/// Entropic mirror descent with backtracking step sizes, plus (for quadratic
/// objectives) an active-set KKT solve on the current support. Stops as soon
/// as the Frank-Wolfe gap is <= tol; f_star = f(x) - gap is then a lower bound
/// on the optimum within tol of it. Throws CertificationError at max_iter.
MinimizerCertificate certify_minimizer(const Objective& obj, double tol = 1e-10,
                                       long max_iter = 1000000);

struct OUStationary {
  Vector mean;                 // N*d, particle-major
  Eigen::MatrixXd covariance;  // N*d x N*d
  Eigen::MatrixXd drift;       // M
  double residual = 0.0;       // |M S + S M - sigma^2 I|_F
};

/// Stationary law of dZ = -(M Z - b) dt + sigma dB for symmetric positive
/// definite M. Throws ValidationError (reporting the smallest eigenvalue) if M
/// is not positive definite.
OUStationary ou_stationary(const Eigen::MatrixXd& drift, const Vector& shift, double sigma);

/// Euclidean-map ISMD on f(x) = 0.5 x^T Q x - c^T x:
/// M = eta (I_N kron Q) + theta (L kron I_d), b = eta (1 kron c).
OUStationary ou_stationary(const QuadraticObjective& obj, const InteractionGraph& g, double sigma,
                           double eta);

}  // namespace ismd
