#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ismd/types.hpp"

namespace ismd {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Simplex membership of softmax, D(x, x) = 0, non-negativity and the
/// dual-norm Lipschitz inequality of grad Phi* on random pairs.
CheckResult check_mirror_identities(int pairs = 10000, std::uint64_t seed = 1);

/// Doubly-stochastic and symmetric weights; names the first offending row,
/// column or entry.
CheckResult check_weights(const Matrix& a, double tol = 1e-9);

/// Mean-field and Erdos-Renyi graphs (p in {0.3, 0.5, 1}, N = 10) over
/// `seeds` seeds: row/column sums, L 1 = 0, mean-field lambda = 1 against an
/// eigensolve, and column cancellation of the interaction drift.
CheckResult check_graph_suite(int seeds = 20);

/// Euclidean-map integrator on a d = 2 quadratic with mean-field coupling:
/// empirical stationary covariance trace within rel_tol of the Lyapunov
/// solution and the particle-averaged mean within 3 standard errors.
/// `sigma_scale` multiplies the simulated noise only (to exercise failures).
struct OUCheckOptions {
  std::vector<Index> particles{1, 2, 10};
  double epsilon = 1e-3;
  std::int64_t steps = 1000000;
  std::int64_t burn_in = 20000;
  double rel_tol = 0.05;
  double sigma = 0.5;
  double sigma_scale = 1.0;
  std::uint64_t seed = 7;
};
CheckResult check_ou_anchor(const OUCheckOptions& opts);

/// A = I with N particles is bitwise equal to N single-particle runs.
CheckResult check_independent_equivalence();

/// sigma = 0, N = 1 entropy-map run against a frozen deterministic mirror-descent trace.
CheckResult check_golden_md(double tol = 1e-12);

/// Mirror-space step against the closed-form Bregman proximal step (N = 3, d = 5, eps = 1).
CheckResult check_bregman_equivalence(int trials = 100, double tol = 1e-8);

/// Runs the whole suite; `quick` shortens the OU anchor.
std::vector<CheckResult> run_verification(bool quick);

/// One line per check; returns true if all passed.
bool print_report(std::ostream& os, const std::vector<CheckResult>& results);

}  // namespace ismd
