#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ismd/graph.hpp"
#include "ismd/mirror.hpp"
#include "ismd/objective.hpp"

namespace ismd {

struct TraceRow {
  std::int64_t k = 0;
  double t = 0.0;
  double eta = 0.0;
  double sigma = 0.0;
  Vector loss_gaps;  // f(x_i) - f*, one per particle
  double loss_gap_mean = 0.0;
  double fluct_mean_sq = 0.0;  // (1/N) sum |z_i - zbar|^2
  double fluct_mean = 0.0;
  double fluct_max = 0.0;
  double consensus_mean = 0.0;  // (1/N) sum |x_i - xbar|_2
  double loss_at_mean = 0.0;    // f(grad Phi*(zbar)) - f*
  std::vector<double> bounds;   // optional envelope columns
};

struct RunTrace {
  Index particles = 0;
  std::vector<TraceRow> rows;
  std::vector<std::string> bound_names;
  std::vector<std::string> warnings;
};

struct FluctuationStats {
  double mean_sq = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

Vector loss_gap(const Objective& obj, const MirrorMap& map, const Matrix& z, double f_star);
FluctuationStats fluctuation_stats(const Matrix& z);
/// Mean over particles of |x_i - xbar|_2.
double consensus_error(const Matrix& x);

/// All per-row metrics for a state whose primal image is x.
TraceRow measure(const Objective& obj, const MirrorMap& map, const Matrix& z, const Matrix& x,
                 double f_star);

/// Population variance of all per-particle loss gaps in rows with k >= burn_in.
double pooled_loss_variance(const RunTrace& trace, std::int64_t burn_in);
/// Mean of a per-row quantity over rows with k >= burn_in.
double post_burn_in_mean(const RunTrace& trace, std::int64_t burn_in,
                         double TraceRow::*field);
/// (var_iid - var_int) / var_iid over the post-burn-in window.
double variance_reduction_ratio(const RunTrace& iid, const RunTrace& interacting,
                                std::int64_t burn_in);
/// Smallest recorded k whose mean loss gap is below level.
std::optional<std::int64_t> time_to_threshold(const RunTrace& trace, double level);
std::int64_t communication_cost(const InteractionGraph& g, std::int64_t k);

/// Columns: k,t,eta,sigma,loss_gap_mean,[loss_gap_pXX...],fluct_mean_sq,
/// consensus_mean,loss_at_mean,[bound columns].
void write_trace_csv(std::ostream& os, const RunTrace& trace, bool wide);

}  // namespace ismd
