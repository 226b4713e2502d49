#include "ismd/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "ismd/csv.hpp"

namespace ismd {

Vector loss_gap(const Objective& obj, const MirrorMap& map, const Matrix& z, double f_star) {
  Vector gaps(z.rows());
  Vector x(z.cols());
  for (Index i = 0; i < z.rows(); ++i) {
    map.grad_conjugate(z.row(i).transpose(), x);
    gaps[i] = obj.value(x) - f_star;
  }
  return gaps;
}

namespace {

Vector row_mean(const Matrix& m) {
  Vector mean = Vector::Zero(m.cols());
  for (Index i = 0; i < m.rows(); ++i) mean += m.row(i).transpose();
  return mean / static_cast<double>(m.rows());
}

}  // namespace

FluctuationStats fluctuation_stats(const Matrix& z) {
  if (z.rows() == 0) throw ValidationError("fluctuation statistics need at least one particle");
  const Vector mean = row_mean(z);
  FluctuationStats s;
  for (Index i = 0; i < z.rows(); ++i) {
    const double sq = (z.row(i).transpose() - mean).squaredNorm();
    s.mean_sq += sq;
    s.mean += std::sqrt(sq);
    s.max = std::max(s.max, std::sqrt(sq));
  }
  s.mean_sq /= static_cast<double>(z.rows());
  s.mean /= static_cast<double>(z.rows());
  return s;
}

double consensus_error(const Matrix& x) {
  const Vector mean = row_mean(x);
  double acc = 0.0;
  for (Index i = 0; i < x.rows(); ++i) acc += (x.row(i).transpose() - mean).norm();
  return acc / static_cast<double>(x.rows());
}

TraceRow measure(const Objective& obj, const MirrorMap& map, const Matrix& z, const Matrix& x,
                 double f_star) {
  TraceRow row;
  row.loss_gaps.resize(x.rows());
  for (Index i = 0; i < x.rows(); ++i) row.loss_gaps[i] = obj.value(x.row(i).transpose()) - f_star;
  row.loss_gap_mean = row.loss_gaps.mean();
  const FluctuationStats fs = fluctuation_stats(z);
  row.fluct_mean_sq = fs.mean_sq;
  row.fluct_mean = fs.mean;
  row.fluct_max = fs.max;
  row.consensus_mean = consensus_error(x);
  row.loss_at_mean = obj.value(map.grad_conjugate(row_mean(z))) - f_star;
  return row;
}

namespace {

void require_window(const RunTrace& trace, std::int64_t burn_in) {
  if (trace.rows.empty() || trace.rows.back().k < burn_in) {
    throw ValidationError("burn-in " + std::to_string(burn_in) + " lies beyond the recorded trace");
  }
}

}  // namespace

double pooled_loss_variance(const RunTrace& trace, std::int64_t burn_in) {
  require_window(trace, burn_in);
  double sum = 0.0, sum_sq = 0.0;
  std::int64_t count = 0;
  // Two passes for accuracy: mean first, then centred squares.
  for (const auto& row : trace.rows) {
    if (row.k < burn_in) continue;
    sum += row.loss_gaps.sum();
    count += row.loss_gaps.size();
  }
  const double mean = sum / static_cast<double>(count);
  for (const auto& row : trace.rows) {
    if (row.k < burn_in) continue;
    sum_sq += (row.loss_gaps.array() - mean).square().sum();
  }
  return sum_sq / static_cast<double>(count);
}

double post_burn_in_mean(const RunTrace& trace, std::int64_t burn_in, double TraceRow::*field) {
  require_window(trace, burn_in);
  double acc = 0.0;
  std::int64_t count = 0;
  for (const auto& row : trace.rows) {
    if (row.k < burn_in) continue;
    acc += row.*field;
    ++count;
  }
  return acc / static_cast<double>(count);
}

double variance_reduction_ratio(const RunTrace& iid, const RunTrace& interacting,
                                std::int64_t burn_in) {
  const double v_iid = pooled_loss_variance(iid, burn_in);
  const double v_int = pooled_loss_variance(interacting, burn_in);
  if (!(v_iid > 0.0)) throw ValidationError("baseline loss variance is zero");
  return (v_iid - v_int) / v_iid;
}

std::optional<std::int64_t> time_to_threshold(const RunTrace& trace, double level) {
  for (const auto& row : trace.rows)
    if (row.loss_gap_mean < level) return row.k;
  return std::nullopt;
}

std::int64_t communication_cost(const InteractionGraph& g, std::int64_t k) {
  return k * g.communication_per_round();
}

void write_trace_csv(std::ostream& os, const RunTrace& trace, bool wide) {
  os << "k,t,eta,sigma,loss_gap_mean";
  if (wide) {
    char buf[32];
    for (Index i = 0; i < trace.particles; ++i) {
      std::snprintf(buf, sizeof buf, "loss_gap_p%02ld", static_cast<long>(i));
      os << ',' << buf;
    }
  }
  os << ",fluct_mean_sq,consensus_mean,loss_at_mean";
  for (const auto& name : trace.bound_names) os << ',' << name;
  os << '\n';
  for (const auto& row : trace.rows) {
    os << row.k << ',' << format_double(row.t) << ',' << format_double(row.eta) << ','
       << format_double(row.sigma) << ',' << format_double(row.loss_gap_mean);
    if (wide)
      for (Index i = 0; i < row.loss_gaps.size(); ++i) os << ',' << format_double(row.loss_gaps[i]);
    os << ',' << format_double(row.fluct_mean_sq) << ',' << format_double(row.consensus_mean) << ','
       << format_double(row.loss_at_mean);
    for (double b : row.bounds) os << ',' << format_double(b);
    os << '\n';
  }
}

}  // namespace ismd
