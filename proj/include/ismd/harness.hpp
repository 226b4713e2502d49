#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ismd/config.hpp"
#include "ismd/oracle.hpp"

namespace ismd {

struct Problem {
  std::shared_ptr<const Objective> objective;
  std::optional<TrafficNetwork> network;
  MinimizerCertificate certificate;
  // Quadratic problem under the plain euclidean map: f* is the unconstrained minimum.
  bool unconstrained = false;
};

/// Builds (or loads) the problem of a resolved config and certifies f*.
/// Problems loaded from a file need a stored certificate at or below the
/// requested tolerance; CertificationError otherwise.
Problem build_problem(const ExperimentConfig& cfg, std::uint64_t run_seed);
InteractionGraph build_graph(const ExperimentConfig& cfg, std::uint64_t run_seed);

/// Problem CSV: '#'-prefixed "key = value" metadata, then numeric rows.
///   least_squares: rows [W_i | b_i]       (# batch = S)
///   quadratic:     rows [Q_i | c_i]
///   traffic:       rows [a_e, b_e, P_e1 .. P_ed]   (# edge_noise = s)
void write_problem_csv(const std::string& path, const Objective& obj);
std::unique_ptr<Objective> load_problem_csv(const std::string& path);

Json certificate_to_json(const MinimizerCertificate& cert, const std::string& problem_hash);
/// Reads <problem>.cert.json; nullopt if missing or if the hash does not match.
std::optional<MinimizerCertificate> load_certificate(const std::string& problem_path);
std::string file_hash(const std::string& path);

struct HarnessOptions {
  std::string out;                     // overrides run.out
  std::optional<std::uint64_t> seed;   // single seed instead of run.seeds
  std::optional<bool> bounds;          // overrides metrics.bounds
  std::optional<bool> wide_csv;        // overrides metrics.wide_csv
  int jobs = 1;
  bool sweep = false;                  // expand the [sweep] grid
  bool write_files = true;
  bool keep_traces = false;            // keep RunTrace in the returned cells
  std::ostream* log = nullptr;
};

struct CellResult {
  std::string variant;
  Json axes = Json::object();  // sweep coordinates
  std::uint64_t seed = 0;
  Json summary = Json::object();
  int status = 0;  // 0 ok, 2 diverged, 3 certification failure
  std::string error;
  RunTrace trace;  // only with keep_traces
};

struct ExperimentResult {
  std::string name;
  std::vector<CellResult> cells;
  int exit_code = 0;
};

/// Runs every (variant, sweep cell, seed) combination. Cells are independent
/// and may run on `jobs` threads; outputs are identical for any job count.
ExperimentResult execute(const ConfigDocument& doc, const HarnessOptions& opts);

/// Runs a single resolved configuration for one seed.
CellResult run_cell(const ExperimentConfig& cfg, const Problem& problem, std::uint64_t seed,
                    bool keep_trace, std::ostream* trace_csv);

struct SummaryRow {
  std::string variant;
  Json axes;
  std::string metric;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  std::size_t n = 0;
};

/// Median and quartiles of every numeric summary metric per (variant, axes)
/// cell over seeds, in first-appearance order.
std::vector<SummaryRow> aggregate(const std::vector<CellResult>& cells);

/// Adds variance_reduction_ratio to each non-baseline cell summary, computed
/// against the baseline cell with the same axes and seed from their pooled
/// post-burn-in loss variances.
void attach_variance_reduction(std::vector<CellResult>& cells, const std::string& baseline);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

/// Linear-interpolated quantile of unsorted data.
double quantile(std::vector<double> v, double q);

/// Names of the shipped experiment configs in `dir` with their descriptions.
std::vector<std::pair<std::string, std::string>> list_configs(const std::string& dir);

}  // namespace ismd
