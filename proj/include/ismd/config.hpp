#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ismd/dynamics.hpp"
#include "ismd/mirror.hpp"
#include "ismd/traffic.hpp"

namespace ismd {

using Json = nlohmann::ordered_json;

struct ProblemSpec {
  std::string kind = "least_squares";  // least_squares | traffic | quadratic
  std::string file;                    // problem CSV; overrides generation
  Index m = 100;
  Index d = 100;
  double cond = 10.0;
  double singular_max = 1.0;  // largest singular value of the generated W
  std::uint64_t seed = 1;
  bool reseed = false;  // add the run seed to the problem seed
  Index batch = 0;      // 0 -> full batch
  Index shards = 1;     // per-particle blocks of rows (least squares)
  TrafficSpec traffic;
  Eigen::MatrixXd hessian;
  Vector linear;
  double tolerance = 1e-10;  // certificate tolerance for f*
};

struct MirrorSpec {
  MirrorKind kind = MirrorKind::entropy;
  double scale = 1.0;
  bool projection = false;
};

struct GraphSpec {
  std::string structure = "mean_field";  // mean_field | independent | erdos_renyi | file
  std::string file;
  Index particles = 1;
  double p = 1.0;
  double theta = 1.0;
  std::uint64_t seed = 0;  // the run seed is added
};

struct IntegratorSpec {
  double epsilon = 0.1;
  Schedule eta = Schedule::constant(1.0);
  Schedule sigma = Schedule::constant(0.0);
  std::int64_t steps = 0;
  GradientMode gradient = GradientMode::sampled;
  InitMode init = InitMode::zeros;
  double init_scale = 1.0;
  std::uint64_t init_seed = 0;  // the run seed is added
};

struct MetricsSpec {
  std::int64_t burn_in = 0;
  std::int64_t stride = 1;
  bool wide_csv = false;
  bool bounds = false;
  bool traces = true;
  std::optional<double> threshold;
  std::optional<double> kappa;
  double mu_f = 0.0;
};

struct RunSpec {
  std::string name;
  std::string description;
  std::vector<std::uint64_t> seeds{1};
  std::string out = "out";
  std::string baseline;  // variant used as the i.i.d. reference
};

struct ExperimentConfig {
  ProblemSpec problem;
  MirrorSpec mirror;
  GraphSpec graph;
  IntegratorSpec integrator;
  MetricsSpec metrics;
  RunSpec run;
  Json resolved;  // the sections after overrides, echoed to the output
};

struct SweepAxis {
  std::string key;  // section.key
  std::vector<Json> values;
};

struct Variant {
  std::string name;
  Json overrides;  // section.key -> value
};

/// Parsed but unresolved configuration: base sections, sweep axes and
/// variants, with source line numbers for error messages.
struct ConfigDocument {
  std::string source;
  Json base = Json::object();
  std::vector<SweepAxis> sweep;
  std::vector<Variant> variants;
  std::map<std::string, int> lines;  // "section.key" / "variant.NAME:section.key" -> line

  std::string where(const std::string& key) const;
};

/// INI-style text: [section] headers, key = value lines, '#' or ';' comments.
/// Values are typed as bool, integer, real, comma-separated list or string.
ConfigDocument parse_config_text(const std::string& text, const std::string& source);
/// JSON document with the same section layout.
ConfigDocument parse_config_json(const std::string& text, const std::string& source);
/// Dispatches on the extension (.json -> JSON, anything else -> INI).
ConfigDocument load_config(const std::string& path);

/// Resolves the base sections with `overrides` (section.key -> value) applied.
/// Unknown keys and ill-typed values are reported with their source line.
ExperimentConfig resolve(const ConfigDocument& doc, const Json& overrides = Json::object());

/// "1..10" or a list of integers.
std::vector<std::uint64_t> parse_seed_list(const Json& value);

}  // namespace ismd
