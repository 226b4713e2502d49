#include "ismd/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace ismd {

namespace {

enum class Type { integer, real, boolean, string, list, seeds };

// Allowed keys per section and their types.
const std::map<std::string, std::map<std::string, Type>>& schema() {
  static const std::map<std::string, std::map<std::string, Type>> s{
      {"problem",
       {{"kind", Type::string},        {"file", Type::string},
        {"m", Type::integer},          {"d", Type::integer},
        {"cond", Type::real},          {"singular_max", Type::real},
        {"seed", Type::integer},
        {"reseed", Type::boolean},     {"batch", Type::integer},
        {"shards", Type::integer},
        {"nodes", Type::integer},      {"radius", Type::real},
        {"max_path_length", Type::integer}, {"d_min", Type::integer},
        {"d_max", Type::integer},      {"congestion", Type::real},
        {"edge_noise", Type::real},    {"hessian", Type::string},
        {"linear", Type::list},        {"tolerance", Type::real}}},
      {"mirror", {{"kind", Type::string}, {"scale", Type::real}, {"projection", Type::boolean}}},
      {"graph",
       {{"structure", Type::string},
        {"file", Type::string},
        {"particles", Type::integer},
        {"p", Type::real},
        {"theta", Type::real},
        {"seed", Type::integer}}},
      {"integrator",
       {{"epsilon", Type::real},       {"eta", Type::real},
        {"eta_schedule", Type::string}, {"eta_exponent", Type::real},
        {"sigma", Type::real},         {"sigma_schedule", Type::string},
        {"sigma_exponent", Type::real}, {"steps", Type::integer},
        {"horizon", Type::real},       {"gradient", Type::string},
        {"init", Type::string},        {"init_scale", Type::real},
        {"init_seed", Type::integer}}},
      {"metrics",
       {{"burn_in", Type::integer},
        {"burn_in_time", Type::real},
        {"stride", Type::integer},
        {"wide_csv", Type::boolean},
        {"bounds", Type::boolean},
        {"traces", Type::boolean},
        {"threshold", Type::real},
        {"kappa", Type::real},
        {"mu_f", Type::real}}},
      {"run",
       {{"name", Type::string},
        {"description", Type::string},
        {"seeds", Type::seeds},
        {"out", Type::string},
        {"baseline", Type::string}}},
  };
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

Json parse_scalar(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  if (v == "true") return true;
  if (v == "false") return false;
  std::int64_t i = 0;
  auto [pi, ei] = std::from_chars(v.data(), v.data() + v.size(), i);
  if (ei == std::errc() && pi == v.data() + v.size()) return i;
  double d = 0.0;
  auto [pd, ed] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ed == std::errc() && pd == v.data() + v.size()) return d;
  return v;
}

Json parse_value(const std::string& v) {
  if (v.find(',') == std::string::npos || (v.front() == '"' && v.back() == '"'))
    return parse_scalar(v);
  Json list = Json::array();
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) list.push_back(parse_scalar(trim(item)));
  return list;
}

// Splits "section.key"; returns false if there is no dot.
bool split_key(const std::string& dotted, std::string& section, std::string& key) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size()) return false;
  section = dotted.substr(0, dot);
  key = dotted.substr(dot + 1);
  return true;
}

void check_dotted(const ConfigDocument& doc, const std::string& dotted, const std::string& where_key) {
  std::string section, key;
  if (!split_key(dotted, section, key)) {
    throw ValidationError(doc.where(where_key) + ": expected section.key, got '" + dotted + "'");
  }
  const auto sec = schema().find(section);
  if (sec == schema().end()) {
    throw ValidationError(doc.where(where_key) + ": unknown section '" + section + "'");
  }
  if (!sec->second.count(key)) {
    throw ValidationError(doc.where(where_key) + ": unknown key '" + key + "' in [" + section + "]");
  }
}

void validate_document(const ConfigDocument& doc) {
  for (const auto& [section, body] : doc.base.items()) {
    const auto sec = schema().find(section);
    if (sec == schema().end()) {
      throw ValidationError(doc.where(section) + ": unknown section [" + section + "]");
    }
    if (!body.is_object()) throw ValidationError(doc.where(section) + ": section must be a table");
    for (const auto& [key, value] : body.items()) {
      if (!sec->second.count(key)) {
        throw ValidationError(doc.where(section + "." + key) + ": unknown key '" + key + "' in [" +
                              section + "]");
      }
    }
  }
  for (const auto& axis : doc.sweep) {
    check_dotted(doc, axis.key, "sweep:" + axis.key);
    if (axis.values.empty()) throw ValidationError(doc.where("sweep:" + axis.key) + ": empty sweep axis");
  }
  std::set<std::string> names;
  for (const auto& v : doc.variants) {
    if (!names.insert(v.name).second) {
      throw ValidationError(doc.where("variant." + v.name) + ": duplicate variant '" + v.name + "'");
    }
    for (const auto& [k, val] : v.overrides.items()) check_dotted(doc, k, "variant." + v.name + ":" + k);
  }
}

void add_entry(ConfigDocument& doc, const std::string& section, const std::string& key,
               const Json& value, int line) {
  if (section == "sweep") {
    SweepAxis axis{key, {}};
    if (value.is_array()) {
      for (const auto& v : value) axis.values.push_back(v);
    } else {
      axis.values.push_back(value);
    }
    doc.sweep.push_back(std::move(axis));
    doc.lines["sweep:" + key] = line;
  } else if (section.rfind("variant.", 0) == 0) {
    const std::string name = section.substr(8);
    auto it = std::find_if(doc.variants.begin(), doc.variants.end(),
                           [&](const Variant& v) { return v.name == name; });
    if (it == doc.variants.end()) {
      doc.variants.push_back({name, Json::object()});
      it = doc.variants.end() - 1;
    }
    it->overrides[key] = value;
    doc.lines[section + ":" + key] = line;
  } else {
    if (doc.base.contains(section) && doc.base[section].contains(key)) {
      throw ValidationError(doc.source + ":" + std::to_string(line) + ": duplicate key '" + key + "'");
    }
    doc.base[section][key] = value;
    doc.lines[section + "." + key] = line;
  }
}

}  // namespace

std::string ConfigDocument::where(const std::string& key) const {
  const auto it = lines.find(key);
  if (it == lines.end()) return source + " (" + key + ")";
  return source + ":" + std::to_string(it->second);
}

ConfigDocument parse_config_text(const std::string& text, const std::string& source) {
  ConfigDocument doc;
  doc.source = source;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    // Inline comments need a preceding blank.
    for (const char* mark : {" #", " ;", "\t#"}) {
      const auto c = s.find(mark);
      if (c != std::string::npos) s = trim(s.substr(0, c));
    }
    const std::string here = source + ":" + std::to_string(line);
    if (s.front() == '[') {
      if (s.back() != ']') throw ValidationError(here + ": malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ValidationError(here + ": empty section name");
      if (section != "sweep" && section.rfind("variant.", 0) != 0 && !schema().count(section)) {
        throw ValidationError(here + ": unknown section [" + section + "]");
      }
      if (section == "variant." ) throw ValidationError(here + ": variant needs a name");
      if (schema().count(section) && !doc.base.contains(section)) {
        doc.base[section] = Json::object();
        doc.lines[section] = line;
      }
      if (section.rfind("variant.", 0) == 0) doc.lines[section] = line;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError(here + ": expected key = value");
    if (section.empty()) throw ValidationError(here + ": key outside any section");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ValidationError(here + ": empty key");
    if (value.empty()) throw ValidationError(here + ": empty value for '" + key + "'");
    // Free-text keys keep their commas.
    std::string target = section, field = key;
    if (section.rfind("variant.", 0) == 0) split_key(key, target, field);
    const auto sec = schema().find(target);
    const bool text = section != "sweep" && sec != schema().end() && sec->second.count(field) &&
                      sec->second.at(field) == Type::string && value.front() != '"';
    add_entry(doc, section, key, text ? Json(value) : parse_value(value), line);
  }
  validate_document(doc);
  return doc;
}

ConfigDocument parse_config_json(const std::string& text, const std::string& source) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(source + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError(source + ": top level must be an object");
  ConfigDocument doc;
  doc.source = source;
  for (const auto& [section, body] : j.items()) {
    if (section == "sweep") {
      if (!body.is_object()) throw ValidationError(source + ": 'sweep' must be an object");
      for (const auto& [k, v] : body.items()) add_entry(doc, "sweep", k, v, 0);
    } else if (section == "variant" || section == "variants") {
      if (!body.is_object()) throw ValidationError(source + ": 'variant' must be an object");
      for (const auto& [name, ov] : body.items()) {
        if (!ov.is_object()) throw ValidationError(source + ": variant '" + name + "' must be an object");
        for (const auto& [k, v] : ov.items()) {
          if (v.is_object()) {
            // Nested form {"graph": {"structure": ...}}.
            for (const auto& [kk, vv] : v.items()) add_entry(doc, "variant." + name, k + "." + kk, vv, 0);
          } else {
            add_entry(doc, "variant." + name, k, v, 0);
          }
        }
      }
    } else {
      if (!body.is_object()) throw ValidationError(source + ": section '" + section + "' must be an object");
      doc.base[section] = body;
    }
  }
  doc.lines.clear();
  validate_document(doc);
  return doc;
}

ConfigDocument load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return json ? parse_config_json(ss.str(), path) : parse_config_text(ss.str(), path);
}

std::vector<std::uint64_t> parse_seed_list(const Json& value) {
  std::vector<std::uint64_t> seeds;
  auto add = [&](const Json& v) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ValidationError("seeds must be non-negative integers");
    }
    seeds.push_back(v.get<std::uint64_t>());
  };
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    const auto dots = s.find("..");
    std::uint64_t a = 0, b = 0;
    if (dots == std::string::npos ||
        std::from_chars(s.data(), s.data() + dots, a).ec != std::errc() ||
        std::from_chars(s.data() + dots + 2, s.data() + s.size(), b).ec != std::errc() || b < a) {
      throw ValidationError("seed range must look like 1..10, got '" + s + "'");
    }
    for (std::uint64_t k = a; k <= b; ++k) seeds.push_back(k);
  } else if (value.is_array()) {
    for (const auto& v : value) add(v);
  } else {
    add(value);
  }
  if (seeds.empty()) throw ValidationError("empty seed list");
  return seeds;
}

namespace {

class Reader {
 public:
  Reader(const ConfigDocument& doc, const Json& tree) : doc_(doc), tree_(tree) {}

  const Json* find(const std::string& section, const std::string& key) const {
    if (!tree_.contains(section) || !tree_[section].contains(key)) return nullptr;
    return &tree_[section][key];
  }
  bool has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& msg) const {
    throw ValidationError(doc_.where(section + "." + key) + ": " + section + "." + key + " " + msg);
  }

  double real(const std::string& section, const std::string& key, double def) const {
    const Json* v = find(section, key);
    if (!v) return def;
    if (!v->is_number()) fail(section, key, "must be a number");
    return v->get<double>();
  }
  double positive(const std::string& section, const std::string& key, double def) const {
    const double v = real(section, key, def);
    if (!(v > 0.0)) fail(section, key, "must be positive");
    return v;
  }
  double nonnegative(const std::string& section, const std::string& key, double def) const {
    const double v = real(section, key, def);
    if (!(v >= 0.0)) fail(section, key, "must be non-negative");
    return v;
  }
  std::int64_t integer(const std::string& section, const std::string& key, std::int64_t def,
                       std::int64_t min = 0) const {
    const Json* v = find(section, key);
    if (!v) return def;
    if (!v->is_number_integer()) fail(section, key, "must be an integer");
    const auto i = v->get<std::int64_t>();
    if (i < min) fail(section, key, "must be at least " + std::to_string(min));
    return i;
  }
  bool boolean(const std::string& section, const std::string& key, bool def) const {
    const Json* v = find(section, key);
    if (!v) return def;
    if (!v->is_boolean()) fail(section, key, "must be true or false");
    return v->get<bool>();
  }
  std::string string(const std::string& section, const std::string& key, const std::string& def) const {
    const Json* v = find(section, key);
    if (!v) return def;
    if (!v->is_string()) fail(section, key, "must be a string");
    return v->get<std::string>();
  }
  std::string choice(const std::string& section, const std::string& key, const std::string& def,
                     std::initializer_list<const char*> allowed) const {
    const std::string v = string(section, key, def);
    for (const char* a : allowed)
      if (v == a) return v;
    std::string msg = "must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    fail(section, key, msg + ", got '" + v + "'");
  }
  Vector vector(const std::string& section, const std::string& key) const {
    const Json* v = find(section, key);
    if (!v) return {};
    Json arr = v->is_array() ? *v : Json::array({*v});
    Vector out(static_cast<Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) fail(section, key, "must be a list of numbers");
      out[static_cast<Index>(i)] = arr[i].get<double>();
    }
    return out;
  }
  Eigen::MatrixXd matrix(const std::string& section, const std::string& key) const {
    const Json* v = find(section, key);
    if (!v) return {};
    std::vector<std::vector<double>> rows;
    if (v->is_string()) {
      // "a, b; c, d"
      std::stringstream ss(v->get<std::string>());
      std::string row;
      while (std::getline(ss, row, ';')) {
        std::vector<double> r;
        std::stringstream rs(row);
        std::string item;
        while (std::getline(rs, item, ',')) {
          const std::string t = trim(item);
          double d = 0.0;
          auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), d);
          if (ec != std::errc() || p != t.data() + t.size()) fail(section, key, "has a non-numeric entry '" + t + "'");
          r.push_back(d);
        }
        rows.push_back(std::move(r));
      }
    } else if (v->is_array()) {
      for (const auto& r : *v) {
        if (!r.is_array()) fail(section, key, "must be a list of rows");
        std::vector<double> row;
        for (const auto& x : r) {
          if (!x.is_number()) fail(section, key, "must contain numbers");
          row.push_back(x.get<double>());
        }
        rows.push_back(std::move(row));
      }
    } else {
      fail(section, key, "must be a matrix \"a, b; c, d\"");
    }
    if (rows.empty()) fail(section, key, "is empty");
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) fail(section, key, "has rows of different length");
      for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return m;
  }
  Schedule schedule(const std::string& prefix, double def) const {
    Schedule s;
    s.base = real("integrator", prefix, def);
    if (s.base < 0.0) fail("integrator", prefix, "must be non-negative");
    const std::string kind = string("integrator", prefix + "_schedule", "constant");
    auto k = parse_schedule_kind(kind);
    if (!k) fail("integrator", prefix + "_schedule", "must be constant, inverse_sqrt or power_decay");
    s.kind = *k;
    s.exponent = real("integrator", prefix + "_exponent", *k == ScheduleKind::power_decay ? 0.1 : 0.5);
    if (*k == ScheduleKind::constant) s.exponent = 0.0;
    return s;
  }

 private:
  const ConfigDocument& doc_;
  const Json& tree_;
};

}  // namespace

ExperimentConfig resolve(const ConfigDocument& doc, const Json& overrides) {
  Json tree = doc.base;
  for (const auto& [dotted, value] : overrides.items()) {
    std::string section, key;
    if (!split_key(dotted, section, key)) throw ValidationError("override '" + dotted + "' is not section.key");
    const auto sec = schema().find(section);
    if (sec == schema().end() || !sec->second.count(key)) {
      throw ValidationError("override '" + dotted + "' names an unknown key");
    }
    tree[section][key] = value;
  }
  Reader r(doc, tree);
  ExperimentConfig cfg;

  auto& pr = cfg.problem;
  pr.kind = r.choice("problem", "kind", "least_squares", {"least_squares", "traffic", "quadratic"});
  pr.file = r.string("problem", "file", "");
  pr.m = r.integer("problem", "m", 100, 1);
  pr.d = r.integer("problem", "d", 100, 1);
  pr.cond = r.real("problem", "cond", 10.0);
  if (pr.cond < 1.0) r.fail("problem", "cond", "must be at least 1");
  pr.singular_max = r.positive("problem", "singular_max", 1.0);
  pr.seed = static_cast<std::uint64_t>(r.integer("problem", "seed", 1));
  pr.reseed = r.boolean("problem", "reseed", false);
  pr.batch = r.integer("problem", "batch", 0);
  pr.shards = r.integer("problem", "shards", 1, 1);
  pr.tolerance = r.positive("problem", "tolerance", 1e-10);
  pr.traffic.nodes = r.integer("problem", "nodes", 50, 2);
  pr.traffic.radius = r.positive("problem", "radius", 0.2);
  pr.traffic.max_path_length = static_cast<int>(r.integer("problem", "max_path_length", 5, 1));
  pr.traffic.d_min = r.integer("problem", "d_min", 0);
  pr.traffic.d_max = r.integer("problem", "d_max", 0);
  pr.traffic.congestion = r.nonnegative("problem", "congestion", 1.0);
  pr.traffic.edge_noise = r.nonnegative("problem", "edge_noise", 0.0);
  pr.hessian = r.matrix("problem", "hessian");
  pr.linear = r.vector("problem", "linear");
  if (pr.kind == "quadratic" && pr.file.empty()) {
    if (pr.hessian.size() == 0) r.fail("problem", "hessian", "is required for quadratic problems");
    if (pr.hessian.rows() != pr.hessian.cols()) r.fail("problem", "hessian", "must be square");
    if (pr.linear.size() == 0) pr.linear = Vector::Zero(pr.hessian.rows());
    if (pr.linear.size() != pr.hessian.rows()) r.fail("problem", "linear", "has the wrong length");
  }
  if (pr.kind == "least_squares" && pr.batch > pr.m) r.fail("problem", "batch", "exceeds m");
  if (pr.kind == "least_squares" && pr.shards > pr.m) r.fail("problem", "shards", "exceeds m");

  auto& mi = cfg.mirror;
  mi.kind = *parse_mirror_kind(r.choice("mirror", "kind", "entropy", {"entropy", "euclidean"}));
  mi.scale = r.positive("mirror", "scale", 1.0);
  mi.projection = r.boolean("mirror", "projection", false);
  if (mi.projection && mi.kind != MirrorKind::euclidean) {
    r.fail("mirror", "projection", "requires the euclidean map");
  }
  if (pr.kind != "quadratic" && mi.kind == MirrorKind::euclidean && !mi.projection) {
    r.fail("mirror", "kind", "euclidean on a simplex-constrained problem needs mirror.projection = true");
  }

  auto& gr = cfg.graph;
  gr.structure = r.choice("graph", "structure", "mean_field", {"mean_field", "independent", "erdos_renyi", "file"});
  gr.file = r.string("graph", "file", "");
  if (gr.structure == "file" && gr.file.empty()) r.fail("graph", "file", "is required for structure = file");
  gr.particles = r.integer("graph", "particles", 1, 1);
  gr.p = r.real("graph", "p", 1.0);
  if (!(gr.p > 0.0 && gr.p <= 1.0)) r.fail("graph", "p", "must lie in (0, 1]");
  gr.theta = r.nonnegative("graph", "theta", 1.0);
  gr.seed = static_cast<std::uint64_t>(r.integer("graph", "seed", 0));

  auto& in = cfg.integrator;
  in.epsilon = r.positive("integrator", "epsilon", 0.1);
  in.eta = r.schedule("eta", 1.0);
  in.sigma = r.schedule("sigma", 0.0);
  if (r.has("integrator", "steps") && r.has("integrator", "horizon")) {
    r.fail("integrator", "horizon", "conflicts with integrator.steps");
  }
  if (r.has("integrator", "horizon")) {
    in.steps = static_cast<std::int64_t>(std::llround(r.positive("integrator", "horizon", 1.0) / in.epsilon));
  } else {
    in.steps = r.integer("integrator", "steps", 1000, 0);
  }
  in.gradient = r.choice("integrator", "gradient", "sampled", {"sampled", "exact"}) == "exact"
                    ? GradientMode::exact
                    : GradientMode::sampled;
  in.init = r.choice("integrator", "init", "zeros", {"zeros", "gaussian"}) == "gaussian" ? InitMode::gaussian
                                                                                      : InitMode::zeros;
  in.init_scale = r.nonnegative("integrator", "init_scale", 1.0);
  in.init_seed = static_cast<std::uint64_t>(r.integer("integrator", "init_seed", 0));

  auto& me = cfg.metrics;
  if (r.has("metrics", "burn_in") && r.has("metrics", "burn_in_time")) {
    r.fail("metrics", "burn_in_time", "conflicts with metrics.burn_in");
  }
  if (r.has("metrics", "burn_in_time")) {
    me.burn_in = static_cast<std::int64_t>(std::llround(r.nonnegative("metrics", "burn_in_time", 0.0) / in.epsilon));
  } else {
    // Default: t = 1000 when the run is long enough, else the second half.
    me.burn_in = r.integer("metrics", "burn_in", std::min<std::int64_t>(10000, in.steps / 2));
  }
  if (me.burn_in > in.steps) r.fail("metrics", r.has("metrics", "burn_in") ? "burn_in" : "burn_in_time", "lies beyond the run length");
  me.stride = r.integer("metrics", "stride", 1, 1);
  me.wide_csv = r.boolean("metrics", "wide_csv", false);
  me.bounds = r.boolean("metrics", "bounds", false);
  me.traces = r.boolean("metrics", "traces", true);
  if (r.has("metrics", "threshold")) me.threshold = r.real("metrics", "threshold", 0.0);
  if (r.has("metrics", "kappa")) me.kappa = r.nonnegative("metrics", "kappa", 0.0);
  me.mu_f = r.nonnegative("metrics", "mu_f", 0.0);

  auto& ru = cfg.run;
  ru.name = r.string("run", "name", "");
  if (ru.name.empty()) {
    std::string base = doc.source;
    const auto slash = base.find_last_of('/');
    if (slash != std::string::npos) base = base.substr(slash + 1);
    const auto dot = base.find_last_of('.');
    ru.name = dot == std::string::npos ? base : base.substr(0, dot);
  }
  ru.description = r.string("run", "description", "");
  ru.out = r.string("run", "out", "out");
  ru.baseline = r.string("run", "baseline", "");
  if (const Json* s = r.find("run", "seeds")) {
    try {
      ru.seeds = parse_seed_list(*s);
    } catch (const ValidationError& e) {
      r.fail("run", "seeds", std::string(": ") + e.what());
    }
  }
  if (!ru.baseline.empty()) {
    const bool known = std::any_of(doc.variants.begin(), doc.variants.end(),
                                   [&](const Variant& v) { return v.name == ru.baseline; });
    if (!known) r.fail("run", "baseline", "names no variant");
  }
  cfg.resolved = tree;
  return cfg;
}

}  // namespace ismd
