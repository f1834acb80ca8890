#pragma once

/// @file cli.hpp
/// Batch driver behind the `bochner-cli` tool: JSON run configuration,
/// verification suites over point sets, and reports (JSON, CSV, text).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bochner/catalog.hpp"
#include "bochner/decomposition.hpp"
#include "bochner/extension.hpp"
#include "bochner/operators.hpp"

namespace bochner::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchema = 1;

using ojson = nlohmann::ordered_json;

/// Invalid configuration or command line (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fold-over or integration failure detected before the sweep (exit code 1).
class RunFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2 };

/// Command-line values that override the config file.
struct Overrides {
  std::optional<int> points;
  std::optional<std::array<int, 2>> grid;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, double>> tolerances;
  std::optional<std::string> json_path, csv_path;
  std::vector<std::string> frames;
  std::string mutation;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> n{"structure", "lemmas", "decomposition", "extension", "operators"};
  return n;
}

inline const std::vector<std::string>& extension_kind_names() {
  static const std::vector<std::string> n{"closed-form",     "chart-closed-form", "random-closed-form", "compatible",
                                          "divergence-free", "curl-normal",       "curl-normal-divfree"};
  return n;
}

/// Default budget of every identity a report can contain.
inline const std::map<std::string, double>& default_budgets() {
  static const std::map<std::string, double> b{
      // structure
      {"orthonormality", 1e-10},
      {"normality", 1e-10},
      {"structure_equations", 1e-7},
      {"gauss", 1e-7},
      {"weingarten", 1e-7},
      {"symmetry", 1e-7},
      {"t_der", 1e-7},
      {"ambient_curvature", 1e-8},
      {"intrinsic_gauss", 1e-8},
      // lemmas
      {"covariant_X", 1e-7},
      {"second_tangential", 1e-7},
      {"hessian_tangential", 1e-7},
      {"second_normal", 1e-7},
      {"normal_rho", 1e-7},
      {"hessian_normal", 1e-7},
      {"transport_X3", 1e-7},
      // decomposition and frame comparison
      {"master_general", 1e-7},
      {"master_divfree", 1e-7},
      {"routes_agree", 1e-8},
      {"total_difference", 1e-7},
      // extension
      {"restriction", 1e-10},
      {"unit_speed", 1e-9},
      {"rho", 1e-8},
      {"div_u", 1e-7},
      {"tangential_rule", 1e-8},
      {"tangential_curl", 1e-7},
      {"div_restriction", 1e-8},
      {"normal_tangent", 1e-8},
      {"bracket_normal", 1e-8},
      {"rho_plus_div_v", 1e-8},
      {"curl_restriction", 1e-7},
      // operators
      {"div_routes", 1e-9},
      {"surface_div_routes", 1e-9},
      {"covariant_routes", 1e-9},
      {"normal_split", 1e-9},
      {"bracket_routes", 1e-9},
      {"rot_curl", 1e-9},
      {"killing", 1e-9},
      {"steady_ns", 1e-7},
  };
  return b;
}

inline bool known_identity(const std::string& name) {
  return default_budgets().count(name) || name.rfind("closed_form_", 0) == 0;
}

// ---------------------------------------------------------------------------
// Configuration

struct Sampling {
  bool random = false;
  int n1 = 5, n2 = 5;
  int count = 0;
  std::optional<std::uint64_t> seed;
};

struct RunConfig {
  CatalogEntry entry;
  std::vector<std::string> frames;
  bool frames_given = false;
  Bindings field_bindings;
  std::optional<SmoothMap> v, u_y, u_chart, tangential;
  std::string field_label;
  std::string extension = "compatible";
  std::optional<std::uint64_t> extension_seed;
  Sampling sampling;
  std::vector<double> s_values;
  double s_max = 0.1;
  std::map<std::string, double> tolerances;
  std::optional<std::string> json_path, csv_path;
  unsigned mutation = kMutateNone;
  std::uint64_t hash = 0;

  double budget(const std::string& identity) const {
    auto it = tolerances.find(identity);
    if (it != tolerances.end()) return it->second;
    auto d = default_budgets().find(identity);
    return d == default_budgets().end() ? 0.0 : d->second;
  }
};

namespace config_detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config field '" + path + "': " + msg);
}

inline const ojson* find(const ojson& obj, const std::string& key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline void check_keys(const ojson& obj, const std::string& path, const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
}

inline double number(const ojson& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

inline std::string string(const ojson& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

inline std::uint64_t seed(const ojson& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    fail(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

inline int positive_int(const ojson& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 1 || j.get<std::int64_t>() > 1000000)
    fail(path, "expected a positive integer");
  return static_cast<int>(j.get<std::int64_t>());
}

inline std::vector<std::string> strings(const ojson& j, const std::string& path, std::size_t n) {
  if (!j.is_array()) fail(path, "expected an array of " + std::to_string(n) + " expression strings");
  if (j.size() != n) fail(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(string(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Bindings bindings(const ojson& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object of numbers");
  Bindings b;
  for (auto it = j.begin(); it != j.end(); ++it) b[it.key()] = number(*it, path + "." + it.key());
  return b;
}

/// Parses expressions one at a time so that diagnostics name the offending entry.
inline SmoothMap expressions(const ojson& j, const std::string& path, std::size_t n, std::vector<std::string> vars,
                             const Bindings& b) {
  const auto src = strings(j, path, n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      SmoothMap::parse({src[i]}, vars, b);
    } catch (const ParseError& e) {
      fail(path + "[" + std::to_string(i) + "]", "parse error at position " + std::to_string(e.position()) + ": " +
                                                     e.what());
    } catch (const std::exception& e) {
      fail(path + "[" + std::to_string(i) + "]", e.what());
    }
  }
  return SmoothMap::parse(src, std::move(vars), b);
}

inline Point2 pair(const ojson& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) fail(path, "expected [number, number]");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

inline CatalogEntry inline_surface(const ojson& s) {
  check_keys(s, "surface", {"psi", "metric", "f", "params", "frames", "z_box", "s_max", "fields"});
  CatalogEntry e;
  e.name = "inline";
  if (auto p = find(s, "params")) e.params = bindings(*p, "surface.params");
  const std::vector<std::string> Y{"y1", "y2", "y3"}, Z{"z1", "z2"};
  if (find(s, "psi") && find(s, "metric")) fail("surface", "give either 'psi' or 'metric', not both");
  if (auto m = find(s, "metric")) {
    e.ambient = std::make_shared<AmbientSpace>(AmbientSpace::explicit_metric(expressions(*m, "surface.metric", 6, Y, e.params)));
  } else {
    const ojson id = ojson::array({"y1", "y2", "y3"});
    const ojson& psi = find(s, "psi") ? *find(s, "psi") : id;
    e.ambient = std::make_shared<AmbientSpace>(AmbientSpace::flat(expressions(psi, "surface.psi", 3, Y, e.params)));
  }
  auto f = find(s, "f");
  if (!f) fail("surface.f", "required for an inline surface");
  e.surface = std::make_shared<Surface>(e.ambient, expressions(*f, "surface.f", 3, Z, e.params));
  if (auto box = find(s, "z_box")) {
    if (!box->is_array() || box->size() != 2) fail("surface.z_box", "expected [[z1_lo, z2_lo], [z1_hi, z2_hi]]");
    e.z_lo = pair((*box)[0], "surface.z_box[0]");
    e.z_hi = pair((*box)[1], "surface.z_box[1]");
    if (!(e.z_lo[0] < e.z_hi[0] && e.z_lo[1] < e.z_hi[1])) fail("surface.z_box", "lower corner must be below upper");
  }
  if (auto sm = find(s, "s_max")) e.s_max = number(*sm, "surface.s_max");
  if (auto fr = find(s, "frames")) {
    if (!fr->is_object() || fr->empty()) fail("surface.frames", "expected an object of named frames");
    for (auto it = fr->begin(); it != fr->end(); ++it) {
      const std::string path = "surface.frames." + it.key();
      if (it->is_string()) {
        if (it->get<std::string>() != "normal-tube") fail(path, "the only built-in frame is \"normal-tube\"");
        if (!e.ambient->is_flat()) fail(path, "normal-tube frames need a flat ambient (psi)");
        e.frames[it.key()] = std::make_shared<NormalTubeFrame>(it.key(), e.z_lo, e.z_hi);
      } else {
        if (!it->is_object()) fail(path, "expected {\"b1\": [...], \"b2\": [...], \"b3\": [...]} or \"normal-tube\"");
        check_keys(*it, path, {"b1", "b2", "b3"});
        std::array<SmoothMap, 3> b;
        for (int k = 0; k < 3; ++k) {
          const std::string key = "b" + std::to_string(k + 1);
          auto bk = find(*it, key);
          if (!bk) fail(path + "." + key, "missing");
          b[k] = expressions(*bk, path + "." + key, 3, Y, e.params);
        }
        e.frames[it.key()] = std::make_shared<ClosedFormFrame>(it.key(), b);
      }
      e.frame_names.push_back(it.key());
    }
  } else {
    if (!e.ambient->is_flat()) fail("surface.frames", "required when the ambient metric is explicit");
    e.frames["normal-tube"] = std::make_shared<NormalTubeFrame>("normal-tube", e.z_lo, e.z_hi);
    e.frame_names.push_back("normal-tube");
  }
  if (auto fl = find(s, "fields")) {
    if (!fl->is_object()) fail("surface.fields", "expected an object of named fields");
    for (auto it = fl->begin(); it != fl->end(); ++it)
      e.fields[it.key()] = expressions(*it, "surface.fields." + it.key(), 2, Z, e.params);
  }
  return e;
}

inline CatalogEntry surface(const ojson& s) {
  if (s.is_string()) {
    try {
      return catalog_get(s.get<std::string>());
    } catch (const CatalogError& e) {
      fail("surface", e.what());
    }
  }
  if (!s.is_object()) fail("surface", "expected a catalog name or an object");
  if (!find(s, "name")) return inline_surface(s);
  check_keys(s, "surface", {"name", "params", "s_max"});
  const std::string name = string(*find(s, "name"), "surface.name");
  Bindings num;
  std::map<std::string, std::string> str;
  if (auto p = find(s, "params")) {
    if (!p->is_object()) fail("surface.params", "expected an object");
    for (auto it = p->begin(); it != p->end(); ++it) {
      if (it->is_string())
        str[it.key()] = it->get<std::string>();
      else
        num[it.key()] = number(*it, "surface.params." + it.key());
    }
  }
  CatalogEntry e;
  try {
    e = catalog_get(name, num, str);
  } catch (const CatalogError& err) {
    const std::string msg = err.what();
    fail(msg.find("parameter") != std::string::npos ? "surface.params" : "surface.name", msg);
  } catch (const ParseError& err) {
    fail("surface.params", std::string("parse error: ") + err.what());
  }
  if (auto sm = find(s, "s_max")) e.s_max = number(*sm, "surface.s_max");
  return e;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace config_detail

/// Parses a JSON config document and applies command-line overrides.
inline RunConfig load_config(const std::string& text, const Overrides& ov = {}) {
  using namespace config_detail;
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config is not valid JSON (line " + std::to_string(line) + ", column " + std::to_string(col) +
                      "): " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(doc, "", {"surface", "frame", "frames", "field", "extension", "sampling", "s_values", "tolerances",
                       "output"});

  RunConfig c;
  auto s = find(doc, "surface");
  if (!s) fail("surface", "required");
  c.entry = surface(*s);
  c.s_max = c.entry.s_max;

  // frames
  auto check_frame = [&](const std::string& f, const std::string& path) {
    if (!c.entry.frames.count(f)) {
      std::string known;
      for (const auto& n : c.entry.frame_names) known += (known.empty() ? "" : ", ") + n;
      fail(path, "surface '" + c.entry.name + "' has no frame '" + f + "' (available: " + known + ")");
    }
  };
  if (find(doc, "frame") && find(doc, "frames")) fail("frames", "give either 'frame' or 'frames'");
  if (auto f = find(doc, "frame")) {
    c.frames = {string(*f, "frame")};
    c.frames_given = true;
  }
  if (auto f = find(doc, "frames")) {
    if (!f->is_array() || f->empty()) fail("frames", "expected a non-empty array of frame names");
    for (std::size_t i = 0; i < f->size(); ++i) c.frames.push_back(string((*f)[i], "frames[" + std::to_string(i) + "]"));
    c.frames_given = true;
  }
  if (!ov.frames.empty()) {
    c.frames = ov.frames;
    c.frames_given = true;
  }
  for (std::size_t i = 0; i < c.frames.size(); ++i) check_frame(c.frames[i], ov.frames.empty() ? "frames" : "--frame");
  if (c.frames.empty()) c.frames = {c.entry.default_frame()};

  // field
  c.field_bindings = c.entry.params;
  const std::vector<std::string> Z{"z1", "z2"}, Y{"y1", "y2", "y3"}, ZS{"z1", "z2", "s"};
  auto catalog_field = [&](const std::string& name, const std::string& path) {
    auto it = c.entry.fields.find(name);
    if (it == c.entry.fields.end()) {
      std::string known;
      for (const auto& [k, _] : c.entry.fields) known += (known.empty() ? "" : ", ") + k;
      fail(path, "surface '" + c.entry.name + "' has no reference field '" + name + "'" +
                     (known.empty() ? "" : " (available: " + known + ")"));
    }
    c.v = it->second;
    c.field_label = name;
  };
  if (auto f = find(doc, "field")) {
    if (f->is_string()) {
      catalog_field(f->get<std::string>(), "field");
    } else {
      if (!f->is_object()) fail("field", "expected a reference field name or an object");
      check_keys(*f, "field", {"name", "v", "u", "u_chart", "params"});
      if (auto p = find(*f, "params"))
        for (const auto& [k, x] : bindings(*p, "field.params")) c.field_bindings[k] = x;
      if (find(*f, "name") && find(*f, "v")) fail("field", "give either 'name' or 'v'");
      if (auto n = find(*f, "name")) catalog_field(string(*n, "field.name"), "field.name");
      if (auto v = find(*f, "v")) {
        c.v = expressions(*v, "field.v", 2, Z, c.field_bindings);
        c.field_label = "inline";
      }
      if (auto u = find(*f, "u")) c.u_y = expressions(*u, "field.u", 3, Y, c.field_bindings);
      if (auto u = find(*f, "u_chart")) c.u_chart = expressions(*u, "field.u_chart", 3, ZS, c.field_bindings);
      if (c.u_y && c.u_chart) fail("field", "give either 'u' or 'u_chart'");
    }
  }
  if (!c.v && !c.u_y && !c.u_chart) {
    if (c.entry.fields.count("divfree-example"))
      catalog_field("divfree-example", "field");
    else if (!c.entry.fields.empty())
      catalog_field(c.entry.fields.begin()->first, "field");
  }

  // extension
  c.extension = c.u_y ? "closed-form" : c.u_chart ? "chart-closed-form" : "compatible";
  if (auto x = find(doc, "extension")) {
    const ojson* kind = x;
    if (x->is_object()) {
      check_keys(*x, "extension", {"kind", "tangential", "s_max", "seed"});
      kind = find(*x, "kind");
      if (auto t = find(*x, "tangential")) c.tangential = expressions(*t, "extension.tangential", 2, Y, c.field_bindings);
      if (auto sm = find(*x, "s_max")) c.s_max = number(*sm, "extension.s_max");
      if (auto sd = find(*x, "seed")) c.extension_seed = seed(*sd, "extension.seed");
    }
    if (kind) {
      const std::string path = x->is_object() ? "extension.kind" : "extension";
      c.extension = string(*kind, path);
      const auto& names = extension_kind_names();
      if (std::find(names.begin(), names.end(), c.extension) == names.end()) {
        std::string known;
        for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
        fail(path, "unknown extension kind '" + c.extension + "' (expected one of " + known + ")");
      }
    }
  }
  if (!(c.s_max > 0)) fail("extension.s_max", "must be positive");
  if (c.extension == "closed-form" && !c.u_y) fail("field.u", "required for a closed-form extension");
  if (c.extension == "chart-closed-form" && !c.u_chart) fail("field.u_chart", "required for a chart-closed-form extension");
  if (c.extension != "closed-form" && c.extension != "chart-closed-form" && !c.v)
    fail("field.v", "a surface field is required for the '" + c.extension + "' extension");
  if (c.tangential && c.extension != "compatible" && c.extension != "divergence-free")
    fail("extension.tangential", "only compatible and divergence-free extensions take a tangential rule");

  // sampling
  if (auto sm = find(doc, "sampling")) {
    if (!sm->is_object()) fail("sampling", "expected an object");
    check_keys(*sm, "sampling", {"grid", "points", "seed", "s_values"});
    if (find(*sm, "grid") && find(*sm, "points")) fail("sampling", "give either 'grid' or 'points'");
    if (auto g = find(*sm, "grid")) {
      if (!g->is_array() || g->size() != 2) fail("sampling.grid", "expected [A, B]");
      c.sampling.n1 = positive_int((*g)[0], "sampling.grid[0]");
      c.sampling.n2 = positive_int((*g)[1], "sampling.grid[1]");
    }
    if (auto p = find(*sm, "points")) {
      c.sampling.random = true;
      c.sampling.count = positive_int(*p, "sampling.points");
    }
    if (auto sd = find(*sm, "seed")) c.sampling.seed = seed(*sd, "sampling.seed");
    if (auto sv = find(*sm, "s_values")) {
      if (find(doc, "s_values")) fail("s_values", "given twice");
      if (!sv->is_array()) fail("sampling.s_values", "expected an array of numbers");
      for (std::size_t i = 0; i < sv->size(); ++i)
        c.s_values.push_back(number((*sv)[i], "sampling.s_values[" + std::to_string(i) + "]"));
    }
  }
  if (auto sv = find(doc, "s_values")) {
    if (!sv->is_array()) fail("s_values", "expected an array of numbers");
    for (std::size_t i = 0; i < sv->size(); ++i)
      c.s_values.push_back(number((*sv)[i], "s_values[" + std::to_string(i) + "]"));
  }
  if (ov.grid) {
    if ((*ov.grid)[0] < 1 || (*ov.grid)[1] < 1) throw ConfigError("--grid: expected AxB with positive A, B");
    c.sampling.random = false;
    c.sampling.n1 = (*ov.grid)[0];
    c.sampling.n2 = (*ov.grid)[1];
  }
  if (ov.points) {
    if (*ov.points < 1) throw ConfigError("--points: expected a positive integer");
    c.sampling.random = true;
    c.sampling.count = *ov.points;
  }
  if (ov.seed) c.sampling.seed = *ov.seed;
  if (c.sampling.random && !c.sampling.seed)
    fail("sampling.seed", "a seed is required for random sampling (config or --seed)");
  if (c.extension == "random-closed-form" && !c.extension_seed) {
    if (!c.sampling.seed) fail("extension.seed", "a seed is required for a random closed-form extension");
    c.extension_seed = c.sampling.seed;
  }
  for (double s : c.s_values)
    if (std::abs(s) > c.s_max) fail("s_values", "|s| must not exceed s_max = " + std::to_string(c.s_max));

  // tolerances
  auto set_tol = [&](const std::string& name, double val, const std::string& path) {
    if (!known_identity(name)) fail(path, "unknown identity '" + name + "'");
    if (!(val > 0) || !std::isfinite(val)) fail(path, "tolerance must be positive");
    c.tolerances[name] = val;
  };
  if (auto t = find(doc, "tolerances")) {
    if (!t->is_object()) fail("tolerances", "expected an object of identity: tolerance");
    for (auto it = t->begin(); it != t->end(); ++it)
      set_tol(it.key(), number(*it, "tolerances." + it.key()), "tolerances." + it.key());
  }
  for (const auto& [k, v] : ov.tolerances) set_tol(k, v, "--tol-override " + k);

  // output
  if (auto o = find(doc, "output")) {
    if (!o->is_object()) fail("output", "expected an object");
    check_keys(*o, "output", {"json", "csv"});
    if (auto j = find(*o, "json")) c.json_path = string(*j, "output.json");
    if (auto j = find(*o, "csv")) c.csv_path = string(*j, "output.csv");
  }
  if (ov.json_path) c.json_path = ov.json_path;
  if (ov.csv_path) c.csv_path = ov.csv_path;

  if (!ov.mutation.empty()) {
    try {
      c.mutation = parse_mutation(ov.mutation);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--mutate: ") + e.what());
    }
  }

  std::string canon = doc.dump();
  canon += "|points=" + (ov.points ? std::to_string(*ov.points) : "");
  canon += "|grid=" + (ov.grid ? std::to_string((*ov.grid)[0]) + "x" + std::to_string((*ov.grid)[1]) : "");
  canon += "|seed=" + (ov.seed ? std::to_string(*ov.seed) : "");
  for (const auto& f : ov.frames) canon += "|frame=" + f;
  for (const auto& [k, v] : ov.tolerances) canon += "|tol:" + k + "=" + std::to_string(v);
  canon += "|mutate=" + ov.mutation;
  c.hash = fnv1a(canon);
  return c;
}

inline RunConfig load_config_file(const std::string& path, const Overrides& ov = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str(), ov);
}

// ---------------------------------------------------------------------------
// Sampling

inline std::vector<Point2> surface_points(const RunConfig& c) {
  const Point2 lo = c.entry.z_lo, hi = c.entry.z_hi;
  std::vector<Point2> out;
  if (c.sampling.random) {
    std::mt19937_64 rng(*c.sampling.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < c.sampling.count; ++i) {
      const double a = u(rng), b = u(rng);
      out.push_back({lo[0] + a * (hi[0] - lo[0]), lo[1] + b * (hi[1] - lo[1])});
    }
    return out;
  }
  auto node = [](double l, double h, int n, int i) { return n == 1 ? 0.5 * (l + h) : l + (h - l) * i / (n - 1); };
  for (int i = 0; i < c.sampling.n1; ++i)
    for (int j = 0; j < c.sampling.n2; ++j)
      out.push_back({node(lo[0], hi[0], c.sampling.n1, i), node(lo[1], hi[1], c.sampling.n2, j)});
  return out;
}

/// Normal offsets used by the off-surface checks.
inline std::vector<double> offsets(const RunConfig& c, bool include_zero) {
  if (!c.s_values.empty()) return c.s_values;
  if (include_zero) return {-0.5 * c.s_max, 0.0, 0.5 * c.s_max};
  return {0.5 * c.s_max};
}

// ---------------------------------------------------------------------------
// Report

struct Row {
  std::string frame;
  Point2 z{};
  double s = 0.0;
  ojson quantities = ojson::object();
  std::vector<std::pair<std::string, double>> residuals;
  ojson terms = ojson::object();
  std::string error;

  void residual(const std::string& name, double value) { residuals.emplace_back(name, value); }
};

struct IdentitySummary {
  std::string name;
  std::size_t count = 0;
  double max = 0.0, mean = 0.0, budget = 0.0;
  bool pass = true;
};

struct Report {
  std::string command, suite, surface;
  std::vector<std::string> frames;
  std::vector<Row> rows;
  ojson extra = ojson::object();
  ojson provenance = ojson::object();
  std::map<std::string, double> budgets;

  std::vector<IdentitySummary> summary() const {
    std::vector<IdentitySummary> out;
    std::map<std::string, std::size_t> index;
    for (const auto& r : rows)
      for (const auto& [name, value] : r.residuals) {
        auto it = index.find(name);
        if (it == index.end()) {
          it = index.emplace(name, out.size()).first;
          IdentitySummary s;
          s.name = name;
          s.budget = budgets.count(name) ? budgets.at(name) : 0.0;
          out.push_back(s);
        }
        auto& s = out[it->second];
        ++s.count;
        if (std::isnan(value) || std::isnan(s.max))
          s.max = std::numeric_limits<double>::quiet_NaN();
        else
          s.max = std::max(s.max, value);
        s.mean += value;
      }
    for (auto& s : out) {
      s.mean /= static_cast<double>(s.count);
      s.pass = !std::isnan(s.max) && s.max <= s.budget;
    }
    return out;
  }

  std::size_t error_count() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const Row& r) { return !r.error.empty(); }));
  }

  bool passed() const {
    if (error_count() > 0) return false;
    for (const auto& s : summary())
      if (!s.pass) return false;
    return true;
  }

  ojson to_json(bool timestamp = true) const {
    ojson j;
    j["schema"] = kSchema;
    j["command"] = command;
    if (!suite.empty()) j["suite"] = suite;
    j["surface"] = surface;
    j["frames"] = frames;
    ojson rs = ojson::array();
    for (const auto& r : rows) {
      ojson o;
      o["frame"] = r.frame;
      o["z"] = {r.z[0], r.z[1]};
      o["s"] = r.s;
      o["quantities"] = r.quantities;
      ojson res = ojson::object();
      for (const auto& [k, v] : r.residuals) res[k] = v;
      o["residuals"] = res;
      o["terms"] = r.terms;
      if (!r.error.empty()) o["error"] = r.error;
      rs.push_back(o);
    }
    j["rows"] = rs;
    ojson sum;
    ojson ids = ojson::array();
    for (const auto& s : summary())
      ids.push_back({{"identity", s.name}, {"count", s.count}, {"max", s.max}, {"mean", s.mean}, {"budget", s.budget},
                     {"pass", s.pass}});
    sum["identities"] = ids;
    sum["errors"] = error_count();
    sum["pass"] = passed();
    j["summary"] = sum;
    if (!extra.empty()) j["comparison"] = extra;
    ojson prov = provenance;
    if (timestamp) {
      const std::time_t t = std::time(nullptr);
      char buf[32];
      std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
      prov["timestamp"] = buf;
    }
    j["provenance"] = prov;
    return j;
  }

  std::string to_csv() const {
    std::vector<std::string> qcols, rcols, tcols;
    auto add = [](std::vector<std::string>& cols, const std::string& k) {
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
    };
    for (const auto& r : rows) {
      for (auto it = r.quantities.begin(); it != r.quantities.end(); ++it) add(qcols, it.key());
      for (const auto& [k, _] : r.residuals) add(rcols, k);
      for (auto it = r.terms.begin(); it != r.terms.end(); ++it) add(tcols, it.key());
    }
    std::ostringstream os;
    os << "frame,z1,z2,s";
    for (const auto& k : qcols) os << "," << k;
    for (const auto& k : rcols) os << ",residual." << k;
    for (const auto& k : tcols) os << ",term." << k;
    os << ",error\n";
    auto num = [](double x) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", x);
      return std::string(buf);
    };
    for (const auto& r : rows) {
      os << r.frame << "," << num(r.z[0]) << "," << num(r.z[1]) << "," << num(r.s);
      for (const auto& k : qcols) {
        os << ",";
        auto it = r.quantities.find(k);
        if (it != r.quantities.end() && it->is_number()) os << num(it->get<double>());
      }
      for (const auto& k : rcols) {
        os << ",";
        for (const auto& [n, v] : r.residuals)
          if (n == k) os << num(v);
      }
      for (const auto& k : tcols) {
        os << ",";
        auto it = r.terms.find(k);
        if (it != r.terms.end() && it->is_number()) os << num(it->get<double>());
      }
      std::string e = r.error;
      std::replace(e.begin(), e.end(), ',', ';');
      std::replace(e.begin(), e.end(), '\n', ' ');
      os << "," << e << "\n";
    }
    return os.str();
  }

  std::string human() const {
    std::ostringstream os;
    os << "bochner " << command << (suite.empty() ? "" : " " + suite) << ": surface " << surface << ", frames";
    for (const auto& f : frames) os << " " << f;
    os << ", " << rows.size() << " rows\n";
    const auto sum = summary();
    if (!sum.empty()) {
      os << std::left << std::setw(26) << "identity" << std::setw(14) << "max" << std::setw(14) << "mean"
         << std::setw(12) << "budget" << "status\n";
      for (const auto& s : sum) {
        char line[160];
        std::snprintf(line, sizeof line, "%-26s%-14.3e%-14.3e%-12.1e%s\n", s.name.c_str(), s.max, s.mean, s.budget,
                      s.pass ? "PASS" : "FAIL");
        os << line;
      }
    }
    for (const auto& r : rows)
      if (!r.error.empty()) {
        char loc[96];
        std::snprintf(loc, sizeof loc, "[%s z=(%.6g, %.6g) s=%.6g] ", r.frame.c_str(), r.z[0], r.z[1], r.s);
        os << "error " << loc << r.error << "\n";
      }
    os << "result: " << (passed() ? "PASS" : "FAIL") << "\n";
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Evaluation helpers

namespace run_detail {

/// Runs fn(i) for i < n on a thread pool; results keep index order.
template <class Fn>
std::vector<Row> parallel_rows(std::size_t n, Fn fn) {
  std::vector<Row> out(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
  };
  const std::size_t threads = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

template <class Body>
Row guarded(const std::string& frame, const Point2& z, double s, Body body) {
  Row r;
  r.frame = frame;
  r.z = z;
  r.s = s;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

inline double maxabs(const Mat2& a, const Mat2& b) {
  double m = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

inline Point3 tube_point(const Geometry& geo, const Point2& z, double s) {
  const Point3 y = geo.surface().embed(z);
  if (s == 0.0) return y;
  const FrameJets F = geo.jets(geo.on_surface(z), 0);
  return {y[0] + s * F.b[2][0].value(), y[1] + s * F.b[2][1].value(), y[2] + s * F.b[2][2].value()};
}

}  // namespace run_detail

/// One frame of the run with its extension (built on demand).
struct FrameSetup {
  std::string name;
  std::shared_ptr<const Geometry> geo;
  std::shared_ptr<ExtendedField> ext;
};

inline std::shared_ptr<ExtendedField> build_extension(const RunConfig& c, std::shared_ptr<const Geometry> geo) {
  const auto v = c.v ? std::make_shared<ClosedFormSurfaceField>(*c.v) : nullptr;
  const std::string& k = c.extension;
  if (k == "closed-form") return ExtendedField::closed_form(geo, *c.u_y, c.s_max);
  if (k == "chart-closed-form") return ExtendedField::chart_closed_form(geo, *c.u_chart, c.s_max);
  if (k == "random-closed-form") return ExtendedField::random_chart(geo, *c.v, *c.extension_seed, c.s_max);
  if (k == "compatible") return ExtendedField::compatible(geo, v, c.tangential, c.s_max);
  if (k == "divergence-free") return ExtendedField::divergence_free(geo, v, c.tangential, c.s_max);
  if (k == "curl-normal") return ExtendedField::curl_normal(geo, v, false, c.s_max);
  if (k == "curl-normal-divfree") return ExtendedField::curl_normal(geo, v, true, c.s_max);
  throw ConfigError("unknown extension kind '" + k + "'");
}

inline std::vector<FrameSetup> setup_frames(const RunConfig& c, bool with_extension) {
  std::vector<FrameSetup> out;
  for (const auto& f : c.frames) {
    FrameSetup s;
    s.name = f;
    s.geo = c.entry.geometry(f);
    if (with_extension) s.ext = build_extension(c, s.geo);
    out.push_back(std::move(s));
  }
  return out;
}

/// Rejects tubes whose normal chart folds over on the sampled points.
inline void check_chart(const RunConfig& c, const FrameSetup& f, const std::vector<Point2>& zs) {
  try {
    NormalChart(f.geo, c.s_max).check(zs);
  } catch (const FoldOverError& e) {
    throw RunFailure("fold-over in frame '" + f.name + "': " + e.what());
  } catch (const ExtensionError& e) {
    throw RunFailure("normal chart failed in frame '" + f.name + "': " + e.what());
  }
}

// ---- curvature --------------------------------------------------------------

inline Row curvature_row(const RunConfig& c, const FrameSetup& f, const Point2& z) {
  return run_detail::guarded(f.name, z, 0.0, [&](Row& r) {
    const FrameData d = frame_data(*f.geo, f.geo->on_surface(z));
    auto& q = r.quantities;
    q["kappa"] = d.kappa;
    q["H"] = d.H;
    q["t11"] = d.t[0][0];
    q["t12"] = d.t[0][1];
    q["t21"] = d.t[1][0];
    q["t22"] = d.t[1][1];
    q["alpha1"] = d.alpha[0];
    q["alpha2"] = d.alpha[1];
    for (int k = 0; k < 3; ++k) q["gamma" + std::to_string(k + 1)] = d.gamma[k];
    q["orientation"] = frame_orientation(*f.geo, d);
    for (const auto& name : c.entry.closed_form_quantities(f.name)) {
      const auto chk = closed_form_check(c.entry, f.name, name, z);
      q[name + "_closed_form"] = chk.printed;
      if (!q.contains(name)) q[name] = chk.computed;
      r.residual("closed_form_" + name, chk.deviation / std::max(1.0, std::abs(chk.printed)));
    }
  });
}

// ---- structure --------------------------------------------------------------

inline Row structure_row(const FrameSetup& f, const Point2& z, double s) {
  return run_detail::guarded(f.name, z, s, [&](Row& r) {
    const Geometry& geo = *f.geo;
    const SamplePoint p{run_detail::tube_point(geo, z, s), Point3{z[0], z[1], s}};
    const FrameJets F0 = geo.jets(p, 0);
    double ortho = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        ortho = std::max(ortho, std::abs(F0.inner(F0.b[a], F0.b[b]).value() - (a == b ? 1.0 : 0.0)));
    const FrameData d = frame_data(geo, p);
    r.residual("orthonormality", ortho);
    r.residual("structure_equations", d.structure_residual);
    if (geo.ambient().is_flat()) {
      double om = 0.0;
      for (const auto& a : d.Omega)
        for (const auto& b : a)
          for (const auto& e : b)
            for (double x : e) om = std::max(om, std::abs(x));
      r.residual("ambient_curvature", om);
    }
    r.quantities["kappa"] = d.kappa;
    r.quantities["H"] = d.H;
    if (s != 0.0) return;
    const auto fj = geo.surface().embed_jets(z, 1);
    double nb = 0.0;
    for (int a = 0; a < 2; ++a) {
      VecJ<3> t{Jet(fj[0].d(a)), Jet(fj[1].d(a)), Jet(fj[2].d(a))};
      nb = std::max(nb, std::abs(F0.inner(t, F0.b[2]).value()) / std::sqrt(F0.inner(t, t).value()));
    }
    r.residual("normality", nb);
    r.residual("gauss", run_detail::maxabs(d.t, second_fundamental_form_embedding(geo, z)));
    double wein = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) wein = std::max(wein, std::abs(d.omega[i][2][j] + d.t_gauss[j][i]));
    r.residual("weingarten", wein);
    r.residual("symmetry", std::abs(d.omega[0][2][1] - d.omega[1][2][0]));
    r.residual("t_der", std::max(std::abs(d.t_der[0]), std::abs(d.t_der[1])));
    const IntrinsicData I = intrinsic_data(geo.surface_jets(z, 2));
    r.quantities["Omega_z12"] = I.Omega12;
    r.residual("intrinsic_gauss", std::abs(I.Omega12 - d.kappa - d.Omega[0][1][0][1]));
  });
}

// ---- lemmas and decomposition ----------------------------------------------

inline Row lemma_row(const FrameSetup& f, const Point2& z) {
  return run_detail::guarded(f.name, z, 0.0, [&](Row& r) {
    const PointEvaluation pe(*f.geo, *f.ext, *f.ext->base(), z);
    for (const auto& [k, v] : pe.lemma_residuals()) r.residual(k, v);
  });
}

inline void fill_decomposition(Row& r, const PointEvaluation& pe, bool divfree, unsigned mutation) {
  const auto& a = pe.aux();
  const Vec3& lap = pe.laplacian_u();
  const double scale = std::max(ops::norm(lap), 0.1);
  const Decomposition g = pe.general(mutation);
  auto& q = r.quantities;
  for (int i = 0; i < 3; ++i) q["lap_u" + std::to_string(i + 1)] = lap[i];
  q["B_t1"] = g.B_t[0];
  q["B_t2"] = g.B_t[1];
  q["B_n"] = g.B_n;
  q["rho"] = a.rho;
  q["div_v"] = a.div_v;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) q["E" + std::to_string(i + 1) + std::to_string(j + 1)] = a.E[i][j];
  r.residual("master_general", pe.residual(g) / scale);
  auto& t = r.terms;
  const auto pc = projected_comparison(pe);
  t["intrinsic"] = ops::norm(pc.intrinsic);
  t["Ev"] = ops::norm(pc.Ev);
  t["rhoX3"] = ops::norm(pc.rhoX3);
  t["d"] = ops::norm(pc.d);
  t["Nq"] = ops::norm(pc.Nq);
  t["sigma"] = std::abs(a.sigma);
  t["q"] = ops::norm(a.q);
  if (divfree) {
    const Decomposition dfr = pe.divfree(false, mutation);
    q["B_n_divfree"] = dfr.B_n;
    r.residual("master_divfree", pe.residual(dfr) / scale);
    r.residual("routes_agree", std::sqrt(std::pow(g.B_t[0] - dfr.B_t[0], 2) + std::pow(g.B_t[1] - dfr.B_t[1], 2) +
                                         std::pow(g.B_n - dfr.B_n, 2)));
  }
}

inline Row decomposition_row(const FrameSetup& f, const Point2& z, unsigned mutation) {
  return run_detail::guarded(f.name, z, 0.0, [&](Row& r) {
    const PointEvaluation pe(*f.geo, *f.ext, *f.ext->base(), z);
    fill_decomposition(r, pe, f.ext->divfree_rule(), mutation);
  });
}

// ---- extension ----------------------------------------------------------------

inline Row extension_row(const RunConfig& c, const FrameSetup& f, const Point2& z, double s) {
  return run_detail::guarded(f.name, z, s, [&](Row& r) {
    const Geometry& geo = *f.geo;
    const ExtendedField& u = *f.ext;
    const SamplePoint p = u.at(z, s);
    const AmbientContext ctx(geo, u, p, 1);
    auto& q = r.quantities;
    for (int i = 0; i < 3; ++i) q["y" + std::to_string(i + 1)] = p.y[i];
    for (int i = 0; i < 3; ++i) q["u" + std::to_string(i + 1)] = ctx.U[i].value();
    const double a1 = ctx.s.alpha[0].value(), a2 = ctx.s.alpha[1].value();
    const double rho = ctx.F.along(2, ctx.U[2]).value() - a1 * ctx.U[0].value() - a2 * ctx.U[1].value();
    const double div = ops::div_coord(ctx).value();
    const Vec3 curl = ops::curl(ctx);
    q["rho"] = rho;
    q["div_u"] = div;
    const ExtensionKind k = u.kind();
    const bool ode = k != ExtensionKind::ClosedForm && k != ExtensionKind::ChartClosedForm;
    if (s != 0.0) r.residual("unit_speed", NormalChart(f.geo, c.s_max).unit_speed_deviation(z, s));
    if (ode) {
      if (u.divfree_rule())
        r.residual("div_u", std::abs(div));
      else
        r.residual("rho", std::abs(rho));
      Vec2 rate{0.0, 0.0};
      const double u1 = ctx.U[0].value(), u2 = ctx.U[1].value();
      if (k == ExtensionKind::CurlNormal) {
        const double t11 = ctx.s.t[0][0].value(), t12 = ctx.s.t[0][1].value(), t22 = ctx.s.t[1][1].value();
        const double g3 = ctx.s.gamma[2].value();
        rate = {t11 * u1 + t12 * u2 - g3 * u2, t12 * u1 + t22 * u2 + g3 * u1};
        if (s == 0.0) r.residual("tangential_curl", std::max(std::abs(curl[0]), std::abs(curl[1])));
      } else if (c.tangential) {
        const auto t = c.tangential->eval(p.y);
        rate = {t[0], t[1]};
      }
      r.residual("tangential_rule", std::max(std::abs(ctx.F.along(2, ctx.U[0]).value() - rate[0]),
                                             std::abs(ctx.F.along(2, ctx.U[1]).value() - rate[1])));
    }
    if (s != 0.0) return;
    const SurfaceContext sc(geo, *u.base(), z, 2);
    const Vec2 v = ops::values(sc.V);
    r.residual("restriction", std::max({std::abs(ctx.U[0].value() - v[0]), std::abs(ctx.U[1].value() - v[1]),
                                        std::abs(ctx.U[2].value())}));
    const double div_v = ops::div_surface_coord(sc).value();
    const double rot_v = ops::rot_surface(sc);
    q["div_v"] = div_v;
    q["rot_v"] = rot_v;
    if (!ode) return;
    const bool compatible = !u.divfree_rule();
    if (compatible) {
      r.residual("div_restriction", std::abs(div - div_v));
      r.residual("normal_tangent", std::abs(ops::values(ops::covariant_derivative(ctx, 2))[2]));
      const AmbientContext n(ctx.F, {Jet(0.0), Jet(0.0), Jet(1.0)});
      r.residual("bracket_normal", std::abs(ops::bracket(ctx, n)[2]));
    } else {
      r.residual("rho_plus_div_v", std::abs(rho + div_v));
    }
    if (k == ExtensionKind::CurlNormal)
      r.residual("curl_restriction", std::sqrt(curl[0] * curl[0] + curl[1] * curl[1] + std::pow(curl[2] - rot_v, 2)));
  });
}

// ---- operators ----------------------------------------------------------------

inline Row operator_row(const RunConfig& c, const FrameSetup& f, const Point2& z) {
  return run_detail::guarded(f.name, z, 0.0, [&](Row& r) {
    const Geometry& geo = *f.geo;
    const int order = std::min(3, geo.max_order());
    const AmbientContext ctx(geo, *f.ext, geo.on_surface(z), order);
    const SurfaceContext sc(geo, *f.ext->base(), z, 2);
    r.residual("div_routes", std::abs(ops::div_frame(ctx).value() - ops::div_coord(ctx).value()));
    r.residual("surface_div_routes",
               std::abs(ops::div_surface_frame(sc).value() - ops::div_surface_coord(sc).value()));
    double cov = 0.0;
    for (int a = 0; a < 3; ++a)
      cov = std::max(cov, ops::norm(ops::minus(ops::values(ops::covariant_derivative(ctx, a)),
                                               ops::covariant_derivative_coord(ctx, a))));
    r.residual("covariant_routes", cov);
    r.residual("normal_split",
               ops::norm(ops::minus(ops::values(ops::covariant_derivative(ctx, 2)), ops::normal_derivative_split(ctx))));
    const AmbientContext n(ctx.F, {Jet(0.0), Jet(0.0), Jet(1.0)});
    r.residual("bracket_routes", ops::norm(ops::minus(ops::bracket(ctx, n), ops::bracket_coord(ctx, n))));
    const double rot = ops::rot_surface(sc);
    r.quantities["rot_v"] = rot;
    r.quantities["curl_u3"] = ops::curl(ctx)[2];
    r.residual("rot_curl", std::abs(ops::curl(ctx)[2] - rot));
    auto it = c.entry.fields.find("rotation");
    if (it != c.entry.fields.end()) {
      const ClosedFormSurfaceField rotation(it->second);
      const SurfaceContext rc(geo, rotation, z, 2);
      const auto sp = ops::special_residuals(rc);
      r.residual("killing", sp.killing);
      r.residual("steady_ns", ops::norm(ops::steady_ns_residual(rc)));
      r.terms["rotation_harmonic"] = sp.harmonic;
      r.terms["rotation_parallel"] = sp.parallel;
    }
  });
}

// ---------------------------------------------------------------------------
// Commands

namespace run_detail {

inline Report start(const RunConfig& c, const std::string& command, const std::string& suite) {
  Report r;
  r.command = command;
  r.suite = suite;
  r.surface = c.entry.name;
  r.frames = c.frames;
  for (const auto& [k, _] : default_budgets()) r.budgets[k] = c.budget(k);
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(c.hash));
  r.provenance["config_hash"] = hash;
  r.provenance["seed"] = c.sampling.seed ? ojson(*c.sampling.seed) : ojson(nullptr);
  r.provenance["version"] = kVersion;
  if (c.extension_seed) r.provenance["extension_seed"] = *c.extension_seed;
  r.provenance["extension"] = c.extension;
  r.provenance["field"] = c.field_label;
  if (c.mutation != kMutateNone) {
    for (const auto& m : mutation_names())
      if (parse_mutation(m) == c.mutation) r.provenance["mutation"] = m;
  }
  return r;
}

struct Task {
  std::size_t frame;
  Point2 z;
  double s;
};

template <class Fn>
void sweep(Report& rep, const std::vector<Task>& tasks, Fn fn) {
  auto rows = parallel_rows(tasks.size(), [&](std::size_t i) { return fn(tasks[i]); });
  for (auto& r : rows) rep.rows.push_back(std::move(r));
}

inline std::vector<Task> tasks(std::size_t frames, const std::vector<Point2>& zs, const std::vector<double>& ss) {
  std::vector<Task> t;
  for (std::size_t f = 0; f < frames; ++f)
    for (const auto& z : zs)
      for (double s : ss) t.push_back({f, z, s});
  return t;
}

}  // namespace run_detail

inline Report cmd_curvature(const RunConfig& c) {
  Report rep = run_detail::start(c, "curvature", "");
  for (const auto& f : c.frames)
    for (const auto& q : c.entry.closed_form_quantities(f)) {
      for (const auto& cf : c.entry.closed_forms)
        if (cf.quantity == q && (cf.frame.empty() || cf.frame == f))
          rep.budgets["closed_form_" + q] = c.tolerances.count("closed_form_" + q) ? c.tolerances.at("closed_form_" + q)
                                                                                   : cf.tol;
    }
  const auto frames = setup_frames(c, false);
  const auto zs = surface_points(c);
  run_detail::sweep(rep, run_detail::tasks(frames.size(), zs, {0.0}),
                    [&](const run_detail::Task& t) { return curvature_row(c, frames[t.frame], t.z); });
  return rep;
}

inline Report cmd_verify(const RunConfig& c, const std::string& suite) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end())
    throw ConfigError("unknown suite '" + suite + "' (expected structure, lemmas, decomposition, extension or operators)");
  Report rep = run_detail::start(c, "verify", suite);
  const auto zs = surface_points(c);
  const bool need_ext = suite != "structure";
  const auto frames = setup_frames(c, need_ext);
  if (suite == "structure") {
    std::vector<double> ss{0.0};
    for (double s : c.s_values)
      if (s != 0.0) ss.push_back(s);
    if (c.s_values.empty()) ss.push_back(0.5 * c.s_max);
    run_detail::sweep(rep, run_detail::tasks(frames.size(), zs, ss),
                      [&](const run_detail::Task& t) { return structure_row(frames[t.frame], t.z, t.s); });
  } else if (suite == "lemmas") {
    run_detail::sweep(rep, run_detail::tasks(frames.size(), zs, {0.0}),
                      [&](const run_detail::Task& t) { return lemma_row(frames[t.frame], t.z); });
  } else if (suite == "decomposition") {
    run_detail::sweep(rep, run_detail::tasks(frames.size(), zs, {0.0}), [&](const run_detail::Task& t) {
      return decomposition_row(frames[t.frame], t.z, c.mutation);
    });
  } else if (suite == "extension") {
    for (const auto& f : frames) check_chart(c, f, zs);
    run_detail::sweep(rep, run_detail::tasks(frames.size(), zs, offsets(c, true)),
                      [&](const run_detail::Task& t) { return extension_row(c, frames[t.frame], t.z, t.s); });
  } else {
    run_detail::sweep(rep, run_detail::tasks(frames.size(), zs, {0.0}),
                      [&](const run_detail::Task& t) { return operator_row(c, frames[t.frame], t.z); });
  }
  return rep;
}

inline Report cmd_extend(const RunConfig& c) {
  Report rep = cmd_verify(c, "extension");
  rep.command = "extend";
  rep.suite.clear();
  return rep;
}

/// Decomposition of one ambient field (built in the first frame) in every selected frame.
inline Report cmd_compare_frames(const RunConfig& c) {
  RunConfig cc = c;
  if (!c.frames_given) cc.frames = c.entry.frame_names;
  Report rep = run_detail::start(cc, "compare-frames", "");
  auto frames = setup_frames(cc, false);
  frames[0].ext = build_extension(cc, frames[0].geo);
  const std::shared_ptr<const AmbientField> u0 = frames[0].ext;
  const auto zs = surface_points(cc);
  const bool divfree = frames[0].ext->divfree_rule();
  std::vector<std::shared_ptr<const AmbientField>> fields;
  std::vector<std::shared_ptr<const SurfaceField>> bases;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::shared_ptr<const AmbientField> ui =
        i == 0 ? u0 : std::make_shared<ReframedField>(frames[0].geo, u0, frames[i].geo);
    fields.push_back(ui);
    bases.push_back(std::make_shared<RestrictedSurfaceField>(frames[i].geo, ui));
  }
  struct PointResult {
    std::vector<Row> rows;
    std::vector<Vec3> lap_y;  // Delta_B u in ambient coordinates
    std::vector<Mat2> E;
    std::vector<Decomposition> dec;
  };
  std::vector<PointResult> results(zs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < zs.size(); k = next++) {
      auto& pr = results[k];
      for (std::size_t i = 0; i < frames.size(); ++i) {
        Vec3 ly{};
        Mat2 E{};
        Decomposition d{};
        pr.rows.push_back(run_detail::guarded(frames[i].name, zs[k], 0.0, [&](Row& r) {
          const PointEvaluation pe(*frames[i].geo, *fields[i], *bases[i], zs[k]);
          fill_decomposition(r, pe, divfree, cc.mutation);
          const FrameJets& F = pe.ambient().F;
          const Vec3& l = pe.laplacian_u();
          for (int a = 0; a < 3; ++a)
            ly[a] = l[0] * F.b[0][a].value() + l[1] * F.b[1][a].value() + l[2] * F.b[2][a].value();
          E = pe.aux().E;
          d = pe.general(cc.mutation);
        }));
        pr.lap_y.push_back(ly);
        pr.E.push_back(E);
        pr.dec.push_back(d);
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(zs.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  double e_diff = 0.0, bt_diff = 0.0, bn_diff = 0.0;
  for (auto& pr : results) {
    for (std::size_t i = 0; i < pr.rows.size(); ++i) {
      Row& r = pr.rows[i];
      if (r.error.empty() && pr.rows[0].error.empty()) {
        const FrameJets F = frames[0].geo->jets(frames[0].geo->on_surface(r.z), 0);
        auto gnorm = [&](const Vec3& x) {
          const VecJ<3> X{Jet(x[0]), Jet(x[1]), Jet(x[2])};
          return std::sqrt(std::abs(F.inner(X, X).value()));
        };
        const Vec3& l0 = pr.lap_y[0];
        const double n0 = gnorm(l0);
        const double diff = gnorm({pr.lap_y[i][0] - l0[0], pr.lap_y[i][1] - l0[1], pr.lap_y[i][2] - l0[2]});
        r.residual("total_difference", diff / std::max(n0, 0.1));
        e_diff = std::max(e_diff, run_detail::maxabs(pr.E[i], pr.E[0]));
        bt_diff = std::max(bt_diff, std::hypot(pr.dec[i].B_t[0] - pr.dec[0].B_t[0], pr.dec[i].B_t[1] - pr.dec[0].B_t[1]));
        bn_diff = std::max(bn_diff, std::abs(pr.dec[i].B_n - pr.dec[0].B_n));
      }
      rep.rows.push_back(std::move(r));
    }
  }
  rep.extra["reference_frame"] = frames[0].name;
  rep.extra["max_E_difference"] = e_diff;
  rep.extra["max_B_t_difference"] = bt_diff;
  rep.extra["max_B_n_difference"] = bn_diff;
  return rep;
}

/// Runs a subcommand end to end: report files, text summary, exit code.
inline int run(const std::string& command, const std::string& config_path, const std::string& suite,
               const Overrides& ov, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig c = load_config_file(config_path, ov);
    Report rep;
    if (command == "curvature")
      rep = cmd_curvature(c);
    else if (command == "verify")
      rep = cmd_verify(c, suite.empty() ? "structure" : suite);
    else if (command == "compare-frames")
      rep = cmd_compare_frames(c);
    else if (command == "extend")
      rep = cmd_extend(c);
    else
      throw ConfigError("unknown command '" + command + "'");
    if (c.json_path) {
      std::ofstream f(*c.json_path);
      if (!f) throw ConfigError("cannot write JSON report '" + *c.json_path + "'");
      f << rep.to_json().dump(2) << "\n";
    }
    if (c.csv_path) {
      std::ofstream f(*c.csv_path);
      if (!f) throw ConfigError("cannot write CSV report '" + *c.csv_path + "'");
      f << rep.to_csv();
    }
    out << rep.human();
    return rep.passed() ? kExitPass : kExitFail;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const RunFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  }
}

}  // namespace bochner::cli
