#include "tnt/cli/config.hpp"

#include "tnt/cli/output.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>

namespace tnt::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(key, "must be finite");
  return x;
}

int integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  return v.get<int>();
}

std::string text(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

bool boolean(const json& v, const std::string& key) {
  if (!v.is_boolean()) bad(key, "expected true or false");
  return v.get<bool>();
}

std::vector<double> number_list(const json& v, const std::string& key) {
  if (v.is_array()) {
    std::vector<double> out;
    for (const json& x : v) out.push_back(number(x, key));
    return out;
  }
  if (v.is_object()) {
    for (const auto& [k, _] : v.items()) {
      if (k != "start" && k != "stop" && k != "step") bad(key + "." + k, "unknown key");
    }
    if (!v.contains("start") || !v.contains("stop") || !v.contains("step")) {
      bad(key, "range needs start, stop and step");
    }
    try {
      return linear_grid(number(v["start"], key + ".start"), number(v["stop"], key + ".stop"),
                         number(v["step"], key + ".step"));
    } catch (const std::invalid_argument& e) {
      bad(key, e.what());
    }
  }
  bad(key, "expected an array of numbers or {start, stop, step}");
}

Vec3 unit_vector(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 3) bad(key, "expected a 3-vector");
  Vec3 out(number(v[0], key), number(v[1], key), number(v[2], key));
  if (out.norm() < 1e-12) bad(key, "vector must be nonzero");
  return out.normalized();
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename Fn>
void object_keys(const json& v, const std::string& key,
                 const std::map<std::string, Fn>& handlers) {
  if (!v.is_object()) bad(key, "expected an object");
  for (const auto& [k, value] : v.items()) {
    auto it = handlers.find(k);
    if (it == handlers.end()) bad(key + "." + k, "unknown key");
    it->second(value);
  }
}

using Setter = std::function<void(RunConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"preset", [](RunConfig& c, const json& v) { c.preset = text(v, "preset"); }},
      {"N", [](RunConfig& c, const json& v) { c.n_atoms = integer(v, "N"); }},
      {"lambda",
       [](RunConfig& c, const json& v) {
         if (v.is_string() && v.get<std::string>() == "inf") {
           c.lambda = std::numeric_limits<double>::infinity();
         } else {
           c.lambda = number(v, "lambda");
         }
       }},
      {"hamiltonian", [](RunConfig& c, const json& v) { c.hamiltonian = text(v, "hamiltonian"); }},
      {"t1", [](RunConfig& c, const json& v) { c.t1 = number(v, "t1"); }},
      {"readout", [](RunConfig& c, const json& v) { c.readout = text(v, "readout"); }},
      {"t2", [](RunConfig& c, const json& v) { c.t2 = number(v, "t2"); }},
      {"ratio", [](RunConfig& c, const json& v) { c.ratio = number(v, "ratio"); }},
      {"rotation",
       [](RunConfig& c, const json& v) {
         Rotation r{Vec3::UnitX(), 0.0};
         bool has_axis = false, has_angle = false;
         object_keys<std::function<void(const json&)>>(
             v, "rotation",
             {{"axis", [&](const json& a) { r.axis = unit_vector(a, "rotation.axis"); has_axis = true; }},
              {"angle", [&](const json& a) { r.angle = number(a, "rotation.angle"); has_angle = true; }}});
         if (!has_axis || !has_angle) bad("rotation", "needs axis and angle");
         c.rotation = r;
       }},
      {"generator", [](RunConfig& c, const json& v) { c.generator = unit_vector(v, "generator"); }},
      {"measurement", [](RunConfig& c, const json& v) { c.measurement = text(v, "measurement"); }},
      {"phi", [](RunConfig& c, const json& v) { c.phi = number(v, "phi"); }},
      {"phi_eval", [](RunConfig& c, const json& v) { c.phi_eval = number(v, "phi_eval"); }},
      {"sigma", [](RunConfig& c, const json& v) { c.sigma = number(v, "sigma"); }},
      {"sigmas", [](RunConfig& c, const json& v) { c.sigmas = number_list(v, "sigmas"); }},
      {"times", [](RunConfig& c, const json& v) { c.times = number_list(v, "times"); }},
      {"snapshot_times",
       [](RunConfig& c, const json& v) { c.snapshot_times = number_list(v, "snapshot_times"); }},
      {"t1_values", [](RunConfig& c, const json& v) { c.t1_values = number_list(v, "t1_values"); }},
      {"ratios", [](RunConfig& c, const json& v) { c.ratios = number_list(v, "ratios"); }},
      {"t1_grid", [](RunConfig& c, const json& v) { c.t1_grid = number_list(v, "t1_grid"); }},
      {"total_time", [](RunConfig& c, const json& v) { c.total_time = number(v, "total_time"); }},
      {"asym_ratios",
       [](RunConfig& c, const json& v) { c.asym_ratios = number_list(v, "asym_ratios"); }},
      {"basis",
       [](RunConfig& c, const json& v) {
         try {
           c.basis = basis_mode_from_string(text(v, "basis"));
         } catch (const std::invalid_argument& e) {
           bad("basis", e.what());
         }
       }},
      {"search",
       [](RunConfig& c, const json& v) {
         object_keys<std::function<void(const json&)>>(
             v, "search",
             {{"grid", [&](const json& a) { c.search.grid = integer(a, "search.grid"); }},
              {"refine_iterations",
               [&](const json& a) {
                 c.search.refine_iterations = integer(a, "search.refine_iterations");
               }},
              {"tolerance",
               [&](const json& a) { c.search.tolerance = number(a, "search.tolerance"); }}});
       }},
      {"q_grid",
       [](RunConfig& c, const json& v) {
         object_keys<std::function<void(const json&)>>(
             v, "q_grid",
             {{"n_theta", [&](const json& a) { c.q_grid.n_theta = integer(a, "q_grid.n_theta"); }},
              {"n_phi", [&](const json& a) { c.q_grid.n_phi = integer(a, "q_grid.n_phi"); }},
              {"normalize",
               [&](const json& a) { c.q_grid.normalize = boolean(a, "q_grid.normalize"); }}});
       }},
      {"husimi", [](RunConfig& c, const json& v) { c.husimi = boolean(v, "husimi"); }},
      {"format", [](RunConfig& c, const json& v) { c.format = text(v, "format"); }},
      {"out", [](RunConfig& c, const json& v) { c.out = text(v, "out"); }},
      {"threads", [](RunConfig& c, const json& v) { c.threads = integer(v, "threads"); }},
  };
  return table;
}

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) bad(key, why);
}

void require_ascending(const std::vector<double>& v, const std::string& key, bool strict) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    require(strict ? v[i] > v[i - 1] : v[i] >= v[i - 1], key, "values must be ascending");
  }
}

void require_nonempty(const std::vector<double>& v, const std::string& key) {
  require(!v.empty(), key, "must not be empty");
}

}  // namespace

json preset_defaults(const std::string& preset) {
  const json fig1 = {{"N", 100},
                     {"lambda", 2.0},
                     {"times", {{"start", 0.0}, {"stop", 0.12}, {"step", 0.001}}},
                     {"snapshot_times", {0.0, 0.0238, 0.0477, 0.0715}}};
  const json fig2 = {{"N", 100},
                     {"lambda", 2.0},
                     {"times", {{"start", 0.0}, {"stop", 0.12}, {"step", 0.002}}},
                     {"sigmas", {0.1, 1.0, 5.0}},
                     {"basis", "fixed"}};
  const json fig3 = {{"N", 20},
                     {"lambda", 2.0},
                     {"t1", 0.275},
                     {"sigma", 1.0},
                     {"phi", 1.0 / (2.0 * std::sqrt(20.0))},
                     {"measurement", "sx"}};
  const json fig4 = {{"N", 100},
                     {"lambda", 2.0},
                     {"t1_values", {0.027, 0.072}},
                     {"sigmas", {{"start", 0.0}, {"stop", 60.0}, {"step", 0.25}}},
                     {"basis", "optimized"}};
  const json fig5 = {{"N", 100},
                     {"lambda", 2.0},
                     {"t1_values", {0.027, 0.072}},
                     {"sigmas", {0.1, 5.0}},
                     {"ratios", {{"start", 0.5}, {"stop", 3.0}, {"step", 0.05}}},
                     {"basis", "optimized"}};
  const json fig6 = {{"N", 100},
                     {"lambda", 2.0},
                     {"total_time", 0.1},
                     {"t1_grid", {{"start", 0.0025}, {"stop", 0.0975}, {"step", 0.0025}}},
                     {"sigmas", {0.1, 1.0, 5.0}},
                     {"basis", "optimized"}};
  static const std::map<std::string, json> presets{{"fig1", fig1}, {"fig2", fig2},
                                                   {"fig3", fig3}, {"fig4", fig4},
                                                   {"fig5", fig5}, {"fig6", fig6}};
  auto it = presets.find(preset);
  if (it == presets.end()) {
    throw ConfigError("unknown preset '" + preset + "' (expected fig1..fig6)");
  }
  json out = it->second;
  out["preset"] = preset;
  return out;
}

void apply_json(RunConfig& cfg, const json& fragment) {
  if (!fragment.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : fragment.items()) {
    auto it = setters().find(key);
    if (it == setters().end()) bad(key, "unknown key");
    // null clears an optional field, as written in manifests.
    if (value.is_null()) {
      if (key == "t2") cfg.t2.reset();
      else if (key == "ratio") cfg.ratio.reset();
      else if (key == "rotation") cfg.rotation.reset();
      else if (key == "generator") cfg.generator.reset();
      else if (key == "phi") cfg.phi.reset();
      else bad(key, "may not be null");
      continue;
    }
    it->second(cfg, value);
  }
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

void validate(const RunConfig& c) {
  require(c.n_atoms >= 1 && c.n_atoms <= 2000, "N", "must be in [1, 2000]");
  require(c.lambda > 0.0, "lambda", "must be > 0 (or \"inf\")");
  require(c.hamiltonian == "tnt" || c.hamiltonian == "oat", "hamiltonian",
          "expected tnt or oat");
  require(c.t1 >= 0.0, "t1", "must be >= 0");
  try {
    readout_kind_from_string(c.readout);
  } catch (const std::invalid_argument& e) {
    bad("readout", e.what());
  }
  require(!(c.t2 && c.ratio), "ratio", "give either t2 or ratio, not both");
  if (c.t2) require(*c.t2 >= 0.0, "t2", "must be >= 0");
  if (c.ratio) require(*c.ratio > 0.0, "ratio", "must be > 0");
  require(c.readout != "rotation" || c.rotation.has_value(), "rotation",
          "required for readout 'rotation'");
  require(c.measurement == "sx" || c.measurement == "sz" || c.measurement == "optimized",
          "measurement", "expected sx, sz or optimized");
  require(c.sigma >= 0.0, "sigma", "must be >= 0");
  for (double s : c.sigmas) require(s >= 0.0, "sigmas", "values must be >= 0");
  require_ascending(c.sigmas, "sigmas", true);
  for (double t : c.times) require(t >= 0.0, "times", "values must be >= 0");
  require_ascending(c.times, "times", true);
  for (double t : c.snapshot_times) require(t >= 0.0, "snapshot_times", "values must be >= 0");
  for (double t : c.t1_values) require(t >= 0.0, "t1_values", "values must be >= 0");
  for (double r : c.ratios) require(r > 0.0, "ratios", "values must be > 0");
  require_ascending(c.ratios, "ratios", true);
  require(c.total_time > 0.0, "total_time", "must be > 0");
  for (double t : c.t1_grid) {
    require(t > 0.0 && t < c.total_time, "t1_grid", "values must lie in (0, total_time)");
  }
  require_ascending(c.t1_grid, "t1_grid", true);
  require_nonempty(c.asym_ratios, "asym_ratios");
  for (double r : c.asym_ratios) require(r > 0.0, "asym_ratios", "values must be > 0");
  require(c.search.grid >= 8, "search.grid", "must be >= 8");
  require(c.search.refine_iterations >= 0, "search.refine_iterations", "must be >= 0");
  require(c.search.tolerance > 0.0, "search.tolerance", "must be > 0");
  require(c.q_grid.n_theta >= 2, "q_grid.n_theta", "must be >= 2");
  require(c.q_grid.n_phi >= 1, "q_grid.n_phi", "must be >= 1");
  require(c.format == "csv" || c.format == "json", "format", "expected csv or json");
  require(!c.out.empty(), "out", "must not be empty");
  require(c.threads >= 0, "threads", "must be >= 0");

  const std::string& p = c.preset;
  if (p.empty()) {
    // Single-protocol checks; the protocol itself validates the rest.
    try {
      ProtocolSpec spec;
      spec.hamiltonian = hamiltonian_of(c);
      spec.t1 = c.t1;
      spec.readout = readout_of(c);
      spec.generator_dir = c.generator;
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid protocol: ") + e.what());
    }
    return;
  }
  require(c.hamiltonian == "tnt", "hamiltonian", "figure presets use the tnt Hamiltonian");
  if (p == "fig1") {
    require_nonempty(c.times, "times");
    require_nonempty(c.snapshot_times, "snapshot_times");
  } else if (p == "fig2") {
    require_nonempty(c.times, "times");
    require_nonempty(c.sigmas, "sigmas");
  } else if (p == "fig4") {
    require_nonempty(c.t1_values, "t1_values");
    require_nonempty(c.sigmas, "sigmas");
  } else if (p == "fig5") {
    require_nonempty(c.t1_values, "t1_values");
    require_nonempty(c.sigmas, "sigmas");
    require_nonempty(c.ratios, "ratios");
  } else if (p == "fig6") {
    require_nonempty(c.t1_grid, "t1_grid");
    require_nonempty(c.sigmas, "sigmas");
  } else if (p != "fig3") {
    bad("preset", "unknown preset '" + p + "'");
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["N"] = c.n_atoms;
  j["lambda"] = std::isinf(c.lambda) ? json("inf") : json(c.lambda);
  j["hamiltonian"] = c.hamiltonian;
  j["t1"] = c.t1;
  j["readout"] = c.readout;
  j["t2"] = c.t2 ? json(*c.t2) : json(nullptr);
  j["ratio"] = c.ratio ? json(*c.ratio) : json(nullptr);
  j["rotation"] = c.rotation
                      ? json{{"axis", vec_json(c.rotation->axis)}, {"angle", c.rotation->angle}}
                      : json(nullptr);
  j["generator"] = c.generator ? vec_json(*c.generator) : json(nullptr);
  j["measurement"] = c.measurement;
  j["phi"] = c.phi ? json(*c.phi) : json(nullptr);
  j["phi_eval"] = c.phi_eval;
  j["sigma"] = c.sigma;
  j["sigmas"] = c.sigmas;
  j["times"] = c.times;
  j["snapshot_times"] = c.snapshot_times;
  j["t1_values"] = c.t1_values;
  j["ratios"] = c.ratios;
  j["t1_grid"] = c.t1_grid;
  j["total_time"] = c.total_time;
  j["asym_ratios"] = c.asym_ratios;
  j["basis"] = to_string(c.basis);
  j["search"] = {{"grid", c.search.grid},
                 {"refine_iterations", c.search.refine_iterations},
                 {"tolerance", c.search.tolerance}};
  j["q_grid"] = {{"n_theta", c.q_grid.n_theta},
                 {"n_phi", c.q_grid.n_phi},
                 {"normalize", c.q_grid.normalize}};
  j["husimi"] = c.husimi;
  j["format"] = c.format;
  j["out"] = c.out;
  j["threads"] = c.threads;
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("out");
  j.erase("threads");
  return hex64(fnv1a64(j.dump()));
}

HamiltonianSpec hamiltonian_of(const RunConfig& cfg) {
  const SpinSystem sys(cfg.n_atoms);
  return cfg.hamiltonian == "oat" ? HamiltonianSpec::one_axis_twisting(sys)
                                  : HamiltonianSpec::twist_and_turn(sys, cfg.lambda);
}

Readout readout_of(const RunConfig& cfg) {
  const ReadoutKind kind = readout_kind_from_string(cfg.readout);
  const double t2 = cfg.t2 ? *cfg.t2 : cfg.ratio ? *cfg.ratio * cfg.t1 : cfg.t1;
  switch (kind) {
    case ReadoutKind::none: return Readout::none();
    case ReadoutKind::echo: return Readout::echo(cfg.t1);
    case ReadoutKind::asymmetric_echo: return Readout::asymmetric_echo(t2);
    case ReadoutKind::pseudo_echo: return Readout::pseudo_echo(t2);
    case ReadoutKind::rotation:
      if (!cfg.rotation) throw ConfigError("config key 'rotation': required for readout 'rotation'");
      return Readout::linear_rotation(cfg.rotation->axis, cfg.rotation->angle);
  }
  throw ConfigError("config key 'readout': unhandled kind");
}

SweepSettings sweep_settings_of(const RunConfig& cfg) {
  SweepSettings s;
  s.n_atoms = cfg.n_atoms;
  s.lambda = cfg.lambda;
  s.phi_eval = cfg.phi_eval;
  s.basis_mode = cfg.basis;
  s.search = cfg.search;
  s.asymmetric_ratios = cfg.asym_ratios;
  s.exec = Execution::parallel;
  return s;
}

}  // namespace tnt::cli
