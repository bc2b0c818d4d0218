#pragma once

// Experiment configuration from JSON plus key=value overrides. Every key has a
// default in default_config_json(); anything else is rejected with its path.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lmcf/errors.hpp"
#include "lmcf/run.hpp"

namespace lmcf {

using Json = nlohmann::json;

struct StabilityOptions {
  std::string f = "cos";
  int mode = 1;
  double fd_step = 1e-3;
};

struct SweepOptions {
  std::vector<double> amplitudes{0.0, 0.05, 0.1};
  std::vector<int> resolutions{64, 128};
  int threads = 0;  // 0: hardware concurrency
};

struct CliConfig {
  ExperimentConfig exp;
  double fit_t0 = 1.0, fit_t1 = 3.0;
  std::uint64_t seed = 12345;
  int verify_points = 100;
  StabilityOptions stability;
  SweepOptions sweep;
  Json resolved;  // fully defaulted config as parsed
};

inline Json default_config_json() {
  return Json{
      {"model", "hypcyl3"},
      {"family", nullptr},  // null: the model's standard family
      {"perturb", {{"f", "cos"}, {"s", 0.05}, {"mode", 1}}},
      {"central_quotient", false},
      {"N", 128},
      {"t_max", 6.0},
      {"dt_cfl", 0.2},
      {"dt", nullptr},
      {"convergence_H", 1e-4},
      {"blowup_factor", 1e4},
      {"spectral_every", 10},
      {"r0", 1.0},
      {"reeb_term", true},
      {"project", true},
      {"stop_on_convergence", true},
      {"thresholds", {{"kappa0", 1.0}, {"r0", 1.0}, {"Lambda0", 10.0}, {"eps0", 0.5}, {"delta0", 0.5}}},
      {"fit_window", {1.0, 3.0}},
      {"seed", 12345},
      {"verify", {{"points", 100}}},
      {"stability", {{"f", "cos"}, {"mode", 1}, {"fd_step", 1e-3}}},
      {"sweep", {{"s", {0.0, 0.05, 0.1}}, {"N", {64, 128}}, {"threads", 0}}},
  };
}

namespace detail {

/// Overlays user onto defaults; keys missing from defaults are schema errors.
inline void overlay(Json& base, const Json& user, const std::string& path) {
  if (!user.is_object()) throw SchemaError((path.empty() ? "config" : path) + ": expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw SchemaError("unknown key '" + key + "'");
    Json& slot = base[it.key()];
    if (slot.is_object())
      overlay(slot, it.value(), key);
    else
      slot = it.value();
  }
}

template <typename T>
T get(const Json& j, const std::string& path) {
  const Json* cur = &j;
  std::string rest = path;
  while (true) {
    const auto dot = rest.find('.');
    cur = &cur->at(rest.substr(0, dot));
    if (dot == std::string::npos) break;
    rest = rest.substr(dot + 1);
  }
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!cur->is_number()) throw SchemaError(path + ": expected a number");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!cur->is_number_integer()) throw SchemaError(path + ": expected an integer");
    }
    return cur->get<T>();
  } catch (const Json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

/// The family a model uses when the config names none.
inline std::string default_family(const std::string& model) {
  if (model == "sphere3") return "great_circle";
  if (model == "sphere5") return "clifford_torus";
  if (model == "heisenberg3" || model == "heisenberg5") return "heisenberg_lemniscate";
  return "hyperbolic_geodesic";
}

inline std::string canonical_family(const std::string& f) {
  if (f == "geodesic_lift") return "hyperbolic_geodesic";
  return f;
}

inline std::string canonical_potential(const std::string& f) {
  if (f == "cos_phi") return "cos";
  if (f == "sin_phi") return "sin";
  return f;
}

inline void require_potential(const std::string& f, const std::string& path) {
  if (f != "cos" && f != "sin" && f != "cos_sum")
    throw SchemaError(path + ": unknown potential '" + f + "'");
}

}  // namespace detail

/// Applies one "a.b.c=value" override. The value is read as JSON when it
/// parses, otherwise as a string.
inline void apply_override(Json& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw SchemaError("override '" + kv + "' is not key=value");
  const std::string key = kv.substr(0, eq), raw = kv.substr(eq + 1);
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  Json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t p; (p = rest.find('.')) != std::string::npos; rest = rest.substr(p + 1))
    parts.push_back(rest.substr(0, p));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = Json{{*it, patch}};
  detail::overlay(cfg, patch, "");
}

/// Defaults + user JSON + overrides, validated into typed options.
inline CliConfig resolve_config(const Json& user, const std::vector<std::string>& overrides = {}) {
  Json j = default_config_json();
  detail::overlay(j, user, "");
  for (const auto& kv : overrides) apply_override(j, kv);
  if (j.at("family").is_null()) j["family"] = detail::default_family(detail::get<std::string>(j, "model"));
  j["family"] = detail::canonical_family(detail::get<std::string>(j, "family"));
  j["perturb"]["f"] = detail::canonical_potential(detail::get<std::string>(j, "perturb.f"));
  j["stability"]["f"] = detail::canonical_potential(detail::get<std::string>(j, "stability.f"));

  CliConfig c;
  ExperimentConfig& e = c.exp;
  e.model = detail::get<std::string>(j, "model");
  const SasakianModel model = SasakianModel::from_id(e.model);
  e.init.family = detail::get<std::string>(j, "family");
  e.init.potential = detail::get<std::string>(j, "perturb.f");
  detail::require_potential(e.init.potential, "perturb.f");
  e.init.amplitude = detail::get<double>(j, "perturb.s");
  e.init.mode = detail::get<int>(j, "perturb.mode");
  e.init.central_quotient = detail::get<bool>(j, "central_quotient");
  const Json& N = j.at("N");
  if (N.is_number_integer()) {
    e.resolution.assign(model.n(), N.get<int>());
  } else if (N.is_array() && static_cast<int>(N.size()) == model.n() &&
             std::all_of(N.begin(), N.end(), [](const Json& v) { return v.is_number_integer(); })) {
    e.resolution = N.get<std::vector<int>>();
  } else {
    throw SchemaError("N: expected an integer or " + std::to_string(model.n()) + " integers");
  }
  e.t_max = detail::get<double>(j, "t_max");
  e.cfl = detail::get<double>(j, "dt_cfl");
  if (!j.at("dt").is_null()) e.dt = detail::get<double>(j, "dt");
  e.convergence_H = detail::get<double>(j, "convergence_H");
  e.blowup_factor = detail::get<double>(j, "blowup_factor");
  e.spectral_every = detail::get<int>(j, "spectral_every");
  e.r0 = detail::get<double>(j, "r0");
  e.reeb_term = detail::get<bool>(j, "reeb_term");
  e.project = detail::get<bool>(j, "project");
  e.stop_on_convergence = detail::get<bool>(j, "stop_on_convergence");
  e.thresholds.kappa0 = detail::get<double>(j, "thresholds.kappa0");
  e.thresholds.r0 = detail::get<double>(j, "thresholds.r0");
  e.thresholds.Lambda0 = detail::get<double>(j, "thresholds.Lambda0");
  e.thresholds.eps0 = detail::get<double>(j, "thresholds.eps0");
  e.thresholds.delta0 = detail::get<double>(j, "thresholds.delta0");
  e.validate();

  const Json& fw = j.at("fit_window");
  if (!fw.is_array() || fw.size() != 2 || !fw[0].is_number() || !fw[1].is_number() ||
      !(fw[0].get<double>() < fw[1].get<double>()))
    throw SchemaError("fit_window: expected [t0, t1] with t0 < t1");
  c.fit_t0 = fw[0].get<double>();
  c.fit_t1 = fw[1].get<double>();
  const Json& seed = j.at("seed");
  if (!seed.is_number_integer() || seed.get<std::int64_t>() < 0) throw SchemaError("seed: expected a nonnegative integer");
  c.seed = seed.get<std::uint64_t>();
  c.verify_points = detail::get<int>(j, "verify.points");
  if (c.verify_points < 1) throw SchemaError("verify.points must be >= 1");
  c.stability.f = detail::get<std::string>(j, "stability.f");
  detail::require_potential(c.stability.f, "stability.f");
  c.stability.mode = detail::get<int>(j, "stability.mode");
  c.stability.fd_step = detail::get<double>(j, "stability.fd_step");
  if (!(c.stability.fd_step > 0.0)) throw SchemaError("stability.fd_step must be positive");
  try {
    c.sweep.amplitudes = j.at("sweep").at("s").get<std::vector<double>>();
    c.sweep.resolutions = j.at("sweep").at("N").get<std::vector<int>>();
  } catch (const Json::exception& ex) {
    throw SchemaError(std::string("sweep: ") + ex.what());
  }
  c.sweep.threads = detail::get<int>(j, "sweep.threads");
  if (c.sweep.threads < 0) throw SchemaError("sweep.threads must be >= 0");
  c.resolved = std::move(j);
  return c;
}

inline CliConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  Json user = Json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw FileNotFound("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    user = Json::parse(ss.str(), nullptr, false);
    if (user.is_discarded()) throw SchemaError("config '" + path + "' is not valid JSON");
  }
  return resolve_config(user, overrides);
}

}  // namespace lmcf
