#pragma once

// The lmcf command line: verify | flow | stability | sweep.
// Exit codes: 0 ok, 1 schema/config, 2 numerical failure, 3 invalid initial
// data, 4 a check or audit failed.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lmcf/ambient.hpp"
#include "lmcf/analysis.hpp"
#include "lmcf/config.hpp"
#include "lmcf/errors.hpp"
#include "lmcf/io.hpp"
#include "lmcf/run.hpp"
#include "lmcf/verify.hpp"
#include "lmcf/verify_evolution.hpp"

#ifndef LMCF_VERSION
#define LMCF_VERSION "0.0.0"
#endif

namespace lmcf {

enum ExitCode : int { kOk = 0, kSchema = 1, kNumerical = 2, kInvalidInput = 3, kCheckFailed = 4 };

inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::schema: return kSchema;
    case ErrorKind::numerical: return kNumerical;
    case ErrorKind::invalid_input: return kInvalidInput;
    case ErrorKind::audit: return kCheckFailed;
  }
  return kNumerical;
}

struct CliArgs {
  std::string verb;
  std::string config;
  std::vector<std::string> overrides;
  std::string out = "out";
  bool plots = false;
  bool evolution = false;
};

namespace detail {

namespace fs = std::filesystem;

struct Artifacts {
  fs::path dir;
  std::vector<std::string> written;

  void text(const std::string& name, const std::string& body) {
    const fs::path p = dir / name;
    fs::create_directories(p.parent_path());
    write_text(p.string(), body);
    written.push_back(name);
  }
  void json(const std::string& name, const nlohmann::json& j) { text(name, j.dump(2) + "\n"); }
};

inline void write_manifest(Artifacts& art, const CliArgs& a, const CliConfig& c, int code) {
  nlohmann::json m;
  m["verb"] = a.verb;
  m["code_version"] = LMCF_VERSION;
  m["config"] = c.resolved;
  m["config_path"] = a.config;
  m["overrides"] = a.overrides;
  m["exit_code"] = code;
  m["outputs"] = art.written;
  art.json("manifest.json", m);
}

inline std::optional<DecayFit> try_fit(const std::vector<double>& t, const std::vector<double>& v, double t0,
                                       double t1) {
  if (t.empty() || t.back() < t1) return std::nullopt;
  try {
    return decay_fit(t, v, t0, t1);
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline nlohmann::json fit_json(const std::optional<DecayFit>& f, double t0, double t1) {
  if (!f) return nullptr;
  return {{"rate", f->rate}, {"intercept", f->intercept}, {"r2", f->r2}, {"samples", f->samples},
          {"window", {t0, t1}}};
}

/// Everything derived from one finished trajectory.
struct FlowSummary {
  RunResult run;
  std::optional<DecayFit> energy_fit, osc_fit;
  std::vector<AuditItem> audits;
  std::string audit_note;
  InvariantReport invariants;
  bool checks_pass = true;
};

inline FlowSummary summarize(const CliConfig& c, RunResult r) {
  FlowSummary s;
  std::vector<double> t, I, beta;
  const double K2 = SasakianModel::from_id(c.exp.model).eta_einstein_constant();
  for (const auto& d : r.trajectory) {
    t.push_back(d.t);
    I.push_back(d.l2_H_sq);
    beta.push_back(std::exp(-K2 * d.t) * d.osc_alpha);
  }
  s.energy_fit = try_fit(t, I, c.fit_t0, c.fit_t1);
  s.osc_fit = try_fit(t, beta, c.fit_t0, c.fit_t1);
  if (r.trajectory.size() >= 10) {
    s.audits = bound_audit(r.trajectory, audit_context(c.exp));
  } else {
    s.audit_note = "fewer than 10 samples; audits skipped";
  }
  const int n = SasakianModel::from_id(c.exp.model).n();
  s.invariants = structural_invariants(r.trajectory, default_legendrian_tol(n));
  s.checks_pass = s.invariants.pass();
  for (const auto& a : s.audits) s.checks_pass = s.checks_pass && a.pass;
  s.run = std::move(r);
  return s;
}

inline nlohmann::json invariants_json(const InvariantReport& v) {
  return {{"pass", v.pass()},
          {"volume_monotone", v.volume_monotone},
          {"worst_volume_increase", v.worst_volume_increase},
          {"legendrian", v.legendrian},
          {"max_leg_residual", v.max_leg_residual},
          {"cycles_constant", v.cycles_constant},
          {"worst_cycle_drift", v.worst_cycle_drift},
          {"cycle_allowance", v.cycle_allowance}};
}

inline nlohmann::json stability_json(const StabilityReport& r) {
  nlohmann::json j{{"lambda1", r.lambda1}, {"kplus2", r.kplus2}, {"verdict", to_string(r.verdict)}};
  if (r.second_variation_formula) j["second_variation_formula"] = *r.second_variation_formula;
  if (r.second_variation_fd) j["second_variation_fd"] = *r.second_variation_fd;
  if (r.relative_gap) j["relative_gap"] = *r.relative_gap;
  if (r.essential) j["essential"] = *r.essential;
  if (r.eigenspace_remainder) j["eigenspace_remainder"] = *r.eigenspace_remainder;
  return j;
}

inline std::vector<std::string> csv_columns() {
  return {"vol", "max_H", "l2_H_sq", "max_A_sq", "lambda1", "osc_alpha", "mean_alpha", "E_t", "kappa",
          "leg_residual"};
}

inline double column(const Diagnostics& d, const std::string& c) {
  if (c == "vol") return d.vol;
  if (c == "max_H") return d.max_H;
  if (c == "l2_H_sq") return d.l2_H_sq;
  if (c == "max_A_sq") return d.max_A_sq;
  if (c == "lambda1") return d.lambda1;
  if (c == "osc_alpha") return d.osc_alpha;
  if (c == "mean_alpha") return d.mean_alpha;
  if (c == "E_t") return d.E_t;
  if (c == "kappa") return d.kappa;
  return d.leg_residual;
}

// ---- verbs --------------------------------------------------------------------------

inline int verb_verify(const CliArgs& a, const CliConfig& c, Artifacts& art) {
  const SasakianModel model = SasakianModel::from_id(c.exp.model);
  std::vector<TableRow> rows;
  const auto amb = ambient_identity_residuals(model, sample_points(model, c.verify_points, c.seed), c.seed + 1);
  for (const auto& [id, v] : amb.max_residual) rows.push_back({"ambient", id, v, 1e-8, NAN, v < 1e-8, false, ""});
  double kdev = 0.0;
  for (double k : amb.fitted_kplus2) kdev = std::max(kdev, std::abs(k - model.eta_einstein_constant()));
  rows.push_back({"ambient", "eta_einstein_K+2=" + fmt(model.eta_einstein_constant()), kdev, 1e-6, NAN, kdev < 1e-6,
                  false, "max deviation of the fitted K+2"});

  const auto L = build_immersion(model, c.exp.init, c.exp.resolution);
  for (auto& r : rows_from("submanifold", submanifold_identity_residuals(L))) rows.push_back(r);
  for (auto& r : rows_from("refinement", identity_refinement(model, c.exp.init, c.exp.resolution)))
    rows.push_back(r);
  if (a.evolution) {
    const double hm = h_min(L);
    for (auto& r : rows_from("evolution", evolution_order_study(c.exp, 0.1, 0.25 * hm * hm))) rows.push_back(r);
  }
  bool ok = true;
  for (const auto& r : rows) ok = ok && (r.informational || r.pass);
  art.text("residuals.csv", table_csv(rows));
  const std::string md = table_markdown(rows);
  art.text("residuals.md", md);
  std::cout << md << (ok ? "verify: all gating rows pass\n" : "verify: FAILED rows present\n");
  return ok ? kOk : kCheckFailed;
}

inline int verb_flow(const CliArgs& a, const CliConfig& c, Artifacts& art) {
  FlowSummary s = summarize(c, run(c.exp));
  const RunResult& r = s.run;
  const FlowState& fin = *r.final_state;
  art.text("trajectory.csv", trajectory_csv(r.trajectory));
  art.json("final_immersion.json", immersion_json(fin.L, &fin.alpha));
  art.text("nodes.csv", nodes_csv(fin));
  const SpectralReport sp = spectrum(fin.L, std::min(8, fin.L.nodes() - 1));
  art.text("eigenpairs.csv", eigenpairs_csv(sp));
  art.text("audit.csv", audit_csv(s.audits));

  nlohmann::json rep;
  rep["verdict"] = r.verdict;
  rep["t_final"] = fin.t;
  rep["steps"] = fin.step;
  rep["dt"] = r.dt;
  rep["min_dt"] = r.min_dt;
  rep["dt_reductions"] = r.dt_reductions;
  rep["final_max_H"] = fin.sff.max_H();
  rep["drift_corrections"] = r.drift_corrections;
  rep["max_projection_correction"] = r.max_projection_correction;
  rep["fitted_rates"] = {{"l2_H_sq", fit_json(s.energy_fit, c.fit_t0, c.fit_t1)},
                         {"rescaled_osc_alpha", fit_json(s.osc_fit, c.fit_t0, c.fit_t1)}};
  rep["linearized_rate"] = -2.0 * (sp.lambda1() - fin.L.model().eta_einstein_constant());
  rep["audits"] = audit_json(s.audits);
  if (!s.audit_note.empty()) rep["audit_note"] = s.audit_note;
  rep["invariants"] = invariants_json(s.invariants);
  StabilityReport st;
  st.lambda1 = sp.lambda1();
  st.kplus2 = fin.L.model().eta_einstein_constant();
  st.verdict = stability_verdict(st.lambda1, st.kplus2);
  rep["stability"] = stability_json(st);
  Parametrization base = c.exp.init;
  base.amplitude = 0.0;
  try {
    const auto L0 = build_immersion(fin.L.model(), base, c.exp.resolution);
    rep["sup_distance_to_unperturbed"] = sup_distance(fin.L, L0);
  } catch (const Error&) {
    rep["sup_distance_to_unperturbed"] = nullptr;
  }
  art.json("report.json", rep);

  if (a.plots) {
    std::vector<double> t;
    for (const auto& d : r.trajectory) t.push_back(d.t);
    for (const auto& col : csv_columns()) {
      std::vector<double> y;
      for (const auto& d : r.trajectory) y.push_back(column(d, col));
      art.text("plots/" + col + ".svg", svg_plot(col, t, y));
    }
  }
  std::cout << "flow: " << r.verdict << " at t = " << fin.t << ", max|H| = " << fin.sff.max_H();
  if (s.energy_fit) std::cout << ", rate(int|H|^2) = " << s.energy_fit->rate;
  std::cout << (s.checks_pass ? ", checks pass\n" : ", CHECKS FAILED\n");
  return s.checks_pass ? kOk : kCheckFailed;
}

inline int verb_stability(const CliArgs&, const CliConfig& c, Artifacts& art) {
  const auto L = build_immersion(SasakianModel::from_id(c.exp.model), c.exp.init, c.exp.resolution);
  const double maxH = second_fundamental(L).max_H();
  StabilityReport rep;
  nlohmann::json j;
  if (maxH < 1e-5) {
    rep = stability_report(L, potential_on_grid(L.grid(), c.stability.f, c.stability.mode), c.stability.fd_step);
    j = stability_json(rep);
    j["variation"] = {{"f", c.stability.f}, {"mode", c.stability.mode}, {"fd_step", c.stability.fd_step}};
  } else {
    rep = stability_report(L);
    j = stability_json(rep);
    j["note"] = "max|H| = " + fmt(maxH) + " >= 1e-5: not minimal, second variation skipped";
  }
  art.json("stability.json", j);
  art.text("eigenpairs.csv", eigenpairs_csv(spectrum(L, std::min(8, L.nodes() - 1))));
  std::cout << "stability: lambda1 = " << rep.lambda1 << ", K+2 = " << rep.kplus2 << ", " << to_string(rep.verdict)
            << "\n";
  return kOk;
}

struct SweepCell {
  double s = 0.0;
  int N = 0;
  std::string verdict;
  std::string error;
  int code = kOk;
  double rate = NAN, r2 = NAN, final_max_H = NAN, t_final = NAN;
  bool checks_pass = false;
  std::string csv;
};

inline int verb_sweep(const CliArgs&, const CliConfig& c, Artifacts& art) {
  std::vector<SweepCell> cells;
  for (double s : c.sweep.amplitudes)
    for (int N : c.sweep.resolutions) cells.push_back({s, N});
  const int n = SasakianModel::from_id(c.exp.model).n();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      SweepCell& cell = cells[i];
      CliConfig cc = c;
      cc.exp.init.amplitude = cell.s;
      cc.exp.resolution.assign(n, cell.N);
      try {
        FlowSummary fs = summarize(cc, run(cc.exp));
        cell.verdict = fs.run.verdict;
        cell.t_final = fs.run.final_state->t;
        cell.final_max_H = fs.run.final_state->sff.max_H();
        if (fs.energy_fit) {
          cell.rate = fs.energy_fit->rate;
          cell.r2 = fs.energy_fit->r2;
        }
        cell.checks_pass = fs.checks_pass;
        cell.code = fs.checks_pass ? kOk : kCheckFailed;
        cell.csv = trajectory_csv(fs.run.trajectory);
      } catch (const Error& e) {
        cell.verdict = "error";
        cell.error = e.name();
        cell.code = exit_code(e.kind());
      }
    }
  };
  int threads = c.sweep.threads > 0 ? c.sweep.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  std::vector<std::thread> pool;
  for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::ostringstream csv, md;
  csv << "s,N,verdict,rate,r2,final_max_H,t_final,checks_pass,error\n";
  md << "| s | N | verdict | rate | final max|H| | checks |\n|---|---|---|---|---|---|\n";
  int code = kOk;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& x = cells[i];
    csv << fmt(x.s) << ',' << x.N << ',' << x.verdict << ',' << (std::isnan(x.rate) ? "" : fmt(x.rate)) << ','
        << (std::isnan(x.r2) ? "" : fmt(x.r2)) << ',' << (std::isnan(x.final_max_H) ? "" : fmt(x.final_max_H))
        << ',' << (std::isnan(x.t_final) ? "" : fmt(x.t_final)) << ',' << (x.checks_pass ? "true" : "false")
        << ',' << x.error << '\n';
    char rate[32] = "", mh[32] = "";
    if (!std::isnan(x.rate)) std::snprintf(rate, sizeof rate, "%.4f", x.rate);
    if (!std::isnan(x.final_max_H)) std::snprintf(mh, sizeof mh, "%.3e", x.final_max_H);
    md << "| " << x.s << " | " << x.N << " | " << x.verdict << (x.error.empty() ? "" : " (" + x.error + ")")
       << " | " << rate << " | " << mh << " | " << (x.checks_pass ? "pass" : "FAIL") << " |\n";
    if (!x.csv.empty()) art.text("cells/cell" + std::to_string(i) + "_s" + fmt(x.s) + "_N" + std::to_string(x.N) + ".csv", x.csv);
    code = std::max(code, x.code);
  }
  art.text("sweep.csv", csv.str());
  art.text("sweep.md", md.str());
  std::cout << md.str();
  return code;
}

}  // namespace detail

/// Runs one command; never throws.
inline int execute(const CliArgs& a) {
  CliConfig cfg;
  try {
    cfg = parse_config(a.config, a.overrides);
  } catch (const Error& e) {
    std::cerr << "lmcf: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  detail::Artifacts art{a.out, {}};
  int code = kOk;
  try {
    std::filesystem::create_directories(art.dir);
    if (a.verb == "verify")
      code = detail::verb_verify(a, cfg, art);
    else if (a.verb == "flow")
      code = detail::verb_flow(a, cfg, art);
    else if (a.verb == "stability")
      code = detail::verb_stability(a, cfg, art);
    else if (a.verb == "sweep")
      code = detail::verb_sweep(a, cfg, art);
    else
      throw SchemaError("unknown verb '" + a.verb + "'");
  } catch (const Error& e) {
    std::cerr << "lmcf: " << e.what() << "\n";
    code = exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "lmcf: " << e.what() << "\n";
    code = kNumerical;
  }
  try {
    detail::write_manifest(art, a, cfg, code);
  } catch (const std::exception& e) {
    std::cerr << "lmcf: manifest: " << e.what() << "\n";
  }
  return code;
}

inline int cli_main(int argc, char** argv) {
  CLI::App app{"Legendrian mean curvature flow in eta-Einstein Sasakian model spaces"};
  app.require_subcommand(1, 1);
  CliArgs a;
  std::string model;
  for (const char* verb : {"verify", "flow", "stability", "sweep"}) {
    auto* sub = app.add_subcommand(verb);
    sub->add_option("-c,--config", a.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--set", a.overrides, "key=value override, dotted keys for nested entries");
    sub->add_option("-o,--out", a.out, "output directory");
    sub->add_option("--model", model, "shorthand for --set model=ID");
    if (std::string(verb) == "flow") sub->add_flag("--plots", a.plots, "write SVG plots of each CSV column");
    if (std::string(verb) == "verify")
      sub->add_flag("--evolution", a.evolution, "add the dt-halving evolution-equation study");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? kOk : kSchema;
  }
  a.verb = app.get_subcommands().front()->get_name();
  if (!model.empty()) a.overrides.insert(a.overrides.begin(), "model=" + model);
  return execute(a);
}

}  // namespace lmcf
