#pragma once

// Artifact writers. Numbers go out with %.17g so that equal doubles always
// print as equal bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmcf/analysis.hpp"
#include "lmcf/errors.hpp"
#include "lmcf/flow.hpp"
#include "lmcf/verify.hpp"

namespace lmcf {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileNotFound("cannot write '" + path + "'");
  out << body;
}

inline const char* kTrajectoryHeader =
    "t,vol,max_H,l2_H_sq,max_A_sq,lambda1,osc_alpha,mean_alpha,E_t,kappa,leg_residual";

inline std::string trajectory_csv(const std::vector<Diagnostics>& tr) {
  std::ostringstream s;
  s << kTrajectoryHeader << '\n';
  for (const auto& d : tr)
    s << fmt(d.t) << ',' << fmt(d.vol) << ',' << fmt(d.max_H) << ',' << fmt(d.l2_H_sq) << ',' << fmt(d.max_A_sq)
      << ',' << fmt(d.lambda1) << ',' << fmt(d.osc_alpha) << ',' << fmt(d.mean_alpha) << ',' << fmt(d.E_t) << ','
      << fmt(d.kappa) << ',' << fmt(d.leg_residual) << '\n';
  return s.str();
}

/// One row per node: grid angles, coordinates, alpha, |H|^2, |A|^2.
inline std::string nodes_csv(const FlowState& s) {
  const auto& L = s.L;
  std::ostringstream o;
  for (int a = 0; a < L.grid().dims(); ++a) o << "theta" << a << ',';
  for (int c = 0; c < L.model().coord_dim(); ++c) o << 'x' << c << ',';
  o << "alpha,H_sq,A_sq\n";
  for (int x = 0; x < L.nodes(); ++x) {
    for (int a = 0; a < L.grid().dims(); ++a) o << fmt(L.grid().theta(x, a)) << ',';
    for (int c = 0; c < L.model().coord_dim(); ++c) o << fmt(L.positions()(c, x)) << ',';
    o << fmt(s.alpha(x)) << ',' << fmt(s.sff.H_sq(x)) << ',' << fmt(s.sff.A_sq(x)) << '\n';
  }
  return o.str();
}

inline nlohmann::json immersion_json(const DiscreteLegendrian& L, const VectorXd* alpha = nullptr) {
  nlohmann::json j;
  j["model"] = L.model().id();
  j["n"] = L.n();
  std::vector<int> ext;
  for (int a = 0; a < L.grid().dims(); ++a) ext.push_back(L.grid().extent(a));
  j["resolution"] = ext;
  j["metadata"] = L.metadata;
  nlohmann::json pos = nlohmann::json::array();
  for (int x = 0; x < L.nodes(); ++x) {
    std::vector<double> p(L.positions().col(x).data(), L.positions().col(x).data() + L.positions().rows());
    pos.push_back(p);
  }
  j["positions"] = pos;
  nlohmann::json w = nlohmann::json::array();
  for (int r = 0; r < L.winding().rows(); ++r) {
    std::vector<double> row;
    for (int c = 0; c < L.winding().cols(); ++c) row.push_back(L.winding()(r, c));
    w.push_back(row);
  }
  j["winding"] = w;
  j["volume"] = L.first().vol;
  j["legendrian_residual"] = L.first().legendrian_residual;
  if (alpha) j["alpha"] = std::vector<double>(alpha->data(), alpha->data() + alpha->size());
  return j;
}

inline std::string eigenpairs_csv(const SpectralReport& sp) {
  std::ostringstream o;
  o << "index,eigenvalue,residual";
  const int nodes = static_cast<int>(sp.eigenfunctions.rows());
  for (int x = 0; x < nodes; ++x) o << ",phi" << x;
  o << '\n';
  for (std::size_t i = 0; i < sp.eigenvalues.size(); ++i) {
    o << i << ',' << fmt(sp.eigenvalues[i]) << ',' << fmt(i < sp.residuals.size() ? sp.residuals[i] : 0.0);
    for (int x = 0; x < nodes; ++x) o << ',' << fmt(sp.eigenfunctions(x, static_cast<int>(i)));
    o << '\n';
  }
  return o.str();
}

inline std::string audit_csv(const std::vector<AuditItem>& items) {
  std::ostringstream o;
  o << "name,pass,worst_margin,worst_t,checked,note\n";
  for (const auto& a : items)
    o << a.name << ',' << (a.pass ? "true" : "false") << ',' << fmt(a.worst_margin) << ',' << fmt(a.worst_t) << ','
      << a.checked << ",\"" << a.note << "\"\n";
  return o.str();
}

inline nlohmann::json audit_json(const std::vector<AuditItem>& items) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : items)
    arr.push_back({{"name", a.name}, {"pass", a.pass}, {"worst_margin", a.worst_margin},
                   {"worst_t", a.worst_t}, {"checked", a.checked}, {"note", a.note}});
  return arr;
}

// ---- residual tables ----------------------------------------------------------------

/// A flat row shared by the ambient, submanifold, refinement and evolution tables.
struct TableRow {
  std::string suite;
  std::string id;
  double value = 0.0;
  double threshold = 0.0;
  double order = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  bool informational = false;
  std::string note;
};

inline std::vector<TableRow> rows_from(const std::string& suite, const std::vector<ResidualReport>& v) {
  std::vector<TableRow> out;
  for (const auto& r : v)
    out.push_back({suite, r.id, r.max_residual, r.threshold, r.measured_order, r.pass, r.informational, r.note});
  return out;
}

inline std::vector<TableRow> rows_from(const std::string& suite, const std::vector<RefinementRow>& v) {
  std::vector<TableRow> out;
  for (const auto& r : v)
    out.push_back({suite, r.id + " (coarse/fine " + fmt(r.coarse) + "/" + fmt(r.fine) + ")", r.ratio, 10.0,
                   std::numeric_limits<double>::quiet_NaN(), r.pass, r.informational, "ratio or floor " + fmt(r.floor)});
  return out;
}

inline std::string table_csv(const std::vector<TableRow>& rows) {
  std::ostringstream o;
  o << "suite,id,value,threshold,order,pass,informational,note\n";
  for (const auto& r : rows)
    o << r.suite << ",\"" << r.id << "\"," << fmt(r.value) << ',' << fmt(r.threshold) << ','
      << (std::isnan(r.order) ? "" : fmt(r.order)) << ',' << (r.pass ? "true" : "false") << ','
      << (r.informational ? "true" : "false") << ",\"" << r.note << "\"\n";
  return o.str();
}

inline std::string table_markdown(const std::vector<TableRow>& rows) {
  std::ostringstream o;
  o << "| suite | id | value | threshold | order | status |\n|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    char v[32], t[32], ord[32] = "";
    std::snprintf(v, sizeof v, "%.3e", r.value);
    std::snprintf(t, sizeof t, "%.1e", r.threshold);
    if (!std::isnan(r.order)) std::snprintf(ord, sizeof ord, "%.2f", r.order);
    const char* status = r.informational ? "note" : (r.pass ? "PASS" : "FAIL");
    o << "| " << r.suite << " | " << r.id << " | " << v << " | " << t << " | " << ord << " | " << status << " |\n";
  }
  return o.str();
}

// ---- SVG line plots -----------------------------------------------------------------

/// Minimal line plot of y against x; log scale when every value is positive
/// and the range spans more than two decades.
inline std::string svg_plot(const std::string& title, const std::vector<double>& x, const std::vector<double>& y) {
  const double W = 640, H = 400, m = 50;
  std::vector<double> yy = y;
  const bool positive = !y.empty() && std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; });
  bool logy = false;
  if (positive) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    logy = *hi / *lo > 100.0;
  }
  if (logy)
    for (double& v : yy) v = std::log10(v);
  double x0 = x.empty() ? 0 : *std::min_element(x.begin(), x.end());
  double x1 = x.empty() ? 1 : *std::max_element(x.begin(), x.end());
  double y0 = yy.empty() ? 0 : *std::min_element(yy.begin(), yy.end());
  double y1 = yy.empty() ? 1 : *std::max_element(yy.begin(), yy.end());
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << m << "\" y=\"25\" font-family=\"sans-serif\" font-size=\"14\">" << title
    << (logy ? " (log10)" : "") << "</text>\n"
    << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << W - 2 * m << "\" height=\"" << H - 2 * m
    << "\" fill=\"none\" stroke=\"#888\"/>\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", y1);
  o << "<text x=\"4\" y=\"" << m + 4 << "\" font-size=\"10\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.3g", y0);
  o << "<text x=\"4\" y=\"" << H - m << "\" font-size=\"10\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.3g", x1);
  o << "<text x=\"" << W - m - 20 << "\" y=\"" << H - m + 15 << "\" font-size=\"10\">" << buf << "</text>\n";
  o << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < x.size() && i < yy.size(); ++i) {
    const double px = m + (x[i] - x0) / (x1 - x0) * (W - 2 * m);
    const double py = H - m - (yy[i] - y0) / (y1 - y0) * (H - 2 * m);
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px, py);
    o << buf;
  }
  o << "\"/>\n</svg>\n";
  return o.str();
}

}  // namespace lmcf
