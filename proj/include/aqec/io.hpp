#pragma once

// Result persistence: versioned CSV rows, JSON summaries and SVG reports.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aqec/analysis.hpp"
#include "aqec/codes.hpp"
#include "aqec/simulation.hpp"

namespace aqec {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kSchemaLine = "# schema_version=1";
inline constexpr const char* kCsvHeader =
    "experiment_id,code,trial_id,seed,p,lifetime_cycles,censored,estimator_error,failure_wx,failure_wy,failure_wz,"
    "n_updates,grid_restarted,k1,baseline_lifetime,status";

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ResultRow {
  std::string experiment_id;
  std::string code;
  std::uint64_t trial_id = 0;
  std::uint64_t seed = 0;
  double p = 0.0;
  std::uint64_t lifetime_cycles = 0;
  bool censored = false;
  double estimator_error = std::numeric_limits<double>::quiet_NaN();
  int failure_wx = 0, failure_wy = 0, failure_wz = 0;
  std::uint64_t n_updates = 0;
  bool grid_restarted = false;
  double k1 = std::numeric_limits<double>::quiet_NaN();  // unital runs only
  double baseline_lifetime = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

inline ResultRow make_row(const TrialResult& r, std::string experiment_id, std::string code,
                          double k1 = std::numeric_limits<double>::quiet_NaN(),
                          double baseline = std::numeric_limits<double>::quiet_NaN()) {
  ResultRow row;
  row.experiment_id = std::move(experiment_id);
  row.code = std::move(code);
  row.trial_id = r.trial_id;
  row.seed = r.seed;
  row.p = r.p;
  row.lifetime_cycles = r.lifetime_cycles;
  row.censored = r.censored;
  row.estimator_error = r.estimator_error_at_failure;
  row.failure_wx = r.failure_triple.wx;
  row.failure_wy = r.failure_triple.wy;
  row.failure_wz = r.failure_triple.wz;
  row.n_updates = r.n_posterior_updates;
  row.grid_restarted = r.grid_restarted;
  row.k1 = k1;
  row.baseline_lifetime = baseline;
  if (!r.ok()) {
    std::string msg = r.error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    row.status = "error: " + msg;
  }
  return row;
}

inline TrialResult to_trial(const ResultRow& row) {
  TrialResult r;
  r.trial_id = row.trial_id;
  r.seed = row.seed;
  r.p = row.p;
  r.lifetime_cycles = row.lifetime_cycles;
  r.censored = row.censored;
  r.failure_triple = {row.failure_wx, row.failure_wy, row.failure_wz};
  r.n_posterior_updates = row.n_updates;
  r.estimator_error_at_failure = row.estimator_error;
  r.grid_restarted = row.grid_restarted;
  if (!row.ok()) r.error = row.status;
  return r;
}

namespace detail {
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// Serialized CSV writer; flushes every `flush_every` rows.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out, std::size_t flush_every = 100) : out_(out), flush_every_(flush_every) {
    out_ << kSchemaLine << '\n' << kCsvHeader << '\n';
    out_.flush();
  }

  void write(const ResultRow& r) {
    using detail::g17;
    out_ << r.experiment_id << ',' << r.code << ',' << r.trial_id << ',' << r.seed << ',' << g17(r.p) << ','
         << r.lifetime_cycles << ',' << (r.censored ? 1 : 0) << ',' << g17(r.estimator_error) << ',' << r.failure_wx
         << ',' << r.failure_wy << ',' << r.failure_wz << ',' << r.n_updates << ',' << (r.grid_restarted ? 1 : 0)
         << ',' << g17(r.k1) << ',' << g17(r.baseline_lifetime) << ',' << r.status << '\n';
    if (++rows_ % flush_every_ == 0) out_.flush();
  }

  void flush() { out_.flush(); }
  std::size_t rows() const { return rows_; }

 private:
  std::ostream& out_;
  std::size_t flush_every_;
  std::size_t rows_ = 0;
};

/// Parses a results CSV. A zero-byte input yields no rows.
inline std::vector<ResultRow> read_results_csv(std::istream& in, const std::string& source = "<csv>") {
  std::vector<ResultRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != kSchemaLine) throw SchemaError(source + ":1: expected '" + std::string(kSchemaLine) + "'");
  if (!std::getline(in, line) || line != kCsvHeader) throw SchemaError(source + ":2: unexpected column header");
  for (std::size_t n = 3; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 16) throw SchemaError(source + ":" + std::to_string(n) + ": expected 16 columns");
    try {
      ResultRow r;
      r.experiment_id = f[0];
      r.code = f[1];
      r.trial_id = std::stoull(f[2]);
      r.seed = std::stoull(f[3]);
      r.p = std::stod(f[4]);
      r.lifetime_cycles = std::stoull(f[5]);
      r.censored = f[6] == "1";
      r.estimator_error = std::stod(f[7]);
      r.failure_wx = std::stoi(f[8]);
      r.failure_wy = std::stoi(f[9]);
      r.failure_wz = std::stoi(f[10]);
      r.n_updates = std::stoull(f[11]);
      r.grid_restarted = f[12] == "1";
      r.k1 = std::stod(f[13]);
      r.baseline_lifetime = std::stod(f[14]);
      r.status = f[15];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw SchemaError(source + ":" + std::to_string(n) + ": malformed field");
    }
  }
  return rows;
}

inline std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SchemaError(path + ": cannot open");
  return read_results_csv(f, path);
}

// ---------------------------------------------------------------- summary

inline nlohmann::json to_json(const LifetimeSummary& s) {
  return {{"mean", s.mean},         {"std_error", s.std_error}, {"median", s.median}, {"mode", s.mode},
          {"trials", s.trials},     {"censored", s.censored},   {"failed", s.failed}};
}

inline nlohmann::json to_json(const FitResult& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"residual_norm", f.residual_norm},
          {"n_points", f.n_points},
          {"effective_distance", f.effective_distance()}};
}

/// Per-p lifetime summaries grouped from rows, plus a power-law fit over the
/// per-p means when at least three p values are present.
inline nlohmann::json summarize_rows(const std::vector<ResultRow>& rows) {
  std::map<double, std::vector<const ResultRow*>> by_p;
  for (const auto& r : rows) by_p[r.p].push_back(&r);
  nlohmann::json per_p = nlohmann::json::array();
  std::vector<std::pair<double, double>> points;
  for (const auto& [p, rs] : by_p) {
    std::vector<TrialResult> trials;
    for (const auto* r : rs) trials.push_back(to_trial(*r));
    nlohmann::json e = {{"p", p}, {"trials", rs.size()}};
    try {
      const LifetimeSummary s = lifetime_stats(trials);
      e["lifetime"] = to_json(s);
      const double base = rs.front()->baseline_lifetime;
      if (std::isfinite(base) && base > 0.0) {
        e["baseline_lifetime"] = base;
        e["normalized_lifetime"] = s.mean / base;
        e["normalized_std_error"] = s.std_error / base;
      }
      if (p > 0.0) points.emplace_back(p, s.mean);
    } catch (const std::invalid_argument& ex) {
      e["lifetime"] = nullptr;
      e["note"] = ex.what();
    }
    per_p.push_back(std::move(e));
  }
  nlohmann::json out = {{"schema_version", kSchemaVersion}, {"rows", rows.size()}, {"per_p", per_p}};
  if (points.size() >= 3) out["fit"] = to_json(power_law_fit(points));
  return out;
}

// ---------------------------------------------------------------- SVG

namespace detail {

struct LogAxis {
  double lo = 0, hi = 1;  // log10 bounds, whole decades
  double px0 = 0, px1 = 1;

  static LogAxis fit(const std::vector<double>& v, double def_lo, double def_hi, double px0, double px1) {
    LogAxis a{def_lo, def_hi, px0, px1};
    if (!v.empty()) {
      const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
      a.lo = std::floor(std::log10(*mn));
      a.hi = std::ceil(std::log10(*mx));
      if (a.hi <= a.lo) a.hi = a.lo + 1;
    }
    return a;
  }
  double map(double x) const { return px0 + (std::log10(x) - lo) / (hi - lo) * (px1 - px0); }
};

inline std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::vector<std::size_t> log_histogram(const std::vector<double>& v, const LogAxis& a, std::size_t bins) {
  std::vector<std::size_t> h(bins, 0);
  for (double x : v) {
    const double t = (std::log10(x) - a.lo) / (a.hi - a.lo);
    h[std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, t) * static_cast<double>(bins)))]++;
  }
  return h;
}

}  // namespace detail

/// Log-log scatter with multiplicity-scaled markers and marginal histograms.
/// Unital runs plot normalized lifetime against estimator error with the
/// expected-code-performance curve overlaid; other runs plot lifetime against p.
inline std::string render_report_svg(const std::vector<ResultRow>& rows) {
  using detail::f2;
  const bool unital = std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.experiment_id == "unital"; });

  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (!r.ok() || r.censored || r.lifetime_cycles == 0) continue;
    const double x = unital ? r.estimator_error : r.p;
    double y = static_cast<double>(r.lifetime_cycles);
    if (unital && std::isfinite(r.baseline_lifetime) && r.baseline_lifetime > 0.0) y /= r.baseline_lifetime;
    if (!(x > 0.0) || !std::isfinite(x) || !(y > 0.0)) continue;
    xs.push_back(x);
    ys.push_back(y);
  }

  const double W = 640, H = 480, L = 70, R = 500, T = 130, B = 420;
  const auto ax = detail::LogAxis::fit(xs, unital ? -2 : -4, unital ? 0 : -1, L, R);
  const auto ay = detail::LogAxis::fit(ys, unital ? -1 : 0, unital ? 2 : 6, B, T);

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << R - L << "\" height=\"" << B - T
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = static_cast<int>(ax.lo); k <= static_cast<int>(ax.hi); ++k) {
    const double x = ax.map(std::pow(10.0, k));
    o << "<line x1=\"" << f2(x) << "\" y1=\"" << B << "\" x2=\"" << f2(x) << "\" y2=\"" << B + 5 << "\" stroke=\"black\"/>"
      << "<text x=\"" << f2(x) << "\" y=\"" << B + 18 << "\" text-anchor=\"middle\">1e" << k << "</text>\n";
  }
  for (int k = static_cast<int>(ay.lo); k <= static_cast<int>(ay.hi); ++k) {
    const double y = ay.map(std::pow(10.0, k));
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << f2(y) << "\" x2=\"" << L << "\" y2=\"" << f2(y) << "\" stroke=\"black\"/>"
      << "<text x=\"" << L - 8 << "\" y=\"" << f2(y + 4) << "\" text-anchor=\"end\">1e" << k << "</text>\n";
  }
  o << "<text x=\"" << (L + R) / 2 << "\" y=\"" << H - 20 << "\" text-anchor=\"middle\">"
    << (unital ? "estimator error at failure (Frobenius)" : "physical error rate p") << "</text>\n";
  o << "<text x=\"18\" y=\"" << (T + B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << (T + B) / 2
    << ")\">" << (unital ? "normalized lifetime" : "lifetime (cycles)") << "</text>\n";

  // marginal histograms
  constexpr std::size_t kBins = 30;
  const auto hx = detail::log_histogram(xs, ax, kBins);
  const auto hy = detail::log_histogram(ys, ay, kBins);
  const std::size_t hmax = std::max<std::size_t>(
      1, std::max(hx.empty() ? 0 : *std::max_element(hx.begin(), hx.end()), hy.empty() ? 0 : *std::max_element(hy.begin(), hy.end())));
  const double bw = (R - L) / kBins, bh = (B - T) / kBins;
  for (std::size_t i = 0; i < kBins; ++i) {
    if (hx[i]) {
      const double h = 80.0 * static_cast<double>(hx[i]) / static_cast<double>(hmax);
      o << "<rect x=\"" << f2(L + i * bw) << "\" y=\"" << f2(T - 10 - h) << "\" width=\"" << f2(bw) << "\" height=\""
        << f2(h) << "\" fill=\"#8da0cb\"/>\n";
    }
    if (hy[i]) {
      const double w = 110.0 * static_cast<double>(hy[i]) / static_cast<double>(hmax);
      o << "<rect x=\"" << R + 10 << "\" y=\"" << f2(B - (i + 1) * bh) << "\" width=\"" << f2(w) << "\" height=\""
        << f2(bh) << "\" fill=\"#8da0cb\"/>\n";
    }
  }

  // scatter binned on a 60x60 lattice; marker area proportional to multiplicity
  constexpr int kCells = 60;
  std::map<std::pair<int, int>, std::size_t> cells;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int cx = std::clamp(static_cast<int>((ax.map(xs[i]) - L) / (R - L) * kCells), 0, kCells - 1);
    const int cy = std::clamp(static_cast<int>((B - ay.map(ys[i])) / (B - T) * kCells), 0, kCells - 1);
    cells[{cx, cy}]++;
  }
  for (const auto& [c, n] : cells) {
    const double cx = L + (c.first + 0.5) * (R - L) / kCells;
    const double cy = B - (c.second + 0.5) * (B - T) / kCells;
    o << "<circle cx=\"" << f2(cx) << "\" cy=\"" << f2(cy) << "\" r=\"" << f2(2.0 * std::sqrt(static_cast<double>(n)))
      << "\" fill=\"#fc8d62\" fill-opacity=\"0.6\"/>\n";
  }

  if (unital) {
    const auto it = std::find_if(rows.begin(), rows.end(), [](const ResultRow& r) { return std::isfinite(r.k1); });
    if (it != rows.end()) {
      const int tz = code_by_name(it->code).tz();
      o << "<polyline fill=\"none\" stroke=\"#66c2a5\" stroke-width=\"2\" points=\"";
      for (int i = 0; i <= 100; ++i) {
        const double err = std::pow(10.0, ax.lo + (ax.hi - ax.lo) * i / 100.0);
        const double y = std::clamp(ay.map(expected_code_performance(tz, it->k1, err)), T, B);
        o << (i ? " " : "") << f2(ax.map(err)) << ',' << f2(y);
      }
      o << "\"/>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace aqec
