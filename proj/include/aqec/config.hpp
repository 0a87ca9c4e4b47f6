#pragma once

// Experiment configuration: a TOML-subset file (top-level keys plus
// [channel], [estimator] and [analysis] tables), overridable from flags.
//
//   kind = "unital"            # pfail | dephasing | drift | unital | copt | grid-spacing | fit
//   code = "15-1-7-3"
//   trials = 1000
//   seed = 7
//   threads = 0                # 0: all cores
//   out = "out"
//   [channel]
//   p = [0.01, 0.003]
//   ecc = [0.7, 0.2, 0.1]
//   orientation = "haar-random" # or 9 row-major reals
//   theta0 = "random"          # or radians
//   kappa_sq = 0.0
//   [estimator]
//   cells = 0                  # 0: ceil(1/p)
//   points = 30000
//   engine = "per-cycle"       # or "fast-forward"
//   max_cycles = 4611686018427387904
//   adaptive = true
//   [analysis]
//   n_mc = 1000000
//   n_list = [100, 1000, 10000, 30000]
//   eps = [0.1, 0.2, 0.3]
//   inputs = ["out/results.csv"]

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "aqec/codes.hpp"
#include "aqec/simulation.hpp"

namespace aqec {

/// Invalid or incomplete configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"pfail", "dephasing", "drift", "unital", "copt", "grid-spacing", "fit"};
  return k;
}

struct ExperimentConfig {
  std::string kind = "dephasing";
  std::string code = "15-1-7-3";
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out = "out";

  std::vector<double> p{0.01};
  std::optional<std::array<double, 3>> ecc;
  std::optional<std::array<double, 9>> orientation;  // nullopt: Haar random
  std::optional<double> theta0;                     // nullopt: uniform random
  std::optional<double> kappa_sq;                   // nullopt: 0, or 0.01 for drift

  std::size_t cells = 0;
  std::size_t points = 30000;
  std::string engine = "per-cycle";
  std::uint64_t max_cycles = kDefaultMaxCycles;
  bool adaptive = true;

  std::size_t n_mc = 1'000'000;
  std::vector<std::size_t> n_list{100, 1000, 10000, 30000};
  std::vector<double> eps{0.1, 0.2, 0.3};
  std::vector<std::string> inputs;

  bool operator==(const ExperimentConfig&) const = default;

  double drift_variance() const { return kappa_sq.value_or(kind == "drift" ? 0.01 : 0.0); }
  std::size_t cells_for(double prob) const { return cells ? cells : recommended_cells(prob); }
  unsigned thread_count() const { return threads ? threads : std::max(1u, std::thread::hardware_concurrency()); }
  Engine engine_kind() const { return engine == "fast-forward" ? Engine::FastForward : Engine::PerCycle; }

  Eccentricities eccentricities() const {
    if (!ecc) throw ConfigError("missing key `ecc` (required for kind=" + kind + ")");
    return {(*ecc)[0], (*ecc)[1], (*ecc)[2]};
  }

  std::optional<Rotation3> orientation_rotation() const {
    if (!orientation) return std::nullopt;
    Mat3 m;
    m.a = *orientation;
    return Rotation3::from_matrix(m);
  }

  void validate() const {
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw ConfigError("key `kind`: unknown experiment kind '" + kind + "'");
    try {
      code_by_name(code);
    } catch (const std::invalid_argument&) {
      throw ConfigError("key `code`: unknown code '" + code + "'");
    }
    if (engine != "per-cycle" && engine != "fast-forward") throw ConfigError("key `engine`: expected per-cycle or fast-forward");
    if (kind == "fit") {
      if (inputs.empty()) throw ConfigError("missing key `inputs` (required for kind=fit)");
      return;
    }
    if (kind == "unital" || kind == "copt" || kind == "grid-spacing") {
      try {
        eccentricities().validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("key `ecc`: ") + e.what());
      }
    }
    if (kind == "copt" || kind == "grid-spacing") {
      if (n_mc < 1) throw ConfigError("key `n_mc` must be >= 1");
      if (n_list.empty()) throw ConfigError("key `n_list` must be non-empty");
      return;
    }
    if (kind == "pfail") return;
    if (p.empty()) throw ConfigError("missing key `p`");
    for (double v : p)
      if (!(v >= 0.0 && v <= (kind == "unital" ? 0.5 : 1.0))) throw ConfigError("key `p`: value out of range");
    if (trials < 1) throw ConfigError("key `trials` must be >= 1");
    if (max_cycles < 1 || max_cycles > (1ULL << 63)) throw ConfigError("key `max_cycles` must be in [1, 2^63]");
    if (drift_variance() < 0.0) throw ConfigError("key `kappa_sq` must be >= 0");
    if (kind == "drift" && !(drift_variance() > 0.0)) throw ConfigError("key `kappa_sq` must be > 0 for kind=drift");
    if (engine == "fast-forward" && drift_variance() > 0.0) throw ConfigError("key `engine`: fast-forward requires kappa_sq = 0");
    if (kind == "unital" && points < 1) throw ConfigError("key `points` must be >= 1");
    if (kind != "unital" && cells == 1) throw ConfigError("key `cells` must be 0 (automatic) or >= 2");
    if (orientation) {
      try {
        orientation_rotation();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("key `orientation`: ") + e.what());
      }
    }
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T, class F>
std::string fmt_list(const T& xs, F&& f) {
  std::string s = "[";
  for (std::size_t i = 0; i < std::size(xs); ++i) {
    if (i) s += ", ";
    s += f(xs[i]);
  }
  return s + "]";
}

inline std::string quote(const std::string& s) { return "\"" + s + "\""; }

struct ConfigValue {
  std::string key;
  std::vector<std::string> inputs;

  std::string where() const { return "key `" + key + "`"; }

  const std::string& single() const {
    if (inputs.size() != 1) throw ConfigError(where() + ": expected a single value");
    return inputs.front();
  }
  double as_double(const std::string& s) const {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw ConfigError(where() + ": '" + s + "' is not a number");
    }
    if (pos != s.size()) throw ConfigError(where() + ": '" + s + "' is not a number");
    return v;
  }
  std::uint64_t as_u64(const std::string& s) const {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError(where() + ": '" + s + "' is not a non-negative integer");
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ConfigError(where() + ": '" + s + "' is out of range");
    }
  }
  double real() const { return as_double(single()); }
  std::uint64_t u64() const { return as_u64(single()); }
  bool boolean() const {
    const auto& s = single();
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError(where() + ": expected true or false");
  }
  std::vector<double> reals() const {
    std::vector<double> v;
    for (const auto& s : inputs) v.push_back(as_double(s));
    return v;
  }
  template <std::size_t N>
  std::array<double, N> fixed() const {
    if (inputs.size() != N) throw ConfigError(where() + ": expected " + std::to_string(N) + " values");
    std::array<double, N> a{};
    for (std::size_t i = 0; i < N; ++i) a[i] = as_double(inputs[i]);
    return a;
  }
};

inline void apply(ExperimentConfig& c, const ConfigValue& v) {
  const std::string& k = v.key;
  if (k == "kind") c.kind = v.single();
  else if (k == "code") c.code = v.single();
  else if (k == "trials") c.trials = v.u64();
  else if (k == "seed") c.seed = v.u64();
  else if (k == "threads") c.threads = static_cast<unsigned>(v.u64());
  else if (k == "out") c.out = v.single();
  else if (k == "channel.p") c.p = v.reals();
  else if (k == "channel.ecc") c.ecc = v.fixed<3>();
  else if (k == "channel.orientation") {
    if (v.inputs.size() == 1 && v.inputs.front() == "haar-random") c.orientation.reset();
    else c.orientation = v.fixed<9>();
  } else if (k == "channel.theta0") {
    if (v.single() == "random") c.theta0.reset();
    else c.theta0 = v.real();
  } else if (k == "channel.kappa_sq") c.kappa_sq = v.real();
  else if (k == "estimator.cells") c.cells = v.u64();
  else if (k == "estimator.points") c.points = v.u64();
  else if (k == "estimator.engine") c.engine = v.single();
  else if (k == "estimator.max_cycles") c.max_cycles = v.u64();
  else if (k == "estimator.adaptive") c.adaptive = v.boolean();
  else if (k == "analysis.n_mc") c.n_mc = v.u64();
  else if (k == "analysis.n_list") {
    c.n_list.clear();
    for (const auto& s : v.inputs) c.n_list.push_back(v.as_u64(s));
  } else if (k == "analysis.eps") c.eps = v.reals();
  else if (k == "analysis.inputs") c.inputs = v.inputs;
  else throw ConfigError("unknown key `" + k + "`");
}

inline std::size_t line_of(const std::string& text, const std::string& key) {
  const std::string leaf = key.substr(key.rfind('.') == std::string::npos ? 0 : key.rfind('.') + 1);
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto b = line.find_first_not_of(" \t");
    if (b != std::string::npos && line.compare(b, leaf.size(), leaf) == 0) {
      const auto e = line.find_first_not_of(" \t", b + leaf.size());
      if (e != std::string::npos && line[e] == '=') return n;
    }
  }
  return 0;
}

}  // namespace detail

/// Parses configuration text over `base`; diagnostics name the source, line and key.
inline ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<config>",
                                          ExperimentConfig base = {}) {
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    detail::ConfigValue v{item.fullname(), item.inputs};
    try {
      detail::apply(base, v);
    } catch (const ConfigError& e) {
      const std::size_t line = detail::line_of(text, v.key);
      throw ConfigError(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + e.what());
    }
  }
  return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path, std::move(base));
}

/// Every key in a fixed order; parse_config_text(emit_config(c)) == c.
inline std::string emit_config(const ExperimentConfig& c) {
  using detail::fmt_double;
  using detail::fmt_list;
  using detail::quote;
  const auto num = [](auto v) { return std::to_string(v); };
  std::ostringstream o;
  o << "kind = " << quote(c.kind) << "\n"
    << "code = " << quote(c.code) << "\n"
    << "trials = " << c.trials << "\n"
    << "seed = " << c.seed << "\n"
    << "threads = " << c.threads << "\n"
    << "out = " << quote(c.out) << "\n"
    << "\n[channel]\n"
    << "p = " << fmt_list(c.p, fmt_double) << "\n";
  if (c.ecc) o << "ecc = " << fmt_list(*c.ecc, fmt_double) << "\n";
  o << "orientation = " << (c.orientation ? fmt_list(*c.orientation, fmt_double) : quote("haar-random")) << "\n"
    << "theta0 = " << (c.theta0 ? fmt_double(*c.theta0) : quote("random")) << "\n";
  if (c.kappa_sq) o << "kappa_sq = " << fmt_double(*c.kappa_sq) << "\n";
  o << "\n[estimator]\n"
    << "cells = " << c.cells << "\n"
    << "points = " << c.points << "\n"
    << "engine = " << quote(c.engine) << "\n"
    << "max_cycles = " << c.max_cycles << "\n"
    << "adaptive = " << (c.adaptive ? "true" : "false") << "\n"
    << "\n[analysis]\n"
    << "n_mc = " << c.n_mc << "\n"
    << "n_list = " << fmt_list(c.n_list, num) << "\n"
    << "eps = " << fmt_list(c.eps, fmt_double) << "\n"
    << "inputs = " << fmt_list(c.inputs, quote) << "\n";
  return o.str();
}

}  // namespace aqec
