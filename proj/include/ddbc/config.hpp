#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddbc/box.hpp"
#include "ddbc/errors.hpp"
#include "ddbc/kernels.hpp"
#include "ddbc/systems.hpp"

namespace ddbc {

/// Everything one pipeline run needs. Flat key=value text form; see
/// config_text for the key list.
struct RunConfig {
  std::string profile = "desk";

  // System
  std::string system = "lane_keeping";
  std::string angle_unit = "deg";  // unit of lk.delta_f
  double lk_tau = 0.1;
  double lk_v = 5.0;
  double lk_l_r = 1.384;
  double lk_l_f = 1.384;
  double lk_delta_f = 5.0;
  Eigen::VectorXd lk_noise_std = Eigen::Vector3d(0.01, 0.01, 0.001);
  double lg_alpha = 0.8;
  double lg_noise_std = 0.1;

  // Sets
  StateBox domain{Eigen::Vector3d(1, -7, -0.05), Eigen::Vector3d(10, 7, 0.05)};
  StateBox initial{Eigen::Vector3d(1, -0.5, -0.005), Eigen::Vector3d(2, 0.5, 0.005)};
  std::vector<StateBox> unsafe{{Eigen::Vector3d(1, -7, -0.05), Eigen::Vector3d(10, -6, 0.05)},
                               {Eigen::Vector3d(1, 6, -0.05), Eigen::Vector3d(10, 7, 0.05)}};

  // Kernels and embedding
  PolynomialKernel kx{0.005, 0.11, 2};
  SquaredExponentialKernel k_plus{1500.0 * 1500.0, 2.98 * 2.98};
  long n_samples = 2000;
  double lambda = 5e-7;

  // Certificate constants
  double epsilon = 0.1;
  double rho = 0.0;
  double b_bar = 0.1;
  double gamma = 5.0;
  std::string eta_mode = "minimize";  // or "fixed"
  double eta = 0.0;
  double c = 1e-4;
  double zeta1 = 0.01;
  double zeta2 = 0.01;
  std::optional<int> horizon = 10;  // nullopt = unbounded
  int barrier_degree = 2;
  int multiplier_degree = 2;

  // Numerics
  std::uint64_t seed = 1;
  double solver_tol = 1e-8;
  int solver_max_iters = 100;
  long gp_n_train = 1728;
  double gp_regularizer = 0.0;  // 0 = 1e-8 * sigma_f^2
  int gp_max_rounds = 3;
  long gp_max_train = 8000;
  int grid_validation = 50;
  int grid_envelope = 50;
  long mc_runs = 10000;
  int workers = 1;
  bool require_envelope = true;

  // Files
  std::string out_dir = "out";
  std::string data_csv;  // empty = generate inline
  std::string data_meta;

  [[nodiscard]] System make_system() const {
    if (system == "lane_keeping") {
      LaneKeepingParams p;
      p.tau = lk_tau;
      p.v = lk_v;
      p.l_r = lk_l_r;
      p.l_f = lk_l_f;
      p.delta_f = angle_unit == "deg" ? lk_delta_f * M_PI / 180.0 : lk_delta_f;
      for (int k = 0; k < 3; ++k) p.noise_std[static_cast<std::size_t>(k)] = lk_noise_std(k);
      return p;
    }
    return LinearGaussianParams{lg_alpha, lg_noise_std};
  }

  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

inline bool operator==(const PolynomialKernel& a, const PolynomialKernel& b) { return a.a == b.a && a.b == b.b && a.d == b.d; }
inline bool operator==(const SquaredExponentialKernel& a, const SquaredExponentialKernel& b) {
  return a.sigma_f_sq == b.sigma_f_sq && a.sigma_l_sq == b.sigma_l_sq;
}
inline bool same_box(const StateBox& a, const StateBox& b) { return a.lower == b.lower && a.upper == b.upper; }

inline bool operator==(const RunConfig& a, const RunConfig& b) {
  if (a.unsafe.size() != b.unsafe.size()) return false;
  for (std::size_t k = 0; k < a.unsafe.size(); ++k)
    if (!same_box(a.unsafe[k], b.unsafe[k])) return false;
  return a.profile == b.profile && a.system == b.system && a.angle_unit == b.angle_unit && a.lk_tau == b.lk_tau &&
         a.lk_v == b.lk_v && a.lk_l_r == b.lk_l_r && a.lk_l_f == b.lk_l_f && a.lk_delta_f == b.lk_delta_f &&
         a.lk_noise_std == b.lk_noise_std && a.lg_alpha == b.lg_alpha && a.lg_noise_std == b.lg_noise_std &&
         same_box(a.domain, b.domain) && same_box(a.initial, b.initial) && a.kx == b.kx && a.k_plus == b.k_plus &&
         a.n_samples == b.n_samples && a.lambda == b.lambda && a.epsilon == b.epsilon && a.rho == b.rho &&
         a.b_bar == b.b_bar && a.gamma == b.gamma && a.eta_mode == b.eta_mode && a.eta == b.eta && a.c == b.c &&
         a.zeta1 == b.zeta1 && a.zeta2 == b.zeta2 && a.horizon == b.horizon && a.barrier_degree == b.barrier_degree &&
         a.multiplier_degree == b.multiplier_degree && a.seed == b.seed && a.solver_tol == b.solver_tol &&
         a.solver_max_iters == b.solver_max_iters && a.gp_n_train == b.gp_n_train &&
         a.gp_regularizer == b.gp_regularizer && a.gp_max_rounds == b.gp_max_rounds &&
         a.gp_max_train == b.gp_max_train && a.grid_validation == b.grid_validation &&
         a.grid_envelope == b.grid_envelope && a.mc_runs == b.mc_runs && a.workers == b.workers &&
         a.require_envelope == b.require_envelope && a.out_dir == b.out_dir && a.data_csv == b.data_csv &&
         a.data_meta == b.data_meta;
}

/// Defaults for a named profile: "desk" (N = 2000, 10^4 Monte-Carlo runs)
/// or "paper" (N = 10^4, epsilon = 1, b_bar = 0.06, lambda = 1e-3, 10^5 runs).
inline RunConfig profile_defaults(const std::string& profile) {
  RunConfig cfg;
  cfg.profile = profile;
  if (profile == "desk") return cfg;
  if (profile == "paper") {
    cfg.n_samples = 10000;
    cfg.lambda = 1e-3;
    cfg.epsilon = 1.0;
    cfg.b_bar = 0.06;
    cfg.mc_runs = 100000;
    return cfg;
  }
  throw std::invalid_argument("unknown profile '" + profile + "' (expected desk or paper)");
}

/// Invalid configuration; the message starts with "<file>:<line>:" when the
/// offending value came from a file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

inline std::string box_key_text(const std::string& prefix, const StateBox& box) {
  return prefix + ".lower=" + vector_to_list(box.lower) + '\n' + prefix + ".upper=" + vector_to_list(box.upper) + '\n';
}

}  // namespace detail

/// Serialization of every field, one key per line. parse_config inverts it exactly.
inline std::string config_text(const RunConfig& cfg) {
  const auto g = format_g17;
  std::ostringstream out;
  out << "profile=" << cfg.profile << '\n'
      << "system=" << cfg.system << '\n'
      << "angle_unit=" << cfg.angle_unit << '\n'
      << "lk.tau=" << g(cfg.lk_tau) << '\n'
      << "lk.v=" << g(cfg.lk_v) << '\n'
      << "lk.l_r=" << g(cfg.lk_l_r) << '\n'
      << "lk.l_f=" << g(cfg.lk_l_f) << '\n'
      << "lk.delta_f=" << g(cfg.lk_delta_f) << '\n'
      << "lk.noise_std=" << vector_to_list(cfg.lk_noise_std) << '\n'
      << "lg.alpha=" << g(cfg.lg_alpha) << '\n'
      << "lg.noise_std=" << g(cfg.lg_noise_std) << '\n'
      << detail::box_key_text("X", cfg.domain) << detail::box_key_text("X0", cfg.initial);
  for (std::size_t k = 0; k < cfg.unsafe.size(); ++k) out << detail::box_key_text("unsafe." + std::to_string(k + 1), cfg.unsafe[k]);
  out << "kx.a=" << g(cfg.kx.a) << '\n'
      << "kx.b=" << g(cfg.kx.b) << '\n'
      << "kx.d=" << cfg.kx.d << '\n'
      << "kplus.sigma_f_sq=" << g(cfg.k_plus.sigma_f_sq) << '\n'
      << "kplus.sigma_l_sq=" << g(cfg.k_plus.sigma_l_sq) << '\n'
      << "n_samples=" << cfg.n_samples << '\n'
      << "lambda=" << g(cfg.lambda) << '\n'
      << "epsilon=" << g(cfg.epsilon) << '\n'
      << "rho=" << g(cfg.rho) << '\n'
      << "b_bar=" << g(cfg.b_bar) << '\n'
      << "gamma=" << g(cfg.gamma) << '\n'
      << "eta_mode=" << cfg.eta_mode << '\n'
      << "eta=" << g(cfg.eta) << '\n'
      << "c=" << g(cfg.c) << '\n'
      << "zeta1=" << g(cfg.zeta1) << '\n'
      << "zeta2=" << g(cfg.zeta2) << '\n'
      << "horizon=" << (cfg.horizon ? std::to_string(*cfg.horizon) : "infinite") << '\n'
      << "barrier_degree=" << cfg.barrier_degree << '\n'
      << "multiplier_degree=" << cfg.multiplier_degree << '\n'
      << "seed=" << cfg.seed << '\n'
      << "solver.tol=" << g(cfg.solver_tol) << '\n'
      << "solver.max_iters=" << cfg.solver_max_iters << '\n'
      << "gp.n_train=" << cfg.gp_n_train << '\n'
      << "gp.regularizer=" << g(cfg.gp_regularizer) << '\n'
      << "gp.max_rounds=" << cfg.gp_max_rounds << '\n'
      << "gp.max_train=" << cfg.gp_max_train << '\n'
      << "grid.validation=" << cfg.grid_validation << '\n'
      << "grid.envelope=" << cfg.grid_envelope << '\n'
      << "mc.runs=" << cfg.mc_runs << '\n'
      << "workers=" << cfg.workers << '\n'
      << "require_envelope=" << detail::bool_text(cfg.require_envelope) << '\n'
      << "out_dir=" << cfg.out_dir << '\n'
      << "data.csv=" << cfg.data_csv << '\n'
      << "data.meta=" << cfg.data_meta << '\n';
  return out.str();
}

namespace detail {

struct ConfigLine {
  std::string value;
  int line = 0;
};

/// Parses one value, rethrowing failures as "<what>:<line>: <key>: ...".
class ConfigReader {
 public:
  ConfigReader(std::map<std::string, ConfigLine> entries, std::string what)
      : entries_(std::move(entries)), what_(std::move(what)) {}

  [[nodiscard]] std::string where(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? what_ + ": " + key : what_ + ":" + std::to_string(it->second.line) + ": " + key;
  }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const { throw ConfigError(where(key) + ": " + msg); }

  [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) > 0; }
  [[nodiscard]] const std::map<std::string, ConfigLine>& entries() const { return entries_; }

  void read(const std::string& key, std::string& out) const {
    if (has(key)) out = entries_.at(key).value;
  }
  void read(const std::string& key, double& out) const {
    if (!has(key)) return;
    const std::string& s = entries_.at(key).value;
    try {
      std::size_t used = 0;
      out = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + s + "'");
    }
  }
  template <class Int, std::enable_if_t<std::is_integral_v<Int> && !std::is_same_v<Int, bool>, int> = 0>
  void read(const std::string& key, Int& out) const {
    if (!has(key)) return;
    const std::string& s = entries_.at(key).value;
    try {
      std::size_t used = 0;
      if constexpr (std::is_unsigned_v<Int>) {
        // stoull accepts "-1" and wraps it; reject signs explicitly.
        if (s.find('-') != std::string::npos) throw std::invalid_argument(s);
        const unsigned long long v = std::stoull(s, &used);
        if (used != s.size() || v > std::numeric_limits<Int>::max()) throw std::invalid_argument(s);
        out = static_cast<Int>(v);
      } else {
        const long long v = std::stoll(s, &used);
        if (used != s.size() || v < std::numeric_limits<Int>::min() || v > std::numeric_limits<Int>::max())
          throw std::invalid_argument(s);
        out = static_cast<Int>(v);
      }
    } catch (const std::exception&) {
      fail(key, "expected an integer, got '" + s + "'");
    }
  }
  void read(const std::string& key, bool& out) const {
    if (!has(key)) return;
    const std::string& s = entries_.at(key).value;
    if (s == "true") out = true;
    else if (s == "false") out = false;
    else fail(key, "expected true or false, got '" + s + "'");
  }
  void read(const std::string& key, Eigen::VectorXd& out) const {
    if (!has(key)) return;
    try {
      out = parse_list(entries_.at(key).value);
    } catch (const ParseError& e) {
      fail(key, e.what());
    }
  }

 private:
  std::map<std::string, ConfigLine> entries_;
  std::string what_;
};

inline std::map<std::string, ConfigLine> read_config_lines(std::istream& in, const std::string& what) {
  std::map<std::string, ConfigLine> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(what + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = line.substr(first, eq - first);
    if (out.count(key)) {
      throw ConfigError(what + ":" + std::to_string(lineno) + ": " + key + ": duplicate key (first set on line " +
                        std::to_string(out[key].line) + ")");
    }
    out[key] = {line.substr(eq + 1), lineno};
  }
  return out;
}

inline bool is_unsafe_key(const std::string& key, int& index, std::string& field) {
  if (key.rfind("unsafe.", 0) != 0) return false;
  const auto dot = key.find('.', 7);
  if (dot == std::string::npos) return false;
  try {
    std::size_t used = 0;
    index = std::stoi(key.substr(7, dot - 7), &used);
    if (used != dot - 7 || index < 1) return false;
  } catch (const std::exception&) {
    return false;
  }
  field = key.substr(dot + 1);
  return field == "lower" || field == "upper";
}

}  // namespace detail

/// Checks every invariant the modules rely on; messages name the key (and
/// its line when `reader` knows it).
inline void validate_config(const RunConfig& cfg, const detail::ConfigReader& r) {
  auto need = [&](bool ok, const std::string& key, const std::string& msg) {
    if (!ok) r.fail(key, msg);
  };
  need(cfg.system == "lane_keeping" || cfg.system == "linear_gaussian", "system", "expected lane_keeping or linear_gaussian");
  need(cfg.angle_unit == "deg" || cfg.angle_unit == "rad", "angle_unit", "expected deg or rad");
  const int n = cfg.system == "lane_keeping" ? 3 : 1;
  need(cfg.lk_tau >= 0, "lk.tau", "must be >= 0");
  need(cfg.lk_v > 0, "lk.v", "must be > 0");
  need(cfg.lk_l_r > 0, "lk.l_r", "must be > 0");
  need(cfg.lk_l_f > 0, "lk.l_f", "must be > 0");
  need(cfg.lk_noise_std.size() == 3 && (cfg.lk_noise_std.array() >= 0).all(), "lk.noise_std", "expected 3 values >= 0");
  need(cfg.lg_noise_std >= 0, "lg.noise_std", "must be >= 0");
  auto check_box = [&](const StateBox& b, const std::string& key) {
    need(b.lower.size() == n && b.upper.size() == n, key + ".lower",
         "expected " + std::to_string(n) + " values for the " + cfg.system + " state");
    need((b.lower.array() < b.upper.array()).all(), key + ".upper", "every lower bound must be below its upper bound");
  };
  check_box(cfg.domain, "X");
  check_box(cfg.initial, "X0");
  for (std::size_t k = 0; k < cfg.unsafe.size(); ++k) check_box(cfg.unsafe[k], "unsafe." + std::to_string(k + 1));
  need(!cfg.unsafe.empty(), "unsafe.1.lower", "at least one unsafe box is required");
  need(cfg.kx.a > 0, "kx.a", "must be > 0");
  need(cfg.kx.b >= 0, "kx.b", "must be >= 0");
  need(cfg.kx.d >= 1, "kx.d", "must be >= 1");
  need(cfg.k_plus.sigma_f_sq > 0, "kplus.sigma_f_sq", "must be > 0");
  need(cfg.k_plus.sigma_l_sq > 0, "kplus.sigma_l_sq", "must be > 0");
  need(cfg.n_samples >= 1, "n_samples", "must be >= 1");
  need(cfg.lambda >= 0, "lambda", "must be >= 0");
  need(cfg.epsilon >= 0, "epsilon", "must be >= 0");
  need(cfg.rho >= 0 && cfg.rho <= 1, "rho", "must lie in [0, 1]");
  need(cfg.b_bar >= 0, "b_bar", "must be >= 0");
  need(cfg.gamma > 0, "gamma", "must be > 0");
  need(cfg.eta_mode == "minimize" || cfg.eta_mode == "fixed", "eta_mode", "expected minimize or fixed");
  need(cfg.eta_mode == "minimize" || (cfg.eta >= 0 && cfg.eta < cfg.gamma), "eta", "fixed eta must satisfy 0 <= eta < gamma");
  need(cfg.c >= 0, "c", "must be >= 0");
  need(cfg.zeta1 > 0, "zeta1", "must be > 0");
  need(cfg.zeta2 > 0, "zeta2", "must be > 0");
  need(!cfg.horizon || *cfg.horizon >= 1, "horizon", "must be >= 1 or 'infinite'");
  need(cfg.horizon || cfg.c == 0, "horizon", "an infinite horizon requires c = 0");
  need(cfg.barrier_degree >= 2 && cfg.barrier_degree % 2 == 0, "barrier_degree", "must be even and >= 2");
  need(cfg.multiplier_degree >= 0 && cfg.multiplier_degree % 2 == 0, "multiplier_degree", "must be even and >= 0");
  need(cfg.solver_tol > 0 && cfg.solver_tol <= 1e-2, "solver.tol", "must lie in (0, 1e-2]");
  need(cfg.solver_max_iters >= 1, "solver.max_iters", "must be >= 1");
  need(cfg.gp_n_train >= 1, "gp.n_train", "must be >= 1");
  need(cfg.gp_regularizer >= 0, "gp.regularizer", "must be >= 0");
  need(cfg.gp_max_rounds >= 0, "gp.max_rounds", "must be >= 0");
  need(cfg.gp_max_train >= 1, "gp.max_train", "must be >= 1");
  need(cfg.grid_validation >= 2, "grid.validation", "must be >= 2");
  need(cfg.grid_envelope >= 2, "grid.envelope", "must be >= 2");
  need(cfg.mc_runs >= 100, "mc.runs", "must be >= 100");
  need(cfg.workers >= 1, "workers", "must be >= 1");
  need(cfg.data_csv.empty() == cfg.data_meta.empty(), "data.meta", "data.csv and data.meta must be given together");
}

inline void validate_config(const RunConfig& cfg) { validate_config(cfg, detail::ConfigReader({}, "config")); }

/// Reads a config file body. The profile (from `profile_override`, else the
/// file's `profile` key, else "desk") supplies defaults; file keys override.
inline RunConfig parse_config(std::istream& in, const std::string& what = "config",
                              const std::optional<std::string>& profile_override = std::nullopt) {
  const detail::ConfigReader r(detail::read_config_lines(in, what), what);
  std::string profile = "desk";
  r.read("profile", profile);
  if (profile_override) profile = *profile_override;
  RunConfig cfg;
  try {
    cfg = profile_defaults(profile);
  } catch (const std::invalid_argument& e) {
    r.fail("profile", e.what());
  }

  static const std::vector<std::string> known = {
      "profile", "system", "angle_unit", "lk.tau", "lk.v", "lk.l_r", "lk.l_f", "lk.delta_f", "lk.noise_std",
      "lg.alpha", "lg.noise_std", "X.lower", "X.upper", "X0.lower", "X0.upper", "kx.a", "kx.b", "kx.d",
      "kplus.sigma_f_sq", "kplus.sigma_l_sq", "n_samples", "lambda", "epsilon", "rho", "b_bar", "gamma", "eta_mode",
      "eta", "c", "zeta1", "zeta2", "horizon", "barrier_degree", "multiplier_degree", "seed", "solver.tol",
      "solver.max_iters", "gp.n_train", "gp.regularizer", "gp.max_rounds", "gp.max_train", "grid.validation",
      "grid.envelope", "mc.runs", "workers", "require_envelope", "out_dir", "data.csv", "data.meta"};
  std::map<int, std::pair<Eigen::VectorXd, Eigen::VectorXd>> unsafe;
  for (const auto& [key, entry] : r.entries()) {
    int index = 0;
    std::string field;
    if (detail::is_unsafe_key(key, index, field)) {
      Eigen::VectorXd v;
      r.read(key, v);
      (field == "lower" ? unsafe[index].first : unsafe[index].second) = v;
      continue;
    }
    if (std::find(known.begin(), known.end(), key) == known.end()) r.fail(key, "unknown key");
  }

  r.read("system", cfg.system);
  r.read("angle_unit", cfg.angle_unit);
  r.read("lk.tau", cfg.lk_tau);
  r.read("lk.v", cfg.lk_v);
  r.read("lk.l_r", cfg.lk_l_r);
  r.read("lk.l_f", cfg.lk_l_f);
  r.read("lk.delta_f", cfg.lk_delta_f);
  r.read("lk.noise_std", cfg.lk_noise_std);
  r.read("lg.alpha", cfg.lg_alpha);
  r.read("lg.noise_std", cfg.lg_noise_std);
  r.read("X.lower", cfg.domain.lower);
  r.read("X.upper", cfg.domain.upper);
  r.read("X0.lower", cfg.initial.lower);
  r.read("X0.upper", cfg.initial.upper);
  if (!unsafe.empty()) {
    cfg.unsafe.clear();
    int expected = 1;
    for (const auto& [index, bounds] : unsafe) {
      const std::string prefix = "unsafe." + std::to_string(index);
      if (index != expected) r.fail(prefix + ".lower", "unsafe boxes must be numbered 1, 2, ... without gaps");
      if (bounds.first.size() == 0) r.fail(prefix + ".upper", "missing " + prefix + ".lower");
      if (bounds.second.size() == 0) r.fail(prefix + ".lower", "missing " + prefix + ".upper");
      cfg.unsafe.push_back({bounds.first, bounds.second});
      ++expected;
    }
  }
  r.read("kx.a", cfg.kx.a);
  r.read("kx.b", cfg.kx.b);
  r.read("kx.d", cfg.kx.d);
  r.read("kplus.sigma_f_sq", cfg.k_plus.sigma_f_sq);
  r.read("kplus.sigma_l_sq", cfg.k_plus.sigma_l_sq);
  r.read("n_samples", cfg.n_samples);
  r.read("lambda", cfg.lambda);
  r.read("epsilon", cfg.epsilon);
  r.read("rho", cfg.rho);
  r.read("b_bar", cfg.b_bar);
  r.read("gamma", cfg.gamma);
  r.read("eta_mode", cfg.eta_mode);
  r.read("eta", cfg.eta);
  r.read("c", cfg.c);
  r.read("zeta1", cfg.zeta1);
  r.read("zeta2", cfg.zeta2);
  if (r.has("horizon")) {
    std::string h;
    r.read("horizon", h);
    if (h == "infinite") {
      cfg.horizon.reset();
    } else {
      int v = 0;
      r.read("horizon", v);
      cfg.horizon = v;
    }
  }
  r.read("barrier_degree", cfg.barrier_degree);
  r.read("multiplier_degree", cfg.multiplier_degree);
  r.read("seed", cfg.seed);
  r.read("solver.tol", cfg.solver_tol);
  r.read("solver.max_iters", cfg.solver_max_iters);
  r.read("gp.n_train", cfg.gp_n_train);
  r.read("gp.regularizer", cfg.gp_regularizer);
  r.read("gp.max_rounds", cfg.gp_max_rounds);
  r.read("gp.max_train", cfg.gp_max_train);
  r.read("grid.validation", cfg.grid_validation);
  r.read("grid.envelope", cfg.grid_envelope);
  r.read("mc.runs", cfg.mc_runs);
  r.read("workers", cfg.workers);
  r.read("require_envelope", cfg.require_envelope);
  r.read("out_dir", cfg.out_dir);
  r.read("data.csv", cfg.data_csv);
  r.read("data.meta", cfg.data_meta);
  validate_config(cfg, r);
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text, const std::string& what = "config") {
  std::istringstream in(text);
  return parse_config(in, what);
}

inline RunConfig load_config(const std::string& path, const std::optional<std::string>& profile_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in, path, profile_override);
}

}  // namespace ddbc
