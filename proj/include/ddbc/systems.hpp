#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ddbc/box.hpp"
#include "ddbc/errors.hpp"
#include "ddbc/rng.hpp"

namespace ddbc {

/// Single-track lane-keeping vehicle with additive Gaussian noise.
/// State (x, y, phi): longitudinal position, lateral position, heading.
struct LaneKeepingParams {
  double tau = 0.1;
  double v = 5.0;
  double l_r = 1.384;
  double l_f = 1.384;
  double delta_f = 5.0 * M_PI / 180.0;  // radians
  std::array<double, 3> noise_std{0.01, 0.01, 0.001};

  void validate() const {
    if (!(tau >= 0) || !(v > 0) || !(l_r > 0) || !(l_f > 0)) {
      throw std::invalid_argument("lane keeping: require tau >= 0, v > 0, l_r > 0, l_f > 0");
    }
    for (double s : noise_std)
      if (!(s >= 0)) throw std::invalid_argument("lane keeping: noise standard deviations must be >= 0");
  }

  /// Slip angle l_r / (l_r + l_f) * atan(delta_f), delta_f taken in radians.
  [[nodiscard]] double slip_angle() const { return l_r / (l_r + l_f) * std::atan(delta_f); }
};

/// x+ = alpha x + w, w ~ N(0, noise_std^2). One-dimensional.
struct LinearGaussianParams {
  double alpha = 0.8;
  double noise_std = 0.1;
};

using System = std::variant<LaneKeepingParams, LinearGaussianParams>;

inline std::string system_tag(const System& s) {
  return std::holds_alternative<LaneKeepingParams>(s) ? "lane_keeping" : "linear_gaussian";
}

inline int state_dim(const System& s) { return std::holds_alternative<LaneKeepingParams>(s) ? 3 : 1; }

/// Noise-free part of the lane-keeping map.
inline Eigen::Vector3d lane_keeping_mean(const LaneKeepingParams& p, const Eigen::Vector3d& x) {
  const double psi = p.slip_angle();
  return x + Eigen::Vector3d(p.tau * p.v * std::cos(x(2) + psi), p.tau * p.v * std::sin(x(2) + psi),
                             p.tau * (p.v / p.l_r) * std::sin(psi));
}

inline Eigen::Vector3d lane_keeping_step(const LaneKeepingParams& p, const Eigen::Vector3d& x, RandomStream& rng) {
  Eigen::Vector3d next = lane_keeping_mean(p, x);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < 3; ++k) next(k) += p.noise_std[static_cast<std::size_t>(k)] * normal(rng);
  return next;
}

inline Eigen::VectorXd linear_gaussian_step(double alpha, double noise_std, const Eigen::VectorXd& x, RandomStream& rng) {
  require_same_dim(x.size(), 1, "linear_gaussian_step");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd next(1);
  next(0) = alpha * x(0) + noise_std * normal(rng);
  return next;
}

inline Eigen::VectorXd step(const System& system, const Eigen::VectorXd& x, RandomStream& rng) {
  require_same_dim(x.size(), state_dim(system), "step");
  if (const auto* lk = std::get_if<LaneKeepingParams>(&system)) {
    return lane_keeping_step(*lk, Eigen::Vector3d(x), rng);
  }
  const auto& lg = std::get<LinearGaussianParams>(system);
  return linear_gaussian_step(lg.alpha, lg.noise_std, x, rng);
}

/// T+1 visited states as rows, starting with x0.
inline Eigen::MatrixXd simulate_trajectory(const System& system, const Eigen::VectorXd& x0, int horizon, RandomStream& rng) {
  if (horizon < 0) throw std::invalid_argument("simulate_trajectory: horizon must be >= 0");
  Eigen::MatrixXd traj(horizon + 1, x0.size());
  traj.row(0) = x0.transpose();
  Eigen::VectorXd x = x0;
  for (int t = 1; t <= horizon; ++t) {
    x = step(system, x, rng);
    traj.row(t) = x.transpose();
  }
  return traj;
}

inline Eigen::VectorXd sample_uniform(const StateBox& box, RandomStream& rng) {
  Eigen::VectorXd x(box.dim());
  for (int k = 0; k < box.dim(); ++k) x(k) = box.lower(k) + (box.upper(k) - box.lower(k)) * rng.uniform();
  return x;
}

/// Paired samples (X, X+); row i of `successors` is one draw from the
/// transition kernel at row i of `states`. Successors are not clamped to the box.
struct TransitionDataset {
  Eigen::MatrixXd states;
  Eigen::MatrixXd successors;
  std::uint64_t seed = 0;
  std::string system_tag;
  StateBox box;

  [[nodiscard]] Eigen::Index size() const { return states.rows(); }
  [[nodiscard]] int dim() const { return static_cast<int>(states.cols()); }
};

/// States are i.i.d. uniform on `box`. Sample i draws its state and its noise
/// from streams split off the root seed by index, so sample i is the same for
/// every n >= i + 1.
inline TransitionDataset sample_transitions(const System& system, const StateBox& box, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_transitions: N must be >= 1");
  require_same_dim(box.dim(), state_dim(system), "sample_transitions");
  const RandomStream root(seed);
  TransitionDataset data;
  data.states.resize(n, box.dim());
  data.successors.resize(n, box.dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    RandomStream state_rng = root.split("state", static_cast<std::uint64_t>(i));
    RandomStream noise_rng = root.split("noise", static_cast<std::uint64_t>(i));
    const Eigen::VectorXd x = sample_uniform(box, state_rng);
    data.states.row(i) = x.transpose();
    data.successors.row(i) = step(system, x, noise_rng).transpose();
  }
  data.seed = seed;
  data.system_tag = system_tag(system);
  data.box = box;
  return data;
}

// ---------------------------------------------------------------------------
// Serialization: CSV `x1..xn,xp1..xpn` with 17 significant digits, plus a
// key=value sidecar holding seed, system tag, and box bounds.

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string dataset_csv(const TransitionDataset& data) {
  std::ostringstream out;
  const int n = data.dim();
  for (int k = 1; k <= n; ++k) out << (k > 1 ? "," : "") << 'x' << k;
  for (int k = 1; k <= n; ++k) out << ",xp" << k;
  out << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (int k = 0; k < n; ++k) out << (k > 0 ? "," : "") << format_g17(data.states(i, k));
    for (int k = 0; k < n; ++k) out << ',' << format_g17(data.successors(i, k));
    out << '\n';
  }
  return out.str();
}

/// FNV-1a of the CSV serialization, as 16 hex digits.
inline std::string dataset_fingerprint(const TransitionDataset& data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash_tag(dataset_csv(data))));
  return buf;
}

inline std::string vector_to_list(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_g17(v(i));
  return s;
}

inline Eigen::VectorXd parse_list(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      vals.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ParseError("expected a number, got '" + item + "'");
    }
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

inline std::string dataset_metadata(const TransitionDataset& data) {
  std::ostringstream out;
  out << "seed=" << data.seed << '\n'
      << "system=" << data.system_tag << '\n'
      << "n_samples=" << data.size() << '\n'
      << "box_lower=" << vector_to_list(data.box.lower) << '\n'
      << "box_upper=" << vector_to_list(data.box.upper) << '\n';
  return out.str();
}

inline void write_dataset(const TransitionDataset& data, const std::string& csv_path, const std::string& meta_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  std::ofstream meta(meta_path, std::ios::binary);
  if (!csv || !meta) throw std::runtime_error("write_dataset: cannot open output files");
  csv << dataset_csv(data);
  meta << dataset_metadata(data);
}

inline std::map<std::string, std::string> read_key_values(std::istream& in, const std::string& what) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(what + ":" + std::to_string(lineno) + ": expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline TransitionDataset read_dataset(const std::string& csv_path, const std::string& meta_path) {
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw ParseError("cannot open dataset metadata " + meta_path);
  auto meta = read_key_values(meta_in, meta_path);
  for (const char* key : {"seed", "system", "box_lower", "box_upper"})
    if (!meta.count(key)) throw ParseError(meta_path + ": missing key '" + std::string(key) + "'");

  std::ifstream csv(csv_path);
  if (!csv) throw ParseError("cannot open dataset " + csv_path);
  std::string header;
  std::getline(csv, header);
  const auto cols = static_cast<int>(std::count(header.begin(), header.end(), ',') + 1);
  if (cols % 2 != 0) throw ParseError(csv_path + ":1: header must have 2n columns");
  const int n = cols / 2;
  std::vector<double> values;
  std::string line;
  Eigen::Index rows = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    Eigen::VectorXd row = parse_list(line);
    if (row.size() != cols) throw ParseError(csv_path + ":" + std::to_string(rows + 2) + ": wrong column count");
    values.insert(values.end(), row.data(), row.data() + row.size());
    ++rows;
  }
  TransitionDataset data;
  const Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> all(values.data(), rows, cols);
  data.states = all.leftCols(n);
  data.successors = all.rightCols(n);
  data.seed = std::stoull(meta["seed"]);
  data.system_tag = meta["system"];
  data.box = StateBox(parse_list(meta["box_lower"]), parse_list(meta["box_upper"]));
  return data;
}

}  // namespace ddbc
