// Command-line front end: data generation, certification, validation,
// epsilon sweeps, plot data and trajectory simulation.
//
// Exit codes: 0 success, 1 unexpected error, 2 config, 3 data, 4 embedding,
// 5 synthesis (SOS/SDP), 6 extraction, 7 envelope, 8 validation, 9 parse.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddbc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ddbc;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::string> profile;
};

RunConfig resolve_config(const GlobalOptions& g) {
  return run_stage(Stage::config, [&] {
    RunConfig cfg = g.config_path.empty() ? profile_defaults(g.profile.value_or("desk")) : load_config(g.config_path, g.profile);
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    validate_config(cfg);
    return cfg;
  });
}

std::string output_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_generate_data(const RunConfig& cfg) {
  const TransitionDataset data = obtain_dataset(cfg);
  const std::string csv = output_path(cfg, "data.csv");
  const std::string meta = output_path(cfg, "data.meta");
  run_stage(Stage::data, [&] {
    write_dataset(data, csv, meta);
    return 0;
  });
  std::cout << "wrote " << data.size() << " transitions to " << csv << " (fingerprint " << dataset_fingerprint(data) << ")\n";
  return 0;
}

int cmd_certify(const RunConfig& cfg) {
  const TransitionDataset data = obtain_dataset(cfg);
  const EmpiricalCme cme = fit_embedding(cfg, data);
  const CertifyOutcome out = certify(cfg, data, cme);
  const std::string path = output_path(cfg, "certificate.txt");
  write_certificate(out.document, path);
  std::cout << summary_text(out) << "certificate: " << path << '\n';
  require_passed(out);
  return 0;
}

int cmd_validate(const RunConfig& cfg, const std::string& certificate_path) {
  const CertificateDocument doc = run_stage(Stage::parse, [&] { return read_certificate(certificate_path); });
  const TransitionDataset data = obtain_dataset(cfg);
  if (dataset_fingerprint(data) != doc.certificate.context.dataset_fingerprint) {
    throw StageError(Stage::data, "dataset fingerprint " + dataset_fingerprint(data) + " does not match the certificate's " +
                                      doc.certificate.context.dataset_fingerprint + "; check seed and n_samples");
  }
  const EmpiricalCme cme = fit_embedding(cfg, data);
  const BarrierSets sets = barrier_sets(cfg);
  const ValidationReport rep = validate_certificate(doc.certificate, sets.domain, sets.initial, sets.unsafe, cme, cfg.grid_validation);
  for (const auto* chk : {&rep.initial, &rep.unsafe, &rep.martingale}) {
    std::cout << "check " << chk->name << ": " << (chk->holds(1e-6) ? "holds" : "VIOLATED")
              << " margin=" << format_g17(chk->margin) << " worst_value=" << format_g17(chk->worst_value)
              << " at (" << vector_to_list(chk->worst_point) << ")\n";
  }
  const int horizon = doc.horizon.value_or(cfg.horizon.value_or(10));
  const MonteCarloResult mc = monte_carlo_safety(cfg.make_system(), cfg.initial, sets.unsafe, horizon, cfg.mc_runs, cfg.seed);
  std::cout << "monte-carlo: " << mc.n_safe << "/" << mc.n_runs << " safe, p=" << format_g17(mc.probability)
            << ", 99% interval [" << format_g17(mc.lower) << ", " << format_g17(mc.upper) << "]"
            << ", certified p_psi=" << format_g17(doc.p_psi) << '\n';
  if (!rep.all_hold(1e-6)) throw StageError(Stage::validation, "barrier conditions violated on the validation grid");
  if (mc.lower < doc.p_psi - 0.01) {
    throw StageError(Stage::validation, "Monte-Carlo lower confidence limit falls below the certified bound");
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::vector<double>& epsilons, int repeats) {
  const auto rows = sweep_epsilon(cfg, epsilons, repeats);
  const std::string path = output_path(cfg, "sweep.csv");
  write_text(path, sweep_csv(rows, cfg.seed));
  for (const auto& r : rows) std::cout << "epsilon=" << format_g17(r.epsilon) << " mean p_psi=" << format_g17(r.mean()) << '\n';
  std::cout << "sweep: " << path << '\n';
  return 0;
}

int cmd_plot_data(const RunConfig& cfg, const std::string& certificate_path, const std::string& sweep_path, int resolution) {
  if (certificate_path.empty() == sweep_path.empty()) {
    throw StageError(Stage::config, "plot-data needs exactly one of --certificate or --sweep");
  }
  if (!certificate_path.empty()) {
    const CertificateDocument doc = run_stage(Stage::parse, [&] { return read_certificate(certificate_path); });
    const std::string path = output_path(cfg, "barrier_slice.csv");
    write_text(path, barrier_slice_csv(doc.certificate, cfg.domain, resolution));
    std::cout << "barrier slice: " << path << '\n';
    return 0;
  }
  const auto rows = run_stage(Stage::parse, [&] {
    std::ifstream in(sweep_path);
    if (!in) throw ParseError("cannot open sweep " + sweep_path);
    return parse_sweep_csv(in, sweep_path);
  });
  const std::string path = output_path(cfg, "sweep_plot.csv");
  write_text(path, sweep_plot_csv(rows));
  std::cout << "sweep plot data: " << path << '\n';
  return 0;
}

int cmd_simulate(const RunConfig& cfg, int runs) {
  const std::string path = output_path(cfg, "trajectories.csv");
  write_text(path, simulate_csv(cfg, runs));
  std::cout << "trajectories: " << path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven barrier certificates for stochastic systems"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "Run configuration (key=value)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--profile", g.profile, "Default profile")->check(CLI::IsMember({"desk", "paper"}));

  auto* gen = app.add_subcommand("generate-data", "Sample transitions and write CSV + metadata");
  auto* cert = app.add_subcommand("certify", "Synthesize, approximate and validate a barrier certificate");
  auto* val = app.add_subcommand("validate", "Falsify a certificate on grids and by Monte-Carlo simulation");
  std::string certificate_path;
  val->add_option("--certificate", certificate_path, "Certificate file")->required();
  auto* sweep = app.add_subcommand("sweep-epsilon", "Certify across ambiguity radii");
  std::vector<double> epsilons{0.0, 0.5, 1.0, 2.0};
  int repeats = 1;
  sweep->add_option("--epsilons", epsilons, "Radii")->delimiter(',');
  sweep->add_option("--repeats", repeats, "Seeds per radius")->check(CLI::PositiveNumber);
  auto* plot = app.add_subcommand("plot-data", "Emit plot-ready CSV from a certificate or a sweep");
  std::string plot_cert;
  std::string plot_sweep;
  int resolution = 100;
  plot->add_option("--certificate", plot_cert, "Certificate file");
  plot->add_option("--sweep", plot_sweep, "Sweep CSV");
  plot->add_option("--resolution", resolution, "Grid points per axis")->check(CLI::Range(2, 10000));
  auto* sim = app.add_subcommand("simulate", "Write sample trajectories from X0");
  int runs = 10;
  sim->add_option("--runs", runs, "Number of trajectories")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(Stage::config);
  }

  try {
    const RunConfig cfg = resolve_config(g);
    if (*gen) return cmd_generate_data(cfg);
    if (*cert) return cmd_certify(cfg);
    if (*val) return cmd_validate(cfg, certificate_path);
    if (*sweep) return cmd_sweep(cfg, epsilons, repeats);
    if (*plot) return cmd_plot_data(cfg, plot_cert, plot_sweep, resolution);
    if (*sim) return cmd_simulate(cfg, runs);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.stage());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
