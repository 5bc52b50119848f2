#include "cogmask/cli.hpp"

#include "cogmask/errors.hpp"
#include "cogmask/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace cogmask::cli {

namespace {

struct Flags {
  std::string config;
  std::string in;
  std::string out;
  std::string result;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::string mode;
  bool strict = false;
  int points = 21;
  double lambda_cap = kDefaultLambdaCap;
  double tol = 1e-12;
  int max_iter = 100000;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

io::Json config_json(const Flags& f) { return f.config.empty() ? io::Json::object() : io::read_json_file(f.config); }

ExperimentConfig experiment_config(const Flags& f) {
  io::Json j = config_json(f);
  if (f.seed) j["seed"] = *f.seed;
  if (!f.mode.empty()) j["margin_mode"] = f.mode;
  return io::experiment_config_from_json(j);
}

// Writes to --out when given, otherwise to stdout.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty())
    out << text;
  else
    io::write_text_file(path, text);
}

std::string dataset_csv(const ProbeResponseDataset& d) {
  std::ostringstream ss;
  io::write_dataset_csv(ss, d);
  return ss.str();
}

int gen_probes(const Flags& f, std::ostream& out) {
  std::ostringstream ss;
  io::write_probes_csv(ss, generate_probes(experiment_config(f)));
  emit(f.out, ss.str(), out);
  return kOk;
}

int respond(const Flags& f, std::ostream& out) {
  const auto probes = io::load_probes(f.in);
  const io::Json j = config_json(f);
  const UtilityModel model =
      j.contains("utility") ? io::utility_from_json(j.at("utility")) : UtilityModel::linear(Vector::Ones(probes.front().size()));
  std::vector<Vector> responses;
  for (const auto& a : probes) responses.push_back(naive_response(model, a).beta);
  emit(f.out, dataset_csv({probes, std::move(responses)}), out);
  return kOk;
}

int mask(const Flags& f, std::ostream& out) {
  const auto probes = io::load_probes(f.in);
  io::Json j = config_json(f);
  if (f.epsilon) j["epsilon"] = *f.epsilon;
  if (!j.contains("epsilon")) throw UsageError("mask needs --epsilon or an 'epsilon' entry in the config");
  if (!f.mode.empty()) j["margin_mode"] = f.mode;
  const UtilityModel model =
      j.contains("utility") ? io::utility_from_json(j.at("utility")) : UtilityModel::linear(Vector::Ones(probes.front().size()));
  const MaskingResult result = mask_responses(model, probes, io::masking_config_from_json(j));

  std::vector<Vector> emitted = result.masked_responses;
  for (auto& b : emitted) b = b.cwiseMax(0.0);
  if (!f.out.empty()) io::write_text_file(f.out, dataset_csv({probes, std::move(emitted)}));
  emit(f.result, io::to_json(result).dump(2) + "\n", out);
  return (f.strict && !result.converged) ? kSolver : kOk;
}

int test(const Flags& f, std::ostream& out) {
  const RationalityVerdict verdict = check_garp(io::load_dataset(f.in));
  emit(f.out, io::to_json(verdict).dump(2) + "\n", out);
  return verdict.passes ? kOk : kTestFailed;
}

int reconstruct(const Flags& f, std::ostream& out) {
  const ProbeResponseDataset data = io::load_dataset(f.in);
  const auto cert = afriat_feasibility(data);
  if (!cert) throw ContractError("dataset fails the rationality test; nothing to reconstruct");
  const ReconstructedUtility u = construct_utility(*cert, data);

  const Eigen::Index m = data.dimension();
  if (f.points < 2) throw InputError("--points must be >= 2");
  const double total = std::pow(static_cast<double>(f.points), static_cast<double>(m));
  if (total > 1e6) throw InputError("sampling grid too large (points^m > 1e6)");
  double top = 0.0;
  for (const auto& b : data.responses()) top = std::max(top, b.maxCoeff());
  top = top > 0.0 ? 1.25 * top : 1.0;

  std::ostringstream ss;
  for (Eigen::Index i = 1; i <= m; ++i) ss << "beta_" << i << ',';
  ss << "utility\n";
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  Vector beta(m);
  for (long n = 0; n < static_cast<long>(total); ++n) {
    for (Eigen::Index i = 0; i < m; ++i) beta(i) = top * idx[static_cast<std::size_t>(i)] / (f.points - 1);
    for (Eigen::Index i = 0; i < m; ++i) ss << io::format_double(beta(i)) << ',';
    ss << io::format_double(u(beta)) << '\n';
    for (std::size_t i = 0; i < idx.size() && ++idx[i] == f.points; ++i) idx[i] = 0;
  }
  if (!f.out.empty()) io::write_text_file(f.out, ss.str());
  out << io::to_json(*cert).dump(2) << '\n';
  return kOk;
}

int margin(const Flags& f, std::ostream& out) {
  out << io::format_double(max_margin(io::load_dataset(f.in), f.lambda_cap)) << '\n';
  return kOk;
}

int are(const Flags& f, std::ostream& out) {
  StateSpaceModel model;
  CovariancePair cov;
  io::are_problem_from_json(io::read_json_file(f.in), model, cov);
  const AreSolution s = solve_are(model, cov, f.tol, f.max_iter);
  emit(f.out, io::to_json(s).dump(2) + "\n", out);
  return kOk;
}

int sweep(const Flags& f, std::ostream& out) {
  const SweepResult r = run_epsilon_sweep(experiment_config(f));
  std::ostringstream ss;
  io::write_sweep_csv(ss, r.rows);
  emit(f.out, ss.str(), out);
  if (!f.result.empty()) {
    const io::Json provenance = {{"config", io::to_json(r.config)},
                                 {"naive_top_margin", r.naive_top_margin},
                                 {"naive_max_margin", r.naive_max_margin}};
    io::write_text_file(f.result, provenance.dump(2) + "\n");
  }
  if (f.strict)
    for (const auto& row : r.rows)
      if (!row.converged) return kSolver;
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cognition masking: revealed-preference tests, masking and tracking diagnostics", "cogmask"};
  app.require_subcommand(1);
  Flags f;

  auto* c_gen = app.add_subcommand("gen-probes", "Draw seeded random probes (CSV)");
  c_gen->add_option("--config", f.config, "Experiment config JSON");
  c_gen->add_option("--seed", f.seed, "Override the config seed");
  c_gen->add_option("--out", f.out, "Output CSV (default stdout)");

  auto* c_respond = app.add_subcommand("respond", "Naive utility-maximizing responses to probes (dataset CSV)");
  c_respond->add_option("--in", f.in, "Probe or dataset CSV")->required();
  c_respond->add_option("--config", f.config, "JSON with a 'utility' entry");
  c_respond->add_option("--out", f.out, "Output dataset CSV (default stdout)");

  auto* c_mask = app.add_subcommand("mask", "Minimum-perturbation masking of the naive responses");
  c_mask->add_option("--in", f.in, "Probe or dataset CSV")->required();
  c_mask->add_option("--config", f.config, "JSON with 'utility' and masking settings");
  c_mask->add_option("--epsilon", f.epsilon, "Masking extent (overrides config)");
  c_mask->add_option("--mode", f.mode, "multiplier | multiplier_raw | concavity_slack | literal_gradient");
  c_mask->add_option("--out", f.out, "Masked dataset CSV");
  c_mask->add_option("--result", f.result, "MaskingResult JSON (default stdout)");
  c_mask->add_flag("--strict", f.strict, "Exit 4 if the solver did not converge");

  auto* c_test = app.add_subcommand("test", "GARP / Afriat rationality test (exit 3 on failure)");
  c_test->add_option("--in", f.in, "Dataset CSV")->required();
  c_test->add_option("--out", f.out, "Verdict JSON (default stdout)");

  auto* c_rec = app.add_subcommand("reconstruct", "Afriat certificate and sampled reconstructed utility");
  c_rec->add_option("--in", f.in, "Dataset CSV")->required();
  c_rec->add_option("--out", f.out, "Utility samples CSV");
  c_rec->add_option("--points", f.points, "Grid points per axis");

  auto* c_margin = app.add_subcommand("margin", "Print the max-margin of a dataset");
  c_margin->add_option("--in", f.in, "Dataset CSV")->required();
  c_margin->add_option("--lambda-cap", f.lambda_cap, "Upper bound on the multipliers");

  auto* c_are = app.add_subcommand("are", "Steady-state Riccati solution for a model JSON");
  c_are->add_option("--in", f.in, "Model JSON")->required();
  c_are->add_option("--out", f.out, "AreSolution JSON (default stdout)");
  c_are->add_option("--tol", f.tol, "Fixed-point tolerance");
  c_are->add_option("--max-iter", f.max_iter, "Iteration limit");

  auto* c_sweep = app.add_subcommand("sweep", "Epsilon sweep (CSV)");
  c_sweep->add_option("--config", f.config, "Experiment config JSON");
  c_sweep->add_option("--seed", f.seed, "Override the config seed");
  c_sweep->add_option("--mode", f.mode, "Override the margin mode");
  c_sweep->add_option("--out", f.out, "Sweep CSV (default stdout)");
  c_sweep->add_option("--result", f.result, "Provenance JSON (config snapshot, grid, seed)");
  c_sweep->add_flag("--strict", f.strict, "Exit 4 if any row did not converge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_gen->parsed()) return gen_probes(f, out);
    if (c_respond->parsed()) return respond(f, out);
    if (c_mask->parsed()) return mask(f, out);
    if (c_test->parsed()) return test(f, out);
    if (c_rec->parsed()) return reconstruct(f, out);
    if (c_margin->parsed()) return margin(f, out);
    if (c_are->parsed()) return are(f, out);
    if (c_sweep->parsed()) return sweep(f, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    // InputError, ParseError, ContractError, JSON type errors
    err << "error: " << e.what() << '\n';
    return kInput;
  }
  return kUsage;
}

int run(int argc, char** argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace cogmask::cli
