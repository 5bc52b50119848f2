#include "cogmask/io.hpp"

#include "cogmask/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace cogmask::io {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, std::size_t row, std::size_t col) {
  if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) throw ParseError("'" + text + "' is not a number", row, col);
  return v;
}

bool parse_bool(const std::string& text, std::size_t row, std::size_t col) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ParseError("'" + text + "' is not a boolean", row, col);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " columns, found " + std::to_string(cells.size()),
                       row, std::min(cells.size(), t.header.size()) + 1);
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError("empty file", 1, 0);
  return t;
}

// Column layout t, alpha_1..alpha_m[, beta_1..beta_m].
Eigen::Index probe_columns(const std::vector<std::string>& header) {
  if (header.empty() || header[0] != "t") throw ParseError("first column must be 't'", 1, 1);
  Eigen::Index m = 0;
  while (static_cast<std::size_t>(m) + 1 < header.size() && header[static_cast<std::size_t>(m) + 1] == "alpha_" + std::to_string(m + 1)) ++m;
  if (m == 0) throw ParseError("expected column 'alpha_1'", 1, 2);
  return m;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "' for reading");
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  return f;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError(std::string(what) + " must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InputError(std::string(what) + " must be a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = vector_from_json(j[r], what);
    if (static_cast<std::size_t>(row.size()) != cols) throw InputError(std::string(what) + " has ragged rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

template <class T>
void read_if(const Json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_dataset_csv(std::ostream& out, const ProbeResponseDataset& dataset) {
  const Eigen::Index m = dataset.dimension();
  out << 't';
  for (Eigen::Index i = 1; i <= m; ++i) out << ",alpha_" << i;
  for (Eigen::Index i = 1; i <= m; ++i) out << ",beta_" << i;
  out << '\n';
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    out << t + 1;
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double(dataset.probe(t)(i));
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double(dataset.response(t)(i));
    out << '\n';
  }
}

ProbeResponseDataset read_dataset_csv(std::istream& in) {
  const Table table = read_table(in);
  const Eigen::Index m = probe_columns(table.header);
  if (table.header.size() != static_cast<std::size_t>(2 * m + 1)) {
    throw ParseError("expected " + std::to_string(2 * m + 1) + " columns (t, alpha_*, beta_*)", 1, 0);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (table.header[static_cast<std::size_t>(m + 1 + i)] != "beta_" + std::to_string(i + 1)) {
      throw ParseError("expected column 'beta_" + std::to_string(i + 1) + "'", 1, static_cast<std::size_t>(m + 2 + i));
    }
  }
  if (table.rows.empty()) throw ParseError("no observations", 2, 0);
  std::vector<Vector> probes, responses;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::size_t row = r + 2;
    Vector a(m), b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto ca = static_cast<std::size_t>(i + 1), cb = static_cast<std::size_t>(m + 1 + i);
      a(i) = parse_double(cells[ca], row, ca + 1);
      if (!(a(i) > 0.0) || !std::isfinite(a(i))) throw ParseError("probe entries must be finite and > 0", row, ca + 1);
      b(i) = parse_double(cells[cb], row, cb + 1);
      if (!(b(i) >= 0.0) || !std::isfinite(b(i))) throw ParseError("response entries must be finite and >= 0", row, cb + 1);
    }
    probes.push_back(std::move(a));
    responses.push_back(std::move(b));
  }
  return {std::move(probes), std::move(responses)};
}

void save_dataset(const ProbeResponseDataset& dataset, const std::string& path) {
  auto f = open_out(path);
  write_dataset_csv(f, dataset);
}

ProbeResponseDataset load_dataset(const std::string& path) {
  auto f = open_in(path);
  return read_dataset_csv(f);
}

void write_probes_csv(std::ostream& out, const std::vector<Vector>& probes) {
  validate_probes(probes);
  const Eigen::Index m = probes.front().size();
  out << 't';
  for (Eigen::Index i = 1; i <= m; ++i) out << ",alpha_" << i;
  out << '\n';
  for (std::size_t t = 0; t < probes.size(); ++t) {
    out << t + 1;
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double(probes[t](i));
    out << '\n';
  }
}

std::vector<Vector> read_probes_csv(std::istream& in) {
  const Table table = read_table(in);
  const Eigen::Index m = probe_columns(table.header);
  if (table.rows.empty()) throw ParseError("no observations", 2, 0);
  std::vector<Vector> probes;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Vector a(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto c = static_cast<std::size_t>(i + 1);
      a(i) = parse_double(table.rows[r][c], r + 2, c + 1);
      if (!(a(i) > 0.0) || !std::isfinite(a(i))) throw ParseError("probe entries must be finite and > 0", r + 2, c + 1);
    }
    probes.push_back(std::move(a));
  }
  return probes;
}

void save_probes(const std::vector<Vector>& probes, const std::string& path) {
  auto f = open_out(path);
  write_probes_csv(f, probes);
}

std::vector<Vector> load_probes(const std::string& path) {
  auto f = open_in(path);
  return read_probes_csv(f);
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "epsilon,loss,max_margin_after,afriat_pass_after,converged\n";
  for (const auto& r : rows) {
    out << format_double(r.epsilon) << ',' << format_double(r.loss) << ',' << format_double(r.max_margin_after) << ','
        << (r.afriat_pass_after ? 1 : 0) << ',' << (r.converged ? 1 : 0) << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  const Table table = read_table(in);
  const std::vector<std::string> expected{"epsilon", "loss", "max_margin_after", "afriat_pass_after", "converged"};
  for (std::size_t c = 0; c < expected.size(); ++c) {
    if (c >= table.header.size() || table.header[c] != expected[c]) {
      throw ParseError("expected column '" + expected[c] + "'", 1, c + 1);
    }
  }
  if (table.header.size() != expected.size()) throw ParseError("unexpected extra columns", 1, expected.size() + 1);
  std::vector<SweepRow> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& c = table.rows[r];
    const std::size_t row = r + 2;
    rows.push_back({parse_double(c[0], row, 1), parse_double(c[1], row, 2), parse_double(c[2], row, 3),
                    parse_bool(c[3], row, 4), parse_bool(c[4], row, 5)});
  }
  return rows;
}

Json to_json(const UtilityModel& model) {
  if (model.kind() == UtilityKind::Custom) throw InputError("custom utility models cannot be serialized");
  return {{"kind", model.name()}, {"weights", vector_json(model.weights())}};
}

UtilityModel utility_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind")) throw InputError("utility must be an object with a 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  if (!j.contains("weights")) throw InputError("utility needs 'weights'");
  Vector w = vector_from_json(j.at("weights"), "utility weights");
  if (kind == "linear") return UtilityModel::linear(std::move(w));
  if (kind == "quadratic") return UtilityModel::quadratic(std::move(w));
  throw InputError("unknown utility kind '" + kind + "' (expected linear or quadratic)");
}

Json to_json(const SolverOptions& o) {
  return {{"max_outer_iterations", o.max_outer_iterations},
          {"max_inner_iterations", o.max_inner_iterations},
          {"step_size", o.step_size},
          {"penalty_growth", o.penalty_growth},
          {"initial_penalty", o.initial_penalty},
          {"tolerance", o.tolerance}};
}

SolverOptions solver_options_from_json(const Json& j) {
  SolverOptions o;
  if (!j.is_object()) throw InputError("solver must be an object");
  read_if(j, "max_outer_iterations", o.max_outer_iterations);
  read_if(j, "max_inner_iterations", o.max_inner_iterations);
  read_if(j, "step_size", o.step_size);
  read_if(j, "penalty_growth", o.penalty_growth);
  read_if(j, "initial_penalty", o.initial_penalty);
  read_if(j, "tolerance", o.tolerance);
  o.validate();
  return o;
}

Json to_json(const MaskingConfig& c) {
  return {{"epsilon", c.epsilon},
          {"margin_mode", to_string(c.margin_mode)},
          {"enforce_budget", c.enforce_budget},
          {"solver", to_json(c.solver)}};
}

MaskingConfig masking_config_from_json(const Json& j) {
  MaskingConfig c;
  if (!j.is_object()) throw InputError("masking config must be an object");
  read_if(j, "epsilon", c.epsilon);
  if (j.contains("margin_mode")) c.margin_mode = margin_mode_from_string(j.at("margin_mode").get<std::string>());
  read_if(j, "enforce_budget", c.enforce_budget);
  if (j.contains("solver")) c.solver = solver_options_from_json(j.at("solver"));
  c.validate();
  return c;
}

Json to_json(const MaskingResult& r) {
  Json eta = Json::array(), masked = Json::array(), naive = Json::array();
  for (const auto& e : r.eta) eta.push_back(vector_json(e));
  for (const auto& b : r.masked_responses) masked.push_back(vector_json(b));
  for (const auto& b : r.naive_responses) naive.push_back(vector_json(b));
  return {{"eta", eta},
          {"masked_responses", masked},
          {"naive_responses", naive},
          {"loss", r.loss},
          {"margins", matrix_json(r.margins)},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"max_violation", r.max_violation},
          {"method", r.method}};
}

MaskingResult masking_result_from_json(const Json& j) {
  MaskingResult r;
  for (const auto& e : j.at("eta")) r.eta.push_back(vector_from_json(e, "eta"));
  for (const auto& b : j.at("masked_responses")) r.masked_responses.push_back(vector_from_json(b, "masked_responses"));
  if (j.contains("naive_responses"))
    for (const auto& b : j.at("naive_responses")) r.naive_responses.push_back(vector_from_json(b, "naive_responses"));
  r.loss = j.at("loss").get<double>();
  r.margins = r.eta.empty() ? Matrix() : matrix_from_json(j.at("margins"), "margins");
  r.converged = j.at("converged").get<bool>();
  read_if(j, "iterations", r.iterations);
  read_if(j, "max_violation", r.max_violation);
  read_if(j, "method", r.method);
  return r;
}

Json to_json(const AfriatCertificate& c) { return {{"u", c.levels}, {"lambda", c.multipliers}}; }

Json to_json(const RationalityVerdict& v) {
  Json j = {{"passes", v.passes}};
  j["certificate"] = v.certificate ? to_json(*v.certificate) : Json(nullptr);
  if (v.violation_cycle) {
    Json cycle = Json::array();
    for (std::size_t t : *v.violation_cycle) cycle.push_back(t + 1);
    j["violation_cycle"] = cycle;
  } else {
    j["violation_cycle"] = nullptr;
  }
  j["max_margin"] = number_or_null(v.max_margin);
  return j;
}

Json to_json(const AreSolution& s) {
  return {{"sigma", matrix_json(s.sigma)},
          {"residual", s.residual},
          {"iterations", s.iterations},
          {"converged", s.converged}};
}

void are_problem_from_json(const Json& j, StateSpaceModel& model, CovariancePair& cov) {
  if (!j.is_object()) throw InputError("ARE model must be a JSON object");
  if (j.contains("alpha") || j.contains("beta")) {
    if (!j.contains("alpha") || !j.contains("beta")) throw InputError("ARE model needs both 'alpha' and 'beta'");
    cov = spectra_to_covariances(vector_from_json(j.at("alpha"), "alpha"), vector_from_json(j.at("beta"), "beta"));
    model = StateSpaceModel::identity(cov.Q.rows());
  } else {
    for (const char* key : {"A", "C", "Q", "R"})
      if (!j.contains(key)) throw InputError(std::string("ARE model needs '") + key + "'");
    model = {matrix_from_json(j.at("A"), "A"), matrix_from_json(j.at("C"), "C")};
    cov = {matrix_from_json(j.at("Q"), "Q"), matrix_from_json(j.at("R"), "R")};
  }
  model.validate();
  cov.validate();
  if (cov.Q.rows() != model.state_dimension() || cov.R.rows() != model.observation_dimension()) {
    throw InputError("ARE model: covariance dimensions do not match A and C");
  }
}

Json to_json(const ExperimentConfig& c) {
  return {{"K", c.K},
          {"m", c.m},
          {"probe_low", c.probe_low},
          {"probe_high", c.probe_high},
          {"epsilon_grid", c.epsilon_grid},
          {"utility", to_json(c.utility)},
          {"margin_mode", to_string(c.margin_mode)},
          {"seed", c.seed},
          {"enforce_budget", c.enforce_budget},
          {"solver", to_json(c.solver)}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    read_if(j, "K", c.K);
    read_if(j, "m", c.m);
    read_if(j, "probe_low", c.probe_low);
    read_if(j, "probe_high", c.probe_high);
    read_if(j, "epsilon_grid", c.epsilon_grid);
    read_if(j, "seed", c.seed);
    read_if(j, "enforce_budget", c.enforce_budget);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("experiment config: ") + e.what());
  }
  c.utility = j.contains("utility") ? utility_from_json(j.at("utility")) : UtilityModel::linear(Vector::Ones(c.m));
  if (j.contains("margin_mode")) c.margin_mode = margin_mode_from_string(j.at("margin_mode").get<std::string>());
  if (j.contains("solver")) c.solver = solver_options_from_json(j.at("solver"));
  c.validate();
  return c;
}

Json read_json_file(const std::string& path) {
  auto f = open_in(path);
  try {
    return Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON in '") + path + "': " + e.what(), 0, 0);
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
  if (!f) throw InputError("failed writing '" + path + "'");
}

}  // namespace cogmask::io
