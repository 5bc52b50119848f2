#pragma once

#include "cogmask/experiments.hpp"
#include "cogmask/masking.hpp"
#include "cogmask/revealed_preference.hpp"
#include "cogmask/tracking.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace cogmask::io {

using Json = nlohmann::json;

/// %.17g: always reads back to the same double.
std::string format_double(double x);

// Dataset CSV: header t,alpha_1..alpha_m,beta_1..beta_m, one row per observation, t from 1.
// Probe CSV: the same without beta columns. Readers throw ParseError naming the 1-based
// row (header = row 1) and column; dataset invariants are enforced on load.
void write_dataset_csv(std::ostream& out, const ProbeResponseDataset& dataset);
ProbeResponseDataset read_dataset_csv(std::istream& in);
void save_dataset(const ProbeResponseDataset& dataset, const std::string& path);
ProbeResponseDataset load_dataset(const std::string& path);

void write_probes_csv(std::ostream& out, const std::vector<Vector>& probes);
/// Accepts a probe CSV or a dataset CSV (beta columns are ignored).
std::vector<Vector> read_probes_csv(std::istream& in);
void save_probes(const std::vector<Vector>& probes, const std::string& path);
std::vector<Vector> load_probes(const std::string& path);

// Sweep CSV: epsilon,loss,max_margin_after,afriat_pass_after,converged. Booleans are
// written as 0/1 and NaN as "nan".
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& in);

Json to_json(const UtilityModel& model);
UtilityModel utility_from_json(const Json& j);

Json to_json(const SolverOptions& options);
SolverOptions solver_options_from_json(const Json& j);

Json to_json(const MaskingConfig& config);
/// Missing keys keep their defaults.
MaskingConfig masking_config_from_json(const Json& j);

Json to_json(const MaskingResult& result);
MaskingResult masking_result_from_json(const Json& j);

Json to_json(const AfriatCertificate& certificate);
/// Cycle indices are written 1-based.
Json to_json(const RationalityVerdict& verdict);

/// sigma is written row-major as a nested array.
Json to_json(const AreSolution& solution);

/// Either {"A","C","Q","R"} (matrices as nested arrays) or {"alpha","beta"} with A = C = I.
void are_problem_from_json(const Json& j, StateSpaceModel& model, CovariancePair& cov);

Json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; "epsilon_grid": [] selects the default grid.
ExperimentConfig experiment_config_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cogmask::io
