#ifndef COVRECON_IO_HPP
#define COVRECON_IO_HPP

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "covrecon/cov_estimator.hpp"
#include "covrecon/field_sampler.hpp"
#include "covrecon/mercer_recon.hpp"
#include "covrecon/planner.hpp"
#include "covrecon/spectral.hpp"
#include "covrecon/study.hpp"

namespace covrecon {

std::string version_string();

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planner inputs read from the "plan" block of a config.
struct PlanConfig {
  double epsilon = 0.1;
  double beta = 0.1;
  double gamma = 1.5;
  std::optional<Regime> regime;
};

struct RunConfig {
  StudyConfig study;
  PlanConfig plan;
};

/// Parses a JSON config; unknown keys and type errors raise ConfigError
/// naming the field.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Resolved config without output_dir and workers, which do not affect results.
nlohmann::json to_json(const RunConfig& config);

/// "# covrecon <version> config=<compact json>"
std::string artifact_header(const RunConfig& config);

// Symmetric matrix text format: a header line "Q kind tau alpha M", then Q rows.
// read_matrix skips leading "#" lines.
void write_matrix(std::ostream& out, const TaperedCovariance& cov);
TaperedCovariance read_matrix(std::istream& in);

/// Row = sample, column = dof.
void write_batch_csv(std::ostream& out, const SampleBatch& batch, const std::string& header);
nlohmann::json batch_sidecar(const SampleBatch& batch, const std::string& timestamp);

/// Columns l, lambda, then the components of Phi_l; at most max_modes rows.
void write_spectrum_csv(std::ostream& out, const DiscreteSpectrum& spectrum, Index max_modes, const std::string& header);

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows, const std::string& header);
std::vector<StudyRow> read_study_csv(std::istream& in);
extern const char* const kStudyColumns;

void write_summary_csv(std::ostream& out, const std::vector<SummarySlope>& slopes, const std::string& header);

/// Columns M, replication, error, error_sq.
void write_rate_csv(std::ostream& out, const std::vector<RateSample>& samples, const std::string& header);

/// Kernel values on a regular grid; first row and column hold the point index.
void write_matrix_csv(std::ostream& out, const Matrix& values, const std::string& header);

nlohmann::json to_json(const ErrorReport& report);
nlohmann::json to_json(const SpectralDiagnostics& diag);

/// Splits a CSV line on commas (no quoting).
std::vector<std::string> split_csv(const std::string& line);

/// Current UTC time, ISO 8601.
std::string utc_timestamp();

}  // namespace covrecon

#endif  // COVRECON_IO_HPP
