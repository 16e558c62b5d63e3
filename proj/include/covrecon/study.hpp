#ifndef COVRECON_STUDY_HPP
#define COVRECON_STUDY_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "covrecon/cov_estimator.hpp"
#include "covrecon/field_sampler.hpp"
#include "covrecon/mercer_recon.hpp"
#include "covrecon/planner.hpp"
#include "covrecon/spectral.hpp"
#include "covrecon/types.hpp"

namespace covrecon {

struct StudyConfig {
  FieldKind field = FieldKind::BrownianMotion1D;
  int dim = 1;
  double s = 0.5 - 1e-3;
  double alpha = 1.0;
  std::vector<int> mesh_sizes{16};      // elements per axis n
  std::vector<Index> sample_counts{1000};
  std::vector<Index> truncations{3};
  int n_rep = 2;
  std::uint64_t seed = 1;
  int q = 2;
  Calibration calibration;
  std::string output_dir = "out";
  EstimatorKind estimator = EstimatorKind::Tapered;
  SamplingMode mode = SamplingMode::NodalInterpolation;
  int kl_trunc = 200;
  bool exact_covariance = false;  // skip sampling: Sigma^M = Sigma
  int workers = 1;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const StudyConfig& config);

/// One replication of the full pipeline for a given mesh, M and L list.
struct PipelineResult {
  std::vector<ErrorReport> reports;           // per L
  std::vector<SpectralDiagnostics> spectral;  // per L
  int tau = 0;
  double p0_tau = 0.0;
};

/// Precomputed per-mesh data.
struct MeshContext {
  FeSpace space;
  MassMatrix mass;
  Matrix sigma;
  TransformedStiffness s_exact;
  DiscreteSpectrum exact;

  MeshContext(const AnalyticField& field, int n);
};

/// draw -> estimate -> taper -> transform -> eigensolve -> align -> kernel -> errors.
PipelineResult run_pipeline(const StudyConfig& config, const MeshContext& ctx, Index sample_count,
                            const std::vector<Index>& truncations, std::uint64_t batch_seed);

/// Seed of replication rep of cell (n, M).
std::uint64_t batch_seed(std::uint64_t seed, int n, Index sample_count, int rep);

struct StudyRow {
  Index L = 0;
  int n = 0;
  double h = 0.0;
  Index M = 0;
  int n_rep = 0;
  int n_ok = 0;
  double mean_total = 0.0;
  double mean_e1 = 0.0;
  double mean_e2 = 0.0;
  double mean_e3 = 0.0;
  double stderr_total = 0.0;
  double stderr_e3 = 0.0;
  double gap_fail_fraction = 0.0;
  double p0 = 0.0;
  int tau = 0;
  Index weyl_violations = 0;
  int triangle_violations = 0;
  std::string error;  // empty when every replication succeeded
};

/// Rows sorted by (L, n, M). Completed (n, M) units listed in `done` are
/// taken from there instead of being recomputed.
std::vector<StudyRow> expected_error_study(const StudyConfig& config, const std::vector<StudyRow>& done = {},
                                           const std::function<void(const std::vector<StudyRow>&)>& on_unit = {});

struct SummarySlope {
  std::string quantity;
  double slope = 0.0;
  int points = 0;
};

/// Log-log slopes: e1 vs L, |lambda_1^h - lambda_1| vs h, e3 vs M.
std::vector<SummarySlope> study_summary(const StudyConfig& config, const std::vector<StudyRow>& rows);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct PlanCheck {
  double epsilon = 0.0;
  double mean_total = 0.0;
  double ratio = 0.0;  // mean_total / epsilon
  bool matched = false;
};

/// Compares the measured mean error of the study row at the planned L
/// with epsilon; uses the first row with L = plan.L.
PlanCheck verify_plan(const PlanResult& plan, const std::vector<StudyRow>& rows);

}  // namespace covrecon

#endif  // COVRECON_STUDY_HPP
