// covrecon: sampling, estimation, reconstruction, studies and planning.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "covrecon/cov_estimator.hpp"
#include "covrecon/field_sampler.hpp"
#include "covrecon/io.hpp"
#include "covrecon/mercer_recon.hpp"
#include "covrecon/planner.hpp"
#include "covrecon/spectral.hpp"
#include "covrecon/study.hpp"

namespace fs = std::filesystem;
using namespace covrecon;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInfeasible = 4;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> workers;
  bool resume = false;
  std::optional<int> regime;
  std::optional<double> epsilon;
};

// Error tagged with the pipeline stage it came from.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::exception& e, bool numeric)
      : std::runtime_error("stage " + stage + ": " + e.what()), numeric(numeric) {}
  bool numeric;
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw StageError(name, e, true);
  } catch (const std::invalid_argument& e) {
    throw StageError(name, e, false);
  }
}

RunConfig resolve(const Options& opt) {
  RunConfig rc = opt.config_path.empty() ? run_config_from_json(nlohmann::json::object())
                                         : load_run_config(opt.config_path);
  if (opt.seed) rc.study.seed = *opt.seed;
  if (opt.workers) {
    if (*opt.workers < 1) throw ConfigError("workers: must be >= 1");
    rc.study.workers = *opt.workers;
  }
  if (opt.regime) {
    if (*opt.regime < 1 || *opt.regime > 3) throw ConfigError("regime: must be 1, 2 or 3");
    rc.plan.regime = static_cast<Regime>(*opt.regime);
  }
  if (opt.epsilon) {
    if (!(*opt.epsilon > 0.0 && *opt.epsilon < 1.0)) throw ConfigError("epsilon: must lie in (0, 1)");
    rc.plan.epsilon = *opt.epsilon;
  }
  if (!opt.out.empty()) {
    rc.study.output_dir = opt.out;
  } else if (const char* env = std::getenv("COVRECON_OUT"); env != nullptr && *env != '\0') {
    rc.study.output_dir = env;
  }
  return rc;
}

fs::path out_dir(const RunConfig& rc) {
  fs::path dir(rc.study.output_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

AnalyticField field_of(const StudyConfig& c) {
  AnalyticField f = brownian_field(c.dim, 0.5 - c.s);
  f.smoothness = c.s;
  return f;
}

std::string cell_name(int n, Index m) { return "n" + std::to_string(n) + "_M" + std::to_string(m); }

int cmd_sample(const RunConfig& rc) {
  const StudyConfig& c = rc.study;
  const int n = c.mesh_sizes.front();
  const Index m = c.sample_counts.front();
  const FeSpace space(stage("mesh", [&] { return build_mesh(c.dim, n); }));
  const SampleBatch batch = stage("draw", [&] {
    return draw_batch(field_of(c), space, m, c.mode, batch_seed(c.seed, n, m, 0), c.kl_trunc, c.workers);
  });
  const fs::path dir = out_dir(rc);
  const std::string base = "batch_" + cell_name(n, m);
  auto csv = open_out(dir / (base + ".csv"));
  write_batch_csv(csv, batch, artifact_header(rc));
  auto meta = open_out(dir / (base + ".meta.json"));
  meta << batch_sidecar(batch, utc_timestamp()).dump(2) << '\n';
  std::cout << (dir / (base + ".csv")).string() << '\n';
  return kExitOk;
}

int cmd_estimate(const RunConfig& rc) {
  const StudyConfig& c = rc.study;
  const int n = c.mesh_sizes.front();
  const Index m = c.sample_counts.front();
  const FeSpace space(stage("mesh", [&] { return build_mesh(c.dim, n); }));
  const SampleBatch batch = stage("draw", [&] {
    return draw_batch(field_of(c), space, m, c.mode, batch_seed(c.seed, n, m, 0), c.kl_trunc, c.workers);
  });
  TaperedCovariance est = stage("estimate", [&] { return mle_covariance(batch); });
  if (c.estimator == EstimatorKind::Tapered) {
    est = stage("taper", [&] { return taper(est, c.alpha); });
  }
  const fs::path dir = out_dir(rc);
  const std::string base = "covariance_" + cell_name(n, m);
  auto txt = open_out(dir / (base + ".txt"));
  txt << artifact_header(rc) << '\n';
  write_matrix(txt, est);

  const Matrix sigma = exact_discrete_covariance(field_of(c), space);
  const DecayClassCheck decay = decay_class_check(est.matrix, c.alpha, c.calibration.c1, c.calibration.c2);
  const MomentDiagnostics moments = moment_diagnostics(batch);
  nlohmann::json report = {{"version", version_string()},
                           {"config", to_json(rc)},
                           {"tau", est.tau},
                           {"opnorm_error", opnorm(est.matrix - sigma)},
                           {"rho_tilde", rho_tilde(space.h(), static_cast<double>(m), c.alpha, c.dim)},
                           {"decay_class", {{"alpha", decay.alpha}, {"c1_est", decay.c1_est},
                                            {"lambda_max", decay.lambda_max}, {"passes", decay.passes}}},
                           {"moments", {{"c_inf_hat", moments.c_inf_hat}, {"mean_max_abs", moments.mean_max_abs},
                                        {"centering_ok", moments.centering_ok}}},
                           {"rho_inv_nodal", subgaussian_diagnostic(batch).rho_inv_nodal}};
  auto js = open_out(dir / (base + ".json"));
  js << report.dump(2) << '\n';
  std::cout << (dir / (base + ".txt")).string() << '\n';
  return kExitOk;
}

int cmd_reconstruct(const RunConfig& rc) {
  const StudyConfig& c = rc.study;
  const int n = c.mesh_sizes.front();
  const Index m = c.sample_counts.front();
  const AnalyticField field = field_of(c);
  const MeshContext ctx = stage("exact", [&] { return MeshContext(field, n); });
  const KlOracle oracle = brownian_oracle(c.dim);

  TaperedCovariance est;
  if (c.exact_covariance) {
    est.matrix = ctx.sigma;
    est.sample_count = m;
  } else {
    const SampleBatch batch = stage("draw", [&] {
      return draw_batch(field, ctx.space, m, c.mode, batch_seed(c.seed, n, m, 0), c.kl_trunc, c.workers);
    });
    est = stage("estimate", [&] { return mle_covariance(batch); });
    if (c.estimator == EstimatorKind::Tapered) {
      est = stage("taper", [&] { return taper(est, c.alpha); });
    }
  }
  const TransformedStiffness ts =
      stage("transform", [&] { return transform(est.matrix, ctx.mass, SpectrumSource::Estimated); });
  const DiscreteSpectrum spec = stage("eigensolve", [&] { return eigensolve(ts, ctx.mass); });
  const DiscreteSpectrum aligned = stage("align", [&] { return align_signs(ctx.exact, spec); });

  nlohmann::json reports = nlohmann::json::array();
  for (Index L : c.truncations) {
    const SpectralDiagnostics diag = stage("diagnostics", [&] {
      return diagnostics(ctx.exact, aligned, ctx.s_exact, ts, oracle, L, c.calibration, c.s, ctx.space.h(),
                         ctx.mass, ctx.sigma - est.matrix);
    });
    const ErrorReport rep = stage("error_decomposition", [&] {
      return error_decomposition(field, oracle, ctx.space, ctx.exact, aligned, L, c.q);
    });
    nlohmann::json entry = to_json(rep);
    entry["diagnostics"] = to_json(diag);
    reports.push_back(entry);
  }
  const fs::path dir = out_dir(rc);
  const std::string base = "reconstruct_" + cell_name(n, m);
  nlohmann::json doc = {{"version", version_string()},
                        {"config", to_json(rc)},
                        {"tau", est.tau},
                        {"reports", reports}};
  auto js = open_out(dir / (base + ".json"));
  js << doc.dump(2) << '\n';

  const Index lmax = *std::max_element(c.truncations.begin(), c.truncations.end());
  const MercerKernel kernel = stage("build_kernel", [&] { return build_kernel(aligned, lmax, ctx.space, "estimated"); });
  auto snap = open_out(dir / (base + "_kernel.csv"));
  write_matrix_csv(snap, kernel_snapshot(kernel, regular_grid(c.dim, c.dim == 1 ? 17 : 9)), artifact_header(rc));
  auto sp_exact = open_out(dir / (base + "_spectrum_exact.csv"));
  write_spectrum_csv(sp_exact, ctx.exact, lmax, artifact_header(rc));
  auto sp_est = open_out(dir / (base + "_spectrum_estimated.csv"));
  write_spectrum_csv(sp_est, aligned, lmax, artifact_header(rc));
  std::cout << (dir / (base + ".json")).string() << '\n';
  return kExitOk;
}

int cmd_study(const RunConfig& rc, bool resume) {
  const fs::path dir = out_dir(rc);
  const fs::path partial = dir / "study.partial.csv";
  const std::string header = artifact_header(rc);
  std::vector<StudyRow> done;
  if (resume && fs::exists(partial)) {
    std::ifstream in(partial);
    std::string first;
    std::getline(in, first);
    if (first != header) {
      throw ConfigError("resume: " + partial.string() + " was written with a different config");
    }
    done = read_study_csv(in);
  }
  {
    auto out = open_out(partial);
    write_study_csv(out, done, header);
  }
  std::ofstream append(partial, std::ios::app | std::ios::binary);
  const std::vector<StudyRow> rows = expected_error_study(rc.study, done, [&](const std::vector<StudyRow>& unit) {
    for (const StudyRow& r : unit) {
      std::vector<StudyRow> one{r};
      std::ostringstream line;
      write_study_csv(line, one, "");
      // drop the column line
      const std::string text = line.str();
      append << text.substr(text.find('\n') + 1);
    }
    append.flush();
  });
  append.close();
  {
    auto out = open_out(dir / "study.csv");
    write_study_csv(out, rows, header);
  }
  {
    auto out = open_out(dir / "study_summary.csv");
    write_summary_csv(out, study_summary(rc.study, rows), header);
  }
  {
    auto meta = open_out(dir / "study.meta.json");
    meta << nlohmann::json{{"version", version_string()}, {"timestamp", utc_timestamp()},
                           {"cells", rows.size()}, {"resumed_rows", done.size()}}
                .dump(2)
         << '\n';
  }
  fs::remove(partial);
  std::cout << (dir / "study.csv").string() << '\n';
  for (const StudyRow& r : rows) {
    if (!r.error.empty()) {
      std::cerr << "cell L=" << r.L << " n=" << r.n << " M=" << r.M << ": " << r.error << '\n';
    }
  }
  return kExitOk;
}

int cmd_plan(const RunConfig& rc) {
  SpectralProfile profile = brownian_profile(rc.study.dim, rc.study.alpha, rc.study.s);
  profile.calibration = rc.study.calibration;
  profile.gamma = rc.plan.gamma;
  profile.beta = rc.plan.beta;
  const PlanResult result = stage("plan", [&] { return plan(profile, rc.plan.epsilon, rc.plan.regime); });
  const std::string text = serialize(result);
  std::cout << text;
  const fs::path dir = out_dir(rc);
  auto out = open_out(dir / "plan.txt");
  out << artifact_header(rc) << '\n' << text;
  if (!result.feasible) {
    std::cerr << "infeasible plan: " << result.reason << '\n';
    return kExitInfeasible;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance operator reconstruction from discretized Gaussian field samples"};
  app.set_version_flag("--version", "covrecon " + version_string());
  Options opt;
  app.add_option("--config", opt.config_path, "JSON config file");
  app.add_option("--seed", opt.seed, "RNG seed, overrides the config");
  app.add_option("--out", opt.out, "output directory (default: COVRECON_OUT or config output_dir)");
  app.add_option("--workers", opt.workers, "worker threads");
  app.add_flag("--resume", opt.resume, "study: reuse completed cells of an interrupted run");
  app.add_option("--regime", opt.regime, "plan: force regime 1, 2 or 3");
  app.add_option("--epsilon", opt.epsilon, "plan: target accuracy in (0,1)");
  app.require_subcommand(1, 1);
  app.fallthrough();
  auto* sample = app.add_subcommand("sample", "draw one sample batch");
  auto* estimate = app.add_subcommand("estimate", "estimate the covariance matrix of one batch");
  auto* reconstruct = app.add_subcommand("reconstruct", "run the reconstruction pipeline once");
  auto* study = app.add_subcommand("study", "run the (L, h, M) study grid");
  auto* plan_cmd = app.add_subcommand("plan", "a-priori choice of (L, M, h) for an accuracy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), kExitConfig);
  }

  try {
    const RunConfig rc = resolve(opt);
    if (sample->parsed()) return cmd_sample(rc);
    if (estimate->parsed()) return cmd_estimate(rc);
    if (reconstruct->parsed()) return cmd_reconstruct(rc);
    if (study->parsed()) return cmd_study(rc, opt.resume);
    if (plan_cmd->parsed()) return cmd_plan(rc);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.numeric ? kExitNumeric : kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitConfig;
}
