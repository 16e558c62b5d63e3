#include "covrecon/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace covrecon {

namespace {

AnalyticField field_for(const StudyConfig& config) {
  AnalyticField f = brownian_field(config.dim, 0.5 - config.s);
  f.smoothness = config.s;
  return f;
}

Index dof_count(int dim, int n) {
  Index q = 1;
  for (int a = 0; a < dim; ++a) {
    q *= n + 1;
  }
  return q;
}

}  // namespace

void validate(const StudyConfig& config) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (config.dim != 1 && config.dim != 2) {
    fail("dim: must be 1 or 2, got " + std::to_string(config.dim));
  }
  if ((config.field == FieldKind::BrownianMotion1D) != (config.dim == 1)) {
    fail("field: " + to_string(config.field) + " does not match dim " + std::to_string(config.dim));
  }
  if (config.mesh_sizes.empty()) fail("mesh_sizes: must be nonempty");
  if (config.sample_counts.empty()) fail("sample_counts: must be nonempty");
  if (config.truncations.empty()) fail("truncations: must be nonempty");
  if (config.n_rep < 1) fail("n_rep: must be >= 1, got " + std::to_string(config.n_rep));
  if (config.q < 2 || config.q > 6) fail("q: must lie in [2, 6], got " + std::to_string(config.q));
  if (!(config.alpha > 0.0)) fail("alpha: must be positive");
  if (!(config.s > 0.0)) fail("s: must be positive");
  if (config.workers < 1) fail("workers: must be >= 1");
  if (config.mode == SamplingMode::L2ProjectionOfTruncatedKL && config.kl_trunc < 1) {
    fail("kl_trunc: must be >= 1 in projection mode");
  }
  Index q_min = std::numeric_limits<Index>::max();
  for (int n : config.mesh_sizes) {
    if (n < 2) fail("mesh_sizes: n must be >= 2, got " + std::to_string(n));
    q_min = std::min(q_min, dof_count(config.dim, n));
  }
  for (Index m : config.sample_counts) {
    if (m < 2 && !config.exact_covariance) fail("sample_counts: M must be >= 2, got " + std::to_string(m));
  }
  for (Index l : config.truncations) {
    if (l < 1) fail("truncations: L must be >= 1, got " + std::to_string(l));
    if (l > q_min) {
      fail("truncations: L = " + std::to_string(l) + " exceeds Q_h = " + std::to_string(q_min));
    }
  }
}

MeshContext::MeshContext(const AnalyticField& field, int n)
    : space(build_mesh(field.dim, n)),
      mass(assemble_mass(space)),
      sigma(exact_discrete_covariance(field, space)),
      s_exact(transform(sigma, mass, SpectrumSource::ExactDiscrete)),
      exact(eigensolve(s_exact, mass)) {}

std::uint64_t batch_seed(std::uint64_t seed, int n, Index sample_count, int rep) {
  return derive_seed(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(sample_count),
                            static_cast<std::uint64_t>(rep)});
}

PipelineResult run_pipeline(const StudyConfig& config, const MeshContext& ctx, Index sample_count,
                            const std::vector<Index>& truncations, std::uint64_t seed) {
  const AnalyticField field = field_for(config);
  const KlOracle oracle = brownian_oracle(config.dim);
  PipelineResult out;
  TaperedCovariance est;
  if (config.exact_covariance) {
    est.matrix = ctx.sigma;
    est.sample_count = sample_count;
  } else {
    const SampleBatch batch = draw_batch(field, ctx.space, sample_count, config.mode, seed, config.kl_trunc);
    est = mle_covariance(batch);
    if (config.estimator == EstimatorKind::Tapered) {
      est = taper(est, config.alpha);
    }
  }
  out.tau = est.tau;
  const TransformedStiffness ts = transform(est.matrix, ctx.mass, SpectrumSource::Estimated);
  const DiscreteSpectrum spectrum = eigensolve(ts, ctx.mass);
  const Matrix cov_diff = ctx.sigma - est.matrix;
  const double h = ctx.space.h();
  for (Index L : truncations) {
    out.spectral.push_back(diagnostics(ctx.exact, spectrum, ctx.s_exact, ts, oracle, L, config.calibration,
                                       config.s, h, ctx.mass, cov_diff));
    out.reports.push_back(error_decomposition(field, oracle, ctx.space, ctx.exact, spectrum, L, config.q));
  }
  return out;
}

namespace {

struct Accumulator {
  std::vector<double> total;
  std::vector<double> e1;
  std::vector<double> e2;
  std::vector<double> e3;
  int gap_fail = 0;
  Index weyl_violations = 0;
  int triangle_violations = 0;
};

double mean(const std::vector<double>& v) {
  if (v.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

int p0_width(Index sample_count, double alpha, Index q) {
  const int tau = tapering_width(sample_count, alpha, q);
  return tau > 0 ? tau : static_cast<int>(std::max<Index>(2, q - q % 2));
}

std::vector<StudyRow> run_unit(const StudyConfig& config, const MeshContext& ctx, int n, Index m) {
  const std::size_t nl = config.truncations.size();
  std::vector<Accumulator> acc(nl);
  std::string error;
  int tau = 0;
  for (int rep = 0; rep < config.n_rep; ++rep) {
    try {
      const PipelineResult r = run_pipeline(config, ctx, m, config.truncations, batch_seed(config.seed, n, m, rep));
      tau = r.tau;
      for (std::size_t i = 0; i < nl; ++i) {
        const ErrorReport& e = r.reports[i];
        acc[i].total.push_back(e.total);
        acc[i].e1.push_back(e.e1);
        acc[i].e2.push_back(e.e2);
        acc[i].e3.push_back(e.e3);
        if (!r.spectral[i].gap_condition_ok) ++acc[i].gap_fail;
        acc[i].weyl_violations += r.spectral[i].weyl_violations;
        if (e.total > e.e1 + e.e2 + e.e3 + 1e-8) ++acc[i].triangle_violations;
      }
    } catch (const std::exception& ex) {
      if (error.empty()) {
        error = "rep " + std::to_string(rep) + ": " + ex.what();
      }
    }
  }
  SpectralProfile profile = brownian_profile(config.dim, config.alpha, config.s);
  profile.calibration = config.calibration;
  std::vector<StudyRow> rows;
  for (std::size_t i = 0; i < nl; ++i) {
    StudyRow row;
    row.L = config.truncations[i];
    row.n = n;
    row.h = ctx.space.h();
    row.M = m;
    row.n_rep = config.n_rep;
    row.n_ok = static_cast<int>(acc[i].total.size());
    row.mean_total = mean(acc[i].total);
    row.mean_e1 = mean(acc[i].e1);
    row.mean_e2 = mean(acc[i].e2);
    row.mean_e3 = mean(acc[i].e3);
    row.stderr_total = stderr_of(acc[i].total);
    row.stderr_e3 = stderr_of(acc[i].e3);
    row.gap_fail_fraction = row.n_ok > 0 ? static_cast<double>(acc[i].gap_fail) / row.n_ok
                                         : std::numeric_limits<double>::quiet_NaN();
    row.tau = tau;
    try {
      row.p0 = p0_bound(profile, static_cast<double>(ctx.space.dof_count()),
                        p0_width(m, config.alpha, ctx.space.dof_count()), static_cast<double>(m), row.L);
    } catch (const DegenerateSpectrum&) {
      row.p0 = 0.0;
    }
    row.weyl_violations = acc[i].weyl_violations;
    row.triangle_violations = acc[i].triangle_violations;
    row.error = error;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::vector<StudyRow> expected_error_study(const StudyConfig& config, const std::vector<StudyRow>& done,
                                           const std::function<void(const std::vector<StudyRow>&)>& on_unit) {
  validate(config);
  const AnalyticField field = field_for(config);

  std::map<std::pair<int, Index>, std::vector<StudyRow>> finished;
  for (const StudyRow& r : done) {
    finished[{r.n, r.M}].push_back(r);
  }
  struct Unit {
    std::size_t mesh;
    int n;
    Index m;
  };
  std::vector<Unit> todo;
  std::vector<StudyRow> rows;
  std::set<int> needed_meshes;
  for (std::size_t i = 0; i < config.mesh_sizes.size(); ++i) {
    for (Index m : config.sample_counts) {
      const int n = config.mesh_sizes[i];
      auto it = finished.find({n, m});
      if (it != finished.end() && it->second.size() == config.truncations.size()) {
        rows.insert(rows.end(), it->second.begin(), it->second.end());
      } else {
        todo.push_back({i, n, m});
        needed_meshes.insert(static_cast<int>(i));
      }
    }
  }
  std::vector<std::unique_ptr<MeshContext>> contexts(config.mesh_sizes.size());
  for (int i : needed_meshes) {
    contexts[static_cast<std::size_t>(i)] = std::make_unique<MeshContext>(field, config.mesh_sizes[static_cast<std::size_t>(i)]);
  }

  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t u = next++; u < todo.size(); u = next++) {
      const Unit& unit = todo[u];
      std::vector<StudyRow> unit_rows = run_unit(config, *contexts[unit.mesh], unit.n, unit.m);
      std::lock_guard<std::mutex> lock(mutex);
      if (on_unit) {
        on_unit(unit_rows);
      }
      rows.insert(rows.end(), unit_rows.begin(), unit_rows.end());
    }
  };
  const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(todo.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back(work);
    }
    for (auto& t : pool) {
      t.join();
    }
  }
  std::sort(rows.begin(), rows.end(), [](const StudyRow& a, const StudyRow& b) {
    return std::tie(a.L, a.n, a.M) < std::tie(b.L, b.n, b.M);
  });
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::vector<SummarySlope> study_summary(const StudyConfig& config, const std::vector<StudyRow>& rows) {
  std::vector<SummarySlope> out;
  const int n0 = config.mesh_sizes.front();
  const Index m0 = config.sample_counts.front();
  const Index l0 = config.truncations.front();
  {
    std::vector<double> x, y;
    for (const StudyRow& r : rows) {
      if (r.n == n0 && r.M == m0 && r.n_ok > 0 && r.mean_e1 > 0.0) {
        x.push_back(static_cast<double>(r.L));
        y.push_back(r.mean_e1);
      }
    }
    out.push_back({"e1_vs_L", loglog_slope(x, y), static_cast<int>(x.size())});
  }
  {
    const AnalyticField field = field_for(config);
    const KlOracle oracle = brownian_oracle(config.dim);
    std::vector<double> x, y;
    for (int n : config.mesh_sizes) {
      const MeshContext ctx(field, n);
      const double err = std::abs(ctx.exact.eigenvalues[0] - oracle.eigenvalue(1));
      if (err > 0.0) {
        x.push_back(ctx.space.h());
        y.push_back(err);
      }
    }
    out.push_back({"lambda1_error_vs_h", loglog_slope(x, y), static_cast<int>(x.size())});
  }
  {
    std::vector<double> x, y;
    for (const StudyRow& r : rows) {
      if (r.n == n0 && r.L == l0 && r.n_ok > 0 && r.mean_e3 > 0.0) {
        x.push_back(static_cast<double>(r.M));
        y.push_back(r.mean_e3);
      }
    }
    out.push_back({"e3_vs_M", loglog_slope(x, y), static_cast<int>(x.size())});
  }
  return out;
}

PlanCheck verify_plan(const PlanResult& plan, const std::vector<StudyRow>& rows) {
  PlanCheck c;
  c.epsilon = plan.epsilon;
  for (const StudyRow& r : rows) {
    if (r.L == plan.L && r.n_ok > 0) {
      c.mean_total = r.mean_total;
      c.ratio = r.mean_total / plan.epsilon;
      c.matched = true;
      break;
    }
  }
  return c;
}

}  // namespace covrecon
