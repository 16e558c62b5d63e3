#include "covrecon/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace covrecon {

std::string version_string() { return "0.1.0"; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

template <typename T>
T field(const nlohmann::json& j, const std::string& key, const T& fallback, const std::string& prefix = "") {
  if (!j.contains(key) || j.at(key).is_null()) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(prefix + key + ": wrong type (" + std::string(j.at(key).type_name()) + ")");
  }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& prefix) {
  if (!j.is_object()) {
    throw ConfigError((prefix.empty() ? std::string("config") : prefix.substr(0, prefix.size() - 1)) +
                      ": expected an object");
  }
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ConfigError(prefix + item.key() + ": unknown key");
    }
  }
}

template <typename Fn>
auto wrap(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"field", "dim", "s", "alpha", "mesh_sizes", "sample_counts", "truncations", "n_rep", "seed", "q",
                  "estimator", "mode", "kl_trunc", "exact_covariance", "workers", "calibration", "plan",
                  "output_dir"},
                 "");
  RunConfig rc;
  StudyConfig& c = rc.study;
  c.dim = field<int>(j, "dim", c.dim);
  const std::string default_field = c.dim == 1 ? "brownian_motion" : "brownian_sheet";
  c.field = wrap("field", [&] { return field_kind_from_string(field<std::string>(j, "field", default_field)); });
  c.s = field<double>(j, "s", c.s);
  c.alpha = field<double>(j, "alpha", c.alpha);
  c.mesh_sizes = field<std::vector<int>>(j, "mesh_sizes", c.mesh_sizes);
  c.sample_counts = field<std::vector<Index>>(j, "sample_counts", c.sample_counts);
  c.truncations = field<std::vector<Index>>(j, "truncations", c.truncations);
  c.n_rep = field<int>(j, "n_rep", c.n_rep);
  c.seed = field<std::uint64_t>(j, "seed", c.seed);
  c.q = field<int>(j, "q", c.q);
  c.estimator = wrap("estimator", [&] { return estimator_kind_from_string(field<std::string>(j, "estimator", "tapered")); });
  c.mode = wrap("mode", [&] { return sampling_mode_from_string(field<std::string>(j, "mode", "nodal")); });
  c.kl_trunc = field<int>(j, "kl_trunc", c.kl_trunc);
  c.exact_covariance = field<bool>(j, "exact_covariance", c.exact_covariance);
  c.workers = field<int>(j, "workers", c.workers);
  c.output_dir = field<std::string>(j, "output_dir", c.output_dir);
  if (j.contains("calibration")) {
    const auto& cal = j.at("calibration");
    reject_unknown(cal, {"c1", "c2", "c_dk", "h0", "rho1", "lambda_max_mass"}, "calibration.");
    Calibration& k = c.calibration;
    k.c1 = field<double>(cal, "c1", k.c1, "calibration.");
    k.c2 = field<double>(cal, "c2", k.c2, "calibration.");
    k.c_dk = field<double>(cal, "c_dk", k.c_dk, "calibration.");
    k.h0 = field<double>(cal, "h0", k.h0, "calibration.");
    k.rho1 = field<double>(cal, "rho1", k.rho1, "calibration.");
    k.lambda_max_mass = field<double>(cal, "lambda_max_mass", k.lambda_max_mass, "calibration.");
    for (double v : {k.c1, k.c2, k.c_dk, k.h0, k.rho1, k.lambda_max_mass}) {
      if (!(v > 0.0)) {
        throw ConfigError("calibration: all constants must be positive");
      }
    }
  }
  if (j.contains("plan")) {
    const auto& p = j.at("plan");
    reject_unknown(p, {"epsilon", "beta", "gamma", "regime"}, "plan.");
    rc.plan.epsilon = field<double>(p, "epsilon", rc.plan.epsilon, "plan.");
    rc.plan.beta = field<double>(p, "beta", rc.plan.beta, "plan.");
    rc.plan.gamma = field<double>(p, "gamma", rc.plan.gamma, "plan.");
    if (p.contains("regime") && !p.at("regime").is_null()) {
      const int r = field<int>(p, "regime", 2, "plan.");
      if (r < 1 || r > 3) {
        throw ConfigError("plan.regime: must be 1, 2 or 3, got " + std::to_string(r));
      }
      rc.plan.regime = static_cast<Regime>(r);
    }
  }
  if (!(rc.plan.epsilon > 0.0 && rc.plan.epsilon < 1.0)) {
    throw ConfigError("plan.epsilon: must lie in (0, 1)");
  }
  if (!(rc.plan.gamma >= 0.5)) {
    throw ConfigError("plan.gamma: must be >= 1/2");
  }
  if (!(rc.plan.beta > 0.0)) {
    throw ConfigError("plan.beta: must be positive");
  }
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open '" + path + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return run_config_from_json(j);
}

nlohmann::json to_json(const RunConfig& rc) {
  const StudyConfig& c = rc.study;
  nlohmann::json j;
  j["field"] = to_string(c.field);
  j["dim"] = c.dim;
  j["s"] = c.s;
  j["alpha"] = c.alpha;
  j["mesh_sizes"] = c.mesh_sizes;
  j["sample_counts"] = c.sample_counts;
  j["truncations"] = c.truncations;
  j["n_rep"] = c.n_rep;
  j["seed"] = c.seed;
  j["q"] = c.q;
  j["estimator"] = to_string(c.estimator);
  j["mode"] = to_string(c.mode);
  j["kl_trunc"] = c.kl_trunc;
  j["exact_covariance"] = c.exact_covariance;
  j["calibration"] = {{"c1", c.calibration.c1},     {"c2", c.calibration.c2},
                      {"c_dk", c.calibration.c_dk}, {"h0", c.calibration.h0},
                      {"rho1", c.calibration.rho1}, {"lambda_max_mass", c.calibration.lambda_max_mass}};
  nlohmann::json p = {{"epsilon", rc.plan.epsilon}, {"beta", rc.plan.beta}, {"gamma", rc.plan.gamma}};
  p["regime"] = rc.plan.regime ? nlohmann::json(static_cast<int>(*rc.plan.regime)) : nlohmann::json(nullptr);
  j["plan"] = p;
  return j;
}

std::string artifact_header(const RunConfig& config) {
  return "# covrecon " + version_string() + " config=" + to_json(config).dump();
}

void write_matrix(std::ostream& out, const TaperedCovariance& cov) {
  out << cov.matrix.rows() << ' ' << to_string(cov.kind) << ' ' << cov.tau << ' ' << format_double(cov.alpha)
      << ' ' << cov.sample_count << '\n';
  for (Index i = 0; i < cov.matrix.rows(); ++i) {
    for (Index k = 0; k < cov.matrix.cols(); ++k) {
      out << (k ? " " : "") << format_double(cov.matrix(i, k));
    }
    out << '\n';
  }
}

TaperedCovariance read_matrix(std::istream& in) {
  std::string line;
  do {
    if (!std::getline(in, line)) {
      throw std::invalid_argument("read_matrix: missing header");
    }
  } while (!line.empty() && line.front() == '#');
  std::istringstream head(line);
  Index q = 0;
  std::string kind, alpha;
  TaperedCovariance cov;
  if (!(head >> q >> kind >> cov.tau >> alpha) || q < 0) {
    throw std::invalid_argument("read_matrix: malformed header '" + line + "'");
  }
  head >> cov.sample_count;
  cov.kind = estimator_kind_from_string(kind);
  cov.alpha = parse_double(alpha);
  cov.matrix.resize(q, q);
  for (Index i = 0; i < q; ++i) {
    for (Index k = 0; k < q; ++k) {
      std::string tok;
      if (!(in >> tok)) {
        throw std::invalid_argument("read_matrix: truncated body");
      }
      cov.matrix(i, k) = parse_double(tok);
    }
  }
  return cov;
}

void write_batch_csv(std::ostream& out, const SampleBatch& batch, const std::string& header) {
  out << header << '\n';
  for (Index k = 0; k < batch.coeffs.cols(); ++k) {
    out << (k ? "," : "") << "dof" << k;
  }
  out << '\n';
  for (Index m = 0; m < batch.coeffs.rows(); ++m) {
    for (Index k = 0; k < batch.coeffs.cols(); ++k) {
      out << (k ? "," : "") << format_double(batch.coeffs(m, k));
    }
    out << '\n';
  }
}

nlohmann::json batch_sidecar(const SampleBatch& batch, const std::string& timestamp) {
  const Mesh& mesh = batch.space.mesh();
  return {{"version", version_string()},
          {"timestamp", timestamp},
          {"seed", batch.seed},
          {"mode", to_string(batch.mode)},
          {"kl_trunc", batch.kl_trunc},
          {"field", to_string(batch.field)},
          {"mesh", {{"dim", mesh.dim}, {"elements_per_axis", mesh.elements_per_axis}, {"h", mesh.h}}},
          {"samples", batch.sample_count()},
          {"dofs", batch.coeffs.cols()}};
}

void write_spectrum_csv(std::ostream& out, const DiscreteSpectrum& spectrum, Index max_modes, const std::string& header) {
  out << header << '\n' << "l,lambda";
  for (Index k = 0; k < spectrum.size(); ++k) {
    out << ",phi" << k;
  }
  out << '\n';
  const Index rows = std::min(max_modes, spectrum.size());
  for (Index l = 0; l < rows; ++l) {
    out << l + 1 << ',' << format_double(spectrum.eigenvalues[l]);
    for (Index k = 0; k < spectrum.size(); ++k) {
      out << ',' << format_double(spectrum.gen_vectors(k, l));
    }
    out << '\n';
  }
}

const char* const kStudyColumns =
    "L,n,h,M,n_rep,n_ok,mean_total,mean_e1,mean_e2,mean_e3,stderr_total,stderr_e3,gap_fail_fraction,p0,tau,"
    "weyl_violations,triangle_violations,error";

namespace {

std::string sanitize(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  }
  return s;
}

}  // namespace

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows, const std::string& header) {
  if (!header.empty()) {
    out << header << '\n';
  }
  out << kStudyColumns << '\n';
  for (const StudyRow& r : rows) {
    out << r.L << ',' << r.n << ',' << format_double(r.h) << ',' << r.M << ',' << r.n_rep << ',' << r.n_ok << ','
        << format_double(r.mean_total) << ',' << format_double(r.mean_e1) << ',' << format_double(r.mean_e2) << ','
        << format_double(r.mean_e3) << ',' << format_double(r.stderr_total) << ',' << format_double(r.stderr_e3)
        << ',' << format_double(r.gap_fail_fraction) << ',' << format_double(r.p0) << ',' << r.tau << ','
        << r.weyl_violations << ',' << r.triangle_violations << ',' << sanitize(r.error) << '\n';
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<StudyRow> read_study_csv(std::istream& in) {
  std::vector<StudyRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kStudyColumns) {
        throw std::invalid_argument("read_study_csv: unexpected columns '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 18) {
      throw std::invalid_argument("read_study_csv: expected 18 fields, got " + std::to_string(f.size()));
    }
    StudyRow r;
    r.L = std::stoll(f[0]);
    r.n = std::stoi(f[1]);
    r.h = parse_double(f[2]);
    r.M = std::stoll(f[3]);
    r.n_rep = std::stoi(f[4]);
    r.n_ok = std::stoi(f[5]);
    r.mean_total = parse_double(f[6]);
    r.mean_e1 = parse_double(f[7]);
    r.mean_e2 = parse_double(f[8]);
    r.mean_e3 = parse_double(f[9]);
    r.stderr_total = parse_double(f[10]);
    r.stderr_e3 = parse_double(f[11]);
    r.gap_fail_fraction = parse_double(f[12]);
    r.p0 = parse_double(f[13]);
    r.tau = std::stoi(f[14]);
    r.weyl_violations = std::stoll(f[15]);
    r.triangle_violations = std::stoi(f[16]);
    r.error = f[17];
    rows.push_back(r);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummarySlope>& slopes, const std::string& header) {
  out << header << '\n' << "quantity,slope,points\n";
  for (const auto& s : slopes) {
    out << s.quantity << ',' << format_double(s.slope) << ',' << s.points << '\n';
  }
}

void write_rate_csv(std::ostream& out, const std::vector<RateSample>& samples, const std::string& header) {
  out << header << '\n' << "M,replication,error,error_sq\n";
  for (const auto& s : samples) {
    out << s.sample_count << ',' << s.replication << ',' << format_double(s.error) << ','
        << format_double(s.error_sq) << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const Matrix& values, const std::string& header) {
  out << header << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index k = 0; k < values.cols(); ++k) {
      out << (k ? "," : "") << format_double(values(i, k));
    }
    out << '\n';
  }
}

namespace {

nlohmann::json number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(format_double(x)); }

nlohmann::json vec(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

}  // namespace

nlohmann::json to_json(const ErrorReport& r) {
  return {{"L", r.rank},
          {"q", r.q},
          {"e1", number(r.e1)},
          {"e2", number(r.e2)},
          {"e3", number(r.e3)},
          {"total", number(r.total)},
          {"triangle_slack", number(r.triangle_slack)},
          {"e3_split", {{"e31", number(r.e31)}, {"e32", number(r.e32)}, {"e33", number(r.e33)}, {"sum", number(r.e3_split)}}},
          {"split_reliable", r.split_reliable}};
}

nlohmann::json to_json(const SpectralDiagnostics& d) {
  nlohmann::json gc = nlohmann::json::array();
  for (bool b : d.gap_condition) gc.push_back(b);
  return {{"weyl_bound", number(d.weyl_bound)},
          {"weyl_comparisons", d.weyl_comparisons},
          {"weyl_violations", d.weyl_violations},
          {"eigenvalue_deviation", vec(d.eigenvalue_deviation)},
          {"discrete_gaps", vec(d.discrete_gaps)},
          {"continuous_gaps", vec(d.continuous_gaps)},
          {"gap_margins", vec(d.gap_margins)},
          {"gap_condition", gc},
          {"gap_condition_ok", d.gap_condition_ok},
          {"gap_theorem_checks", d.gap_theorem_checks},
          {"gap_theorem_violations", d.gap_theorem_violations},
          {"davis_kahan_ratio", vec(d.davis_kahan_ratio)},
          {"eigenvector_distance", vec(d.eigenvector_distance)},
          {"sandwich", {number(d.sandwich.first), number(d.sandwich.second)}},
          {"sandwich_ok", d.sandwich_ok}};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace covrecon
