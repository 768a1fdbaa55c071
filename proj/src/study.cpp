#include "robinweyl/study.hpp"

#include "robinweyl/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <thread>

namespace robinweyl::study {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw ConfigError("config field \"" + field + "\": " + what);
}

const json& require(const json& j, const std::string& field) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) config_error(field, "missing required field");
  return *it;
}

double get_number(const json& v, const std::string& field) {
  if (!v.is_number()) config_error(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) config_error(field, "must be finite");
  return x;
}

double get_positive(const json& v, const std::string& field) {
  const double x = get_number(v, field);
  if (!(x > 0.0)) config_error(field, "must be positive");
  return x;
}

int get_int(const json& v, const std::string& field, int min_value) {
  if (!v.is_number_integer()) config_error(field, "expected an integer");
  const auto x = v.get<long long>();
  if (x < min_value || x > 1'000'000'000) config_error(field, "must be >= " + std::to_string(min_value));
  return static_cast<int>(x);
}

std::string get_string(const json& v, const std::string& field) {
  if (!v.is_string()) config_error(field, "expected a string");
  return v.get<std::string>();
}

modelop::Side parse_model_side(const std::string& s, const std::string& field) {
  if (s == "Plus") return modelop::Side::Plus;
  if (s == "Minus") return modelop::Side::Minus;
  if (s == "Custom") return modelop::Side::Custom;
  config_error(field, "unknown side \"" + s + "\"");
}

modelop::RadialBC parse_bc(const std::string& s) {
  if (s == "DirichletBoth") return modelop::RadialBC::DirichletBoth;
  if (s == "NeumannBoth") return modelop::RadialBC::NeumannBoth;
  if (s == "DirichletInnerNeumannOuter") return modelop::RadialBC::DirichletInnerNeumannOuter;
  config_error("bc_r", "unknown boundary condition \"" + s + "\"");
}

std::size_t env_workers() {
  if (const char* s = std::getenv("ROBINWEYL_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end != s && v > 0) return static_cast<std::size_t>(std::min(v, 256L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs jobs on a bounded pool; the first failing job (in job order) is rethrown.
void run_pool(std::vector<std::function<void()>>& jobs, std::size_t workers) {
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        jobs[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Re-raise with (λ, side) context, keeping the error class.
template <class F>
void with_context(double lambda, const char* side, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "lambda=%g", lambda);
    throw Error(e.error_class(), std::string(buf) + ", side=" + side + ": " + e.what());
  }
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

const char* to_string(StudySide side) {
  switch (side) {
    case StudySide::Plus: return "Plus";
    case StudySide::Minus: return "Minus";
    case StudySide::Both: return "Both";
    case StudySide::Custom: return "Custom";
  }
  return "?";
}

std::size_t worker_count() { return env_workers(); }

GeometrySpec parse_geometry(const json& root) {
  const json& g = require(root, "geometry");
  if (!g.is_object()) config_error("geometry", "expected an object");
  GeometrySpec spec;
  if (auto it = root.find("n_samples"); it != root.end()) spec.n_samples = get_int(*it, "n_samples", 16);
  int kinds = 0;
  if (auto it = g.find("cap_theta0"); it != g.end()) {
    ++kinds;
    const double t = get_number(*it, "geometry.cap_theta0");
    if (!(t > 0.0 && t < std::numbers::pi)) config_error("geometry.cap_theta0", "must lie in (0, pi)");
    spec.cap_theta0 = t;
  }
  if (auto it = g.find("csv"); it != g.end()) {
    ++kinds;
    spec.csv_path = get_string(*it, "geometry.csv");
    const json& ip = require(g, "interior_point");
    if (!ip.is_array() || ip.size() != 3) config_error("geometry.interior_point", "expected [x, y, z]");
    for (int i = 0; i < 3; ++i) spec.interior_point[i] = get_number(ip[static_cast<std::size_t>(i)], "geometry.interior_point");
  }
  if (auto it = g.find("potential"); it != g.end()) {
    ++kinds;
    const json& p = *it;
    const json& v = require(p, "V");
    if (v.is_array()) {
      if (v.empty()) config_error("geometry.potential.V", "empty array");
      for (const auto& x : v) spec.potential.push_back(get_number(x, "geometry.potential.V"));
    } else {
      spec.potential.push_back(get_number(v, "geometry.potential.V"));
    }
    spec.potential_ell = get_positive(require(p, "ell"), "geometry.potential.ell");
  }
  if (kinds != 1) config_error("geometry", "exactly one of cap_theta0, csv, potential is required");
  return spec;
}

StudyConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  StudyConfig cfg;
  cfg.raw = j;
  if (auto it = j.find("schema_version"); it != j.end()) {
    if (get_int(*it, "schema_version", 1) != kSchemaVersion) {
      config_error("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
    }
  }
  cfg.geometry = parse_geometry(j);
  cfg.alpha = get_positive(require(j, "alpha"), "alpha");

  const std::string side = get_string(require(j, "side"), "side");
  if (side == "Plus") cfg.side = StudySide::Plus;
  else if (side == "Minus") cfg.side = StudySide::Minus;
  else if (side == "Both") cfg.side = StudySide::Both;
  else if (side == "Custom") cfg.side = StudySide::Custom;
  else config_error("side", "expected one of Plus, Minus, Both, Custom");
  if (!cfg.geometry.potential.empty() && cfg.side != StudySide::Custom) {
    config_error("side", "a bare potential geometry requires side \"Custom\"");
  }

  const json& lams = require(j, "lambdas");
  if (!lams.is_array() || lams.empty()) config_error("lambdas", "expected a non-empty array");
  for (const auto& l : lams) cfg.lambdas.push_back(get_positive(l, "lambdas"));
  for (std::size_t i = 1; i < cfg.lambdas.size(); ++i) {
    if (!(cfg.lambdas[i] < cfg.lambdas[i - 1])) config_error("lambdas", "must be sorted strictly descending");
  }

  if (auto it = j.find("R"); it != j.end() && !it->is_null()) {
    cfg.R = get_number(*it, "R");
    if (!(*cfg.R >= 1.0)) config_error("R", "must be >= 1");
  }
  if (auto it = j.find("R_max"); it != j.end() && !it->is_null()) cfg.R_max = get_positive(*it, "R_max");
  if (auto it = j.find("R_max_policy"); it != j.end()) {
    if (auto f = it->find("factor"); f != it->end()) cfg.r_max_factor = get_positive(*f, "R_max_policy.factor");
    if (auto m = it->find("margin"); m != it->end()) cfg.r_max_margin = get_positive(*m, "R_max_policy.margin");
  }
  if (auto it = j.find("grid"); it != j.end()) {
    if (auto h = it->find("h_r"); h != it->end()) cfg.h_r = get_positive(*h, "grid.h_r");
    if (auto n = it->find("n_s"); n != it->end()) cfg.n_s = get_int(*n, "grid.n_s", 3);
  }
  if (auto it = j.find("bc_r"); it != j.end() && !it->is_null()) cfg.bc_r = parse_bc(get_string(*it, "bc_r"));
  if (auto it = j.find("constants"); it != j.end()) {
    auto opt = [&](const char* key, double& dst) {
      if (auto f = it->find(key); f != it->end()) dst = get_positive(*f, std::string("constants.") + key);
    };
    opt("aplus", cfg.constants.aplus);
    opt("aminus", cfg.constants.aminus);
    opt("A", cfg.constants.A);
    opt("CG", cfg.constants.CG);
  }
  if (auto it = j.find("custom_coefficients"); it != j.end()) {
    if (auto f = it->find("a"); f != it->end()) cfg.custom_a = get_positive(*f, "custom_coefficients.a");
    if (auto f = it->find("b"); f != it->end()) cfg.custom_b = get_positive(*f, "custom_coefficients.b");
    if (auto f = it->find("nu"); f != it->end()) cfg.custom_nu = get_number(*f, "custom_coefficients.nu");
  }
  if (auto it = j.find("bracketing"); it != j.end()) {
    const json& b = *it;
    if (!b.is_object()) config_error("bracketing", "expected an object");
    cfg.bracketing.enabled = true;
    if (auto f = b.find("enabled"); f != b.end()) {
      if (!f->is_boolean()) config_error("bracketing.enabled", "expected a boolean");
      cfg.bracketing.enabled = f->get<bool>();
    }
    if (auto f = b.find("m"); f != b.end() && !f->is_string()) cfg.bracketing.m = get_int(*f, "bracketing.m", 2);
    if (auto f = b.find("n"); f != b.end() && !f->is_string()) cfg.bracketing.n = get_int(*f, "bracketing.n", 2);
    if (auto f = b.find("factor"); f != b.end()) cfg.bracketing.factor = get_positive(*f, "bracketing.factor");
    if (auto f = b.find("M"); f != b.end()) cfg.bracketing.M = get_positive(*f, "bracketing.M");
    if (auto f = b.find("side"); f != b.end()) {
      cfg.bracketing.side = parse_model_side(get_string(*f, "bracketing.side"), "bracketing.side");
    }
  }
  if (auto it = j.find("outputs"); it != j.end()) {
    if (auto f = it->find("csv"); f != it->end()) cfg.csv_out = get_string(*f, "outputs.csv");
    if (auto f = it->find("json"); f != it->end()) cfg.json_out = get_string(*f, "outputs.json");
  }
  return cfg;
}

StudyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

geometry::CurvatureProfile build_profile(const GeometrySpec& g) {
  if (g.cap_theta0) return geometry::geodesic_curvature(geometry::cap_boundary(*g.cap_theta0, g.n_samples));
  if (g.csv_path) {
    const auto raw = geometry::read_points_csv(*g.csv_path);
    return geometry::geodesic_curvature(geometry::from_samples(raw, g.n_samples, g.interior_point));
  }
  throw DomainError("build_profile: geometry is a bare potential");
}

double default_R(modelop::Side side) { return side == modelop::Side::Custom ? 1.0 : 3.0; }

modelop::RadialBC default_bc(modelop::Side side) {
  return side == modelop::Side::Plus ? modelop::RadialBC::DirichletBoth : modelop::RadialBC::NeumannBoth;
}

modelop::ModelCoefficients build_coefficients(const StudyConfig& cfg, modelop::Side side,
                                              const geometry::CurvatureProfile* profile) {
  const double R = cfg.R.value_or(default_R(side));
  if (side != modelop::Side::Custom) {
    if (!profile) throw DomainError("build_coefficients: Plus/Minus sides need a cross-section");
    return modelop::make_model_coefficients(*profile, side, R, cfg.constants);
  }
  std::vector<double> V = profile ? profile->kappa : cfg.geometry.potential;
  const double ell = profile ? profile->length_ell : cfg.geometry.potential_ell;
  const double a = cfg.custom_a, b = cfg.custom_b, nu = cfg.custom_nu;
  return modelop::make_custom_coefficients(
      std::move(V), ell, R, [a](double) { return a; }, [b](double) { return b; }, [nu](double) { return nu; });
}

double predicted_constant(const StudyConfig& cfg, const geometry::CurvatureProfile* profile) {
  if (profile) {
    const geometry::CurvatureProfile one[] = {*profile};
    return geometry::weyl_constant(one, cfg.alpha);
  }
  const auto& V = cfg.geometry.potential;
  const double h = cfg.geometry.potential_ell / static_cast<double>(V.size());
  const double integral = geometry::kappa_plus_sq_integral(V, h);
  return cfg.alpha * cfg.alpha * integral / (8.0 * std::numbers::pi);
}

double relative_error(double lambda_times_count, double predicted) {
  return std::abs(lambda_times_count - predicted) / std::max(predicted, 1e-12);
}

WeylReport weyl_study(const StudyConfig& cfg) {
  if (cfg.lambdas.empty()) throw ConfigError("config field \"lambdas\": empty schedule");
  const auto t_start = std::chrono::steady_clock::now();
  std::optional<geometry::CurvatureProfile> profile;
  if (cfg.geometry.potential.empty()) profile = build_profile(cfg.geometry);
  const geometry::CurvatureProfile* prof = profile ? &*profile : nullptr;

  WeylReport report;
  report.predicted_constant = predicted_constant(cfg, prof);
  const double a2 = cfg.alpha * cfg.alpha;

  std::vector<modelop::Side> sides;
  switch (cfg.side) {
    case StudySide::Plus: sides = {modelop::Side::Plus}; break;
    case StudySide::Minus: sides = {modelop::Side::Minus}; break;
    case StudySide::Both: sides = {modelop::Side::Plus, modelop::Side::Minus}; break;
    case StudySide::Custom: sides = {modelop::Side::Custom}; break;
  }

  // λ schedule, largest first
  std::vector<double> lambdas = cfg.lambdas;
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  const double lambda_eff_min = lambdas.back() / a2;

  struct SideSetup {
    modelop::Side side;
    modelop::ModelCoefficients coeffs;
    modelop::DiscretizedOperator op;
  };
  std::vector<SideSetup> setups;
  json grids = json::array();
  for (modelop::Side side : sides) {
    SideSetup s{side, build_coefficients(cfg, side, prof), {}};
    const double R = s.coeffs.R;
    const double R_max = cfg.R_max.value_or(
        std::max(cfg.r_max_factor * std::max(s.coeffs.V_max(), 0.0) / lambda_eff_min, R + cfg.r_max_margin));
    const int n_r = std::max(2, static_cast<int>(std::ceil((R_max - R) / cfg.h_r - 1e-9)));
    const auto bc = cfg.bc_r.value_or(default_bc(side));
    const auto grid = modelop::StripGrid::make(R, R_max, n_r, cfg.n_s, s.coeffs.ell, bc);
    s.op = modelop::assemble(s.coeffs, grid);
    grids.push_back({{"side", modelop::to_string(side)},
                     {"R", R},
                     {"R_max", R_max},
                     {"n_r", n_r},
                     {"n_s", cfg.n_s},
                     {"bc_r", modelop::to_string(bc)},
                     {"dim", s.op.dim}});
    setups.push_back(std::move(s));
  }

  std::optional<modelop::ModelCoefficients> bracket_coeffs;
  if (cfg.bracketing.enabled) {
    modelop::Side bside = cfg.bracketing.side.value_or(sides.size() == 1 ? sides.front() : modelop::Side::Minus);
    bracket_coeffs = build_coefficients(cfg, bside, prof);
  }

  const std::size_t nl = lambdas.size();
  std::vector<std::vector<eigcount::CountResult>> counts(setups.size(), std::vector<eigcount::CountResult>(nl));
  std::vector<bracketing::BracketResult> brackets(nl);
  std::vector<std::function<void()>> jobs;
  for (std::size_t li = 0; li < nl; ++li) {
    const double lam = lambdas[li];
    for (std::size_t si = 0; si < setups.size(); ++si) {
      jobs.emplace_back([&, li, si, lam] {
        with_context(lam, modelop::to_string(setups[si].side),
                     [&] { counts[si][li] = eigcount::count_below(setups[si].op, -lam / a2); });
      });
    }
    if (bracket_coeffs) {
      jobs.emplace_back([&, li, lam] {
        const double leff = lam / a2;
        const int m = cfg.bracketing.m.value_or(static_cast<int>(std::ceil(cfg.bracketing.factor / std::sqrt(leff))));
        const int n = cfg.bracketing.n.value_or(m);
        const double sup = bracket_coeffs->V_max() + bracket_coeffs->nu_sup();
        const double M = cfg.bracketing.M.value_or(std::max(2.0, 2.0 * sup));
        with_context(lam, "bracket", [&] { brackets[li] = bracketing::bracket_counts(*bracket_coeffs, leff, m, n, M); });
      });
    }
  }
  run_pool(jobs, worker_count());

  json wall = json::array();
  bool sandwich_ok = true;
  for (std::size_t li = 0; li < nl; ++li) {
    ReportRow row;
    row.lambda = lambdas[li];
    row.predicted_constant = report.predicted_constant;
    double sum = 0.0;
    for (std::size_t si = 0; si < setups.size(); ++si) {
      const long c = counts[si][li].count;
      sum += static_cast<double>(c);
      if (setups[si].side == modelop::Side::Minus) row.count_minus = c;
      else row.count_plus = c;
      wall.push_back({{"lambda", row.lambda}, {"side", modelop::to_string(setups[si].side)},
                      {"wall_time", counts[si][li].wall_time}});
    }
    if (bracket_coeffs) {
      row.bracket_lower = brackets[li].lower;
      row.bracket_upper = brackets[li].upper;
    }
    row.lambda_times_count = row.lambda * sum / static_cast<double>(setups.size());
    row.relative_error = relative_error(row.lambda_times_count, row.predicted_constant);
    if (row.count_plus >= 0 && row.count_minus >= 0 && row.count_plus > row.count_minus) sandwich_ok = false;
    report.rows.push_back(row);
  }

  report.metadata = {
      {"version", kVersion},
      {"schema_version", kSchemaVersion},
      {"config", cfg.raw},
      {"alpha", cfg.alpha},
      {"alpha_scaling", "counts at coupling alpha and depth lambda are counts of the unit-coupling model at depth lambda/alpha^2"},
      {"note", "the finite-rank constant relating model and true counts is unknown; compare lambda*count slopes only"},
      {"grids", grids},
      {"sandwich_ok", sandwich_ok},
      {"wall_times", wall},
      {"total_wall_time", std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count()},
  };
  if (bracket_coeffs) {
    json b = json::array();
    for (const auto& r : brackets) {
      b.push_back({{"lambda_effective", r.lambda}, {"m", r.m}, {"n", r.n}, {"M", r.M}, {"lower", r.lower},
                   {"upper", r.upper}, {"edge_count", r.edge_count}, {"edge_grid", r.edge_grid}});
    }
    report.metadata["bracketing"] = b;
  }
  return report;
}

json to_json(const WeylReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"lambda", r.lambda},
                    {"count_plus", r.count_plus},
                    {"count_minus", r.count_minus},
                    {"bracket_lower", r.bracket_lower},
                    {"bracket_upper", r.bracket_upper},
                    {"lambda_times_count", r.lambda_times_count},
                    {"predicted_constant", r.predicted_constant},
                    {"relative_error", r.relative_error}});
  }
  return {{"predicted_constant", report.predicted_constant}, {"rows", rows}, {"metadata", report.metadata}};
}

WeylReport report_from_json(const json& j) {
  try {
    WeylReport report;
    report.predicted_constant = j.at("predicted_constant").get<double>();
    for (const auto& r : j.at("rows")) {
      ReportRow row;
      row.lambda = r.at("lambda").get<double>();
      row.count_plus = r.at("count_plus").get<long>();
      row.count_minus = r.at("count_minus").get<long>();
      row.bracket_lower = r.at("bracket_lower").get<long>();
      row.bracket_upper = r.at("bracket_upper").get<long>();
      row.lambda_times_count = r.at("lambda_times_count").get<double>();
      row.predicted_constant = r.at("predicted_constant").get<double>();
      row.relative_error = r.at("relative_error").get<double>();
      report.rows.push_back(row);
    }
    if (auto it = j.find("metadata"); it != j.end()) report.metadata = *it;
    return report;
  } catch (const json::exception& e) {
    throw FileError(std::string("malformed report: ") + e.what());
  }
}

void write_report(const WeylReport& report, const std::filesystem::path& path, ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  if (format == ReportFormat::JSON) {
    out << to_json(report).dump(2) << '\n';
  } else {
    out << "lambda,count_plus,count_minus,bracket_lower,bracket_upper,lambda_times_count,predicted_constant,"
           "relative_error\n";
    for (const auto& r : report.rows) {
      out << format_double(r.lambda) << ',' << r.count_plus << ',' << r.count_minus << ',' << r.bracket_lower << ','
          << r.bracket_upper << ',' << format_double(r.lambda_times_count) << ','
          << format_double(r.predicted_constant) << ',' << format_double(r.relative_error) << '\n';
    }
  }
  if (!out) throw FileError("write failed for " + path.string());
}

WeylReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FileError(path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

int run_config(const std::filesystem::path& path, std::ostream& err) {
  try {
    const StudyConfig cfg = load_config(path);
    const WeylReport report = weyl_study(cfg);
    if (cfg.csv_out) write_report(report, *cfg.csv_out, ReportFormat::CSV);
    if (cfg.json_out) write_report(report, *cfg.json_out, ReportFormat::JSON);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.error_class());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return exit_code_for(ErrorClass::Resource);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(ErrorClass::Numerical);
  }
}

}  // namespace robinweyl::study
