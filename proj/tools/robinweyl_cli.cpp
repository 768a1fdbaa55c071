// robinweyl: command-line front end.
//
//   robinweyl curvature  --config geo.json    --out profile.csv
//   robinweyl robin1d    --config r1.json     --out solution.csv
//   robinweyl count      --config study.json  --out counts.json
//   robinweyl bracket    --config study.json  --out bracket.json
//   robinweyl weyl-study --config study.json  --out report.csv
//
// Exit codes: 0 ok, 2 config/file error, 3 numerical error, 4 resource error.

#include "robinweyl/bracketing.hpp"
#include "robinweyl/eigcount.hpp"
#include "robinweyl/errors.hpp"
#include "robinweyl/geometry.hpp"
#include "robinweyl/robin1d.hpp"
#include "robinweyl/study.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>

namespace {

using nlohmann::json;
namespace rw = robinweyl;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rw::FileError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw rw::ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw rw::FileError("cannot write " + path);
  out << j.dump(2) << '\n';
}

void cmd_curvature(const std::string& config, const std::string& out) {
  const json j = read_json(config);
  const auto spec = rw::study::parse_geometry(j);
  if (!spec.potential.empty()) throw rw::ConfigError("config field \"geometry\": curvature needs a cap or a CSV loop");
  const auto profile = rw::study::build_profile(spec);
  rw::geometry::write_profile_csv(out, profile);
  const rw::geometry::CurvatureProfile one[] = {profile};
  std::cout << json{{"length_ell", profile.length_ell},
                    {"samples", profile.kappa.size()},
                    {"kappa_plus_sq_integral", profile.kappa_plus_sq_integral},
                    {"weyl_constant_alpha1", rw::geometry::weyl_constant(one, 1.0)},
                    {"max_kappa", profile.max_kappa()}}
                   .dump(2)
            << '\n';
}

void cmd_robin1d(const std::string& config, const std::string& out) {
  const json j = read_json(config);
  // either a single case or {"cases": [...]}
  std::vector<json> cases;
  if (auto it = j.find("cases"); it != j.end()) {
    if (!it->is_array()) throw rw::ConfigError("config field \"cases\": expected an array");
    cases.assign(it->begin(), it->end());
  } else {
    cases.push_back(j);
  }
  std::ofstream csv(out);
  if (!csv) throw rw::FileError("cannot write " + out);
  csv << "r,delta,bc,k,E1,psi0_sq,psidelta_sq,dr_norm_sq\n" << std::setprecision(17);
  for (const json& c : cases) {
    auto num = [&](const char* key) {
      auto it = c.find(key);
      if (it == c.end() || !it->is_number()) {
        throw rw::ConfigError(std::string("config field \"") + key + "\": missing or not a number");
      }
      return it->get<double>();
    };
    const double r = num("r");
    const double delta = num("delta");
    const std::string bc_name = c.value("bc", std::string("Neumann"));
    rw::robin1d::EndCondition bc;
    if (bc_name == "Dirichlet") bc = rw::robin1d::EndCondition::DirichletAtDelta;
    else if (bc_name == "Neumann") bc = rw::robin1d::EndCondition::NeumannAtDelta;
    else throw rw::ConfigError("config field \"bc\": expected Dirichlet or Neumann");
    const auto sol = rw::robin1d::solve_transversal(r, delta, bc);
    csv << r << ',' << delta << ',' << rw::robin1d::to_string(bc) << ',' << sol.k << ',' << sol.E1 << ','
        << sol.psi0_sq << ',' << sol.psidelta_sq << ',' << sol.dr_norm_sq << '\n';
  }
  if (!csv) throw rw::FileError("write failed for " + out);
}

void cmd_count(const std::string& config, const std::string& out) {
  auto cfg = rw::study::load_config(config);
  cfg.bracketing.enabled = false;
  const auto report = rw::study::weyl_study(cfg);
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"lambda", r.lambda}, {"count_plus", r.count_plus}, {"count_minus", r.count_minus}});
  }
  write_json(out, {{"counts", rows}, {"metadata", report.metadata}});
}

void cmd_bracket(const std::string& config, const std::string& out) {
  const auto cfg = rw::study::load_config(config);
  std::optional<rw::geometry::CurvatureProfile> profile;
  if (cfg.geometry.potential.empty()) profile = rw::study::build_profile(cfg.geometry);
  rw::modelop::Side side = cfg.bracketing.side.value_or(
      cfg.side == rw::study::StudySide::Plus     ? rw::modelop::Side::Plus
      : cfg.side == rw::study::StudySide::Custom ? rw::modelop::Side::Custom
                                                 : rw::modelop::Side::Minus);
  const auto coeffs = rw::study::build_coefficients(cfg, side, profile ? &*profile : nullptr);
  json results = json::array();
  for (double lam : cfg.lambdas) {
    const double leff = lam / (cfg.alpha * cfg.alpha);
    const int m = cfg.bracketing.m.value_or(static_cast<int>(std::ceil(cfg.bracketing.factor / std::sqrt(leff))));
    const int n = cfg.bracketing.n.value_or(m);
    const double M = cfg.bracketing.M.value_or(std::max(2.0, 2.0 * (coeffs.V_max() + coeffs.nu_sup())));
    results.push_back(rw::bracketing::to_json(rw::bracketing::bracket_counts(coeffs, leff, m, n, M)));
  }
  write_json(out, {{"side", rw::modelop::to_string(side)}, {"brackets", results}});
}

void cmd_weyl_study(const std::string& config, const std::string& out) {
  auto cfg = rw::study::load_config(config);
  if (!out.empty()) cfg.csv_out = out;
  const auto report = rw::study::weyl_study(cfg);
  if (cfg.csv_out) rw::study::write_report(report, *cfg.csv_out, rw::study::ReportFormat::CSV);
  if (cfg.json_out) rw::study::write_report(report, *cfg.json_out, rw::study::ReportFormat::JSON);
  if (!cfg.csv_out && !cfg.json_out) std::cout << rw::study::to_json(report).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weyl-law studies for Robin Laplacians on conical domains"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  struct Sub {
    const char* name;
    const char* help;
    void (*run)(const std::string&, const std::string&);
    bool out_required;
  };
  const Sub subs[] = {
      {"curvature", "geodesic curvature profile of a cross-section (CSV)", cmd_curvature, true},
      {"robin1d", "transversal 1D Robin problem (CSV)", cmd_robin1d, true},
      {"count", "eigenvalue counts of the model operators (JSON)", cmd_count, true},
      {"bracket", "Dirichlet-Neumann bracketing counts (JSON)", cmd_bracket, true},
      {"weyl-study", "full lambda schedule, report CSV", cmd_weyl_study, false},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> registered;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config, "JSON config")->required();
    auto* o = sub->add_option("--out", out, "output path");
    if (s.out_required) o->required();
    registered.emplace_back(sub, &s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    for (auto& [sub, s] : registered) {
      if (sub->parsed()) s->run(config, out);
    }
    return 0;
  } catch (const rw::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rw::exit_code_for(e.error_class());
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
