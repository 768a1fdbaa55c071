#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "robinweyl/errors.hpp"
#include "robinweyl/geometry.hpp"
#include "robinweyl/study.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <sys/wait.h>

using namespace robinweyl;
using namespace robinweyl::study;
using nlohmann::json;
namespace fs = std::filesystem;
constexpr double pi = std::numbers::pi;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "rw_study_tests";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_config(const std::string& name, const json& j) {
  const auto p = scratch(name);
  std::ofstream(p) << j.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int line_count(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

// Coarse grid, cheap enough for unit tests.
json small_config(double theta0, const std::string& side, json lambdas) {
  return {{"schema_version", 1},
          {"geometry", {{"cap_theta0", theta0}}},
          {"alpha", 1.0},
          {"side", side},
          {"lambdas", lambdas},
          {"grid", {{"h_r", 0.2}, {"n_s", 16}}}};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ROBINWEYL_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("missing alpha names the field") {
  json j = small_config(pi / 4, "Minus", {0.2});
  j.erase("alpha");
  try {
    parse_config(j);
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
  }
}

TEST_CASE("lambdas must descend") {
  CHECK_THROWS_AS(parse_config(small_config(pi / 4, "Minus", {0.1, 0.2})), ConfigError);
  CHECK_THROWS_AS(parse_config(small_config(pi / 4, "Minus", {0.1, 0.1})), ConfigError);
  CHECK_THROWS_AS(parse_config(small_config(pi / 4, "Minus", {0.1, -0.2})), ConfigError);
  CHECK_THROWS_AS(parse_config(small_config(pi / 4, "Sideways", {0.2})), ConfigError);
  json j = small_config(pi / 4, "Minus", {0.2});
  j["alpha"] = -1.0;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = small_config(pi / 4, "Minus", {0.2});
  j["schema_version"] = 7;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  CHECK_NOTHROW(parse_config(small_config(pi / 4, "Minus", {0.2, 0.1})));
}

TEST_CASE("minimal config writes one row") {
  json j = small_config(pi / 4, "Minus", {0.2});
  const auto csv = scratch("minimal.csv");
  fs::remove(csv);
  j["outputs"] = {{"csv", csv.string()}};
  std::ostringstream err;
  CHECK(run_config(write_config("minimal.json", j), err) == 0);
  CHECK(err.str().empty());
  CHECK(line_count(csv) == 2);
}

TEST_CASE("run_config maps errors to exit codes") {
  std::ostringstream err;
  json j = small_config(pi / 4, "Minus", {0.2});
  j.erase("alpha");
  CHECK(run_config(write_config("noalpha.json", j), err) == 2);
  CHECK(err.str().find("alpha") != std::string::npos);
  CHECK(run_config(scratch("does_not_exist.json"), err) == 2);
}

TEST_CASE("report writers") {
  WeylReport empty;
  const auto p = scratch("empty.csv");
  write_report(empty, p, ReportFormat::CSV);
  CHECK(slurp(p) ==
        "lambda,count_plus,count_minus,bracket_lower,bracket_upper,lambda_times_count,predicted_constant,relative_error\n");

  WeylReport r;
  r.predicted_constant = 0.17678;
  for (int i = 0; i < 3; ++i) {
    ReportRow row;
    row.lambda = 0.2 / (1 << i);
    row.count_plus = i;
    row.count_minus = 2 * i + 1;
    row.bracket_lower = -1;
    row.bracket_upper = -1;
    row.lambda_times_count = row.lambda * (1.5 * i + 0.5);
    row.predicted_constant = r.predicted_constant;
    row.relative_error = relative_error(row.lambda_times_count, r.predicted_constant);
    r.rows.push_back(row);
  }
  r.metadata = {{"note", "x"}};
  const auto jp = scratch("three.json");
  write_report(r, jp, ReportFormat::JSON);
  const auto back = read_report_json(jp);
  CHECK(back.rows == r.rows);
  CHECK(back.predicted_constant == r.predicted_constant);
  CHECK(back.metadata == r.metadata);

  const auto cp = scratch("three.csv");
  write_report(r, cp, ReportFormat::CSV);
  CHECK(line_count(cp) == 4);
  CHECK_THROWS_AS(write_report(r, "/nonexistent_dir/x.csv", ReportFormat::CSV), FileError);
}

TEST_CASE("relative error") {
  CHECK(relative_error(0.2, 0.25) == doctest::Approx(0.2));
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(0.5, 0.0) == doctest::Approx(0.5 / 1e-12));
}

TEST_CASE("identical configs give identical CSV") {
  json j = small_config(pi / 4, "Both", {0.2, 0.1});
  const auto a = scratch("det_a.csv"), b = scratch("det_b.csv");
  j["outputs"] = {{"csv", a.string()}};
  std::ostringstream err;
  REQUIRE(run_config(write_config("det_a.json", j), err) == 0);
  j["outputs"] = {{"csv", b.string()}};
  REQUIRE(run_config(write_config("det_b.json", j), err) == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("great-circle cap has no Weyl term") {
  const auto cfg = parse_config(small_config(pi / 2, "Both", {0.2, 0.1, 0.05}));
  const auto rep = weyl_study(cfg);
  CHECK(rep.predicted_constant == doctest::Approx(0.0).epsilon(1e-9));
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows.back().count_minus - rep.rows.front().count_minus <= 2);
  CHECK(rep.rows.back().count_plus - rep.rows.front().count_plus <= 2);
}

TEST_CASE("plus count never exceeds minus count") {
  const auto rep = weyl_study(parse_config(small_config(pi / 4, "Both", {0.2, 0.1, 0.05})));
  for (const auto& row : rep.rows) {
    CHECK(row.count_plus >= 0);
    CHECK(row.count_plus <= row.count_minus);
  }
  CHECK(rep.metadata.at("sandwich_ok") == true);
}

TEST_CASE("coupling alpha rescales the depth") {
  json j2 = small_config(pi / 4, "Minus", {0.4});
  j2["alpha"] = 2.0;
  json j1 = small_config(pi / 4, "Minus", {0.1});
  const auto r2 = weyl_study(parse_config(j2));
  const auto r1 = weyl_study(parse_config(j1));
  CHECK(std::abs(r2.predicted_constant / 0.4 - r1.predicted_constant / 0.1) <= 1e-10);
  CHECK(r2.rows[0].count_minus == r1.rows[0].count_minus);
  CHECK(r2.predicted_constant == doctest::Approx(4 * r1.predicted_constant).epsilon(1e-14));
}

TEST_CASE("Plus side approaches the Weyl constant from below") {
  json j = small_config(pi / 4, "Plus", {0.2, 0.1, 0.05});
  j.erase("grid");
  const auto rep = weyl_study(parse_config(j));
  const auto& last = rep.rows.back();
  MESSAGE("lambda*count_plus at 0.05: " << 0.05 * last.count_plus);
  CHECK(0.05 * last.count_plus <= 0.17678);
  CHECK(std::abs(0.05 * last.count_plus - 0.17678) <= 0.2 * 0.17678);
}

TEST_CASE("bare potential requires the Custom side") {
  json j = {{"geometry", {{"potential", {{"V", {1.0}}, {"ell", 2 * pi}}}}},
            {"alpha", 1.0},
            {"side", "Minus"},
            {"lambdas", {0.2}}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j["side"] = "Custom";
  j["grid"] = {{"h_r", 0.1}, {"n_s", 32}};
  const auto rep = weyl_study(parse_config(j));
  CHECK(rep.predicted_constant == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rep.rows[0].count_minus == -1);
  CHECK(rep.rows[0].count_plus == 1);
}

TEST_CASE("cli exit codes") {
  json good = small_config(pi / 4, "Minus", {0.2});
  const auto cfg = write_config("cli_good.json", good);
  CHECK(run_cli("weyl-study --config " + cfg.string() + " --out " + scratch("cli.csv").string()) == 0);
  CHECK(line_count(scratch("cli.csv")) == 2);
  CHECK(run_cli("count --config " + cfg.string() + " --out " + scratch("cli_count.json").string()) == 0);
  CHECK(run_cli("curvature --config " + cfg.string() + " --out " + scratch("cli_prof.csv").string()) == 0);
  CHECK(run_cli("bracket --config " + cfg.string() + " --out " + scratch("cli_br.json").string()) == 0);
  const auto r1 = write_config("cli_r1.json", json{{"r", 2.0}, {"delta", 1.0}, {"bc", "Dirichlet"}});
  CHECK(run_cli("robin1d --config " + r1.string() + " --out " + scratch("cli_r1.csv").string()) == 0);
  CHECK(slurp(scratch("cli_r1.csv")).rfind("r,delta,bc,k,E1,psi0_sq,psidelta_sq,dr_norm_sq\n", 0) == 0);

  json noalpha = good;
  noalpha.erase("alpha");
  CHECK(run_cli("weyl-study --config " + write_config("cli_bad.json", noalpha).string()) == 2);
  CHECK(run_cli("weyl-study --config " + scratch("missing.json").string()) == 2);
  CHECK(run_cli("frobnicate") == 2);

  const auto weak = write_config("cli_weak.json", json{{"r", 0.5}, {"delta", 1.0}, {"bc", "Dirichlet"}});
  CHECK(run_cli("robin1d --config " + weak.string() + " --out " + scratch("cli_weak.csv").string()) == 3);

  json huge = good;
  huge["grid"] = {{"h_r", 1e-4}, {"n_s", 4096}};
  CHECK(run_cli("count --config " + write_config("cli_huge.json", huge).string() + " --out " +
                scratch("cli_huge.json.out").string()) == 4);
}
