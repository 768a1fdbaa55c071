#pragma once

#include "robinweyl/bracketing.hpp"
#include "robinweyl/eigcount.hpp"
#include "robinweyl/geometry.hpp"
#include "robinweyl/modelop.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace robinweyl::study {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

enum class StudySide { Plus, Minus, Both, Custom };

const char* to_string(StudySide side);

/// Where the cross-section (or the bare potential) comes from. Exactly one of
/// the three alternatives is set.
struct GeometrySpec {
  std::optional<double> cap_theta0;
  std::optional<std::filesystem::path> csv_path;
  geometry::Vec3 interior_point = geometry::Vec3(0.0, 0.0, 1.0);
  // bare potential: V samples (a single value means constant) on a loop of length ell
  std::vector<double> potential;
  double potential_ell = 0.0;
  int n_samples = 2048;
};

struct BracketSchedule {
  bool enabled = false;
  std::optional<int> m;  // unset: ⌈factor/√λ⌉
  std::optional<int> n;
  double factor = 4.0;
  std::optional<double> M;  // unset: max(2, 2·sup(V+ν))
  std::optional<modelop::Side> side;
};

struct StudyConfig {
  GeometrySpec geometry;
  double alpha = 1.0;
  StudySide side = StudySide::Both;
  std::vector<double> lambdas;
  std::optional<double> R;
  std::optional<double> R_max;
  double r_max_factor = 3.0;
  double r_max_margin = 10.0;
  double h_r = 0.05;
  int n_s = 64;
  std::optional<modelop::RadialBC> bc_r;
  modelop::ModelConstants constants;
  double custom_a = 1.0;
  double custom_b = 1.0;
  double custom_nu = 0.0;
  BracketSchedule bracketing;
  std::optional<std::filesystem::path> csv_out;
  std::optional<std::filesystem::path> json_out;
  nlohmann::json raw;  // echo for report metadata
};

/// The "geometry" object (plus the optional top-level "n_samples").
GeometrySpec parse_geometry(const nlohmann::json& root);

/// Validates against the schema; ConfigError names the offending field.
StudyConfig parse_config(const nlohmann::json& j);
StudyConfig load_config(const std::filesystem::path& path);

/// Curvature profile of the configured cross-section (not for bare potentials).
geometry::CurvatureProfile build_profile(const GeometrySpec& g);

/// Inner radius used when the config leaves R unset.
double default_R(modelop::Side side);
modelop::RadialBC default_bc(modelop::Side side);

/// Coefficients for one model side; profile may be null for bare potentials.
modelop::ModelCoefficients build_coefficients(const StudyConfig& cfg, modelop::Side side,
                                              const geometry::CurvatureProfile* profile);

/// The Weyl constant α²/(8π)∫V₊² of the configured potential.
double predicted_constant(const StudyConfig& cfg, const geometry::CurvatureProfile* profile);

struct ReportRow {
  double lambda = 0.0;
  long count_plus = -1;  // -1 marks a column that was not computed
  long count_minus = -1;
  long bracket_lower = -1;
  long bracket_upper = -1;
  double lambda_times_count = 0.0;
  double predicted_constant = 0.0;
  double relative_error = 0.0;

  bool operator==(const ReportRow&) const = default;
};

struct WeylReport {
  std::vector<ReportRow> rows;
  double predicted_constant = 0.0;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Runs the configured λ schedule, largest λ first. Coupling α at depth λ is
/// counted as depth λ/α² of the unit-coupling model (the cross-section is
/// scale invariant). Independent (λ, side) jobs share a worker pool whose size
/// comes from ROBINWEYL_WORKERS.
WeylReport weyl_study(const StudyConfig& cfg);

double relative_error(double lambda_times_count, double predicted);

enum class ReportFormat { CSV, JSON };

void write_report(const WeylReport& report, const std::filesystem::path& path, ReportFormat format);
WeylReport read_report_json(const std::filesystem::path& path);
nlohmann::json to_json(const WeylReport& report);
WeylReport report_from_json(const nlohmann::json& j);

/// Loads the config, runs the study and writes the configured outputs.
/// Returns the process exit code; diagnostics go to `err`.
int run_config(const std::filesystem::path& path, std::ostream& err);

std::size_t worker_count();

}  // namespace robinweyl::study
