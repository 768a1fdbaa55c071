#pragma once

#include "robinweyl/modelop.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace robinweyl::bracketing {

/// Lattice points (κ, τ) in ℕ² (include_zero) or ℕ*² with
/// κ²/A² + τ²/B² ≤ C/λ. Zero when C ≤ 0. Throws ResourceError when the
/// bounding box holds more than `budget` candidates.
long ellipse_lattice_count(double A, double B, double C, double lambda, bool include_zero, double budget = 1e8);

/// Partition of the rescaled half-strip x = λ(r − R) ∈ (0, M), s ∈ (0, ℓ)
/// into m × n rectangles. In these variables the model operator becomes
///   −λ∂ₓ a_λ ∂ₓ − λ b_λ/(x+λR)² ∂ₛ² − (V(s) + ν_λ(x))/(x+λR)
/// and its eigenvalues below −1 are counted, with f_λ(x) = f(R + x/λ).
struct BracketPartition {
  int m = 0;
  int n = 0;
  double M = 0.0;
  double lambda = 0.0;
  const modelop::ModelCoefficients* coeffs = nullptr;

  double x_lo(int j) const { return (j - 1) * M / m; }
  double x_hi(int j) const { return j * M / m; }
};

enum class FrozenSide { DirichletFrozen, NeumannFrozen };

/// Cell C(j, k), j ≥ 2: coefficients frozen at their cell extrema (1000
/// samples) in the direction that bounds the count from below (Dirichlet) or
/// above (Neumann), then the explicit rectangle eigenvalues are counted.
long frozen_cell_count(const BracketPartition& partition, int j, int k, FrozenSide side);

struct EdgeStripResult {
  long count = 0;
  int active_modes = 0;  // #{j : μ_j < 0}
  int grid = 4096;
  double sigma = 0.0;
  double rho = 0.0;
};

/// Upper bound for the Neumann count of the first column x ∈ (0, M/m)
/// through 1D operators −σλw″ + μ_j/(x+λR) w, one per Neumann s-mode j.
EdgeStripResult edge_strip_count(const BracketPartition& partition, int grid = 4096);

struct CellCount {
  int j = 0;
  int k = 0;
  long dirichlet_count = 0;
  long neumann_count = 0;
};

struct BracketResult {
  long lower = 0;
  long upper = 0;
  long edge_count = 0;
  int edge_active_modes = 0;
  int edge_grid = 0;
  std::vector<CellCount> per_cell;
  double lambda = 0.0;
  int m = 0;
  int n = 0;
  double M = 0.0;
};

BracketResult bracket_counts(const modelop::ModelCoefficients& coeffs, double lambda, int m, int n, double M);

nlohmann::json to_json(const BracketResult& r);
void write_cells_csv(const std::filesystem::path& path, const BracketResult& r);

}  // namespace robinweyl::bracketing
