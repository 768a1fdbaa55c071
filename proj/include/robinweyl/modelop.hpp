#pragma once

#include "robinweyl/geometry.hpp"

#include <Eigen/SparseCore>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace robinweyl::modelop {

enum class Side { Plus, Minus, Custom };

const char* to_string(Side side);

// The effective-operator constants that the asymptotic analysis leaves
// unspecified. Only lower-order terms depend on them.
struct ModelConstants {
  double aplus = 1.0;
  double aminus = 1.0;
  double A = 1.0;
  double CG = 1.0;
};

using RadialFunction = std::function<double(double)>;

/// Coefficients of the form
///   k(v) = ∫∫ a(r) v_r² + b(r)/r² v_s² − (V(s) + ν(r))/r v²  ds dr
/// on (R, ∞) × (0, ℓ).
struct ModelCoefficients {
  RadialFunction a_fn;
  RadialFunction b_fn;
  RadialFunction nu_fn;
  std::vector<double> V;  // V(j·ℓ/n), j = 0..n-1, periodic
  double R = 1.0;
  double ell = 0.0;
  Side side = Side::Custom;
  ModelConstants constants;

  double V_at(double s) const;
  double V_max() const;
  double V_min() const;
  double nu_sup() const;  // sup of ν over [R, ∞), sampled
};

struct CoefficientWitness {
  double a_min = 0.0;
  double b_min = 0.0;
};

/// Samples a and b on [R, ∞) and checks positivity and the limits at r = 10⁶.
/// Throws CoefficientBoundError on violation; returns the observed infima.
CoefficientWitness check_coefficients(const ModelCoefficients& coeffs);

/// Plus/Minus sides use the explicit forms of the effective operators K±;
/// Custom takes a = b = 1 and ν = 0 (replace the closures afterwards).
ModelCoefficients make_model_coefficients(const geometry::CurvatureProfile& profile, Side side, double R,
                                          const ModelConstants& constants = {});

/// Custom coefficients from explicit closures and potential samples.
ModelCoefficients make_custom_coefficients(std::vector<double> V, double ell, double R, RadialFunction a,
                                           RadialFunction b, RadialFunction nu);

enum class RadialBC { DirichletBoth, NeumannBoth, DirichletInnerNeumannOuter };
enum class STopology { Periodic, DirichletEnds, NeumannEnds };

const char* to_string(RadialBC bc);
const char* to_string(STopology top);

struct StripGrid {
  double R = 0.0;
  double R_max = 0.0;
  int n_r = 0;
  int n_s = 0;
  double h_r = 0.0;
  double h_s = 0.0;
  RadialBC bc_r = RadialBC::DirichletBoth;
  STopology s_topology = STopology::Periodic;

  static StripGrid make(double R, double R_max, int n_r, int n_s, double ell, RadialBC bc_r,
                        STopology s_topology = STopology::Periodic);

  int r_unknowns() const;
  int s_unknowns() const;
  int first_r_node() const;
  int first_s_node() const;
};

/// Outer truncation radius for a study whose smallest depth is lambda_min.
double r_max_policy(double V_max, double lambda_min, double R);

struct Entry {
  int row;
  int col;
  double value;
};

/// Symmetric matrix whose eigenvalues approximate those of the model
/// operator (mass matrix folded in). Only the lower triangle is stored.
struct DiscretizedOperator {
  int dim = 0;
  std::vector<Entry> entries;
  StripGrid grid;
  double mass_scaling = 1.0;

  Eigen::SparseMatrix<double> full_matrix() const;
  std::size_t nnz() const { return entries.size(); }
};

/// Wraps an arbitrary symmetric matrix (lower triangle is taken).
DiscretizedOperator from_matrix(const Eigen::SparseMatrix<double>& matrix);

struct AssemblyOptions {
  std::size_t max_unknowns = 4'000'000;
};

DiscretizedOperator assemble(const ModelCoefficients& coeffs, const StripGrid& grid,
                             const AssemblyOptions& options = {});

/// (1/4π) ∫∫ (V(s) − λ r)₊ dr ds over r ≥ R: the classical phase-space volume
/// of {ξ² + η²/r² − V/r ≤ −λ} divided by 4π².
double phase_space_volume(const ModelCoefficients& coeffs, double lambda);

/// "dim nnz" header, then "i j value" rows of the lower triangle (0-based).
void write_coordinate(const std::filesystem::path& path, const DiscretizedOperator& op);
DiscretizedOperator read_coordinate(const std::filesystem::path& path);

}  // namespace robinweyl::modelop
