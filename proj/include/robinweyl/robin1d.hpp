#pragma once

#include <vector>

namespace robinweyl::robin1d {

// Boundary condition imposed at t = δ; the Robin condition u′(0) + r·u(0) = 0
// always holds at t = 0.
enum class EndCondition { DirichletAtDelta, NeumannAtDelta };

const char* to_string(EndCondition bc);

/// Transversal width law δ(r) = c·r^{−ρ}.
struct DeltaLaw {
  double c = 1.0;
  double rho = 0.75;

  DeltaLaw(double c_, double rho_);
  double delta(double r) const;
  double delta_prime(double r) const;
};

/// Ground state of −u″ on (0, δ) with the Robin condition at 0.
///
/// The eigenvalue is E1 = −(k·r)² where t* = k·r·δ solves t·coth t = rδ
/// (Dirichlet at δ) or t·tanh t = rδ (Neumann at δ); the eigenfunction is
/// C·sinh(kr(δ − t)) resp. C·cosh(kr(δ − t)), normalized in L²(0, δ).
struct Robin1DSolution {
  EndCondition bc = EndCondition::NeumannAtDelta;
  double r = 0.0;
  double delta = 0.0;
  double k = 0.0;
  double E1 = 0.0;
  double C_norm = 0.0;
  double psi0_sq = 0.0;
  double psidelta_sq = 0.0;
  double dr_norm_sq = 0.0;

  double root() const { return k * r * delta; }
};

/// F(t) = t·coth t (Dirichlet) or t·tanh t (Neumann).
double root_function(EndCondition bc, double t);

/// Solves F(t) = rδ by bisection followed by Newton polishing.
/// Throws NoBoundStateError for Dirichlet with rδ ≤ 1.
Robin1DSolution solve_transversal(double r, double delta, EndCondition bc);

/// ψ(t) for t in [0, δ].
double eigenfunction_value(const Robin1DSolution& sol, double t);

/// ‖∂_r ψ‖² over (0, δ(r)) when δ follows `law`; requires sol.delta = law.delta(sol.r).
double dr_norm(const Robin1DSolution& sol, const DeltaLaw& law);

/// All eigenvalues (ascending) of the second-order finite-difference
/// discretization of −u″ on (0, δ) with n cells, built from the quadratic form
/// ∫u′² − r·u(0)² with lumped (trapezoid) mass.
std::vector<double> fd_oracle_1d(double r, double delta, EndCondition bc, int n);

/// Symmetric tridiagonal matrix used by fd_oracle_1d: diagonal and
/// sub-diagonal of M^{-1/2} K M^{-1/2}.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> offdiag;
};
Tridiagonal fd_matrix_1d(double r, double delta, EndCondition bc, int n);

}  // namespace robinweyl::robin1d
