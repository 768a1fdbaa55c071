#include "robinweyl/robin1d.hpp"

#include "robinweyl/errors.hpp"
#include "robinweyl/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace robinweyl::robin1d {

namespace {

bool dirichlet(EndCondition bc) { return bc == EndCondition::DirichletAtDelta; }

double log_sinh(double x) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  if (x < 20.0) return std::log(std::sinh(x));
  return x - std::log(2.0) + std::log1p(-std::exp(-2.0 * x));
}

double log_cosh(double x) {
  x = std::abs(x);
  if (x < 20.0) return std::log(std::cosh(x));
  return x - std::log(2.0) + std::log1p(std::exp(-2.0 * x));
}

// sinh T − T, accurate for small T.
double sinh_minus_x(double t) {
  if (t < 1e-2) {
    const double t2 = t * t;
    return t * t2 / 6.0 * (1.0 + t2 / 20.0 + t2 * t2 / 840.0);
  }
  return std::sinh(t) - t;
}

// log(sinh T ∓ T), upper sign for Dirichlet.
double log_sinh_pm(EndCondition bc, double t) {
  if (t > 40.0) {
    const double e = std::exp(-t);
    const double corr = dirichlet(bc) ? (-e * e - 2.0 * t * e) : (-e * e + 2.0 * t * e);
    return t - std::log(2.0) + std::log1p(corr);
  }
  return dirichlet(bc) ? std::log(sinh_minus_x(t)) : std::log(std::sinh(t) + t);
}

// (cosh T ∓ 1)/(sinh T ∓ T).
double cosh_over_sinh(EndCondition bc, double t) {
  if (t > 40.0) {
    const double e = std::exp(-t);
    const double sgn = dirichlet(bc) ? -1.0 : 1.0;
    return (1.0 + e * e + sgn * 2.0 * e) / (1.0 - e * e + sgn * 2.0 * t * e);
  }
  if (dirichlet(bc)) {
    // cosh T − 1 = 2 sinh²(T/2)
    const double s = std::sinh(0.5 * t);
    return 2.0 * s * s / sinh_minus_x(t);
  }
  return (std::cosh(t) + 1.0) / (std::sinh(t) + t);
}

double root_derivative(EndCondition bc, double t) {
  if (dirichlet(bc)) {
    if (t < 1e-4) return 2.0 * t / 3.0;
    const double sh = std::sinh(t);
    return std::cosh(t) / sh - t / (sh * sh);
  }
  const double ch = std::cosh(t);
  return std::tanh(t) + t / (ch * ch);
}

double solve_root(EndCondition bc, double u) {
  double lo = 0.0;
  double hi = u + 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (root_function(bc, mid) < u) lo = mid; else hi = mid;
    if (hi - lo < 1e-15 * hi) break;
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {
    const double f = root_function(bc, t) - u;
    if (std::abs(f) <= 1e-15 * u) break;
    const double step = f / root_derivative(bc, t);
    const double next = t - step;
    if (!(next > lo && next < hi)) break;
    t = next;
  }
  return t;
}

// Log of the normalization factor C and its r-derivative pieces.
double log_norm(EndCondition bc, double root, double delta) {
  const double big_t = 2.0 * root;
  return 0.5 * (std::log(2.0 * big_t) - std::log(delta) - log_sinh_pm(bc, big_t));
}

const GaussLegendre& gauss64() {
  static const GaussLegendre gl(64);
  return gl;
}

}  // namespace

const char* to_string(EndCondition bc) {
  return dirichlet(bc) ? "Dirichlet" : "Neumann";
}

DeltaLaw::DeltaLaw(double c_, double rho_) : c(c_), rho(rho_) {
  if (!(c > 0.0)) throw DomainError("DeltaLaw: c must be positive");
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("DeltaLaw: rho must lie in (0, 1]");
}

double DeltaLaw::delta(double r) const { return c * std::pow(r, -rho); }

double DeltaLaw::delta_prime(double r) const { return -rho * delta(r) / r; }

double root_function(EndCondition bc, double t) {
  if (dirichlet(bc)) {
    if (t < 1e-8) return 1.0 + t * t / 3.0;
    return t / std::tanh(t);
  }
  return t * std::tanh(t);
}

Robin1DSolution solve_transversal(double r, double delta, EndCondition bc) {
  if (!(r > 0.0)) throw DomainError("solve_transversal: r must be positive");
  if (!(delta > 0.0)) throw DomainError("solve_transversal: delta must be positive");
  const double u = r * delta;
  if (dirichlet(bc) && u <= 1.0) {
    throw NoBoundStateError("solve_transversal: Dirichlet problem has no negative eigenvalue for r*delta <= 1 (r*delta = " +
                            std::to_string(u) + ")");
  }
  const double t = solve_root(bc, u);

  Robin1DSolution sol;
  sol.bc = bc;
  sol.r = r;
  sol.delta = delta;
  sol.k = t / u;
  const double kr = sol.k * r;
  sol.E1 = -(kr * kr);
  const double big_t = 2.0 * t;
  sol.C_norm = std::exp(log_norm(bc, t, delta));
  sol.psi0_sq = 2.0 * kr * cosh_over_sinh(bc, big_t);
  sol.psidelta_sq = dirichlet(bc) ? 0.0 : sol.C_norm * sol.C_norm;
  sol.dr_norm_sq = dr_norm(sol, DeltaLaw(delta * std::pow(r, 0.75), 0.75));
  return sol;
}

double eigenfunction_value(const Robin1DSolution& sol, double t) {
  if (!(t >= 0.0 && t <= sol.delta)) throw DomainError("eigenfunction_value: t outside [0, delta]");
  const double phase = sol.k * sol.r * (sol.delta - t);
  const double lc = std::log(sol.C_norm);
  if (dirichlet(sol.bc)) return phase <= 0.0 ? 0.0 : std::exp(lc + log_sinh(phase));
  return std::exp(lc + log_cosh(phase));
}

double dr_norm(const Robin1DSolution& sol, const DeltaLaw& law) {
  const double r = sol.r;
  const double delta = sol.delta;
  if (std::abs(delta - law.delta(r)) > 1e-10 * delta) {
    throw ConsistencyError("dr_norm: solution delta does not match the delta law at r");
  }
  const EndCondition bc = sol.bc;
  const double t = sol.root();
  const double d_delta = law.delta_prime(r);
  const double d_u = delta + r * d_delta;
  const double d_t = d_u / root_derivative(bc, t);
  const double g = t / delta;
  const double d_g = d_t / delta - t * d_delta / (delta * delta);
  const double big_t = 2.0 * t;
  const double d_big_t = 2.0 * d_t;
  const double d_log_c =
      0.5 * d_big_t / big_t - 0.5 * d_delta / delta - 0.5 * cosh_over_sinh(bc, big_t) * d_big_t;
  const double lc = log_norm(bc, t, delta);

  auto integrand = [&](double x) {
    const double phase = g * (delta - x);
    const double d_phase = d_g * (delta - x) + g * d_delta;
    const double ls = dirichlet(bc) ? log_sinh(phase) : log_cosh(phase);
    const double lds = dirichlet(bc) ? log_cosh(phase) : log_sinh(phase);
    const double val = d_log_c * std::exp(lc + ls) + d_phase * std::exp(lc + lds);
    return val * val;
  };
  return gauss64().integrate(integrand, 0.0, delta);
}

Tridiagonal fd_matrix_1d(double r, double delta, EndCondition bc, int n) {
  if (n < 64) throw DomainError("fd_oracle_1d: grid size must be >= 64");
  if (!(delta > 0.0)) throw DomainError("fd_oracle_1d: delta must be positive");
  const double h = delta / n;
  const int nodes = dirichlet(bc) ? n : n + 1;  // node n is removed for Dirichlet
  std::vector<double> diag(static_cast<std::size_t>(nodes), 0.0);
  std::vector<double> weight(static_cast<std::size_t>(nodes), h);
  weight[0] = 0.5 * h;
  if (!dirichlet(bc)) weight[static_cast<std::size_t>(n)] = 0.5 * h;

  Tridiagonal tri;
  tri.offdiag.assign(static_cast<std::size_t>(nodes - 1), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(i);
    diag[a] += 1.0 / h;
    if (i + 1 < nodes) {
      diag[a + 1] += 1.0 / h;
      tri.offdiag[a] = -1.0 / (h * std::sqrt(weight[a] * weight[a + 1]));
    }
  }
  diag[0] -= r;
  tri.diag.resize(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) tri.diag[i] = diag[i] / weight[i];
  return tri;
}

std::vector<double> fd_oracle_1d(double r, double delta, EndCondition bc, int n) {
  const Tridiagonal tri = fd_matrix_1d(r, delta, bc, n);
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(tri.diag.data(), static_cast<Eigen::Index>(tri.diag.size()));
  Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(tri.offdiag.data(), static_cast<Eigen::Index>(tri.offdiag.size()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("fd_oracle_1d: tridiagonal eigensolver failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace robinweyl::robin1d
