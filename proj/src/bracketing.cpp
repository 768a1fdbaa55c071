#include "robinweyl/bracketing.hpp"

#include "robinweyl/eigcount.hpp"
#include "robinweyl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace robinweyl::bracketing {

namespace {

constexpr int kSamples = 1000;

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

template <class F>
Range sample_range(F&& f, double a, double b) {
  Range r;
  for (int i = 0; i < kSamples; ++i) r.add(f(a + (b - a) * i / (kSamples - 1)));
  return r;
}

// V is piecewise linear between its samples, so its extrema sit at the
// endpoints or at interior sample nodes.
Range potential_range(const modelop::ModelCoefficients& c, double s0, double s1) {
  Range r = sample_range([&](double s) { return c.V_at(s); }, s0, s1);
  const double h = c.ell / static_cast<double>(c.V.size());
  for (long i = static_cast<long>(std::ceil(s0 / h)); i * h <= s1; ++i) r.add(c.V_at(i * h));
  return r;
}

void check_partition(const BracketPartition& p) {
  if (!p.coeffs) throw DomainError("bracketing: partition has no coefficients");
  if (p.m < 2 || p.n < 2) throw DomainError("bracketing: m and n must be >= 2");
  if (!(p.lambda > 0.0)) throw DomainError("bracketing: lambda must be positive");
  if (!(p.M > 0.0)) throw DomainError("bracketing: M must be positive");
}

}  // namespace

long ellipse_lattice_count(double A, double B, double C, double lambda, bool include_zero, double budget) {
  if (!(lambda > 0.0)) throw DomainError("ellipse_lattice_count: lambda must be positive");
  if (!(A > 0.0) || !(B > 0.0)) throw DomainError("ellipse_lattice_count: A and B must be positive");
  if (C <= 0.0) return 0;
  const double rhs = C / lambda;
  const double rad = std::sqrt(rhs);
  const double box = (A * rad + 1.0) * (B * rad + 1.0);
  if (box > budget) {
    std::ostringstream msg;
    msg << "ellipse_lattice_count: " << box << " candidates exceed the budget of " << budget
        << "; the asymptotic count is pi*A*B*C/(4*lambda) = " << std::numbers::pi * A * B * C / (4.0 * lambda);
    throw ResourceError(msg.str());
  }
  const long first = include_zero ? 0 : 1;
  long total = 0;
  const auto kmax = static_cast<long>(std::floor(A * rad)) + 1;
  for (long kappa = first; kappa <= kmax; ++kappa) {
    const double kk = static_cast<double>(kappa) / A;
    const double rest = rhs - kk * kk;
    if (rest < 0.0) break;
    auto tmax = static_cast<long>(std::floor(B * std::sqrt(rest)));
    // exact correction against rounding in the square root
    auto inside = [&](long tau) {
      const double tt = static_cast<double>(tau) / B;
      return kk * kk + tt * tt <= rhs;
    };
    while (inside(tmax + 1)) ++tmax;
    while (tmax >= 0 && !inside(tmax)) --tmax;
    if (tmax >= first) total += tmax - first + 1;
  }
  return total;
}

long frozen_cell_count(const BracketPartition& p, int j, int k, FrozenSide side) {
  check_partition(p);
  if (j == 1) throw DomainError("frozen_cell_count: cell j=1 lies on the edge strip; use edge_strip_count");
  if (j < 2 || j > p.m || k < 1 || k > p.n) throw DomainError("frozen_cell_count: cell index out of range");
  const auto& c = *p.coeffs;
  const double lam = p.lambda;
  const double lr = lam * c.R;
  const double x_minus = p.x_lo(j);
  const double x_plus = p.x_hi(j);
  auto radius = [&](double x) { return c.R + x / lam; };
  const Range a = sample_range([&](double x) { return c.a_fn(radius(x)); }, x_minus, x_plus);
  const Range b = sample_range([&](double x) { return c.b_fn(radius(x)); }, x_minus, x_plus);
  const Range nu = sample_range([&](double x) { return c.nu_fn(radius(x)); }, x_minus, x_plus);
  const Range v = potential_range(c, (k - 1) * c.ell / p.n, k * c.ell / p.n);

  const bool dirichlet = side == FrozenSide::DirichletFrozen;
  const double a_f = dirichlet ? a.hi : a.lo;
  const double b_f = dirichlet ? b.hi : b.lo;
  const double pot = dirichlet ? v.lo + nu.lo : v.hi + nu.hi;
  // Dirichlet: b over the smallest (x+λR)², potential over x^{+ε}; Neumann the reverse.
  const double x_b = dirichlet ? x_minus : x_plus;
  const bool eps_pos = pot > 0.0;
  const double x_pot = (dirichlet == eps_pos) ? x_plus : x_minus;
  if (!(a_f > 0.0) || !(b_f > 0.0)) throw CoefficientBoundError("frozen_cell_count: nonpositive frozen coefficient");

  // a λπ²m²/M² κ² + b/(x_b+λR)² λπ²n²/ℓ² τ² ≤ pot/(x_pot+λR) − 1
  const double pi = std::numbers::pi;
  const double A = p.M / (pi * p.m * std::sqrt(a_f));
  const double B = c.ell * (x_b + lr) / (pi * p.n * std::sqrt(b_f));
  const double C = pot / (x_pot + lr) - 1.0;
  return ellipse_lattice_count(A, B, C, lam, !dirichlet);
}

EdgeStripResult edge_strip_count(const BracketPartition& p, int grid) {
  check_partition(p);
  if (grid < 2) throw DomainError("edge_strip_count: grid must be >= 2");
  const auto& c = *p.coeffs;
  const double lam = p.lambda;
  const double lr = lam * c.R;
  const double width = p.M / p.m;
  auto radius = [&](double x) { return c.R + x / lam; };
  const Range a = sample_range([&](double x) { return c.a_fn(radius(x)); }, 0.0, width);
  const Range b = sample_range([&](double x) { return c.b_fn(radius(x)); }, 0.0, width);
  const Range nu = sample_range([&](double x) { return c.nu_fn(radius(x)); }, 0.0, width);

  EdgeStripResult res;
  res.grid = grid;
  res.sigma = std::min(a.lo, b.lo);
  res.rho = c.V_max() + nu.hi;
  if (!(res.sigma > 0.0)) {
    throw CoefficientBoundError("edge_strip_count: inf min(a, b) over the edge strip is not positive");
  }

  const double h = width / grid;
  std::vector<double> weight(static_cast<std::size_t>(grid + 1), h);
  weight.front() = weight.back() = 0.5 * h;
  const double stiff = res.sigma * lam / h;
  std::vector<double> off(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i) {
    off[static_cast<std::size_t>(i)] =
        -stiff / std::sqrt(weight[static_cast<std::size_t>(i)] * weight[static_cast<std::size_t>(i + 1)]);
  }
  const double pi = std::numbers::pi;
  const double mode_scale = res.sigma * lam * p.m / (p.M + lam * p.m * c.R) * pi * pi / (c.ell * c.ell);
  for (long j = 0;; ++j) {
    const double mu = mode_scale * static_cast<double>(j * j) - res.rho;
    if (!(mu < 0.0)) break;
    ++res.active_modes;
    std::vector<double> diag(static_cast<std::size_t>(grid + 1));
    for (int i = 0; i <= grid; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const double edges = (i == 0 || i == grid) ? 1.0 : 2.0;
      diag[u] = edges * stiff / weight[u] + mu / (h * i + lr);
    }
    res.count += eigcount::tridiagonal_count_below(diag, off, -1.0);
  }
  return res;
}

BracketResult bracket_counts(const modelop::ModelCoefficients& coeffs, double lambda, int m, int n, double M) {
  if (m < 2 || n < 2) throw DomainError("bracket_counts: m and n must be >= 2");
  if (!(lambda > 0.0)) throw DomainError("bracket_counts: lambda must be positive");
  const double sup_pot = coeffs.V_max() + coeffs.nu_sup();
  if (!(M > sup_pot)) {
    std::ostringstream msg;
    msg << "bracket_counts: the cut-off needs M > sup (V(s) + nu(r)) = " << sup_pot << ", got M = " << M;
    throw HypothesisError(msg.str());
  }
  const BracketPartition part{m, n, M, lambda, &coeffs};
  BracketResult res;
  res.lambda = lambda;
  res.m = m;
  res.n = n;
  res.M = M;
  res.per_cell.reserve(static_cast<std::size_t>((m - 1) * n));
  for (int j = 2; j <= m; ++j) {
    for (int k = 1; k <= n; ++k) {
      CellCount cell{j, k, frozen_cell_count(part, j, k, FrozenSide::DirichletFrozen),
                     frozen_cell_count(part, j, k, FrozenSide::NeumannFrozen)};
      res.lower += cell.dirichlet_count;
      res.upper += cell.neumann_count;
      res.per_cell.push_back(cell);
    }
  }
  const EdgeStripResult edge = edge_strip_count(part);
  res.edge_count = edge.count;
  res.edge_active_modes = edge.active_modes;
  res.edge_grid = edge.grid;
  res.upper += edge.count;
  if (res.lower > res.upper) {
    throw ConsistencyError("bracket_counts: lower " + std::to_string(res.lower) + " exceeds upper " +
                           std::to_string(res.upper));
  }
  return res;
}

nlohmann::json to_json(const BracketResult& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.per_cell) {
    cells.push_back({{"j", c.j}, {"k", c.k}, {"dirichlet_count", c.dirichlet_count}, {"neumann_count", c.neumann_count}});
  }
  return {{"lower", r.lower},     {"upper", r.upper}, {"edge_count", r.edge_count},
          {"edge_active_modes", r.edge_active_modes}, {"edge_grid", r.edge_grid},
          {"lambda", r.lambda},   {"m", r.m},         {"n", r.n},
          {"M", r.M},             {"per_cell", cells}};
}

void write_cells_csv(const std::filesystem::path& path, const BracketResult& r) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out << "j,k,dirichlet_count,neumann_count\n";
  for (const auto& c : r.per_cell) out << c.j << ',' << c.k << ',' << c.dirichlet_count << ',' << c.neumann_count << '\n';
  if (!out) throw FileError("write failed for " + path.string());
}

}  // namespace robinweyl::bracketing
