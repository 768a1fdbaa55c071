#include "robinweyl/modelop.hpp"

#include "robinweyl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

namespace robinweyl::modelop {

namespace {

// Radii covering [R, R + 10⁷] with geometric density.
std::vector<double> sample_radii(double R) {
  std::vector<double> radii{R};
  constexpr int kSamples = 2000;
  for (int i = 0; i <= kSamples; ++i) {
    radii.push_back(R + std::pow(10.0, -4.0 + 11.0 * i / kSamples));
  }
  return radii;
}

}  // namespace

const char* to_string(Side side) {
  switch (side) {
    case Side::Plus: return "Plus";
    case Side::Minus: return "Minus";
    case Side::Custom: return "Custom";
  }
  return "?";
}

const char* to_string(RadialBC bc) {
  switch (bc) {
    case RadialBC::DirichletBoth: return "DirichletBoth";
    case RadialBC::NeumannBoth: return "NeumannBoth";
    case RadialBC::DirichletInnerNeumannOuter: return "DirichletInnerNeumannOuter";
  }
  return "?";
}

const char* to_string(STopology top) {
  switch (top) {
    case STopology::Periodic: return "Periodic";
    case STopology::DirichletEnds: return "DirichletEnds";
    case STopology::NeumannEnds: return "NeumannEnds";
  }
  return "?";
}

double ModelCoefficients::V_at(double s) const {
  const std::size_t n = V.size();
  if (n == 1) return V[0];
  const double h = ell / static_cast<double>(n);
  double u = std::fmod(s, ell);
  if (u < 0.0) u += ell;
  const double pos = u / h;
  const double fl = std::floor(pos);
  const std::size_t i = static_cast<std::size_t>(fl) % n;
  const double frac = pos - fl;
  return (1.0 - frac) * V[i] + frac * V[(i + 1) % n];
}

double ModelCoefficients::V_max() const { return *std::max_element(V.begin(), V.end()); }

double ModelCoefficients::V_min() const { return *std::min_element(V.begin(), V.end()); }

double ModelCoefficients::nu_sup() const {
  double sup = -std::numeric_limits<double>::infinity();
  for (double r : sample_radii(R)) sup = std::max(sup, nu_fn(r));
  return sup;
}

CoefficientWitness check_coefficients(const ModelCoefficients& coeffs) {
  CoefficientWitness w{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (double r : sample_radii(coeffs.R)) {
    w.a_min = std::min(w.a_min, coeffs.a_fn(r));
    w.b_min = std::min(w.b_min, coeffs.b_fn(r));
  }
  if (!(w.a_min > 0.0) || !(w.b_min > 0.0)) {
    throw CoefficientBoundError("model coefficients: inf a = " + std::to_string(w.a_min) + ", inf b = " +
                                std::to_string(w.b_min) + " on [R, inf); both must be positive (increase R)");
  }
  constexpr double kFar = 1e6;
  if (std::abs(coeffs.a_fn(kFar) - 1.0) > 1e-2 || std::abs(coeffs.b_fn(kFar) - 1.0) > 1e-2 ||
      std::abs(coeffs.nu_fn(kFar)) > 1e-2) {
    throw CoefficientBoundError("model coefficients: a, b -> 1 and nu -> 0 violated at r = 1e6");
  }
  return w;
}

ModelCoefficients make_model_coefficients(const geometry::CurvatureProfile& profile, Side side, double R,
                                          const ModelConstants& constants) {
  if (!(R >= 1.0)) throw DomainError("make_model_coefficients: R must be >= 1");
  ModelCoefficients c;
  c.V = profile.kappa;
  c.R = R;
  c.ell = profile.length_ell;
  c.side = side;
  c.constants = constants;
  switch (side) {
    case Side::Plus: {
      const double ap = constants.aplus;
      c.a_fn = [](double) { return 1.0; };
      c.b_fn = [ap](double r) { return 1.0 + ap * std::pow(r, -0.75); };
      c.nu_fn = [ap](double r) { return -ap * std::pow(r, -0.5); };
      break;
    }
    case Side::Minus: {
      const double am = constants.aminus;
      const double big_a = constants.A;
      const double cg = constants.CG;
      c.a_fn = [big_a](double r) { return 1.0 - big_a * std::pow(r, -1.5); };
      c.b_fn = [cg](double r) { return 1.0 - cg * std::pow(r, -0.75); };
      c.nu_fn = [am](double r) { return am / r; };
      break;
    }
    case Side::Custom:
      c.a_fn = [](double) { return 1.0; };
      c.b_fn = [](double) { return 1.0; };
      c.nu_fn = [](double) { return 0.0; };
      break;
  }
  check_coefficients(c);
  return c;
}

ModelCoefficients make_custom_coefficients(std::vector<double> V, double ell, double R, RadialFunction a,
                                           RadialFunction b, RadialFunction nu) {
  if (!(R >= 1.0)) throw DomainError("make_custom_coefficients: R must be >= 1");
  if (!(ell > 0.0)) throw DomainError("make_custom_coefficients: ell must be positive");
  if (V.empty()) throw DomainError("make_custom_coefficients: empty potential");
  ModelCoefficients c;
  c.V = std::move(V);
  c.ell = ell;
  c.R = R;
  c.side = Side::Custom;
  c.a_fn = std::move(a);
  c.b_fn = std::move(b);
  c.nu_fn = std::move(nu);
  check_coefficients(c);
  return c;
}

StripGrid StripGrid::make(double R, double R_max, int n_r, int n_s, double ell, RadialBC bc_r,
                          STopology s_topology) {
  if (!(R_max > R)) throw DomainError("StripGrid: R_max must exceed R");
  if (n_r < 2) throw DomainError("StripGrid: n_r must be >= 2");
  if (n_s < (s_topology == STopology::Periodic ? 3 : 2)) throw DomainError("StripGrid: n_s too small");
  if (!(ell > 0.0)) throw DomainError("StripGrid: ell must be positive");
  StripGrid g;
  g.R = R;
  g.R_max = R_max;
  g.n_r = n_r;
  g.n_s = n_s;
  g.h_r = (R_max - R) / n_r;
  g.h_s = ell / n_s;
  g.bc_r = bc_r;
  g.s_topology = s_topology;
  return g;
}

int StripGrid::first_r_node() const { return bc_r == RadialBC::NeumannBoth ? 0 : 1; }

int StripGrid::r_unknowns() const {
  switch (bc_r) {
    case RadialBC::DirichletBoth: return n_r - 1;
    case RadialBC::NeumannBoth: return n_r + 1;
    case RadialBC::DirichletInnerNeumannOuter: return n_r;
  }
  return 0;
}

int StripGrid::first_s_node() const { return s_topology == STopology::DirichletEnds ? 1 : 0; }

int StripGrid::s_unknowns() const {
  switch (s_topology) {
    case STopology::Periodic: return n_s;
    case STopology::DirichletEnds: return n_s - 1;
    case STopology::NeumannEnds: return n_s + 1;
  }
  return 0;
}

double r_max_policy(double V_max, double lambda_min, double R) {
  if (!(lambda_min > 0.0)) throw DomainError("r_max_policy: lambda_min must be positive");
  return std::max(3.0 * std::max(V_max, 0.0) / lambda_min, R + 10.0);
}

Eigen::SparseMatrix<double> DiscretizedOperator::full_matrix() const {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * entries.size());
  for (const auto& e : entries) {
    trip.emplace_back(e.row, e.col, e.value);
    if (e.row != e.col) trip.emplace_back(e.col, e.row, e.value);
  }
  Eigen::SparseMatrix<double> m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

DiscretizedOperator from_matrix(const Eigen::SparseMatrix<double>& matrix) {
  if (matrix.rows() != matrix.cols()) throw DomainError("from_matrix: matrix must be square");
  DiscretizedOperator op;
  op.dim = static_cast<int>(matrix.rows());
  for (int k = 0; k < matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it) {
      if (it.row() >= it.col()) op.entries.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
    }
  }
  return op;
}

DiscretizedOperator assemble(const ModelCoefficients& coeffs, const StripGrid& grid, const AssemblyOptions& options) {
  if (std::abs(grid.R - coeffs.R) > 1e-12 * std::max(1.0, coeffs.R)) {
    throw DomainError("assemble: grid.R does not match coefficients.R");
  }
  const int nr = grid.r_unknowns();
  const int ns = grid.s_unknowns();
  const std::size_t dim = static_cast<std::size_t>(nr) * static_cast<std::size_t>(ns);
  if (dim > options.max_unknowns) {
    throw ResourceError("assemble: " + std::to_string(dim) + " unknowns exceed the cap of " +
                        std::to_string(options.max_unknowns));
  }
  const int r0 = grid.first_r_node();
  const int s0 = grid.first_s_node();
  const bool periodic = grid.s_topology == STopology::Periodic;
  const double hr = grid.h_r;
  const double hs = grid.h_s;

  auto r_node = [&](int i) { return grid.R + hr * i; };
  // Unknown index of grid node (i, j), or -1 for a Dirichlet node.
  auto index = [&](int i, int j) -> int {
    if (periodic) j = ((j % grid.n_s) + grid.n_s) % grid.n_s;
    const int ii = i - r0;
    const int jj = j - s0;
    if (ii < 0 || ii >= nr || jj < 0 || jj >= ns) return -1;
    return ii * ns + jj;
  };
  auto r_weight = [&](int i) {
    const bool boundary = (i == 0 || i == grid.n_r);
    return boundary ? 0.5 * hr : hr;
  };
  auto s_weight = [&](int j) {
    if (periodic) return hs;
    const bool boundary = (j == 0 || j == grid.n_s);
    return boundary ? 0.5 * hs : hs;
  };

  std::vector<double> mass(dim, 0.0);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * dim);
  auto add_edge = [&](int p, int q, double w) {
    // w·(u_p − u_q)², either end may be a Dirichlet node
    if (p >= 0) trip.emplace_back(p, p, w);
    if (q >= 0) trip.emplace_back(q, q, w);
    if (p >= 0 && q >= 0) {
      trip.emplace_back(p, q, -w);
      trip.emplace_back(q, p, -w);
    }
  };

  const int s_last = periodic ? grid.n_s - 1 : grid.n_s;
  // Radial edges, coefficient at the edge midpoint.
  for (int i = 0; i < grid.n_r; ++i) {
    const double a_mid = coeffs.a_fn(r_node(i) + 0.5 * hr);
    for (int j = 0; j <= s_last; ++j) {
      const int p = index(i, j);
      const int q = index(i + 1, j);
      if (p < 0 && q < 0) continue;
      add_edge(p, q, a_mid / hr * s_weight(j));
    }
  }
  // Angular edges and potential at nodes.
  for (int i = 0; i <= grid.n_r; ++i) {
    const double r = r_node(i);
    const double wr = r_weight(i);
    const double b_coef = coeffs.b_fn(r) / (r * r);
    const double nu = coeffs.nu_fn(r);
    const int edges = periodic ? grid.n_s : grid.n_s;
    for (int j = 0; j < edges; ++j) {
      const int p = index(i, j);
      const int q = index(i, j + 1);
      if (p < 0 && q < 0) continue;
      add_edge(p, q, b_coef / hs * wr);
    }
    for (int j = 0; j <= s_last; ++j) {
      const int p = index(i, j);
      if (p < 0) continue;
      const double m = wr * s_weight(j);
      mass[static_cast<std::size_t>(p)] = m;
      trip.emplace_back(p, p, -(coeffs.V_at(hs * j) + nu) / r * m);
    }
  }

  Eigen::SparseMatrix<double> k(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  k.setFromTriplets(trip.begin(), trip.end());

  DiscretizedOperator op;
  op.dim = static_cast<int>(dim);
  op.grid = grid;
  op.mass_scaling = hr * hs;
  op.entries.reserve(static_cast<std::size_t>(k.nonZeros() / 2 + dim));
  for (int col = 0; col < k.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(k, col); it; ++it) {
      if (it.row() < it.col()) continue;
      const auto r = static_cast<std::size_t>(it.row());
      const auto c = static_cast<std::size_t>(it.col());
      const double v = it.value() / std::sqrt(mass[r] * mass[c]);
      if (!std::isfinite(v)) throw DomainError("assemble: non-finite matrix entry");
      op.entries.push_back({static_cast<int>(r), static_cast<int>(c), v});
    }
  }
  return op;
}

double phase_space_volume(const ModelCoefficients& coeffs, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("phase_space_volume: lambda must be positive");
  // ∫_R^{V/λ} (V − λr) dr = (V − λR)²/(2λ) when V > λR.
  auto inner = [&](double s) {
    const double excess = std::max(coeffs.V_at(s) - lambda * coeffs.R, 0.0);
    return excess * excess / (2.0 * lambda);
  };
  // Periodic trapezoid on a grid refined 8x over the potential samples.
  const std::size_t n = coeffs.V.size() * 8;
  const double h = coeffs.ell / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += inner(h * static_cast<double>(j));
  return acc * h / (4.0 * std::numbers::pi);
}

void write_coordinate(const std::filesystem::path& path, const DiscretizedOperator& op) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out << op.dim << ' ' << op.entries.size() << '\n' << std::setprecision(17);
  for (const auto& e : op.entries) out << e.row << ' ' << e.col << ' ' << e.value << '\n';
}

DiscretizedOperator read_coordinate(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  DiscretizedOperator op;
  std::size_t nnz = 0;
  if (!(in >> op.dim >> nnz)) throw FileError(path.string() + ": bad header");
  op.entries.resize(nnz);
  for (auto& e : op.entries) {
    if (!(in >> e.row >> e.col >> e.value)) throw FileError(path.string() + ": truncated entries");
    if (e.row < e.col) std::swap(e.row, e.col);
  }
  return op;
}

}  // namespace robinweyl::modelop
