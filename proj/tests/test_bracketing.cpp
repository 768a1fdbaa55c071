#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "robinweyl/bracketing.hpp"
#include "robinweyl/eigcount.hpp"
#include "robinweyl/errors.hpp"
#include "robinweyl/modelop.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace robinweyl;
using namespace robinweyl::bracketing;
constexpr double pi = std::numbers::pi;

namespace {

modelop::ModelCoefficients flat(double V, double R = 1.0) {
  return modelop::make_custom_coefficients(
      {V}, 2 * pi, R, [](double) { return 1.0; }, [](double) { return 1.0; }, [](double) { return 0.0; });
}

long brute_ellipse(double A, double B, double C, double lambda, bool zero) {
  if (C <= 0) return 0;
  const int k0 = zero ? 0 : 1;
  long n = 0;
  for (int k = k0; k <= A * std::sqrt(C / lambda) + 1; ++k)
    for (int t = k0; t <= B * std::sqrt(C / lambda) + 1; ++t)
      if (k * k / (A * A) + t * t / (B * B) <= C / lambda) ++n;
  return n;
}

// Explicit cell eigenvalues with a = b = 1, ν = 0 and constant V ≥ 0:
//   λπ²m²/M² κ² + λπ²n²/ℓ² τ²/(x_b + λR)² − V/(x_pot + λR) ≤ −1
long brute_cell(double V, double lambda, int m, int n, double M, double R, int j, bool dirichlet) {
  const double ell = 2 * pi;
  const double xm = (j - 1) * M / m, xp = j * M / m;
  const double xb = dirichlet ? xm : xp;
  const double xpot = dirichlet ? xp : xm;
  const int k0 = dirichlet ? 1 : 0;
  long count = 0;
  for (int k = k0; k < 2000; ++k) {
    const double ek = lambda * pi * pi * m * m / (M * M) * k * k;
    if (ek - V / (xpot + lambda * R) > -1) break;
    for (int t = k0; t < 100000; ++t) {
      const double lam =
          ek + lambda * pi * pi * n * n / (ell * ell) * t * t / ((xb + lambda * R) * (xb + lambda * R)) -
          V / (xpot + lambda * R);
      if (lam > -1) break;
      ++count;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("ellipse lattice examples") {
  CHECK(ellipse_lattice_count(1, 1, -1, 0.1, true) == 0);
  CHECK(ellipse_lattice_count(1, 1, -1, 0.1, false) == 0);
  const long n = ellipse_lattice_count(1, 1, 1, 1e-4, false);
  CHECK(std::abs(n - pi * 1e4 / 4) <= 250);
  CHECK(n == brute_ellipse(1, 1, 1, 1e-4, false));
  CHECK(ellipse_lattice_count(2, 1, 1, 1e-2, true) == brute_ellipse(2, 1, 1, 1e-2, true));
  CHECK(ellipse_lattice_count(0.7, 3.1, 0.4, 3e-3, true) == brute_ellipse(0.7, 3.1, 0.4, 3e-3, true));
  CHECK(ellipse_lattice_count(0.7, 3.1, 0.4, 3e-3, false) == brute_ellipse(0.7, 3.1, 0.4, 3e-3, false));
}

TEST_CASE("ellipse lattice error term") {
  for (double A : {0.5, 1.0, 2.0, 3.3}) {
    for (double B : {0.2, 1.0, 4.0}) {
      for (double ratio : {10.0, 1e3, 1e5}) {
        const double C = 0.5, lambda = C / ratio;
        for (bool z : {true, false}) {
          const long n = ellipse_lattice_count(A, B, C, lambda, z);
          CHECK(std::abs(n - pi * A * B * C / (4 * lambda)) <= 4 * (A + B) * std::sqrt(C / lambda) + 4);
        }
      }
    }
  }
}

TEST_CASE("ellipse lattice budget") {
  CHECK_THROWS_AS(ellipse_lattice_count(1, 1, 1, 1e-9, true), ResourceError);
  CHECK_THROWS_AS(ellipse_lattice_count(1, 1, 1, 0.0, true), DomainError);
}

TEST_CASE("frozen cell matches brute force") {
  const auto c = flat(1.0);
  const BracketPartition p{16, 16, 2.0, 0.01, &c};
  CHECK(frozen_cell_count(p, 2, 1, FrozenSide::DirichletFrozen) == brute_cell(1.0, 0.01, 16, 16, 2.0, 1.0, 2, true));
  CHECK(frozen_cell_count(p, 2, 1, FrozenSide::NeumannFrozen) == brute_cell(1.0, 0.01, 16, 16, 2.0, 1.0, 2, false));
  CHECK(frozen_cell_count(p, 2, 1, FrozenSide::NeumannFrozen) > 0);

  const auto c3 = flat(3.0);
  for (int j : {2, 3, 5}) {
    const BracketPartition q{8, 2, 4.0, 5e-4, &c3};
    const long d = frozen_cell_count(q, j, 1, FrozenSide::DirichletFrozen);
    CHECK(d == brute_cell(3.0, 5e-4, 8, 2, 4.0, 1.0, j, true));
    CHECK(frozen_cell_count(q, j, 2, FrozenSide::NeumannFrozen) == brute_cell(3.0, 5e-4, 8, 2, 4.0, 1.0, j, false));
  }
  CHECK(frozen_cell_count(BracketPartition{8, 2, 4.0, 5e-4, &c3}, 2, 1, FrozenSide::DirichletFrozen) > 10);
}

TEST_CASE("frozen cell with a negative potential is empty") {
  const auto c = flat(-0.5);
  const BracketPartition p{8, 8, 2.0, 0.01, &c};
  for (int j = 2; j <= 8; ++j) {
    CHECK(frozen_cell_count(p, j, 3, FrozenSide::DirichletFrozen) == 0);
    CHECK(frozen_cell_count(p, j, 3, FrozenSide::NeumannFrozen) == 0);
  }
}

TEST_CASE("Dirichlet cells count no more than Neumann cells") {
  std::vector<double> V(64);
  for (int i = 0; i < 64; ++i) V[i] = 1.0 + 0.8 * std::sin(2 * pi * i / 64);
  const auto c = modelop::make_custom_coefficients(
      V, 2 * pi, 1.0, [](double r) { return 1.0 + 1.0 / r; }, [](double r) { return 1.0 - 0.5 / r; },
      [](double r) { return 0.2 / r; });
  const BracketPartition p{12, 10, 3.0, 0.004, &c};
  for (int j = 2; j <= 12; ++j)
    for (int k = 1; k <= 10; ++k)
      CHECK(frozen_cell_count(p, j, k, FrozenSide::DirichletFrozen) <=
            frozen_cell_count(p, j, k, FrozenSide::NeumannFrozen));
}

TEST_CASE("cell j = 1 belongs to the edge strip") {
  const auto c = flat(1.0);
  const BracketPartition p{8, 8, 2.0, 0.01, &c};
  CHECK_THROWS_AS(frozen_cell_count(p, 1, 1, FrozenSide::NeumannFrozen), DomainError);
  CHECK_THROWS_AS(frozen_cell_count(p, 9, 1, FrozenSide::NeumannFrozen), DomainError);
}

TEST_CASE("edge strip") {
  const auto c = flat(1.0);
  const auto e = edge_strip_count(BracketPartition{8, 8, 2.0, 0.05, &c});
  CHECK(e.count >= 0);
  CHECK(e.active_modes >= 1);
  CHECK(e.grid == 4096);
  CHECK(e.sigma == 1.0);
  CHECK(e.rho == 1.0);

  // closures swapped after construction, so the strip sees a(R) = 0
  auto bad = flat(1.0);
  bad.a_fn = [](double r) { return 1.0 - 1.0 / r; };
  CHECK_THROWS_AS(edge_strip_count(BracketPartition{8, 8, 2.0, 0.05, &bad}), CoefficientBoundError);
}

TEST_CASE("edge strip mode count scales like 1/sqrt(m lambda)") {
  const auto c = flat(1.0);
  double lo = 1e300, hi = 0.0, c_cal = 0.0;
  for (double lambda : {0.1, 0.01, 0.001}) {
    for (int m : {16, 32, 64, 128}) {
      const auto e = edge_strip_count(BracketPartition{m, 4, 2.0, lambda, &c}, 512);
      const double cst = e.active_modes * std::sqrt(m * lambda);
      c_cal = std::max(c_cal, cst);
      // the law needs λm small against M
      if (lambda * m > 1.0) continue;
      lo = std::min(lo, cst);
      hi = std::max(hi, cst);
    }
  }
  MESSAGE("c over lambda*m <= 1: [" << lo << ", " << hi << "], calibrated c = " << c_cal);
  CHECK(hi <= 2.0 * lo);
  CHECK(edge_strip_count(BracketPartition{64, 4, 2.0, 0.1, &c}).active_modes <= c_cal / std::sqrt(6.4));
}

TEST_CASE("edge strip count scales like 1/sqrt(m)") {
  const auto c = flat(1.0);
  for (double lambda : {0.01, 0.002}) {
    const long e1 = edge_strip_count(BracketPartition{16, 4, 2.0, lambda, &c}).count;
    const long e2 = edge_strip_count(BracketPartition{32, 4, 2.0, lambda, &c}).count;
    const double s1 = e1 * std::sqrt(16.0), s2 = e2 * std::sqrt(32.0);
    CHECK(std::abs(s2 - s1) <= 0.5 * s1);
  }
}

TEST_CASE("no potential well") {
  const auto c = flat(0.0);
  const auto r = bracket_counts(c, 0.05, 8, 8, 2.0);
  CHECK(r.lower == 0);
  CHECK(r.lower == r.upper - r.edge_count);
  for (const auto& cell : r.per_cell) {
    CHECK(cell.dirichlet_count == 0);
    CHECK(cell.neumann_count == 0);
  }
  CHECK(r.per_cell.size() == 7u * 8u);
}

TEST_CASE("bracket hypotheses") {
  const auto c = flat(1.0);
  CHECK_THROWS_AS(bracket_counts(c, 0.05, 8, 8, 1.0), HypothesisError);
  CHECK_THROWS_AS(bracket_counts(c, 0.05, 8, 8, 0.5), HypothesisError);
  CHECK_THROWS_AS(bracket_counts(c, 0.05, 1, 8, 2.0), DomainError);
  CHECK_THROWS_AS(bracket_counts(c, 0.0, 8, 8, 2.0), DomainError);
}

TEST_CASE("bracket sums and ordering") {
  const auto c = flat(1.0);
  for (double lambda : {0.2, 0.05, 0.01}) {
    const auto r = bracket_counts(c, lambda, 16, 16, 2.0);
    long lo = 0, up = 0;
    for (const auto& cell : r.per_cell) {
      lo += cell.dirichlet_count;
      up += cell.neumann_count;
    }
    CHECK(r.lower == lo);
    CHECK(r.upper == up + r.edge_count);
    CHECK(r.lower <= r.upper);
    CHECK(r.m == 16);
    CHECK(r.lambda == lambda);
  }
}

TEST_CASE("bracket encloses the direct count") {
  const auto c = flat(1.0);
  for (double lambda : {0.2, 0.1}) {
    const auto op = modelop::assemble(
        c, modelop::StripGrid::make(1.0, modelop::r_max_policy(1.0, lambda, 1.0),
                                    static_cast<int>(std::lround((modelop::r_max_policy(1.0, lambda, 1.0) - 1.0) / 0.05)),
                                    64, 2 * pi, modelop::RadialBC::NeumannBoth));
    const long direct = eigcount::count_below(op, -lambda).count;
    const int m = static_cast<int>(std::ceil(4 / std::sqrt(lambda)));
    const auto r = bracket_counts(c, lambda, m, m, 2.0);
    const double tol = std::max(2.0, 0.1 * r.upper);
    CHECK(r.lower <= direct + tol);
    CHECK(direct <= r.upper + tol);
  }
}

TEST_CASE("lower bound near the Weyl value at lambda = 0.05, m = n = 32") {
  const auto c = flat(1.0);
  const auto r = bracket_counts(c, 0.05, 32, 32, 2.0);
  CHECK(r.upper >= r.lower);
  CHECK(std::abs(0.05 * r.lower - 0.25) <= 0.3 * 0.25);
}

TEST_CASE("Riemann sums refine") {
  // λ small enough that every cell holds many lattice points
  const auto c = flat(1.0);
  const double lambda = 1e-6;
  double prev = -1.0;
  for (int m : {4, 8, 16}) {
    const auto r = bracket_counts(c, lambda, m, m, 2.0);
    const double err = std::abs(lambda * r.lower - 0.25);
    MESSAGE("m = " << m << ": lambda*lower = " << lambda * r.lower << ", lambda*upper = " << lambda * r.upper);
    CHECK(r.lower <= r.upper);
    if (prev >= 0.0) CHECK(err <= 1.1 * prev);
    prev = err;
  }
}

TEST_CASE("bracket gap along the default schedule") {
  const auto c = flat(1.0);
  double prev = 1e300;
  for (double lambda : {0.2, 0.1, 0.05}) {
    const int m = static_cast<int>(std::ceil(4 / std::sqrt(lambda)));
    const auto r = bracket_counts(c, lambda, m, m, 2.0);
    const double gap = lambda * (r.upper - r.lower);
    MESSAGE("lambda = " << lambda << ": lower " << r.lower << ", upper " << r.upper);
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("bracket serialization") {
  const auto c = flat(1.0);
  const auto r = bracket_counts(c, 0.1, 4, 3, 2.0);
  const auto j = to_json(r);
  CHECK(j.at("lower") == r.lower);
  CHECK(j.at("upper") == r.upper);
  CHECK(j.at("edge_count") == r.edge_count);
  CHECK(j.at("per_cell").size() == r.per_cell.size());
  const auto path = std::filesystem::temp_directory_path() / "rw_cells.csv";
  write_cells_csv(path, r);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "j,k,dirichlet_count,neumann_count");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<int>(r.per_cell.size()));
}
