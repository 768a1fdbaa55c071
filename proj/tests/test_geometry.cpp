#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "robinweyl/errors.hpp"
#include "robinweyl/geometry.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace robinweyl;
using namespace robinweyl::geometry;
constexpr double pi = std::numbers::pi;

namespace {

// Exact cap circle, clockwise seen from the north pole.
Vec3 cap_point(double theta0, double s) {
  const double rho = std::sin(theta0);
  return {rho * std::cos(s / rho), -rho * std::sin(s / rho), std::cos(theta0)};
}

double max_kappa_error(double theta0, int n) {
  const auto prof = geodesic_curvature(cap_boundary(theta0, n));
  const double exact = std::cos(theta0) / std::sin(theta0);
  double err = 0.0;
  for (double k : prof.kappa) err = std::max(err, std::abs(k - exact));
  return err;
}

}  // namespace

TEST_CASE("cap_boundary lengths and heights") {
  const auto eq = cap_boundary(pi / 2, 64);
  CHECK(eq.length_ell == doctest::Approx(2 * pi).epsilon(1e-12));
  for (const auto& p : eq.points) CHECK(std::abs(p.z()) < 1e-15);

  CHECK(cap_boundary(pi / 4, 128).length_ell == doctest::Approx(2 * pi * std::sin(pi / 4)).epsilon(1e-12));
  CHECK(cap_boundary(pi / 4, 128).length_ell == doctest::Approx(4.4429).epsilon(1e-4));

  const auto c6 = cap_boundary(pi / 6, 64);
  CHECK(c6.length_ell == doctest::Approx(pi).epsilon(1e-12));
  for (const auto& p : c6.points) CHECK(p.z() == doctest::Approx(std::cos(pi / 6)).epsilon(1e-14));
  CHECK(c6.is_closed);
}

TEST_CASE("cap_boundary rejects bad input") {
  CHECK_THROWS_AS(cap_boundary(0.0, 64), DomainError);
  CHECK_THROWS_AS(cap_boundary(pi, 64), DomainError);
  CHECK_THROWS_AS(cap_boundary(-1.0, 64), DomainError);
  CHECK_THROWS_AS(cap_boundary(1.0, 4), DomainError);
}

TEST_CASE("loop invariants: unit norm and equal chords") {
  for (double t0 : {0.3, pi / 4, pi / 2, 2.0}) {
    const auto c = cap_boundary(t0, 200);
    CHECK_NOTHROW(validate(c));
    for (const auto& p : c.points) CHECK(std::abs(p.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("outer normal of the cap is gamma x gamma'") {
  // For the cap containing the north pole the outer normal points south.
  const auto c = cap_boundary(pi / 4, 256);
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < n; i += 37) {
    const Vec3 d = (c.points[(i + 1) % n] - c.points[(i + n - 1) % n]) / (2 * c.step());
    const Vec3 normal = c.points[i].cross(d);
    CHECK(normal.z() < 0.0);
  }
}

TEST_CASE("geodesic curvature of caps") {
  const auto p0 = geodesic_curvature(cap_boundary(pi / 2, 256));
  for (double k : p0.kappa) CHECK(std::abs(k) <= 1e-6);

  const auto p1 = geodesic_curvature(cap_boundary(pi / 4, 256));
  for (double k : p1.kappa) CHECK(std::abs(k - 1.0) <= 1e-4);

  const auto p2 = geodesic_curvature(cap_boundary(2 * pi / 3, 256));
  for (double k : p2.kappa) CHECK(std::abs(k - (-1.0 / std::sqrt(3.0))) <= 1e-4);
  CHECK(p2.max_kappa() < 0.0);
  CHECK(p1.kappa.size() == p1.arc_grid.size());
}

TEST_CASE("curvature sign follows convexity") {
  for (double t0 : {0.2, 0.7, 1.4}) {
    const auto p = geodesic_curvature(cap_boundary(t0, 128));
    CHECK(*std::min_element(p.kappa.begin(), p.kappa.end()) > 0.0);
  }
  for (double t0 : {1.7, 2.4, 3.0}) {
    const auto p = geodesic_curvature(cap_boundary(t0, 128));
    CHECK(p.max_kappa() < 0.0);
  }
}

TEST_CASE("curvature stencil converges at least at second order") {
  for (double t0 : {pi / 4, 2 * pi / 3, 1.1}) {
    const double e1 = max_kappa_error(t0, 64);
    const double e2 = max_kappa_error(t0, 128);
    CHECK(e1 / e2 >= 3.0);
  }
}

TEST_CASE("kappa_plus_sq_integral matches recomputation") {
  const auto p = geodesic_curvature(cap_boundary(pi / 4, 300));
  double acc = 0.0;
  for (double k : p.kappa) acc += std::max(k, 0.0) * std::max(k, 0.0);
  acc *= p.length_ell / static_cast<double>(p.kappa.size());
  CHECK(std::abs(p.kappa_plus_sq_integral - acc) <= 1e-12);
  CHECK(p.kappa_plus_sq_integral >= 0.0);
}

TEST_CASE("weyl_constant closed forms") {
  const CurvatureProfile eq[] = {geodesic_curvature(cap_boundary(pi / 2, 256))};
  CHECK(weyl_constant(eq, 1.0) == doctest::Approx(0.0).epsilon(1e-9));

  const CurvatureProfile q[] = {geodesic_curvature(cap_boundary(pi / 4, 256))};
  const double exact = std::sin(pi / 4) / 4.0;
  CHECK(std::abs(weyl_constant(q, 1.0) - exact) <= 1e-4);
  CHECK(std::abs(weyl_constant(q, 2.0) - 4 * exact) <= 4e-4);
  CHECK(weyl_constant(q, 2.0) == doctest::Approx(4 * weyl_constant(q, 1.0)).epsilon(1e-14));

  const CurvatureProfile neg[] = {geodesic_curvature(cap_boundary(2.5, 128))};
  CHECK(weyl_constant(neg, 1.0) == 0.0);

  CHECK_THROWS_AS(weyl_constant(q, 0.0), DomainError);
  CHECK_THROWS_AS(weyl_constant(std::span<const CurvatureProfile>{}, 1.0), DomainError);
}

TEST_CASE("weyl_constant sums over loops") {
  const CurvatureProfile two[] = {geodesic_curvature(cap_boundary(pi / 4, 256)),
                                  geodesic_curvature(cap_boundary(pi / 3, 256))};
  const double expected = (std::cos(pi / 4) * std::cos(pi / 4) / std::sin(pi / 4) +
                           std::cos(pi / 3) * std::cos(pi / 3) / std::sin(pi / 3)) *
                          2 * pi / (8 * pi);
  CHECK(std::abs(weyl_constant(two, 1.0) - expected) <= 2e-4);
}

TEST_CASE("weyl_constant is stable under resampling") {
  std::vector<Vec3> raw;
  for (int i = 0; i < 40; ++i) raw.push_back(cap_point(pi / 4, 4.4428829381583661 * i / 40));
  const Vec3 north(0, 0, 1);
  const CurvatureProfile a[] = {geodesic_curvature(from_samples(raw, 400, north))};
  const CurvatureProfile b[] = {geodesic_curvature(from_samples(raw, 800, north))};
  CHECK(std::abs(weyl_constant(a, 1.0) - weyl_constant(b, 1.0)) <= 1e-4);
}

TEST_CASE("tube_metric") {
  const auto p = geodesic_curvature(cap_boundary(pi / 4, 256));
  CHECK(tube_metric(p, 0.3, 0.0) == 1.0);
  CHECK(tube_metric(p, 1.7, 0.0) == 1.0);
  // oracle: exact κ = 1
  CHECK(tube_metric(p, 0.5, 0.1) == doctest::Approx(std::cos(0.1) - std::sin(0.1)).epsilon(1e-4));
  CHECK(tube_metric(p, 0.5, 0.1) == doctest::Approx(0.89517).epsilon(1e-4));
  CHECK_THROWS_AS(tube_metric(p, 0.5, 1.2), DomainError);
  CHECK_THROWS_AS(tube_metric(p, 0.5, -0.1), DomainError);
}

TEST_CASE("from_samples reproduces the cap") {
  std::vector<Vec3> raw;
  const double ell = 2 * pi * std::sin(pi / 4);
  for (int i = 0; i < 16; ++i) raw.push_back(cap_point(pi / 4, ell * i / 16));
  const auto c = from_samples(raw, 256, Vec3(0, 0, 1));
  CHECK(std::abs(c.length_ell - 4.4429) <= 1e-4);
  CHECK_NOTHROW(validate(c));
  // interior declared at the north pole: same orientation as cap_boundary, κ > 0
  const auto prof = geodesic_curvature(c);
  CHECK(*std::min_element(prof.kappa.begin(), prof.kappa.end()) > 0.9);

  // the same points with the interior declared at the south pole flip the sign
  std::vector<Vec3> rev(raw.rbegin(), raw.rend());
  const auto prof2 = geodesic_curvature(from_samples(rev, 256, Vec3(0, 0, -1)));
  CHECK(prof2.max_kappa() < -0.9);
}

TEST_CASE("from_samples removes radial noise") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1e-8, 1e-8);
  std::vector<Vec3> raw;
  for (int i = 0; i < 64; ++i) {
    const double t = 2 * pi * i / 64;
    raw.push_back(Vec3(std::cos(t), std::sin(t), 0.0) * (1.0 + u(rng)));
  }
  const auto c = from_samples(raw, 512, Vec3(0, 0, 1));
  CHECK(std::abs(c.length_ell - 2 * pi) <= 1e-6);
  for (const auto& p : c.points) CHECK(std::abs(p.norm() - 1.0) <= 1e-12);
}

TEST_CASE("from_samples rejects bad input") {
  std::vector<Vec3> four;
  for (int i = 0; i < 4; ++i) four.push_back(cap_point(pi / 4, 4.44 * i / 4));
  CHECK_THROWS_AS(from_samples(four, 64, Vec3(0, 0, 1)), GeometryError);

  std::vector<Vec3> off;
  for (int i = 0; i < 16; ++i) off.push_back(cap_point(pi / 4, 4.44 * i / 16) * 1.01);
  CHECK_THROWS_AS(from_samples(off, 64, Vec3(0, 0, 1)), GeometryError);

  std::vector<Vec3> same(12, Vec3(0, 0, 1));
  CHECK_THROWS_AS(from_samples(same, 64, Vec3(1, 0, 0)), GeometryError);

  // figure-eight: the loop crosses itself
  std::vector<Vec3> eight;
  for (int i = 0; i < 32; ++i) {
    const double t = 2 * pi * i / 32;
    Vec3 p(0.5 * std::sin(t), 0.3 * std::sin(2 * t), 1.0);
    eight.push_back(p.normalized());
  }
  CHECK_THROWS_AS(from_samples(eight, 128, Vec3(0, 0, 1)), GeometryError);
}

TEST_CASE("csv round trip") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto c = cap_boundary(0.9, 32);
  write_points_csv(dir / "rw_points.csv", c.points);
  const auto back = read_points_csv(dir / "rw_points.csv");
  REQUIRE(back.size() == c.points.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK((back[i] - c.points[i]).norm() < 1e-15);
  CHECK_THROWS_AS(read_points_csv(dir / "rw_does_not_exist.csv"), FileError);

  const auto prof = geodesic_curvature(c);
  write_profile_csv(dir / "rw_profile.csv", prof);
  std::ifstream in(dir / "rw_profile.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "s,kappa");
}
