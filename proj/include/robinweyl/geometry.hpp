#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <vector>

namespace robinweyl::geometry {

using Vec3 = Eigen::Vector3d;

struct GeometryTolerances {
  double unit_norm = 1e-12;        // |Γ| = 1 after construction
  double chord_uniformity = 1e-8;  // relative spread of consecutive chords
  double input_norm = 1e-6;        // raw samples must be this close to S²
};

/// Closed loop on the unit sphere, sampled at uniform arc-length steps.
///
/// `points[i]` is Γ(i·ℓ/n); the successor of the last sample is the first one.
/// The orientation is such that n = Γ×Γ′ is the outer normal of the
/// cross-section whose boundary this loop is.
struct LoopCurve {
  std::vector<Vec3> points;
  double length_ell = 0.0;
  bool is_closed = true;

  std::size_t size() const { return points.size(); }
  double step() const { return length_ell / static_cast<double>(points.size()); }
};

/// Sampled geodesic curvature of one loop.
struct CurvatureProfile {
  std::vector<double> kappa;
  std::vector<double> arc_grid;
  double length_ell = 0.0;
  double kappa_plus_sq_integral = 0.0;

  double step() const { return length_ell / static_cast<double>(kappa.size()); }
  double max_abs_kappa() const;
  double max_kappa() const;
  /// Periodic linear interpolation of κ at arc length s.
  double kappa_at(double s) const;
};

struct BoundaryLoop {
  LoopCurve curve;
  CurvatureProfile profile;
};

/// Boundary of the spherical cap {θ < theta0}, traversed so that the outer
/// normal of the cap is Γ×Γ′.
LoopCurve cap_boundary(double theta0, int n_samples);

/// Builds a LoopCurve from user samples. The loop is oriented so that
/// `interior_point` lies on the inner side (opposite to Γ×Γ′).
LoopCurve from_samples(std::span<const Vec3> raw_points, int n_resample,
                       const Vec3& interior_point,
                       const GeometryTolerances& tol = {});

/// Throws GeometryError if the curve violates the LoopCurve invariants.
void validate(const LoopCurve& curve, const GeometryTolerances& tol = {});

/// κ = det[Γ″, Γ′, Γ] with periodic second-order central differences.
CurvatureProfile geodesic_curvature(const LoopCurve& curve);

/// Trapezoid rule for ∫ max(κ,0)² ds on a periodic uniform grid.
double kappa_plus_sq_integral(std::span<const double> kappa, double step);

/// Tube metric w(s,t) = cos t − sin t·κ(s); requires t·max|κ| < 1.
double tube_metric(const CurvatureProfile& profile, double s, double t);

/// α²/(8π) Σ_loops ∫ κ₊² ds.
double weyl_constant(std::span<const CurvatureProfile> profiles, double alpha);

BoundaryLoop make_loop(LoopCurve curve);

// CSV with header "x,y,z", one sample per row.
std::vector<Vec3> read_points_csv(const std::filesystem::path& path);
void write_points_csv(const std::filesystem::path& path, std::span<const Vec3> points);
// CSV with header "s,kappa".
void write_profile_csv(const std::filesystem::path& path, const CurvatureProfile& profile);

}  // namespace robinweyl::geometry
