#include "robinweyl/geometry.hpp"

#include "robinweyl/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

namespace robinweyl::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

// Periodic cubic spline through (t_i, y_i), i = 0..n-1, with period T.
class PeriodicSpline {
 public:
  PeriodicSpline(std::vector<double> knots, double period, std::vector<double> values)
      : t_(std::move(knots)), period_(period), y_(std::move(values)) {
    const std::size_t n = y_.size();
    h_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double next = (i + 1 < n) ? t_[i + 1] : period_;
      h_[i] = next - t_[i];
    }
    // Cyclic tridiagonal system for the second derivatives.
    std::vector<double> sub(n), diag(n), sup(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t im = (i + n - 1) % n;
      const std::size_t ip = (i + 1) % n;
      sub[i] = h_[im];
      diag[i] = 2.0 * (h_[im] + h_[i]);
      sup[i] = h_[i];
      rhs[i] = 6.0 * ((y_[ip] - y_[i]) / h_[i] - (y_[i] - y_[im]) / h_[im]);
    }
    m_ = solve_cyclic(sub, diag, sup, rhs);
  }

  double value(double t) const {
    const auto [i, a, b, h] = locate(t);
    const std::size_t ip = (i + 1) % y_.size();
    return m_[i] * a * a * a / (6.0 * h) + m_[ip] * b * b * b / (6.0 * h) +
           (y_[i] / h - m_[i] * h / 6.0) * a + (y_[ip] / h - m_[ip] * h / 6.0) * b;
  }

  double derivative(double t) const {
    const auto [i, a, b, h] = locate(t);
    const std::size_t ip = (i + 1) % y_.size();
    return -m_[i] * a * a / (2.0 * h) + m_[ip] * b * b / (2.0 * h) -
           (y_[i] / h - m_[i] * h / 6.0) + (y_[ip] / h - m_[ip] * h / 6.0);
  }

 private:
  struct Local {
    std::size_t i;
    double a;  // distance to the right knot
    double b;  // distance from the left knot
    double h;
  };

  Local locate(double t) const {
    double u = std::fmod(t, period_);
    if (u < 0.0) u += period_;
    auto it = std::upper_bound(t_.begin(), t_.end(), u);
    std::size_t i = static_cast<std::size_t>(std::distance(t_.begin(), it));
    i = (i == 0) ? 0 : i - 1;
    const double b = u - t_[i];
    return {i, h_[i] - b, b, h_[i]};
  }

  // Sherman-Morrison reduction of a cyclic tridiagonal system.
  static std::vector<double> solve_cyclic(const std::vector<double>& sub,
                                          const std::vector<double>& diag,
                                          const std::vector<double>& sup,
                                          const std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    const double alpha = sup[n - 1];  // A(n-1, 0)
    const double beta = sub[0];       // A(0, n-1)
    const double gamma = -diag[0];
    std::vector<double> d = diag;
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;

    auto thomas = [&](std::vector<double> r) {
      std::vector<double> c(n), x(n);
      double den = d[0];
      c[0] = sup[0] / den;
      r[0] /= den;
      for (std::size_t i = 1; i < n; ++i) {
        den = d[i] - sub[i] * c[i - 1];
        c[i] = (i + 1 < n) ? sup[i] / den : 0.0;
        r[i] = (r[i] - sub[i] * r[i - 1]) / den;
      }
      x[n - 1] = r[n - 1];
      for (std::size_t i = n - 1; i-- > 0;) x[i] = r[i] - c[i] * x[i + 1];
      return x;
    };

    std::vector<double> x = thomas(rhs);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;
    std::vector<double> z = thomas(u);
    const double fact =
        (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
    return x;
  }

  std::vector<double> t_;
  double period_;
  std::vector<double> y_;
  std::vector<double> h_;
  std::vector<double> m_;
};

// Spline in R³ followed by radial projection onto S².
class SphericalSpline {
 public:
  SphericalSpline(const std::vector<Vec3>& pts) {
    const std::size_t n = pts.size();
    std::vector<double> knots(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      knots[i] = acc;
      acc += (pts[(i + 1) % n] - pts[i]).norm();
    }
    period_ = acc;
    for (int c = 0; c < 3; ++c) {
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = pts[i][c];
      coords_.emplace_back(knots, period_, std::move(y));
    }
    knots_ = std::move(knots);
  }

  double period() const { return period_; }

  Vec3 point(double t) const {
    Vec3 p(coords_[0].value(t), coords_[1].value(t), coords_[2].value(t));
    return p.normalized();
  }

  double speed(double t) const {
    const Vec3 p(coords_[0].value(t), coords_[1].value(t), coords_[2].value(t));
    const Vec3 dp(coords_[0].derivative(t), coords_[1].derivative(t), coords_[2].derivative(t));
    const double r = p.norm();
    const Vec3 u = p / r;
    return (dp - u * u.dot(dp)).norm() / r;
  }

  // Arc length of the projected curve over one period.
  double total_length() const {
    static constexpr std::array<double, 8> x = {
        -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
        0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static constexpr std::array<double, 8> w = {
        0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
        0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    double total = 0.0;
    const std::size_t n = knots_.size();
    constexpr int kSub = 4;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = knots_[i];
      const double b = (i + 1 < n) ? knots_[i + 1] : period_;
      for (int q = 0; q < kSub; ++q) {
        const double lo = a + (b - a) * q / kSub;
        const double hi = a + (b - a) * (q + 1) / kSub;
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        for (std::size_t g = 0; g < x.size(); ++g) total += w[g] * half * speed(mid + half * x[g]);
      }
    }
    return total;
  }

 private:
  std::vector<PeriodicSpline> coords_;
  std::vector<double> knots_;
  double period_ = 0.0;
};

bool on_arc(const Vec3& a, const Vec3& b, const Vec3& x) {
  const Vec3 nrm = a.cross(b);
  return a.cross(x).dot(nrm) >= 0.0 && x.cross(b).dot(nrm) >= 0.0 && x.dot(a + b) > 0.0;
}

bool arcs_intersect(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 n1 = a.cross(b);
  const Vec3 n2 = c.cross(d);
  const Vec3 x = n1.cross(n2);
  const double len = x.norm();
  if (len < 1e-15) return false;  // same great circle; caught by the duplicate check
  const Vec3 u = x / len;
  return (on_arc(a, b, u) && on_arc(c, d, u)) || (on_arc(a, b, -u) && on_arc(c, d, -u));
}

void check_simple_polygon(const std::vector<Vec3>& p) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = p[i];
    const Vec3& b = p[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the wrap
      if (arcs_intersect(a, b, p[j], p[(j + 1) % n])) {
        throw GeometryError("input loop is self-intersecting (segments " + std::to_string(i) +
                            " and " + std::to_string(j) + ")");
      }
    }
  }
}

}  // namespace

double CurvatureProfile::max_abs_kappa() const {
  double m = 0.0;
  for (double k : kappa) m = std::max(m, std::abs(k));
  return m;
}

double CurvatureProfile::max_kappa() const {
  return kappa.empty() ? 0.0 : *std::max_element(kappa.begin(), kappa.end());
}

double CurvatureProfile::kappa_at(double s) const {
  const std::size_t n = kappa.size();
  const double h = step();
  double u = std::fmod(s, length_ell);
  if (u < 0.0) u += length_ell;
  const double pos = u / h;
  const std::size_t i = static_cast<std::size_t>(std::floor(pos)) % n;
  const double frac = pos - std::floor(pos);
  return (1.0 - frac) * kappa[i] + frac * kappa[(i + 1) % n];
}

LoopCurve cap_boundary(double theta0, int n_samples) {
  if (!(theta0 > 0.0 && theta0 < kPi)) throw DomainError("cap_boundary: theta0 must lie in (0, pi)");
  if (n_samples < 8) throw DomainError("cap_boundary: n_samples must be >= 8");
  const double rho = std::sin(theta0);
  const double z = std::cos(theta0);
  LoopCurve curve;
  curve.length_ell = 2.0 * kPi * rho;
  curve.points.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const double phi = 2.0 * kPi * i / n_samples;
    // Clockwise seen from the north pole: Γ×Γ′ then points away from the pole.
    curve.points.emplace_back(rho * std::cos(phi), -rho * std::sin(phi), z);
  }
  return curve;
}

LoopCurve from_samples(std::span<const Vec3> raw_points, int n_resample,
                       const Vec3& interior_point, const GeometryTolerances& tol) {
  if (raw_points.size() < 8) throw GeometryError("from_samples: need at least 8 raw points");
  if (n_resample < 8) throw GeometryError("from_samples: n_resample must be >= 8");

  std::vector<Vec3> pts;
  pts.reserve(raw_points.size());
  for (const Vec3& p : raw_points) {
    const double r = p.norm();
    if (!std::isfinite(r) || std::abs(r - 1.0) > tol.input_norm) {
      throw GeometryError("from_samples: sample off the unit sphere (|p| = " + std::to_string(r) + ")");
    }
    pts.push_back(p / r);
  }
  // Drop an explicit closing duplicate.
  if ((pts.front() - pts.back()).norm() < 1e-14) pts.pop_back();
  if (pts.size() < 8) throw GeometryError("from_samples: need at least 8 distinct points");

  double perimeter = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double chord = (pts[(i + 1) % pts.size()] - pts[i]).norm();
    if (chord < 1e-14) throw GeometryError("from_samples: repeated consecutive samples");
    perimeter += chord;
  }
  if (perimeter < 1e-12) throw GeometryError("from_samples: degenerate (zero-length) loop");
  check_simple_polygon(pts);

  const Vec3 inside = interior_point.normalized();
  double side = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3& prev = pts[(i + pts.size() - 1) % pts.size()];
    const Vec3& next = pts[(i + 1) % pts.size()];
    side += inside.dot(pts[i].cross(next - prev));
  }
  if (std::abs(side) < 1e-12) {
    throw GeometryError("from_samples: interior point does not determine the orientation");
  }
  if (side > 0.0) std::reverse(pts.begin(), pts.end());

  const SphericalSpline spline(pts);
  const double period = spline.period();
  const double ell = spline.total_length();
  const auto n = static_cast<std::size_t>(n_resample);

  double min_speed = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4 * n_resample; ++i) min_speed = std::min(min_speed, spline.speed(period * i / (4.0 * n_resample)));
  if (!(min_speed > 0.0)) throw GeometryError("from_samples: spline has a stationary point");

  // Next parameter at chord distance c from t0.
  auto advance = [&](double t0, double c) {
    const Vec3 p0 = spline.point(t0);
    double lo = t0;
    double hi = t0 + 2.0 * c / min_speed;
    while ((spline.point(hi) - p0).norm() < c) hi += c / min_speed;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * period; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((spline.point(mid) - p0).norm() < c) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
  };
  auto end_param = [&](double c) {
    double t = 0.0;
    for (std::size_t j = 0; j < n; ++j) t = advance(t, c);
    return t;
  };

  // Equal chords that close the loop after n steps.
  const double h = ell / static_cast<double>(n);
  const double c0 = 2.0 * std::sin(0.5 * h);
  double c_lo = 0.5 * c0;
  double c_hi = std::min(1.5 * c0, 2.0);
  if (end_param(c_lo) > period || end_param(c_hi) < period) {
    throw GeometryError("from_samples: equal-chord resampling failed to bracket the loop closure");
  }
  for (int it = 0; it < 100 && c_hi - c_lo > 1e-16 * c0; ++it) {
    const double mid = 0.5 * (c_lo + c_hi);
    if (end_param(mid) < period) c_lo = mid; else c_hi = mid;
  }
  const double chord = 0.5 * (c_lo + c_hi);

  LoopCurve curve;
  curve.length_ell = ell;
  curve.points.reserve(n);
  double t = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    curve.points.push_back(spline.point(t));
    t = advance(t, chord);
  }
  validate(curve, tol);
  return curve;
}

void validate(const LoopCurve& curve, const GeometryTolerances& tol) {
  if (curve.points.size() < 8) throw GeometryError("LoopCurve needs at least 8 samples");
  if (!(curve.length_ell > 0.0)) throw GeometryError("LoopCurve length must be positive");
  if (!curve.is_closed) throw GeometryError("LoopCurve must be closed");
  double cmin = std::numeric_limits<double>::infinity();
  double cmax = 0.0;
  double csum = 0.0;
  const std::size_t n = curve.points.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(curve.points[i].norm() - 1.0) > tol.unit_norm) {
      throw GeometryError("LoopCurve sample " + std::to_string(i) + " is off the unit sphere");
    }
    const double c = (curve.points[(i + 1) % n] - curve.points[i]).norm();
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
    csum += c;
  }
  const double mean = csum / static_cast<double>(n);
  if ((cmax - cmin) > tol.chord_uniformity * mean) {
    throw GeometryError("LoopCurve samples are not uniformly spaced");
  }
}

CurvatureProfile geodesic_curvature(const LoopCurve& curve) {
  validate(curve);
  const std::size_t n = curve.size();
  const double h = curve.step();
  CurvatureProfile prof;
  prof.length_ell = curve.length_ell;
  prof.kappa.resize(n);
  prof.arc_grid.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // five-point periodic central differences
    const Vec3& m2 = curve.points[(i + n - 2) % n];
    const Vec3& m1 = curve.points[(i + n - 1) % n];
    const Vec3& cur = curve.points[i];
    const Vec3& p1 = curve.points[(i + 1) % n];
    const Vec3& p2 = curve.points[(i + 2) % n];
    const Vec3 d1 = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
    const Vec3 d2 = (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * cur) / (12.0 * h * h);
    prof.kappa[i] = d2.dot(d1.cross(cur));
    prof.arc_grid[i] = h * static_cast<double>(i);
  }
  prof.kappa_plus_sq_integral = kappa_plus_sq_integral(prof.kappa, h);
  return prof;
}

double kappa_plus_sq_integral(std::span<const double> kappa, double step) {
  double acc = 0.0;
  for (double k : kappa) {
    const double kp = std::max(k, 0.0);
    acc += kp * kp;
  }
  return acc * step;
}

double tube_metric(const CurvatureProfile& profile, double s, double t) {
  if (!(t >= 0.0)) throw DomainError("tube_metric: t must be nonnegative");
  const double kmax = profile.max_abs_kappa();
  if (t * kmax >= 1.0) {
    throw DomainError("tube_metric: t exceeds the positivity bound 1/max|kappa|");
  }
  const double w = std::cos(t) - std::sin(t) * profile.kappa_at(s);
  if (!(w > 0.0)) throw DomainError("tube_metric: metric is not positive at (s, t)");
  return w;
}

double weyl_constant(std::span<const CurvatureProfile> profiles, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("weyl_constant: alpha must be positive");
  if (profiles.empty()) throw DomainError("weyl_constant: no boundary loops");
  double total = 0.0;
  for (const auto& p : profiles) total += p.kappa_plus_sq_integral;
  return alpha * alpha * total / (8.0 * kPi);
}

BoundaryLoop make_loop(LoopCurve curve) {
  CurvatureProfile prof = geodesic_curvature(curve);
  return {std::move(curve), std::move(prof)};
}

std::vector<Vec3> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  std::vector<Vec3> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z)) {
      if (lineno == 1) continue;  // header
      throw FileError(path.string() + ":" + std::to_string(lineno) + ": expected x,y,z");
    }
    pts.emplace_back(x, y, z);
  }
  return pts;
}

void write_points_csv(const std::filesystem::path& path, std::span<const Vec3> points) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out << "x,y,z\n" << std::setprecision(17);
  for (const auto& p : points) out << p.x() << ',' << p.y() << ',' << p.z() << '\n';
}

void write_profile_csv(const std::filesystem::path& path, const CurvatureProfile& profile) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out << "s,kappa\n" << std::setprecision(17);
  for (std::size_t i = 0; i < profile.kappa.size(); ++i) {
    out << profile.arc_grid[i] << ',' << profile.kappa[i] << '\n';
  }
}

}  // namespace robinweyl::geometry
