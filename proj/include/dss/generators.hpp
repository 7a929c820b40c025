#ifndef DSS_GENERATORS_HPP
#define DSS_GENERATORS_HPP

#include <cmath>
#include <functional>
#include <string>

#include "dss/errors.hpp"
#include "dss/field.hpp"
#include "dss/leray.hpp"

namespace dss {

enum class Family { swirl, point_singular, mixed };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::swirl: return "swirl";
    case Family::point_singular: return "point_singular";
    default: return "mixed";
  }
}

inline Family family_from_name(const std::string& s) {
  if (s == "swirl") return Family::swirl;
  if (s == "point_singular") return Family::point_singular;
  if (s == "mixed") return Family::mixed;
  throw error(errc::invalid_argument, "unknown data family: " + s);
}

struct GeneratorParams {
  double lambda = 2.0;
  double amplitude = 1.0;
  double gamma = 0.45;      // spike exponent: |x - x*|^{-gamma}
  double q = 6.0;           // intended local integrability exponent
  double swirl_weight = 1.0;   // component weights for the mixed family
  double spike_weight = 1.0;
  int n_radial = 16;
  int n_angular = 480;  // 16 x 30 mesh: resolves the point-singular ball
  int interp_order = 3;
  bool project = false;     // post-apply the Leray projection
  double project_tol = 1e-3;
};

/// Spike centre distance from the origin. The ball of `spike_cutoff_radius`
/// around it stays strictly inside {1 < |x| < lambda}; for small lambda the
/// centre moves to the log-midpoint sqrt(lambda) with a shrunken cutoff.
inline double spike_center_radius(double lambda) {
  return 0.625 * lambda >= 1.05 ? 0.75 * lambda : std::sqrt(lambda);
}

inline double spike_cutoff_radius(double lambda) {
  if (0.625 * lambda >= 1.05) return 0.125 * lambda;
  const double r = std::sqrt(lambda);
  return 0.4 * std::min(r - 1.0, lambda - r);
}

namespace detail {

inline Vec3 spike_dir() { return Vec3{2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0}; }

// C2 bump profile (1 - s^2)^3 on [0, 1): triple zero at the cutoff sphere.
inline double bump(double s) {
  const double t = 1.0 - s * s;
  return t * t * t;
}

inline double bump_prime(double s) {
  const double t = 1.0 - s * s;
  return -6.0 * s * t * t;
}

inline Vec3 swirl_value(const Vec3& y) {
  const double r2 = y.x * y.x + y.y * y.y + y.z * y.z;
  return Vec3{-y.y / r2, y.x / r2, 0.0};
}

// Spike profile on the fundamental annulus; zero outside the cutoff ball.
inline Vec3 spike_value(const Vec3& y, double lambda, double gamma) {
  const Vec3 c{spike_center_radius(lambda), 0.0, 0.0};
  const double rc = spike_cutoff_radius(lambda);
  const Vec3 d = y - c;
  const double rho = norm(d);
  if (rho >= rc) return Vec3{};
  return (bump(rho / rc) * std::pow(rho, -gamma)) * spike_dir();
}

inline double spike_divergence(const Vec3& y, double lambda, double gamma) {
  const Vec3 c{spike_center_radius(lambda), 0.0, 0.0};
  const double rc = spike_cutoff_radius(lambda);
  const Vec3 d = y - c;
  const double rho = norm(d);
  if (rho >= rc || rho == 0.0) return 0.0;
  const double s = rho / rc;
  const double dphi = bump_prime(s) / rc * std::pow(rho, -gamma) -
                      gamma * bump(s) * std::pow(rho, -gamma - 1.0);
  return dot(spike_dir(), d) / rho * dphi;
}

}  // namespace detail

/// Exact divergence of the generated field, valid on all of R^3 minus the
/// origin via the same annulus reduction the field itself uses. The swirl
/// component is solenoidal, so only the spike contributes.
inline std::function<double(const Vec3&)> divergence_closure(
    Family family, const GeneratorParams& p) {
  if (family == Family::swirl) {
    return [](const Vec3&) { return 0.0; };
  }
  const double lam = p.lambda, gamma = p.gamma;
  const double amp =
      p.amplitude * (family == Family::mixed ? p.spike_weight : 1.0);
  return [lam, gamma, amp](const Vec3& x) {
    const auto red = detail::reduce_radius(norm(x), lam);
    return amp * red.scale * red.scale *
           detail::spike_divergence(red.scale * x, lam, gamma);
  };
}

/// Build lambda-DSS initial data. Families: `swirl` is the bounded
/// axisymmetric field A (-x2, x1, 0)/|x|^2 (divergence-free, |x|^{-1} decay);
/// `point_singular` is a |x - x*|^{-gamma} spike at a point interior to the
/// fundamental annulus under a C2 cutoff, replicated to all annuli by the
/// scaling rule; `mixed` is their weighted sum. The spike requires
/// gamma * q < 3 so the data lies in L^q away from the origin.
inline DssField make_test_data(Family family, const GeneratorParams& p) {
  if (!(p.amplitude == p.amplitude) || !std::isfinite(p.amplitude))
    throw error(errc::invalid_argument, "amplitude must be finite");
  if (family != Family::swirl) {
    if (!(p.gamma > 0.0) || !(p.q > 0.0))
      throw error(errc::invalid_argument, "spike needs gamma > 0 and q > 0");
    if (!(p.gamma * p.q < 3.0))
      throw error(errc::invalid_argument,
                  "spike exponent gamma=" + std::to_string(p.gamma) +
                      " fails local integrability: gamma*q must be < 3");
  }

  const GridSpec grid =
      build_grid(p.lambda, p.n_radial, p.n_angular, p.interp_order);
  const double lam = p.lambda, gamma = p.gamma, amp = p.amplitude;
  const double ws = p.swirl_weight, wp = p.spike_weight;

  std::function<Vec3(const Vec3&)> local;
  switch (family) {
    case Family::swirl:
      local = [amp](const Vec3& y) { return amp * detail::swirl_value(y); };
      break;
    case Family::point_singular:
      local = [amp, lam, gamma](const Vec3& y) {
        return amp * detail::spike_value(y, lam, gamma);
      };
      break;
    case Family::mixed:
      local = [amp, ws, wp, lam, gamma](const Vec3& y) {
        return amp * (ws * detail::swirl_value(y) +
                      wp * detail::spike_value(y, lam, gamma));
      };
      break;
  }

  DssField f = make_field(grid);
  fill_field(f, local, /*keep_closure=*/true);
  f.name = family_name(family);
  if (family == Family::swirl) {
    f.roughness_tag = "q=inf";
  } else {
    const double qi = std::floor(p.q);
    f.roughness_tag =
        qi == p.q ? "q=" + std::to_string(static_cast<long long>(qi))
                  : "q=" + std::to_string(p.q);
  }
  if (p.project) {
    LerayConfig cfg;
    if (family != Family::swirl && p.spike_weight > 0.0) {
      // The far quadrature must place nodes inside the spike ball or the
      // divergence sup comes out spuriously zero.
      const double ang =
          spike_cutoff_radius(p.lambda) / spike_center_radius(p.lambda);
      const int nz = std::min(
          32, std::max(cfg.far_nz,
                       static_cast<int>(std::ceil(
                           3.141592653589793 / (0.75 * ang)))));
      cfg.far_nz = nz;
      cfg.far_nphi = 2 * nz;
      cfg.near_nz = std::max(cfg.near_nz, nz / 2 + (nz / 2 & 1));
      cfg.near_nphi = 2 * cfg.near_nz;
    }
    return leray_project(f, p.project_tol, cfg, divergence_closure(family, p));
  }
  return f;
}

}  // namespace dss

#endif
