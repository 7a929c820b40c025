#ifndef DSS_KERNELS_HPP
#define DSS_KERNELS_HPP

#include <cmath>

#include "dss/errors.hpp"
#include "dss/grid.hpp"
#include "dss/vec.hpp"

namespace dss {

/// Rank-3 tensor holding the gradient of the projected heat kernel:
/// grad(i,j,k) = d/dx_k K_ij(x,t). Contracting against a symmetric momentum
/// flux H gives the integrand of e^{tD} P div H.
struct Tensor3 {
  double v[27];
  double& operator()(int i, int j, int k) { return v[(i * 3 + j) * 3 + k]; }
  double operator()(int i, int j, int k) const {
    return v[(i * 3 + j) * 3 + k];
  }
};

/// out_i = sum_{j,k} grad(i,j,k) H_jk.
inline Vec3 contract(const Tensor3& g, const Mat3& h) {
  Vec3 out{};
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) s += g(i, j, k) * h(j, k);
    out[i] = s;
  }
  return out;
}

/// Scalar heat kernel (4 pi t)^{-3/2} exp(-|x|^2 / (4t)).
inline double heat_kernel(const Vec3& x, double t) {
  if (!(t > 0.0))
    throw error(errc::invalid_argument, "heat kernel requires t > 0");
  const double a2 = 1.0 / (4.0 * t);
  return std::pow(4.0 * pi * t, -1.5) * std::exp(-dot(x, x) * a2);
}

namespace detail {

// Radial building blocks of the projected heat kernel. Everything derives
// from two scalar functions of r = |x| at diffusion scale a = 1/(2 sqrt(t)):
//   phi  = Gaussian bump (the heat kernel),
//   g(r) = erf(a r) / r  (4 pi times the Newtonian potential of phi).
// The tensor structure needs g'(r)/r, g''(r), and the two combinations
//   A  = g''/r - g'/r^2,
//   B3 = g''' - 3 g''/r + 3 g'/r^2,
// which appear in second and third derivative formulas for radial functions.
// Near ar = 0 the closed forms cancel catastrophically, so a power series in
// (a r)^2 takes over below a fixed threshold.
struct OseenRadial {
  double phi;       // heat kernel value
  double dphi;      // phi'(r) / r  (so grad phi = dphi * x)
  double gp_r;      // g'/r
  double gpp;       // g''
  double A;         // g''/r - g'/r^2
  double B3;        // g''' - 3 g''/r + 3 g'/r^2
};

inline OseenRadial oseen_radial(double r, double t) {
  OseenRadial o{};
  const double inv_rtpi = 0.56418958354775628695;  // 1/sqrt(pi)
  if (t == 0.0) {
    // vanishing-time limit at r > 0: Gaussian part gone, potential part is
    // the Newtonian kernel 1/r.
    const double r2 = r * r, r3 = r2 * r, r4 = r3 * r;
    o.phi = 0.0;
    o.dphi = 0.0;
    o.gp_r = -1.0 / r3;
    o.gpp = 2.0 / r3;
    o.A = 3.0 / r4;
    o.B3 = -15.0 / r4;
    return o;
  }
  const double a = 0.5 / std::sqrt(t);
  const double s = a * r;
  const double eg = std::exp(-s * s);
  o.phi = a * a * a * inv_rtpi * inv_rtpi * inv_rtpi * eg;
  o.dphi = -2.0 * a * a * o.phi;

  if (s < 0.7) {
    // g(r) = sum_n G_n r^{2n}, G_n = (2a/sqrt(pi)) (-1)^n a^{2n}/(n!(2n+1)).
    const double r2 = r * r;
    double Gn = 2.0 * a * inv_rtpi;  // n = 0 coefficient
    double rpow = 1.0;               // r^{2n-2} tracked from n = 1
    double gp_r = 0.0, gpp = 0.0, A = 0.0, B3 = 0.0;
    for (int n = 1; n <= 24; ++n) {
      Gn *= -(a * a) * (2.0 * n - 1.0) / (n * (2.0 * n + 1.0));
      const double c = 2.0 * n * Gn;
      gp_r += c * rpow;
      gpp += c * (2.0 * n - 1.0) * rpow;
      if (n >= 2 && r > 0.0) A += c * (2.0 * n - 2.0) * rpow / r;
      if (n >= 3 && r > 0.0) B3 += 8.0 * n * (n - 1.0) * (n - 2.0) * Gn * rpow / r;
      rpow *= r2;
      if (std::abs(c * rpow) < 1e-300) break;
    }
    o.gp_r = gp_r;
    o.gpp = gpp;
    o.A = A;
    o.B3 = B3;
    return o;
  }

  const double E = std::erf(s);
  const double D = 2.0 * a * inv_rtpi * eg;       // dE/dr
  const double Dp = -2.0 * a * a * r * D;         // D'
  const double Dpp = (4.0 * std::pow(a, 4) * r * r - 2.0 * a * a) * D;
  const double r2 = r * r, r3 = r2 * r, r4 = r3 * r;
  o.gp_r = D / r2 - E / r3;
  o.gpp = Dp / r - 2.0 * D / r2 + 2.0 * E / r3;
  o.A = Dp / r2 - 3.0 * D / r3 + 3.0 * E / r4;
  o.B3 = Dpp / r - 6.0 * Dp / r2 + 15.0 * D / r3 - 15.0 * E / r4;
  return o;
}

}  // namespace detail

/// One evaluation of the projected-heat-kernel gradient, carried around by
/// the convolution drivers. value(i,j,k) = d/dx_k K_ij(x,t), units length^-4;
/// parabolically homogeneous of degree -4.
struct KernelSample {
  Vec3 x;
  double t = 0.0;
  Tensor3 value{};
};

/// Shared resolution/tolerance knobs for the singular convolutions. The time
/// endpoint is always handled by the substitution tau = sqrt(t - s) with
/// panels graded toward tau = 0; `time_panels` sets the grading depth.
struct QuadratureConfig {
  int time_panels = 8;      // graded tau-panels per endpoint direction
  int nodes_per_panel = 4;  // Gauss-Legendre order per time panel
  int spatial_depth = 10;   // multiscale annulus count around singular points
  double abs_tol = 1e-9;    // absolute certificate floor: tails below this
                            // pass regardless of the local value (symmetry
                            // zeros would otherwise demand unbounded depth)
  double rel_tol = 1e-3;    // target relative accuracy of quadrature grids

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || time_panels < 1 ||
        nodes_per_panel < 1 || spatial_depth < 1)
      throw error(errc::invalid_argument, "quadrature config out of range");
  }
  QuadratureConfig refined() const {
    QuadratureConfig c = *this;
    c.time_panels += 4;
    c.nodes_per_panel += 2;
    c.spatial_depth += 4;
    return c;
  }
};

/// Oseen tensor K_ij(x,t): the kernel of the projected heat semigroup,
/// K = phi * delta + Hess(g)/(4 pi) with g the scaled Newtonian potential of
/// the Gaussian. Degree -3 under the parabolic scaling (x,t) ->
/// (c x, c^2 t).
inline Mat3 oseen_kernel(const Vec3& x, double t) {
  const double r = norm(x);
  if (!(r > 0.0) && !(t > 0.0))
    throw error(errc::singular_point, "kernel evaluation at (0, 0)");
  const auto o = detail::oseen_radial(r, t);
  const double inv4pi = 1.0 / (4.0 * pi);
  Mat3 K{};
  if (r == 0.0) {
    // at the spatial origin the Hessian of a radial function is g'' * I / ...
    // series limits: gp_r -> g''(0), A -> 0; Hess = g''(0) delta.
    for (int i = 0; i < 3; ++i) K(i, i) = o.phi + inv4pi * o.gpp;
    return K;
  }
  const Vec3 n = (1.0 / r) * x;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double d = (i == j) ? 1.0 : 0.0;
      K(i, j) = o.phi * d +
                inv4pi * (d * o.gp_r + n[i] * n[j] * (o.gpp - o.gp_r));
    }
  return K;
}

/// Gradient of the Oseen tensor, grad(i,j,k) = d/dx_k K_ij(x,t). Degree -4
/// under parabolic scaling; obeys the pointwise bound
/// |grad K| <= C (|x| + sqrt(t))^{-4} with a finite measured constant.
inline Tensor3 oseen_grad_kernel(const Vec3& x, double t) {
  const double r = norm(x);
  if (!(r > 0.0) && !(t > 0.0))
    throw error(errc::singular_point, "kernel evaluation at (0, 0)");
  Tensor3 g{};
  const auto o = detail::oseen_radial(r, t);
  const double inv4pi = 1.0 / (4.0 * pi);
  if (r == 0.0) {
    for (double& v : g.v) v = 0.0;  // odd in x: the gradient vanishes at 0
    return g;
  }
  const Vec3 n = (1.0 / r) * x;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        const double dij = (i == j) ? 1.0 : 0.0;
        const double dik = (i == k) ? 1.0 : 0.0;
        const double djk = (j == k) ? 1.0 : 0.0;
        g(i, j, k) =
            dij * o.dphi * r * n[k] +
            inv4pi * (n[i] * n[j] * n[k] * o.B3 +
                      (dij * n[k] + dik * n[j] + djk * n[i]) * o.A);
      }
  return g;
}

}  // namespace dss

#endif
