#ifndef DSS_FIELD_HPP
#define DSS_FIELD_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dss/errors.hpp"
#include "dss/grid.hpp"
#include "dss/vec.hpp"

namespace dss {

namespace detail {

// Lagrange stencil on a uniform 1-d node grid, degree 1 or 3. Indices may
// fall outside [0, n) when wrapping is allowed; otherwise the stencil is
// shifted inward so all nodes exist. u is in node units. Node hits are
// snapped so evaluating at a node reproduces the stored value exactly.
struct Stencil1D {
  int idx[4];
  double w[4];
  int count;
};

inline Stencil1D uniform_stencil(double u, int n, bool wrap, int order) {
  Stencil1D s{};
  u = snap_units(u);
  if (order == 1) {
    int i0 = static_cast<int>(std::floor(u));
    if (!wrap) i0 = std::max(0, std::min(i0, n - 2));
    const double t = u - i0;
    s.count = 2;
    s.idx[0] = i0;
    s.idx[1] = i0 + 1;
    s.w[0] = 1.0 - t;
    s.w[1] = t;
    return s;
  }
  int base = static_cast<int>(std::floor(u));
  if (!wrap) base = std::max(1, std::min(base, n - 3));
  const double t = u - base;
  s.count = 4;
  for (int k = 0; k < 4; ++k) s.idx[k] = base - 1 + k;
  s.w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
  s.w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  s.w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
  s.w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
  return s;
}

inline int floor_div(int a, int b) {
  int q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

}  // namespace detail

/// Measured pointwise decay certificate: |u(x,t)| <= C * sqrt(t)^alpha *
/// (|x| + sqrt(t))^(-beta) on the region {|x| >= R0 * sqrt(t)} covered by the
/// stored samples. `core_bound` is the measured sup over the complementary
/// stored region |x| < R0 * sqrt(t).
struct DecayEnvelope {
  double C = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double R0 = 2.0;
  double core_bound = 0.0;
  bool valid = false;
};

/// Vector field on R^3 minus the origin determined by samples on the
/// fundamental annulus and the extension rule u(x) = lambda^m u(lambda^m x).
/// Generator-produced fields may carry an exact closure; evaluation then
/// bypasses interpolation but still routes through the same reduction.
struct DssField {
  GridSpec grid;
  std::vector<Vec3> samples;                 // [ir * n_ang + ia]
  std::function<Vec3(const Vec3&)> closure;  // optional, must itself be DSS
  std::string name;
  std::string roughness_tag;                 // nominal integrability, e.g. "q=6"

  Vec3& sample(int ir, int ia) { return samples[ir * grid.n_angular() + ia]; }
  const Vec3& sample(int ir, int ia) const {
    return samples[ir * grid.n_angular() + ia];
  }
  bool has_closure() const { return static_cast<bool>(closure); }
};

inline DssField make_field(const GridSpec& grid) {
  DssField f;
  f.grid = grid;
  f.samples.assign(static_cast<size_t>(grid.n_radial) * grid.n_angular(), Vec3{});
  return f;
}

namespace detail {

// Radial fetch with the scale-periodic wrap v(xi + 1) = v(xi) / lambda.
inline Vec3 fetch_wrapped(const DssField& f, int j, int ia) {
  const int n = f.grid.n_radial;
  const int p = floor_div(j, n);
  const Vec3& s = f.sample(j - p * n, ia);
  if (p == 0) return s;
  return ipow(f.grid.lambda, -p) * s;
}

inline Vec3 interp_fundamental(const DssField& f, double xi_red, const Vec3& dir) {
  const AngularStencil as = angular_stencil(f.grid.sphere, dir);
  const Stencil1D rs =
      uniform_stencil(xi_red * f.grid.n_radial, f.grid.n_radial, true,
                      f.grid.interp_order);
  Vec3 v{};
  for (int k = 0; k < rs.count; ++k) {
    Vec3 row{};
    for (int a = 0; a < 4; ++a)
      row += as.w[a] * fetch_wrapped(f, rs.idx[k], as.idx[a]);
    v += rs.w[k] * row;
  }
  return v;
}

struct Reduction {
  long long m;     // u(x) = lambda^m u(lambda^m x)
  double scale;    // lambda^m
  double xi_red;   // log_lambda of the reduced radius, in [0, 1)
};

inline Reduction reduce_radius(double r, double lambda) {
  const double xi = std::log(r) / std::log(lambda);
  double fl = std::floor(xi);
  double xi_red = xi - fl;
  if (xi_red >= 1.0) {  // rounding pushed us onto the next annulus
    xi_red -= 1.0;
    fl += 1.0;
  }
  Reduction red;
  red.m = -static_cast<long long>(fl);
  red.scale = ipow(lambda, red.m);
  red.xi_red = xi_red;
  return red;
}

}  // namespace detail

/// Evaluate a DSS field anywhere off the origin via reduction to the
/// fundamental annulus. Exact under x -> lambda * x by construction.
inline Vec3 dss_eval(const DssField& f, const Vec3& x) {
  const double r = norm(x);
  if (r == 0.0 || !std::isfinite(r))
    throw error(errc::singular_point, "field evaluation at the origin");
  const auto red = detail::reduce_radius(r, f.grid.lambda);
  if (f.has_closure()) return red.scale * f.closure(red.scale * x);
  const Vec3 dir = (1.0 / r) * x;
  return red.scale * detail::interp_fundamental(f, red.xi_red, dir);
}

/// Space-time samples on a radial shell over the fundamental time band
/// [1, lambda^2], extended to all positive times by the parabolic rule
/// u(x,t) = lambda^m u(lambda^m x, lambda^(2m) t).
struct SpaceTimeCell {
  GridSpec grid;       // supplies lambda, sphere mesh, interp order
  double r_min = 0.0;  // shell coverage after reduction to the band
  double r_max = 0.0;
  std::vector<double> shell_radii;  // log-uniform, inclusive of both ends
  std::vector<double> time_nodes;   // log-uniform in [1, lambda^2], inclusive
  std::vector<Vec3> samples;        // [(it * n_shell + ir) * n_ang + ia]
  std::function<Vec3(const Vec3&, double)> closure;
  DecayEnvelope envelope;
  std::string name;

  int n_shell() const { return static_cast<int>(shell_radii.size()); }
  int n_time() const { return static_cast<int>(time_nodes.size()); }

  Vec3& sample(int it, int ir, int ia) {
    return samples[(static_cast<size_t>(it) * n_shell() + ir) * grid.n_angular() + ia];
  }
  const Vec3& sample(int it, int ir, int ia) const {
    return samples[(static_cast<size_t>(it) * n_shell() + ir) * grid.n_angular() + ia];
  }
  Vec3 node_point(int ir, int ia) const {
    return shell_radii[ir] * grid.sphere.direction(ia);
  }
  bool has_closure() const { return static_cast<bool>(closure); }

  bool layout_equals(const SpaceTimeCell& o) const {
    return grid.layout_equals(o.grid) && r_min == o.r_min && r_max == o.r_max &&
           n_shell() == o.n_shell() && n_time() == o.n_time();
  }
};

inline SpaceTimeCell make_cell(const GridSpec& grid, double r_min, double r_max,
                               int n_shell, int n_time) {
  if (!(r_min > 0.0) || !(r_max > r_min))
    throw error(errc::invalid_argument, "cell shell must satisfy 0 < r_min < r_max");
  if (n_shell < 4 || n_time < 2)
    throw error(errc::invalid_argument, "cell resolution too coarse");
  SpaceTimeCell c;
  c.grid = grid;
  c.r_min = r_min;
  c.r_max = r_max;
  c.shell_radii.resize(n_shell);
  const double lr = std::log(r_max / r_min);
  for (int i = 0; i < n_shell; ++i)
    c.shell_radii[i] = r_min * std::exp(lr * i / (n_shell - 1));
  c.shell_radii.back() = r_max;
  c.time_nodes.resize(n_time);
  const double l2 = 2.0 * std::log(grid.lambda);
  for (int j = 0; j < n_time; ++j)
    c.time_nodes[j] = std::exp(l2 * j / (n_time - 1));
  c.time_nodes.back() = grid.lambda * grid.lambda;
  c.samples.assign(static_cast<size_t>(n_shell) * n_time * grid.n_angular(), Vec3{});
  return c;
}

/// Fill a field's annulus samples from an explicit function (also kept as the
/// field's closure when `keep_closure` is set; the function must then be DSS).
inline void fill_field(DssField& f, const std::function<Vec3(const Vec3&)>& fn,
                       bool keep_closure = false) {
  for (int ir = 0; ir < f.grid.n_radial; ++ir)
    for (int ia = 0; ia < f.grid.n_angular(); ++ia)
      f.sample(ir, ia) = fn(f.grid.node_point(ir, ia));
  if (keep_closure) f.closure = fn;
}

namespace detail {

struct TimeReduction {
  long long m;
  double scale;  // lambda^m
  double t_red;  // in [1, lambda^2)
};

inline TimeReduction time_reduce(double t, double lambda) {
  const double l2 = lambda * lambda;
  const double eta = std::log(t) / std::log(l2);
  long long m = -static_cast<long long>(std::floor(eta));
  double t_red = t * ipow(l2, m);
  while (t_red < 1.0) {
    ++m;
    t_red = t * ipow(l2, m);
  }
  while (t_red >= l2) {
    --m;
    t_red = t * ipow(l2, m);
  }
  return TimeReduction{m, ipow(lambda, m), t_red};
}

}  // namespace detail

/// Evaluate a space-time cell at (x, t), t > 0, via reduction of t to the
/// fundamental band. Throws out_of_shell when the reduced radius leaves the
/// stored shell (no spatial extrapolation).
inline Vec3 dss_eval_spacetime(const SpaceTimeCell& c, const Vec3& x, double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw error(errc::invalid_argument, "cell evaluation requires t > 0");
  const double r = norm(x);
  if (r == 0.0 || !std::isfinite(r))
    throw error(errc::singular_point, "cell evaluation at the spatial origin");
  const auto tr = detail::time_reduce(t, c.grid.lambda);
  const double r_red = tr.scale * r;
  if (c.has_closure()) return tr.scale * c.closure(tr.scale * x, tr.t_red);

  const int ns = c.n_shell(), nt = c.n_time();
  const double h_r = std::log(c.r_max / c.r_min) / (ns - 1);
  const double u_r = detail::snap_units(std::log(r_red / c.r_min) / h_r);
  if (u_r < -1e-9 || u_r > ns - 1 + 1e-9)
    throw error(errc::out_of_shell,
                "reduced radius " + std::to_string(r_red) + " outside shell [" +
                    std::to_string(c.r_min) + ", " + std::to_string(c.r_max) + "]");
  const double h_t = 2.0 * std::log(c.grid.lambda) / (nt - 1);
  const double u_t = std::min(std::log(tr.t_red) / h_t,
                              static_cast<double>(nt - 1));

  const auto rs = detail::uniform_stencil(std::min(u_r, double(ns - 1)), ns,
                                          false, c.grid.interp_order);
  const auto ts = detail::uniform_stencil(u_t, nt, false,
                                          nt >= 4 ? c.grid.interp_order : 1);
  const Vec3 dir = (1.0 / r) * x;
  const AngularStencil as = angular_stencil(c.grid.sphere, dir);

  Vec3 v{};
  for (int kt = 0; kt < ts.count; ++kt) {
    Vec3 vt{};
    for (int kr = 0; kr < rs.count; ++kr) {
      Vec3 vr{};
      for (int a = 0; a < 4; ++a)
        vr += as.w[a] * c.sample(ts.idx[kt], rs.idx[kr], as.idx[a]);
      vt += rs.w[kr] * vr;
    }
    v += ts.w[kt] * vt;
  }
  return tr.scale * v;
}

/// Fill a cell's samples from an explicit space-time function (also kept as
/// the cell's closure when `keep_closure` is set).
inline void fill_cell(SpaceTimeCell& c,
                      const std::function<Vec3(const Vec3&, double)>& fn,
                      bool keep_closure = false) {
  for (int it = 0; it < c.n_time(); ++it)
    for (int ir = 0; ir < c.n_shell(); ++ir)
      for (int ia = 0; ia < c.grid.n_angular(); ++ia)
        c.sample(it, ir, ia) = fn(c.node_point(ir, ia), c.time_nodes[it]);
  if (keep_closure) c.closure = fn;
}

}  // namespace dss

#endif
