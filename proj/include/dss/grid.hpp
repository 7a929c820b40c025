#ifndef DSS_GRID_HPP
#define DSS_GRID_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "dss/errors.hpp"
#include "dss/vec.hpp"

namespace dss {

inline constexpr double pi = 3.14159265358979323846;

/// Product quadrature mesh on the unit sphere: midpoint rule in z = cos(theta)
/// times a uniform periodic rule in phi. Every node carries the same weight
/// (2/nz)*(2*pi/nphi), so the weights are positive and sum to 4*pi exactly.
struct SphereMesh {
  int nz = 0;
  int nphi = 0;
  std::vector<double> z_centers;    // -1 + (j+1/2)*2/nz, increasing
  std::vector<double> phi_centers;  // i*2*pi/nphi

  int size() const { return nz * nphi; }
  double weight() const { return (2.0 / nz) * (2.0 * pi / nphi); }

  Vec3 direction(int ia) const {
    const double z = z_centers[ia / nphi];
    const double phi = phi_centers[ia % nphi];
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3{s * std::cos(phi), s * std::sin(phi), z};
  }
};

inline SphereMesh make_sphere_mesh(int nz, int nphi) {
  if (nz < 2 || nphi < 4) throw error(errc::invalid_argument, "sphere mesh too coarse");
  if (nz % 2 || nphi % 2)
    throw error(errc::invalid_argument, "sphere mesh dims must be even for antipodal pairing");
  SphereMesh m;
  m.nz = nz;
  m.nphi = nphi;
  m.z_centers.resize(nz);
  for (int j = 0; j < nz; ++j) m.z_centers[j] = -1.0 + (j + 0.5) * 2.0 / nz;
  m.phi_centers.resize(nphi);
  for (int i = 0; i < nphi; ++i) m.phi_centers[i] = i * 2.0 * pi / nphi;
  return m;
}

// Split a requested angular node count into an (nz, nphi) product with
// aspect ratio near 1:2 and both factors even.
inline SphereMesh make_sphere_mesh(int n_angular) {
  if (n_angular < 8) throw error(errc::invalid_argument, "n_angular must be at least 8");
  int nz = static_cast<int>(std::lround(std::sqrt(n_angular / 2.0)));
  nz += nz % 2;
  nz = std::max(nz, 2);
  int nphi = static_cast<int>(std::lround(static_cast<double>(n_angular) / nz));
  nphi += nphi % 2;
  nphi = std::max(nphi, 4);
  return make_sphere_mesh(nz, nphi);
}

/// Layout of a scale-periodic sample grid: log-uniform radii covering the
/// fundamental annulus {1 <= |x| < lambda} and a product sphere mesh.
struct GridSpec {
  double lambda = 2.0;
  int n_radial = 0;
  int interp_order = 1;  // radial polynomial degree, 1 or 3
  std::vector<double> radial_nodes;  // lambda^(i/n_radial)
  SphereMesh sphere;

  int n_angular() const { return sphere.size(); }
  double log_lambda() const { return std::log(lambda); }

  Vec3 node_point(int ir, int ia) const {
    return radial_nodes[ir] * sphere.direction(ia);
  }

  bool layout_equals(const GridSpec& o) const {
    return lambda == o.lambda && n_radial == o.n_radial &&
           sphere.nz == o.sphere.nz && sphere.nphi == o.sphere.nphi;
  }
};

inline GridSpec build_grid(double lambda, int n_radial, int n_angular,
                           int interp_order = 1) {
  if (!(lambda > 1.0) || !std::isfinite(lambda))
    throw error(errc::invalid_argument, "scale factor must satisfy lambda > 1");
  if (n_radial < 4) throw error(errc::invalid_argument, "n_radial must be at least 4");
  if (interp_order != 1 && interp_order != 3)
    throw error(errc::invalid_argument, "interp_order must be 1 or 3");
  GridSpec g;
  g.lambda = lambda;
  g.n_radial = n_radial;
  g.interp_order = interp_order;
  g.radial_nodes.resize(n_radial);
  for (int i = 0; i < n_radial; ++i)
    g.radial_nodes[i] = std::pow(lambda, static_cast<double>(i) / n_radial);
  g.sphere = make_sphere_mesh(n_angular);
  return g;
}

/// Four-point angular interpolation stencil on a SphereMesh. Inside the mesh
/// it is bilinear in (z, phi); past the extreme z rows it blends toward the
/// antipodal-in-phi column so the value stays continuous across the pole.
struct AngularStencil {
  int idx[4];
  double w[4];
};

namespace detail {

// Snap a node-unit coordinate onto an exact integer so evaluation at a grid
// node reproduces the stored sample bit for bit.
inline double snap_units(double u) {
  const double r = std::round(u);
  return std::abs(u - r) < 1e-9 ? r : u;
}

inline void phi_pair(const SphereMesh& m, double phi, int& i0, int& i1, double& t) {
  const double tp = 2.0 * pi;
  double p = std::fmod(phi, tp);
  if (p < 0) p += tp;
  double u = snap_units(p / tp * m.nphi);
  if (u >= m.nphi) u -= m.nphi;
  i0 = static_cast<int>(std::floor(u)) % m.nphi;
  t = u - std::floor(u);
  i1 = (i0 + 1) % m.nphi;
}

}  // namespace detail

inline AngularStencil angular_stencil(const SphereMesh& m, double z, double phi) {
  AngularStencil s{};
  const double z_lo = m.z_centers.front(), z_hi = m.z_centers.back();
  int p0, p1;
  double tp;
  detail::phi_pair(m, phi, p0, p1, tp);
  if (z >= z_lo && z <= z_hi) {
    const double u = detail::snap_units((z - z_lo) / (2.0 / m.nz));
    int j0 = std::min(static_cast<int>(std::floor(u)), m.nz - 2);
    const double tz = u - j0;
    s.idx[0] = j0 * m.nphi + p0;
    s.idx[1] = j0 * m.nphi + p1;
    s.idx[2] = (j0 + 1) * m.nphi + p0;
    s.idx[3] = (j0 + 1) * m.nphi + p1;
    s.w[0] = (1 - tz) * (1 - tp);
    s.w[1] = (1 - tz) * tp;
    s.w[2] = tz * (1 - tp);
    s.w[3] = tz * tp;
    return s;
  }
  // pole cap: blend the extreme row at phi with the same row at phi + pi
  const bool north = z > z_hi;
  const int row = north ? m.nz - 1 : 0;
  const double cap = north ? (z - z_hi) / (1.0 - z_hi) : (z_lo - z) / (z_lo + 1.0);
  const double a = std::min(cap, 1.0) * 0.5;
  int q0, q1;
  double tq;
  detail::phi_pair(m, phi + pi, q0, q1, tq);
  s.idx[0] = row * m.nphi + p0;
  s.idx[1] = row * m.nphi + p1;
  s.idx[2] = row * m.nphi + q0;
  s.idx[3] = row * m.nphi + q1;
  s.w[0] = (1 - a) * (1 - tp);
  s.w[1] = (1 - a) * tp;
  s.w[2] = a * (1 - tq);
  s.w[3] = a * tq;
  return s;
}

inline AngularStencil angular_stencil(const SphereMesh& m, const Vec3& dir) {
  const double z = dir.z;
  const double phi = std::atan2(dir.y, dir.x);
  return angular_stencil(m, z, phi);
}

}  // namespace dss

#endif
