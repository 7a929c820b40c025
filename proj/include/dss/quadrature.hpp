#ifndef DSS_QUADRATURE_HPP
#define DSS_QUADRATURE_HPP

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "dss/errors.hpp"
#include "dss/grid.hpp"
#include "dss/vec.hpp"

namespace dss {

/// Nodes and weights for a 1-d rule on [a, b].
struct Quad1D {
  std::vector<double> x;
  std::vector<double> w;
};

namespace detail {

// Gauss-Legendre on [-1, 1] by Newton iteration on P_n; nodes are symmetric
// and weights sum to 2 to machine precision. Cached per order.
inline const Quad1D& gauss_legendre_unit(int n) {
  static std::mutex mu;
  static std::map<int, Quad1D> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  Quad1D q;
  q.x.resize(n);
  q.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    q.x[i] = -z;
    q.x[n - 1 - i] = z;
    q.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    q.w[n - 1 - i] = q.w[i];
  }
  return cache.emplace(n, std::move(q)).first->second;
}

}  // namespace detail

/// Gauss-Legendre rule mapped to [a, b].
inline Quad1D gl_rule(int n, double a, double b) {
  if (n < 1) throw error(errc::invalid_argument, "quadrature order must be >= 1");
  const Quad1D& u = detail::gauss_legendre_unit(n);
  Quad1D q;
  q.x.resize(n);
  q.w.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    q.x[i] = mid + half * u.x[i];
    q.w[i] = half * u.w[i];
  }
  return q;
}

/// Composite rule: n-point Gauss-Legendre on each panel [edges[k], edges[k+1]].
inline Quad1D gl_composite(int n_per_panel, const std::vector<double>& edges) {
  Quad1D q;
  for (size_t k = 0; k + 1 < edges.size(); ++k) {
    const Quad1D p = gl_rule(n_per_panel, edges[k], edges[k + 1]);
    q.x.insert(q.x.end(), p.x.begin(), p.x.end());
    q.w.insert(q.w.end(), p.w.begin(), p.w.end());
  }
  return q;
}

/// Panel edges from a to b whose widths grow geometrically by `ratio`
/// (ratio > 1 grades toward a). First width is solved so panels fill [a, b].
inline std::vector<double> graded_edges(double a, double b, int n_panels,
                                        double ratio) {
  if (!(b > a) || n_panels < 1 || !(ratio > 0.0))
    throw error(errc::invalid_argument, "bad graded panel request");
  std::vector<double> e(n_panels + 1);
  double total = 0.0, w = 1.0;
  for (int k = 0; k < n_panels; ++k, w *= ratio) total += w;
  e[0] = a;
  w = (b - a) / total;
  for (int k = 0; k < n_panels; ++k, w *= ratio) e[k + 1] = e[k] + w;
  e[n_panels] = b;
  return e;
}

/// Quadrature over the unit sphere: Gauss-Legendre in z = cos(theta) crossed
/// with uniform midpoints in phi. Exact for low harmonics, spectral in phi.
/// Weights sum to 4*pi.
struct SphereQuad {
  std::vector<Vec3> dir;
  std::vector<double> w;
  int size() const { return static_cast<int>(dir.size()); }
};

inline SphereQuad make_sphere_quad(int nz, int nphi) {
  if (nz < 2 || nphi < 4)
    throw error(errc::invalid_argument, "sphere quadrature too coarse");
  const Quad1D gz = gl_rule(nz, -1.0, 1.0);
  SphereQuad s;
  s.dir.reserve(static_cast<size_t>(nz) * nphi);
  s.w.reserve(static_cast<size_t>(nz) * nphi);
  const double wphi = 2.0 * pi / nphi;
  for (int j = 0; j < nz; ++j) {
    const double z = gz.x[j];
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    for (int i = 0; i < nphi; ++i) {
      const double phi = wphi * (i + 0.5);
      s.dir.push_back(Vec3{rho * std::cos(phi), rho * std::sin(phi), z});
      s.w.push_back(gz.w[j] * wphi);
    }
  }
  return s;
}

/// Volume rule over the fundamental annulus {1 <= |x| < lambda}: radial
/// Gauss-Legendre in log r (weight r^3 = e^{3 sigma} absorbed) crossed with a
/// sphere rule. Integrates f over A0 as sum w_i f(p_i).
struct AnnulusQuad {
  std::vector<Vec3> p;
  std::vector<double> w;
  int size() const { return static_cast<int>(p.size()); }
};

inline AnnulusQuad make_annulus_quad(double lambda, const Quad1D& radial_log,
                                     const SphereQuad& sph) {
  if (!(lambda > 1.0))
    throw error(errc::invalid_argument, "annulus quadrature requires lambda > 1");
  AnnulusQuad a;
  const int nr = static_cast<int>(radial_log.x.size());
  a.p.reserve(static_cast<size_t>(nr) * sph.size());
  a.w.reserve(a.p.capacity());
  for (int i = 0; i < nr; ++i) {
    const double r = std::exp(radial_log.x[i]);
    const double wr = radial_log.w[i] * r * r * r;
    for (int j = 0; j < sph.size(); ++j) {
      a.p.push_back(r * sph.dir[j]);
      a.w.push_back(wr * sph.w[j]);
    }
  }
  return a;
}

inline AnnulusQuad make_annulus_quad(double lambda, int n_radial,
                                     const SphereQuad& sph) {
  if (!(lambda > 1.0))
    throw error(errc::invalid_argument, "annulus quadrature requires lambda > 1");
  return make_annulus_quad(lambda, gl_rule(n_radial, 0.0, std::log(lambda)),
                           sph);
}

/// Sphere rule aligned to an nz x nphi cell mesh: per-cell Gauss panels with
/// pz points in z and pphi in phi. Every cell contains nodes, so features the
/// mesh can represent are never invisible to the rule.
inline SphereQuad make_sphere_quad_cells(int nz_cells, int nphi_cells, int pz,
                                         int pphi) {
  if (nz_cells < 2 || nphi_cells < 2 || pz < 1 || pphi < 1)
    throw error(errc::invalid_argument, "sphere cell quadrature too coarse");
  const Quad1D& uz = detail::gauss_legendre_unit(pz);
  const Quad1D& up = detail::gauss_legendre_unit(pphi);
  SphereQuad s;
  s.dir.reserve(static_cast<size_t>(nz_cells) * pz * nphi_cells * pphi);
  s.w.reserve(s.dir.capacity());
  const double dz = 2.0 / nz_cells;
  const double dphi = 2.0 * pi / nphi_cells;
  for (int jc = 0; jc < nz_cells; ++jc) {
    const double z0 = -1.0 + jc * dz;
    for (int j = 0; j < pz; ++j) {
      const double z = z0 + 0.5 * dz * (1.0 + uz.x[j]);
      const double wz = 0.5 * dz * uz.w[j];
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      for (int ic = 0; ic < nphi_cells; ++ic) {
        const double p0 = ic * dphi;
        for (int i = 0; i < pphi; ++i) {
          const double phi = p0 + 0.5 * dphi * (1.0 + up.x[i]);
          s.dir.push_back(Vec3{rho * std::cos(phi), rho * std::sin(phi), z});
          s.w.push_back(wz * 0.5 * dphi * up.w[i]);
        }
      }
    }
  }
  return s;
}

/// C-infinity transition, 0 for s <= 0 and 1 for s >= 1, flat at both ends.
inline double transition01(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

/// Smooth cutoff equal to 1 for s <= s0 and 0 for s >= s1.
inline double cutoff_hi(double s, double s0, double s1) {
  return 1.0 - transition01((s - s0) / (s1 - s0));
}

}  // namespace dss

#endif
