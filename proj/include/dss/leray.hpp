#ifndef DSS_LERAY_HPP
#define DSS_LERAY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dss/errors.hpp"
#include "dss/field.hpp"
#include "dss/quadrature.hpp"

namespace dss {

/// Central finite-difference divergence of a field at x (relative step h_rel).
inline double fd_divergence(const DssField& u, const Vec3& x, double h_rel) {
  const double h = h_rel * norm(x);
  double g = 0.0;
  for (int i = 0; i < 3; ++i) {
    Vec3 xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g += (dss_eval(u, xp)[i] - dss_eval(u, xm)[i]) / (2.0 * h);
  }
  return g;
}

/// Sup over fundamental-annulus sample points of the finite-difference
/// divergence. Step is tight for closure-backed fields and matched to the
/// grid spacing for interpolated ones (a derivative of the interpolant).
inline double divergence_residual(const DssField& u) {
  const double h_rel =
      u.has_closure()
          ? 1e-5
          : 0.2 * std::min(std::log(u.grid.lambda) / u.grid.n_radial,
                           2.0 / u.grid.sphere.nz);
  double worst = 0.0;
  for (int ir = 0; ir < u.grid.n_radial; ++ir)
    for (int ia = 0; ia < u.grid.n_angular(); ++ia) {
      const Vec3 x = u.grid.node_point(ir, ia);
      worst = std::max(worst, std::abs(fd_divergence(u, x, h_rel)));
    }
  return worst;
}

struct LerayConfig {
  int far_radial = 8;       // log-radial Gauss nodes per annulus
  int far_nz = 10;          // far sphere rule
  int far_nphi = 20;
  int near_rho = 12;        // ray nodes in the target-centred ball
  int near_nz = 10;         // near sphere rule (even nphi pairs antipodes,
  int near_nphi = 20;       // cancelling the odd kernel like a PV limit)
  int max_depth = 60;       // annuli on each side of the fundamental one
  double fd_h_rel = 1e-4;   // step for the fallback divergence closure

  LerayConfig refined() const {
    LerayConfig c = *this;
    c.far_radial += c.far_radial / 2;
    c.far_nz += c.far_nz / 2;
    c.far_nphi += c.far_nphi / 2;
    c.near_rho += c.near_rho / 2;
    c.near_nz += c.near_nz / 2;
    c.near_nphi += c.near_nphi / 2;
    return c;
  }
};

namespace detail {

// Certified sup bound for |grad inv-laplacian div u|(x) at 1 <= |x| < lambda,
// given sup_{A0}|div u| = g0. Pieces: the cut-off ball (kernel mass <= d,
// divergence there <= lambda^2 g0), every annulus where the cutoff caps the
// kernel at (d/2)^{-2} <= 16, and the outer annuli k >= 2 where
// |x - lambda^k z| >= lambda^k (1 - 1/lambda). All sums are geometric.
inline double div_projection_bound(double lambda, double g0) {
  const double l3 = lambda * lambda * lambda - 1.0;
  const double inner = (16.0 / 3.0) * l3 * (lambda / (lambda - 1.0) + 1.0);
  const double outer = l3 / (3.0 * lambda * (lambda - 1.0)) /
                       ((1.0 - 1.0 / lambda) * (1.0 - 1.0 / lambda));
  return g0 * (0.5 * lambda * lambda * lambda + inner + outer);
}

}  // namespace detail

/// Leray projection P u = u - grad inv-laplacian (div u), computed as a
/// near-ball integral in target-centred spherical coordinates (the r^2 volume
/// factor cancels the kernel singularity) plus a multiscale sum over annuli
/// lambda^k A0 pulled back to A0 with exact geometric weights lambda^k.
/// Both tails decay geometrically and are certified below tol before
/// truncation; exceeding max_depth raises a convergence error.
/// `div_u` may supply the exact divergence; otherwise a finite-difference
/// closure over dss_eval is used.
inline DssField leray_project(const DssField& u, double tol,
                              const LerayConfig& cfg = {},
                              std::function<double(const Vec3&)> div_u = {}) {
  if (!(tol > 0.0)) throw error(errc::invalid_argument, "tol must be positive");
  const double lam = u.grid.lambda;

  double scale = 0.0;
  for (const Vec3& s : u.samples) scale = std::max(scale, norm(s));
  DssField out = u;
  out.closure = nullptr;
  out.name = u.name + "|proj";

  std::function<double(const Vec3&)> g = std::move(div_u);
  if (!g) {
    const double h = cfg.fd_h_rel;
    g = [&u, h](const Vec3& x) { return fd_divergence(u, x, h); };
  }

  // Shared A0 quadrature and divergence samples for the far sum. The field
  // magnitude at the quadrature nodes also feeds the tolerance scale, since
  // a narrow closure peak can fall between grid nodes.
  const SphereQuad far_sph = make_sphere_quad(cfg.far_nz, cfg.far_nphi);
  const AnnulusQuad aq = make_annulus_quad(lam, cfg.far_radial, far_sph);
  std::vector<double> gv(aq.size());
  double g0 = 0.0;
  for (int j = 0; j < aq.size(); ++j) {
    gv[j] = g(aq.p[j]);
    g0 = std::max(g0, std::abs(gv[j]));
    scale = std::max(scale, norm(dss_eval(u, aq.p[j])));
  }
  if (scale == 0.0) return out;

  const double tol_abs = tol * scale;
  if (detail::div_projection_bound(lam, g0) <= tol_abs) return out;  // already solenoidal

  const SphereQuad near_sph =
      make_sphere_quad(cfg.near_nz, cfg.near_nphi + (cfg.near_nphi & 1));
  const double l3 = lam * lam * lam - 1.0;
  // Per-annulus certified bounds: cutoff caps |K| at 16 everywhere, and the
  // sharper lambda^{-2k} kernel decay applies once lambda^k >= lambda^2.
  const double cap_in = g0 * (16.0 / 3.0) * l3 * lam / (lam - 1.0);
  const double cap_out = g0 * l3 * lam / (3.0 * (lam - 1.0)) /
                         ((1.0 - 1.0 / lam) * (1.0 - 1.0 / lam));

  for (int ir = 0; ir < u.grid.n_radial; ++ir) {
    for (int ia = 0; ia < u.grid.n_angular(); ++ia) {
      const Vec3 x = u.grid.node_point(ir, ia);
      const double d = 0.5 * norm(x);

      Vec3 acc{};
      const Quad1D rho = gl_rule(cfg.near_rho, 0.0, d);
      for (int i = 0; i < cfg.near_rho; ++i) {
        const double wn = cutoff_hi(rho.x[i] / d, 0.5, 1.0);
        if (wn == 0.0) continue;
        Vec3 ssum{};
        for (int j = 0; j < near_sph.size(); ++j)
          ssum += (near_sph.w[j] * g(x + rho.x[i] * near_sph.dir[j])) *
                  near_sph.dir[j];
        acc -= (rho.w[i] * wn) * ssum;
      }

      // Annulus k contributes lambda^k Int_{A0} g(z) K(x - lambda^k z) dz.
      auto annulus_term = [&](int k) {
        const double s = ipow(lam, k);
        Vec3 t{};
        for (int j = 0; j < aq.size(); ++j) {
          const Vec3 y = x - s * aq.p[j];
          const double r = norm(y);
          const double wfar = 1.0 - cutoff_hi(r / d, 0.5, 1.0);
          if (wfar == 0.0) continue;
          t += (aq.w[j] * gv[j] * wfar / (r * r * r)) * y;
        }
        return s * t;
      };

      acc += annulus_term(0);
      bool in_done = false, out_done = false;
      for (int k = 1; k <= cfg.max_depth && !(in_done && out_done); ++k) {
        if (!in_done) {
          acc += annulus_term(-k);
          in_done = cap_in * ipow(lam, -k - 1) <= 0.25 * tol_abs;
        }
        if (!out_done) {
          acc += annulus_term(k);
          out_done = k >= 2 && cap_out * ipow(lam, -k - 1) <= 0.25 * tol_abs;
        }
      }
      if (!(in_done && out_done))
        throw error(errc::convergence,
                    "projection tails above " + std::to_string(tol) +
                        " after " + std::to_string(cfg.max_depth) + " annuli");

      out.sample(ir, ia) = u.sample(ir, ia) - (1.0 / (4.0 * pi)) * acc;
    }
  }
  return out;
}

}  // namespace dss

#endif
