#ifndef DSS_DUHAMEL_HPP
#define DSS_DUHAMEL_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "dss/errors.hpp"
#include "dss/evolve.hpp"
#include "dss/field.hpp"
#include "dss/kernels.hpp"
#include "dss/parallel.hpp"
#include "dss/quadrature.hpp"
#include "dss/vec.hpp"

namespace dss {

/// Bilinear-term samples: one value and one certified tail bound per target,
/// mirroring the heat-evolution driver.
struct BilinearSamples {
  std::vector<Vec3> value;
  std::vector<double> tail;
};

namespace detail {

// Measured envelope constant of the kernel gradient:
//   |grad K|_F (x, t) <= CK (|x| + sqrt t)^{-4}.
// The Frobenius magnitude is a radial function (the tensor is built from the
// unit direction and radial scalars), so a 1-d scan at t = 1 plus parabolic
// homogeneity covers every argument.
inline double grad_kernel_bound() {
  static const double ck = [] {
    double c = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double r = std::pow(10.0, -3.0 + 6.0 * i / 400.0);
      const Tensor3 g = oseen_grad_kernel(Vec3{r, 0.0, 0.0}, 1.0);
      double f2 = 0.0;
      for (double v : g.v) f2 += v * v;
      c = std::max(c, std::sqrt(f2) * std::pow(r + 1.0, 4.0));
    }
    return c;
  }();
  return ck;
}

// Whole-cell weighted sup against the cell's own envelope class, combined
// with the stored exterior constant. The result makes
//   |u(y,s)| <= C sqrt(s)^alpha (|y| + sqrt s)^{-beta}
// hold at every stored node, not only on the exterior region the fit used.
inline double envelope_global_constant(const SpaceTimeCell& c) {
  double m = c.envelope.C;
  for (int it = 0; it < c.n_time(); ++it) {
    const double rt = std::sqrt(c.time_nodes[it]);
    const double ta = std::pow(rt, -c.envelope.alpha);
    for (int ir = 0; ir < c.n_shell(); ++ir) {
      const double w =
          ta * std::pow(c.shell_radii[ir] + rt, c.envelope.beta);
      for (int ia = 0; ia < c.grid.n_angular(); ++ia)
        m = std::max(m, w * norm(c.sample(it, ir, ia)));
    }
  }
  return m;
}

inline bool cell_is_zero(const SpaceTimeCell& c) {
  for (const Vec3& v : c.samples)
    if (v.x != 0.0 || v.y != 0.0 || v.z != 0.0) return false;
  return true;
}

// 4 pi int_0^Y r^2 (r + rts)^{-beta} dr  (envelope mass of the inner hole).
inline double ball_envelope_mass(double Y, double rts, double beta) {
  if (!(Y > 0.0)) return 0.0;
  const Quad1D q = gl_rule(16, 0.0, Y);
  double acc = 0.0;
  for (size_t i = 0; i < q.x.size(); ++i)
    acc += q.w[i] * q.x[i] * q.x[i] * std::pow(q.x[i] + rts, -beta);
  return 4.0 * pi * acc;
}

// 4 pi int_{r_lo}^{r_hi} r^2 (r + rts)^{-beta} (max(r - R, 0) + sigma)^{-4} dr
// by Gauss nodes in log r. Used for the uncovered outer region and for the
// covered-but-unexplored window remainder.
inline double shell_kernel_envelope_mass(double r_lo, double r_hi, double rts,
                                         double beta, double R, double sigma) {
  if (!(r_hi > r_lo) || !(r_lo > 0.0)) return 0.0;
  const Quad1D q = gl_rule(20, std::log(r_lo), std::log(r_hi));
  double acc = 0.0;
  for (size_t i = 0; i < q.x.size(); ++i) {
    const double r = std::exp(q.x[i]);
    const double kb = std::pow(std::max(r - R, 0.0) + sigma, -4.0);
    acc += q.w[i] * r * r * r * std::pow(r + rts, -beta) * kb;
  }
  return 4.0 * pi * acc;
}

// Outer certificate: the full envelope-vs-kernel bound over {|y| > Y_hi},
// numeric out to R_B = 64 max(Y_hi, 2R) and closed-form beyond, where
// r - R >= r/2 and the integrand is under 16 r^{-2-beta}.
inline double outer_envelope_bound(double Y_hi, double rts, double beta,
                                   double R, double sigma) {
  const double R_B = 64.0 * std::max(Y_hi, 2.0 * R);
  double acc = shell_kernel_envelope_mass(Y_hi, R_B, rts, beta, R, sigma);
  acc += 16.0 * 4.0 * pi * std::pow(R_B, -1.0 - beta) / (1.0 + beta);
  return acc;
}

// Symmetrised momentum flux with the Duhamel sign folded in:
//   H_jk(y,s) = -1/2 (f_j g_k + g_j f_k),
// so that B(f,g)_i = int int grad(i,j,k) K (x-y, t-s) H_jk(y, s) dy ds.
inline Mat3 momentum_flux(const SpaceTimeCell& f, const SpaceTimeCell& g,
                          const Vec3& y, double s) {
  const Vec3 a = dss_eval_spacetime(f, y, s);
  const Vec3 b = dss_eval_spacetime(g, y, s);
  Mat3 h{};
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) h(j, k) = -0.5 * (a[j] * b[k] + b[j] * a[k]);
  return h;
}

// One time slice of the Duhamel integral, shared by every target with the
// same t: the exact coverage annulus at this s, the origin-side radial rule,
// and the momentum flux cached at its nodes.
struct DuhamelSlice {
  double tau = 0.0;     // sqrt(t - s)
  double wt = 0.0;      // time weight, 2 tau w_tau
  double s = 0.0;       // integration time, computed as (rt-tau)(rt+tau)
  double rts = 0.0;     // sqrt(s)
  double sigma2 = 0.0;  // kernel time t - s = tau^2, exact
  double Y_lo = 0.0;    // coverage annulus of both cells at this s
  double Y_hi = 0.0;
  double log_eta = 0.0;         // radial panel growth (log), lambda^(1/2)
  int n_panels = 0;             // radial panels, edge[k] = Y_lo eta^k clipped
  int nodes_per_panel = 0;
  std::vector<double> edge;     // n_panels + 1 radial panel edges
  std::vector<double> r, wr;    // radial nodes; weights include r^3 (log rule)
  std::vector<Mat3> H;          // flux at [ir * n_ang + ia]
  double hole_mass = 0.0;       // ball_envelope_mass(Y_lo, rts, beta_sum)
};

}  // namespace detail

/// B(f,g)(x,t) = -1/2 int_0^t e^{(t-s) Delta} P div (f (x) g + g (x) f) ds at
/// the given targets, by quadrature against the gradient of the projected
/// heat kernel. Symmetric in (f, g) by construction of the flux, and exactly
/// bilinear (values scale with the sample data).
///
/// Both cells must carry valid decay envelopes: the certificates model each
/// input globally as |u| <= C sqrt(s)^alpha (|y|+sqrt s)^{-beta}, with C the
/// stored constant raised to cover every stored node. For scale-compatible
/// envelopes (beta - alpha = 1, the critical weights) that model is exactly
/// what the cell's own scaling extension asserts beyond its shell.
///
/// The time integral substitutes tau = sqrt(t-s) with panels graded toward
/// both endpoints (kernel degeneracy at s = t, data roughness at s = 0). At
/// each slice the data is trusted exactly on the coverage annulus
/// {Y_lo <= |y| <= Y_hi} that both shells reach after reduction to the band;
/// the annulus splits into
///
///  * an origin-centred log-radial x sphere rule out to the panel edge
///    nearest 0.3 |x| (resolving the data singularity at y = 0; flux values
///    cached once per slice and shared by every target),
///  * a target-centred polar patch over the rest, with ray panels graded at
///    the kernel scale tau near d = 0, log-spaced beyond, and cut exactly at
///    the chords where each ray crosses the two coverage spheres,
///  * certified remainders everywhere else: the inner hole |y| < Y_lo, the
///    outer region |y| > Y_hi, and covered space beyond the patch window
///    (the window grows as 2^(depth/4), so refinement explores more of it).
///
/// Every construction scale is proportional to sqrt(t), sqrt(s), tau, or a
/// power of lambda, so outputs commute with the discrete scaling to
/// quadrature accuracy. Certified tails must stay under 10% of the running
/// value (plus the absolute floor); otherwise a convergence error is thrown.
inline BilinearSamples bilinear_B(const SpaceTimeCell& f,
                                  const SpaceTimeCell& g,
                                  const std::vector<EvolvePoint>& targets,
                                  const QuadratureConfig& cfg = {}) {
  cfg.validate();
  if (f.grid.lambda != g.grid.lambda)
    throw error(errc::grid_mismatch, "bilinear term needs a shared scale factor");
  if (!f.envelope.valid || !g.envelope.valid)
    throw error(errc::certificate,
                "bilinear tail certificates need stored decay envelopes");
  for (const EvolvePoint& p : targets)
    if (!(p.t > 0.0) || !std::isfinite(p.t))
      throw error(errc::invalid_argument, "bilinear term needs t > 0");

  const double lam = f.grid.lambda;
  const double r_lo = std::max(f.r_min, g.r_min);
  const double r_hi = std::min(f.r_max, g.r_max);
  if (!(r_lo < r_hi))
    throw error(errc::grid_mismatch, "cell shells do not overlap");

  BilinearSamples out;
  out.value.assign(targets.size(), Vec3{});
  out.tail.assign(targets.size(), 0.0);
  if (targets.empty()) return out;

  // the integrand vanishes identically when either factor is zero
  if (detail::cell_is_zero(f) || detail::cell_is_zero(g)) return out;

  const double alpha_sum = f.envelope.alpha + g.envelope.alpha;
  const double beta_sum = f.envelope.beta + g.envelope.beta;
  const double c_env = detail::envelope_global_constant(f) *
                       detail::envelope_global_constant(g) *
                       detail::grad_kernel_bound();

  // shared angular rule, aligned to the finer of the two cell meshes
  const int nz = std::max(f.grid.sphere.nz, g.grid.sphere.nz);
  const int nphi = std::max(f.grid.sphere.nphi, g.grid.sphere.nphi);
  const SphereQuad sph = make_sphere_quad_cells(nz, nphi, 1, 1);
  const int na = sph.size();

  // patch resolution policy
  const int n_rad = std::max(2, cfg.nodes_per_panel / 2);
  const int nphi_patch = std::max(6, cfg.nodes_per_panel + 2);
  const double wphi_patch = 2.0 * pi / nphi_patch;
  const Quad1D& glp = detail::gauss_legendre_unit(n_rad);
  const double w_far = std::exp2(2.0 + cfg.spatial_depth / 4.0);

  // group targets by their exact t so slice caches are built once per band
  std::map<double, std::vector<int>> groups;
  for (size_t i = 0; i < targets.size(); ++i)
    groups[targets[i].t].push_back(static_cast<int>(i));

  for (const auto& [t, idx] : groups) {
    const double rt = std::sqrt(t);

    std::vector<double> te = graded_edges(0.0, rt / 2.0, cfg.time_panels, 2.0);
    {
      const std::vector<double> hi =
          graded_edges(rt / 2.0, rt, cfg.time_panels, 0.5);
      te.insert(te.end(), hi.begin() + 1, hi.end());
    }
    const Quad1D tq = gl_composite(cfg.nodes_per_panel, te);
    const int n_slices = static_cast<int>(tq.x.size());

    std::vector<detail::DuhamelSlice> slices(n_slices);
    parallel_for(n_slices, [&](int m) {
      detail::DuhamelSlice& sl = slices[m];
      sl.tau = tq.x[m];
      sl.wt = 2.0 * sl.tau * tq.w[m];
      sl.s = (rt - sl.tau) * (rt + sl.tau);
      sl.rts = std::sqrt(sl.s);
      sl.sigma2 = sl.tau * sl.tau;
      const auto tr = detail::time_reduce(sl.s, lam);
      sl.Y_lo = r_lo / tr.scale;
      sl.Y_hi = r_hi / tr.scale;
      sl.log_eta = 0.5 * std::log(lam);
      sl.n_panels = static_cast<int>(
          std::ceil(std::log(sl.Y_hi / sl.Y_lo) / sl.log_eta - 1e-12));
      sl.nodes_per_panel = n_rad;
      sl.edge.resize(sl.n_panels + 1);
      for (int k = 0; k <= sl.n_panels; ++k)
        sl.edge[k] = std::min(sl.Y_lo * std::exp(sl.log_eta * k), sl.Y_hi);
      sl.edge.back() = sl.Y_hi;
      sl.r.resize(static_cast<size_t>(sl.n_panels) * n_rad);
      sl.wr.resize(sl.r.size());
      for (int k = 0; k < sl.n_panels; ++k) {
        const double la = std::log(sl.edge[k]), lb = std::log(sl.edge[k + 1]);
        for (int j = 0; j < n_rad; ++j) {
          const double lr = 0.5 * (la + lb) + 0.5 * (lb - la) * glp.x[j];
          const double rr = std::exp(lr);
          sl.r[k * n_rad + j] = rr;
          sl.wr[k * n_rad + j] = 0.5 * (lb - la) * glp.w[j] * rr * rr * rr;
        }
      }
      sl.H.resize(sl.r.size() * na);
      for (size_t i = 0; i < sl.r.size(); ++i)
        for (int ia = 0; ia < na; ++ia)
          sl.H[i * na + ia] =
              detail::momentum_flux(f, g, sl.r[i] * sph.dir[ia], sl.s);
      sl.hole_mass = detail::ball_envelope_mass(sl.Y_lo, sl.rts, beta_sum);
    });

    parallel_for(static_cast<int>(idx.size()), [&](int ii) {
      const int ti = idx[ii];
      const Vec3& x = targets[ti].x;
      const double R = norm(x);

      // target-aligned frame for the patch
      const Vec3 ax = R > 0.0 ? (1.0 / R) * x : Vec3{0.0, 0.0, 1.0};
      const Vec3 hv = std::abs(ax.x) < 0.6 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
      Vec3 e1 = cross(ax, hv);
      e1 = (1.0 / norm(e1)) * e1;
      const Vec3 e2 = cross(ax, e1);

      Vec3 value{};
      double cert = 0.0;

      for (const detail::DuhamelSlice& sl : slices) {
        const double sigma = sl.tau;

        // split radius: the radial panel edge nearest 0.3 |x|
        int i_cut = 0;
        if (0.3 * R > sl.Y_lo)
          i_cut = std::min(
              sl.n_panels,
              static_cast<int>(std::floor(std::log(0.3 * R / sl.Y_lo) /
                                          sl.log_eta)));
        const double rho_cut = sl.edge[i_cut];

        // ---- origin side: Y_lo <= |y| <= rho_cut, cached flux ----
        Vec3 acc{};
        for (int i = 0; i < i_cut * sl.nodes_per_panel; ++i) {
          const double rr = sl.r[i];
          const double wrr = sl.wr[i];
          for (int ia = 0; ia < na; ++ia) {
            const Vec3 y = rr * sph.dir[ia];
            const Tensor3 k = oseen_grad_kernel(x - y, sl.sigma2);
            acc += (wrr * sph.w[ia]) * contract(k, sl.H[i * na + ia]);
          }
        }

        // ---- patch side: rho_cut <= |y| <= Y_hi, target-centred rays ----
        if (rho_cut < sl.Y_hi * (1.0 - 1e-12) && R > 0.0) {
          const double d_geom = R + sl.Y_hi;
          const double d_win = w_far * (R + sigma + sl.rts);
          const double d_cap = std::min(d_win, d_geom);

          // ray panels: graded at the kernel scale, log-spaced beyond
          std::vector<double> de;
          const double d_core = std::min(8.0 * sigma, d_cap);
          de = graded_edges(0.0, d_core, 3, 2.5);
          for (double dnext = d_core * 2.0; de.back() < d_cap;
               dnext *= 2.0)
            de.push_back(std::min(dnext, d_cap));

          // polar panels split at the grazing cones of both spheres
          std::vector<double> ze{-1.0};
          if (rho_cut < R)
            ze.push_back(-std::sqrt(1.0 - (rho_cut / R) * (rho_cut / R)));
          if (sl.Y_hi < R)
            ze.push_back(-std::sqrt(1.0 - (sl.Y_hi / R) * (sl.Y_hi / R)));
          ze.push_back(1.0);
          std::sort(ze.begin(), ze.end());
          for (size_t k = 0; k + 1 < ze.size(); ++k)
            if (ze[k + 1] - ze[k] > 0.8) {
              ze.insert(ze.begin() + k + 1, 0.5 * (ze[k] + ze[k + 1]));
            }
          const Quad1D zq = gl_composite(n_rad, ze);

          Vec3 patch{};
          for (size_t jz = 0; jz < zq.x.size(); ++jz) {
            const double ca = zq.x[jz];
            const double sa = std::sqrt(std::max(0.0, 1.0 - ca * ca));
            for (int jp = 0; jp < nphi_patch; ++jp) {
              const double ph = wphi_patch * (jp + 0.5);
              const Vec3 om = ca * ax + (sa * std::cos(ph)) * e1 +
                              (sa * std::sin(ph)) * e2;
              const double wom = zq.w[jz] * wphi_patch;
              const double xo = R * ca;

              // stay inside the outer coverage sphere
              const double disco = xo * xo + sl.Y_hi * sl.Y_hi - R * R;
              if (disco <= 0.0) continue;
              const double sqo = std::sqrt(disco);
              const double o1 = std::max(0.0, -xo - sqo);
              const double o2 = std::min(-xo + sqo, d_cap);
              if (o2 <= o1) continue;
              // and outside the split sphere
              double c1 = o2, c2 = o2;  // empty exclusion by default
              const double discc = xo * xo + rho_cut * rho_cut - R * R;
              if (discc > 0.0) {
                const double sqc = std::sqrt(discc);
                c1 = -xo - sqc;
                c2 = -xo + sqc;
              }

              Vec3 ray{};
              for (size_t e = 0; e + 1 < de.size(); ++e) {
                const double lo = std::max(de[e], o1);
                const double hi = std::min(de[e + 1], o2);
                if (hi <= lo + 1e-14 * d_cap) continue;
                // remove the chord (c1, c2) from [lo, hi]
                double seg[4];
                int nseg = 0;
                const double b1 = std::min(hi, c1);
                if (b1 > lo + 1e-14 * d_cap) { seg[nseg++] = lo; seg[nseg++] = b1; }
                const double a2 = std::max(lo, c2);
                if (hi > a2 + 1e-14 * d_cap) { seg[nseg++] = a2; seg[nseg++] = hi; }
                for (int p = 0; p + 1 < nseg; p += 2) {
                  const double mid = 0.5 * (seg[p] + seg[p + 1]);
                  const double hw = 0.5 * (seg[p + 1] - seg[p]);
                  for (int q = 0; q < n_rad; ++q) {
                    const double d = mid + hw * glp.x[q];
                    const Vec3 y{x.x + d * om.x, x.y + d * om.y,
                                 x.z + d * om.z};
                    const Mat3 h = detail::momentum_flux(f, g, y, sl.s);
                    const Tensor3 k =
                        oseen_grad_kernel(Vec3{-d * om.x, -d * om.y,
                                               -d * om.z},
                                          sl.sigma2);
                    ray += (hw * glp.w[q] * d * d) * contract(k, h);
                  }
                }
              }
              patch += wom * ray;
            }
          }
          acc += patch;

          // covered region beyond the patch window
          if (d_cap < d_geom * (1.0 - 1e-12)) {
            const double from = std::max(sl.Y_lo, d_cap - R);
            cert += sl.wt * c_env * std::pow(sl.rts, alpha_sum) *
                    detail::shell_kernel_envelope_mass(from, sl.Y_hi, sl.rts,
                                                       beta_sum, R, sigma);
          }
        }

        value += sl.wt * acc;

        // inner hole and outer region, bounded by the envelope model
        const double kb_hole =
            std::pow(std::max(R - sl.Y_lo, 0.0) + sigma, -4.0);
        double c_slice = sl.hole_mass * kb_hole;
        c_slice += detail::outer_envelope_bound(sl.Y_hi, sl.rts, beta_sum, R,
                                                sigma);
        cert += sl.wt * c_env * std::pow(sl.rts, alpha_sum) * c_slice;
      }

      out.value[ti] = value;
      out.tail[ti] = cert;
    });
  }

  for (size_t i = 0; i < targets.size(); ++i)
    if (out.tail[i] > 0.1 * norm(out.value[i]) + cfg.abs_tol)
      throw error(errc::convergence,
                  "bilinear tail certificate exceeds tolerance");
  return out;
}

}  // namespace dss

#endif
