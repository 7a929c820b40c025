#ifndef DSS_LP_BLOCKS_HPP
#define DSS_LP_BLOCKS_HPP

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dss/errors.hpp"
#include "dss/field.hpp"
#include "dss/norms.hpp"
#include "dss/quadrature.hpp"
#include "dss/vec.hpp"

namespace dss {

/// Discrete frequency-band (Littlewood–Paley) analysis on a truncated box.
///
/// The field is sampled on an n^3 grid over the cube [-window/2, window/2)^3
/// (nodes staggered by half a cell so the origin is never sampled), smoothly
/// tapered to zero at the cube's inscribed sphere, and transformed with the
/// FFT. Band j is extracted by the radial multiplier
///   phi_j(xi) = H(u - j) - H(u - j - 1),   u = log_lambda|xi|,
/// where H rises smoothly from 0 to 1 over u in (-1/2, 0). The phi_j
/// telescope to an exact partition of unity away from xi = 0, each band is
/// supported in lambda^{j-1/2} < |xi| < lambda^{j+1}, equals 1 on
/// lambda^j <= |xi| <= lambda^{j+1/2}, and satisfies the exact base-change
/// shift phi_j(lambda xi) = phi_{j-1}(xi).
struct LpBlockConfig {
  int n = 64;                // samples per dimension (even, >= 16)
  double window = 16.0;      // cube side length, centered at the origin
  double taper_frac = 0.22;  // radial taper width as a fraction of window
  double excise_cells = 1.0; // origin-excision radius in grid cells (0 = off)

  void validate() const {
    if (n < 16 || n % 2 != 0)
      throw error(errc::invalid_argument, "box grid needs even n >= 16");
    if (!(window > 0.0) || !std::isfinite(window))
      throw error(errc::invalid_argument, "box window must be positive");
    if (!(taper_frac > 0.0) || !(taper_frac < 0.5))
      throw error(errc::invalid_argument, "taper fraction must lie in (0, 1/2)");
    if (!(excise_cells >= 0.0))
      throw error(errc::invalid_argument, "excision radius must be >= 0");
  }
};

/// Windowed samples and forward transforms of one field; every band is then
/// a cheap multiplier pass over this shared spectrum.
struct BoxSpectrum {
  int n = 0;
  double box = 0.0;
  double lambda = 2.0;
  double taper_l1 = 0.0;  // integral of |f|(1 - w) over the box (window loss)
  std::vector<Vec3> tapered;                 // w(x) f(x) at the box nodes
  std::vector<std::complex<double>> comp[3]; // forward DFT per component

  double h() const { return box / n; }
  size_t size() const { return static_cast<size_t>(n) * n * n; }
};

/// One frequency band of a boxed field, sampled on the same grid.
struct BlockField {
  int j = 0;
  int n = 0;
  double box = 0.0;
  std::vector<Vec3> v;

  double h() const { return box / n; }
};

namespace detail {

inline void fft3(std::vector<std::complex<double>>& a, int n, int sign) {
  fftw_complex* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan plan = fftw_plan_dft_3d(n, n, n, p, p, sign, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

/// C^4 polynomial step on [0, 1]. Chosen over the exponential transition
/// used by the quadrature cutoffs deliberately: the band kernel inherits the
/// step's smoothness class, and a polynomial step gives ~r^{-6} kernel tails
/// while the exponential (Gevrey) step only reaches e^{-c sqrt(r)}, which is
/// far heavier at the box sizes used here and contaminates the norms through
/// window truncation.
inline double smooth01(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double s2 = s * s;
  const double s4 = s2 * s2;
  return s4 * s * (126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + s * 70.0))));
}

/// Smooth step: 0 for v <= -1/2, 1 for v >= 0.
inline double band_step(double v) { return smooth01(2.0 * v + 1.0); }

/// The band multiplier at |xi| = xi_mag (0 at the zero mode).
inline double band_multiplier(double xi_mag, double lambda, int j) {
  if (!(xi_mag > 0.0)) return 0.0;
  const double u = std::log(xi_mag) / std::log(lambda);
  return band_step(u - j) - band_step(u - j - 1.0);
}

/// Signed frequency of DFT bin k out of n.
inline int bin_wave(int k, int n) { return k < n / 2 ? k : k - n; }

template <class Fn>
inline void for_each_bin(int n, double box, Fn&& fn) {
  const double dxi = 2.0 * pi / box;
  size_t idx = 0;
  for (int kz = 0; kz < n; ++kz) {
    const double xz = dxi * bin_wave(kz, n);
    for (int ky = 0; ky < n; ++ky) {
      const double xy = dxi * bin_wave(ky, n);
      for (int kx = 0; kx < n; ++kx, ++idx) {
        const double xx = dxi * bin_wave(kx, n);
        fn(idx, Vec3{xx, xy, xz});
      }
    }
  }
}

inline double box_lp(const std::vector<Vec3>& v, double h, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (const Vec3& x : v) m = std::max(m, norm(x));
    return m;
  }
  double s = 0.0;
  for (const Vec3& x : v) s += std::pow(norm(x), p);
  return std::pow(s * h * h * h, 1.0 / p);
}

}  // namespace detail

/// Sample, taper, and transform a field once; bands are extracted from the
/// result. `field` must be evaluable on the whole box except the origin
/// (which is never a node and is smoothly excised when excise_cells > 0).
inline BoxSpectrum make_box_spectrum(
    const std::function<Vec3(const Vec3&)>& field, double lambda,
    const LpBlockConfig& cfg = {}) {
  cfg.validate();
  if (!(lambda > 1.0))
    throw error(errc::invalid_argument, "band base lambda must exceed 1");
  BoxSpectrum s;
  s.n = cfg.n;
  s.box = cfg.window;
  s.lambda = lambda;
  const int n = cfg.n;
  const double h = s.h();
  const double r1 = 0.5 * cfg.window;
  const double r0 = r1 - cfg.taper_frac * cfg.window;
  const double rex = cfg.excise_cells * h;
  s.tapered.resize(s.size());
  for (int c = 0; c < 3; ++c) s.comp[c].assign(s.size(), {});
  const double cell = h * h * h;
  size_t idx = 0;
  for (int iz = 0; iz < n; ++iz) {
    const double z = (iz + 0.5 - 0.5 * n) * h;
    for (int iy = 0; iy < n; ++iy) {
      const double y = (iy + 0.5 - 0.5 * n) * h;
      for (int ix = 0; ix < n; ++ix, ++idx) {
        const Vec3 x{(ix + 0.5 - 0.5 * n) * h, y, z};
        const double r = norm(x);
        double w = 1.0 - detail::smooth01((r - r0) / (r1 - r0));
        if (rex > 0.0) w *= detail::smooth01(r / rex);
        const Vec3 f = field(x);
        s.taper_l1 += norm(f) * (1.0 - w) * cell;
        const Vec3 g = w * f;
        s.tapered[idx] = g;
        s.comp[0][idx] = g.x;
        s.comp[1][idx] = g.y;
        s.comp[2][idx] = g.z;
      }
    }
  }
  for (int c = 0; c < 3; ++c) detail::fft3(s.comp[c], n, FFTW_FORWARD);
  return s;
}

/// Whether band j both fits under the grid's Nyquist sphere and sits far
/// enough above the box's frequency resolution to be trustworthy.
inline bool band_resolved(const BoxSpectrum& s, int j) {
  const double dxi = 2.0 * pi / s.box;
  const double xi_hi = std::pow(s.lambda, j + 1.0);
  const double xi_lo = std::pow(s.lambda, j - 0.5);
  return xi_hi <= 0.85 * (pi * s.n / s.box) && xi_lo >= 1.5 * dxi;
}

/// Inclusive range [j_lo, j_hi] of resolved bands (j_lo > j_hi when none).
inline std::pair<int, int> resolved_bands(const BoxSpectrum& s) {
  const double ll = std::log(s.lambda);
  const double hi = std::log(0.85 * pi * s.n / s.box) / ll - 1.0;
  const double lo = std::log(1.5 * 2.0 * pi / s.box) / ll + 0.5;
  const int j_lo = static_cast<int>(std::ceil(lo - 1e-12));
  const int j_hi = static_cast<int>(std::floor(hi + 1e-12));
  return {j_lo, j_hi};
}

/// Extract band j as a sampled field on the box grid.
inline BlockField lp_block(const BoxSpectrum& s, int j) {
  if (!band_resolved(s, j))
    throw error(errc::coverage,
                "window/grid cannot resolve the requested band");
  BlockField out;
  out.j = j;
  out.n = s.n;
  out.box = s.box;
  out.v.resize(s.size());
  std::vector<std::complex<double>> work(s.size());
  const double scale = 1.0 / static_cast<double>(s.size());
  for (int c = 0; c < 3; ++c) {
    detail::for_each_bin(s.n, s.box, [&](size_t idx, const Vec3& xi) {
      work[idx] =
          s.comp[c][idx] * detail::band_multiplier(norm(xi), s.lambda, j);
    });
    detail::fft3(work, s.n, FFTW_BACKWARD);
    for (size_t i = 0; i < work.size(); ++i) {
      const double val = work[i].real() * scale;
      if (c == 0) out.v[i].x = val;
      if (c == 1) out.v[i].y = val;
      if (c == 2) out.v[i].z = val;
    }
  }
  return out;
}

/// Convenience: spectrum + single band in one call.
inline BlockField lp_block(const std::function<Vec3(const Vec3&)>& field,
                           double lambda, int j,
                           const LpBlockConfig& cfg = {}) {
  return lp_block(make_box_spectrum(field, lambda, cfg), j);
}

/// Everything outside bands [j_lo, j_hi]: inverse transform of
/// (1 - sum_{j_lo <= j <= j_hi} phi_j) f-hat. Together with the blocks this
/// reconstructs the tapered input exactly (the multipliers sum to 1).
inline BlockField block_complement(const BoxSpectrum& s, int j_lo, int j_hi) {
  if (j_lo > j_hi)
    throw error(errc::invalid_argument, "complement needs j_lo <= j_hi");
  BlockField out;
  out.j = j_lo;
  out.n = s.n;
  out.box = s.box;
  out.v.resize(s.size());
  std::vector<std::complex<double>> work(s.size());
  const double scale = 1.0 / static_cast<double>(s.size());
  const double ll = std::log(s.lambda);
  for (int c = 0; c < 3; ++c) {
    detail::for_each_bin(s.n, s.box, [&](size_t idx, const Vec3& xi) {
      const double m = norm(xi);
      double mult = 1.0;
      if (m > 0.0) {
        const double u = std::log(m) / ll;
        mult = 1.0 - (detail::band_step(u - j_lo) -
                      detail::band_step(u - j_hi - 1.0));
      }
      work[idx] = s.comp[c][idx] * mult;
    });
    detail::fft3(work, s.n, FFTW_BACKWARD);
    for (size_t i = 0; i < work.size(); ++i) {
      const double val = work[i].real() * scale;
      if (c == 0) out.v[i].x = val;
      if (c == 1) out.v[i].y = val;
      if (c == 2) out.v[i].z = val;
    }
  }
  return out;
}

/// Discrete L^p norm of band j over the box (p = inf gives the sup).
inline double block_lp(const BoxSpectrum& s, int j, double p) {
  if (!(p >= 1.0))
    throw error(errc::invalid_argument, "block norm needs p >= 1");
  const BlockField b = lp_block(s, j);
  return detail::box_lp(b.v, b.h(), p);
}

/// Discrete L^p norm of the full gradient of band j (Frobenius magnitude of
/// the 3x3 derivative matrix, differentiated spectrally).
inline double block_grad_lp(const BoxSpectrum& s, int j, double p) {
  if (!(p >= 1.0))
    throw error(errc::invalid_argument, "block norm needs p >= 1");
  if (!band_resolved(s, j))
    throw error(errc::coverage,
                "window/grid cannot resolve the requested band");
  std::vector<double> g2(s.size(), 0.0);
  std::vector<std::complex<double>> work(s.size());
  const double scale = 1.0 / static_cast<double>(s.size());
  const double xi_nyq = pi * s.n / s.box;  // dropped: iXi is odd, Nyquist isn't
  for (int c = 0; c < 3; ++c) {
    for (int d = 0; d < 3; ++d) {
      detail::for_each_bin(s.n, s.box, [&](size_t idx, const Vec3& xi) {
        const double xid = d == 0 ? xi.x : d == 1 ? xi.y : xi.z;
        const double mult =
            std::abs(std::abs(xid) - xi_nyq) < 1e-12 * xi_nyq
                ? 0.0
                : detail::band_multiplier(norm(xi), s.lambda, j) * xid;
        work[idx] = s.comp[c][idx] * std::complex<double>(0.0, mult);
      });
      detail::fft3(work, s.n, FFTW_BACKWARD);
      for (size_t i = 0; i < work.size(); ++i) {
        const double val = work[i].real() * scale;
        g2[i] += val * val;
      }
    }
  }
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : g2) m = std::max(m, v);
    return std::sqrt(m);
  }
  double acc = 0.0;
  for (double v : g2) acc += std::pow(v, 0.5 * p);
  const double h = s.box / s.n;
  return std::pow(acc * h * h * h, 1.0 / p);
}

/// Frequency-normalized gradient-to-value ratio of band j:
///   |grad block|_p / (lambda^j |block|_p),
/// bounded uniformly in j for smooth fields (the band's inverse length is
/// lambda^j, so one derivative costs one factor of it).
inline double bernstein_ratio(const BoxSpectrum& s, int j, double p) {
  const double lp = block_lp(s, j, p);
  if (!(lp > 0.0))
    throw error(errc::empty_region, "band is zero; ratio undefined");
  return block_grad_lp(s, j, p) / (std::pow(s.lambda, j) * lp);
}

inline double bernstein_ratio(const std::function<Vec3(const Vec3&)>& field,
                              double lambda, int j, double p,
                              const LpBlockConfig& cfg = {}) {
  return bernstein_ratio(make_box_spectrum(field, lambda, cfg), j, p);
}

/// Band-norm ladder value lambda^{js} |block_j|_p for every resolved band,
/// with the critical-regularity verdict for a lambda-DSS field.
///
/// The scaling law u(x) = lambda u(lambda x) forces the exact shift
/// |block_{j+1}|_p = lambda^{1-3/p} |block_j|_p, so the weighted ladder is
/// constant in j exactly when s = -1 + 3/p; the sup over all bands is then
/// finite and equals any rung. For any other s the two-sided sup diverges
/// for a nonzero field (the report still carries the resolved-band sup as
/// information, flagged divergent). The ladder's measured spread across
/// resolved bands is the end-to-end truncation estimate: in exact arithmetic
/// at critical s it would be zero, and window taper, origin excision, and
/// grid aliasing all show up in it.
///
/// Accuracy note: a scale-invariant core pins band j's L^p mass at radius
/// ~lambda^{-j}, so within one box the low bands are window-limited and the
/// high bands resolution-limited at the same time; every rung then carries a
/// common-mode downward bias (about 20-25% at the default grid for 1/|x|
/// data) that the spread certificate cannot see. Values for such fields are
/// honest desk-scale estimates, not tight norms; the defaults were chosen to
/// make the ladder flat (spread ~3%) rather than to hide the bias.
inline NormReport besov_norm(const DssField& u, double s_reg, double p,
                             const LpBlockConfig& cfg = {}) {
  if (!(p > 1.0) || std::isinf(p))
    throw error(errc::invalid_argument, "band-sup norm needs p in (1, inf)");
  const BoxSpectrum spec = make_box_spectrum(
      [&u](const Vec3& x) { return dss_eval(u, x); }, u.grid.lambda, cfg);
  NormReport rep;
  rep.norm_name = "besov_sup(s=" + std::to_string(s_reg) +
                  ",p=" + std::to_string(p) + ")";
  rep.resolution = std::to_string(cfg.n) + "^3@" + std::to_string(cfg.window);
  double fmax = 0.0;
  for (int ir = 0; ir < u.grid.n_radial; ++ir)
    for (int ia = 0; ia < u.grid.n_angular(); ++ia)
      fmax = std::max(fmax, norm(u.sample(ir, ia)));
  if (fmax == 0.0) return rep;  // zero field: 0 in every space

  const auto [j_lo, j_hi] = resolved_bands(spec);
  if (j_hi - j_lo + 1 < 2) {
    rep.inconclusive = true;
    return rep;
  }
  double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
  for (int j = j_lo; j <= j_hi; ++j) {
    const double v = std::pow(u.grid.lambda, j * s_reg) * block_lp(spec, j, p);
    vmax = std::max(vmax, v);
    vmin = std::min(vmin, v);
  }
  rep.value = vmax;
  const bool critical = std::abs(s_reg - (3.0 / p - 1.0)) < 1e-9;
  if (!critical) {
    rep.divergent = true;  // the ladder drifts geometrically in j
    return rep;
  }
  rep.truncation_error_estimate = vmax - vmin;
  if (rep.truncation_error_estimate > 0.5 * rep.value) rep.inconclusive = true;
  return rep;
}

}  // namespace dss

#endif
