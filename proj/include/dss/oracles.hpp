#ifndef DSS_ORACLES_HPP
#define DSS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "dss/errors.hpp"
#include "dss/quadrature.hpp"
#include "dss/vec.hpp"

namespace dss {

/// Resolution knobs for the nested space-time integral oracles. Both oracles
/// reduce the spatial integral to one radial dimension exactly (closed-form
/// angular integral), so refinement multiplies 1-d panel counts only.
struct OracleConfig {
  int time_panels = 10;     // graded panels per time-endpoint direction
  int nodes_per_panel = 6;  // Gauss-Legendre order per panel
  int radial_octaves = 14;  // geometric depth toward radial concentration points
  double domain_factor = 1e4;  // outer radial truncation multiple

  OracleConfig refined() const {
    OracleConfig c = *this;
    c.time_panels *= 2;
    c.nodes_per_panel += 2;
    c.radial_octaves += 4;
    c.domain_factor *= 4.0;
    return c;
  }
};

struct OracleResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

namespace detail {

// Closed form of int_l^h u (u + alpha)^{-a} du, alpha >= 0, 0 <= l <= h.
// Antiderivative in w = u + alpha: w^{2-a}/(2-a) - alpha w^{1-a}/(1-a), with
// logarithmic branches at a = 1 and a = 2.
inline double bipolar_inner(double l, double h, double alpha, double a) {
  const double wl = l + alpha, wh = h + alpha;
  if (!(wl > 0.0)) throw error(errc::invalid_argument, "inner integral at 0");
  auto anti = [&](double w) {
    double first, second;
    if (std::abs(a - 2.0) < 1e-12) first = std::log(w);
    else first = std::pow(w, 2.0 - a) / (2.0 - a);
    if (std::abs(a - 1.0) < 1e-12) second = alpha * std::log(w);
    else second = alpha * std::pow(w, 1.0 - a) / (1.0 - a);
    return first - second;
  };
  return anti(wh) - anti(wl);
}

// Radial panel edges for the bipolar integrand rho (rho+beta)^{-b} J(rho):
// geometric refinement toward rho = 0 (singular when b >= 2), toward the
// bipolar point rho = R at the kernel scale alpha, and log-octaves out to the
// truncation radius. Returns strictly increasing edges starting at 0.
inline std::vector<double> bipolar_edges(double R, double alpha, double beta,
                                         const OracleConfig& cfg) {
  const double S_max = cfg.domain_factor * (R + alpha + beta + 1.0);
  std::vector<double> e;
  e.push_back(0.0);
  const double base = std::max(std::min(beta, R), 1e-8 * (R + beta));
  double d = base * std::pow(0.5, cfg.radial_octaves);
  for (; d < R * (1.0 - 1e-9); d *= 2.0) e.push_back(d);
  // approach rho = R at the scale of the kernel width
  const double dmin =
      std::max(std::min(alpha, R) / 4.0, R * std::pow(0.5, cfg.radial_octaves + 6));
  for (double q = dmin; q < R * (1.0 - 1e-12); q *= 2.0) {
    e.push_back(R - q);
    if (R + q < S_max) e.push_back(R + q);
  }
  e.push_back(R);
  for (double s = 2.0 * R; s < S_max; s *= 2.0) e.push_back(s);
  e.push_back(S_max);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end(),
                      [&](double x, double y) {
                        return std::abs(x - y) <= 1e-13 * (1.0 + std::abs(y));
                      }),
          e.end());
  return e;
}

// int_{R^3} (|x-y| + alpha)^{-a} (|y| + beta)^{-b} dy for |x| = R via the
// bipolar change of variables: (2 pi / R) int_0^inf rho (rho+beta)^{-b}
// [int_{|R-rho|}^{R+rho} u (u+alpha)^{-a} du] d rho, the inner integral in
// closed form. The outer truncation tail is summed geometrically from the
// measured octave decay.
inline double bipolar_spatial(double R, double alpha, double a, double beta,
                              double b, const OracleConfig& cfg) {
  if (R <= 0.0) {  // concentric case: plain radial integral
    const double S_max = cfg.domain_factor * (alpha + beta + 1.0);
    double acc = 0.0;
    const Quad1D& unit = gauss_legendre_unit(cfg.nodes_per_panel);
    double lo = 0.0;
    const double b0 = std::max(std::min(alpha, beta), 1e-8 * (alpha + beta));
    double hi = b0 * std::pow(0.5, cfg.radial_octaves);
    for (; lo < S_max; lo = hi, hi = std::min(2.0 * hi, S_max)) {
      for (size_t m = 0; m < unit.x.size(); ++m) {
        const double r = lo + 0.5 * (hi - lo) * (1.0 + unit.x[m]);
        acc += 0.5 * (hi - lo) * unit.w[m] * 4.0 * pi * r * r *
               std::pow(r + alpha, -a) * std::pow(r + beta, -b);
      }
      if (hi >= S_max) break;
    }
    return acc;
  }
  const std::vector<double> edges = bipolar_edges(R, alpha, beta, cfg);
  const Quad1D& unit = gauss_legendre_unit(cfg.nodes_per_panel);
  double acc = 0.0;
  double prev = -1.0, prev2 = -1.0;
  const double two_R = 2.0 * R;
  for (size_t k = 0; k + 1 < edges.size(); ++k) {
    const double lo = edges[k], hi = edges[k + 1];
    double panel = 0.0;
    for (size_t m = 0; m < unit.x.size(); ++m) {
      const double rho = lo + 0.5 * (hi - lo) * (1.0 + unit.x[m]);
      const double w = 0.5 * (hi - lo) * unit.w[m];
      const double inner =
          bipolar_inner(std::abs(R - rho), R + rho, alpha, a);
      panel += w * rho * std::pow(rho + beta, -b) * inner;
    }
    acc += panel;
    if (lo >= two_R) { prev2 = prev; prev = panel; }
  }
  // outer tail beyond the last octave, from the measured geometric decay
  if (prev2 > 0.0 && prev > 0.0) {
    const double theta = prev / prev2;
    if (theta < 0.9) acc += prev * theta / (1.0 - theta);
  }
  return (2.0 * pi / R) * acc;
}

}  // namespace detail

/// Nested quadrature of
///   int_0^t int_{R^3} (|x-y|+sqrt(t-s))^{-4} (|y|+sqrt(s))^{-a} s^{-b/2} dy ds
/// against the reference majorant
///   rhs = sqrt(t)^{a-1} (|x|+sqrt(t))^{-a} + sqrt(t)^3 (|x|+sqrt(t))^{-4}
/// (unit constant; thresholds live with the callers). Valid for a in [0,5),
/// b in [0,2), a+b < 5 -- outside that range the integral diverges at the
/// space-time origin and the oracle refuses.
inline OracleResult lemma28_oracle(const Vec3& x, double t, double a, double b,
                                   const OracleConfig& cfg = {}) {
  if (!(a >= 0.0) || !(a < 5.0) || !(b >= 0.0) || !(b < 2.0) || !(a + b < 5.0))
    throw error(errc::invalid_argument,
                "integral oracle requires a in [0,5), b in [0,2), a+b < 5");
  if (!(t > 0.0)) throw error(errc::invalid_argument, "oracle requires t > 0");
  const double R = norm(x);
  const double rt = std::sqrt(t);

  // time variable sigma = sqrt(t - s): panels graded toward both endpoints
  // (kernel concentration at sigma = 0, the s^{-b/2} weight at sigma = rt).
  std::vector<double> e1 = graded_edges(0.0, 0.5 * rt, cfg.time_panels, 2.0);
  std::vector<double> e2 = graded_edges(0.5 * rt, rt, cfg.time_panels, 0.5);
  e1.insert(e1.end(), e2.begin() + 1, e2.end());
  const Quad1D tq = gl_composite(cfg.nodes_per_panel, e1);

  double lhs = 0.0;
  for (size_t m = 0; m < tq.x.size(); ++m) {
    const double sigma = tq.x[m];
    const double s = t - sigma * sigma;
    if (!(s > 0.0)) continue;
    const double spatial =
        detail::bipolar_spatial(R, sigma, 4.0, std::sqrt(s), a, cfg);
    lhs += tq.w[m] * 2.0 * sigma * std::pow(s, -0.5 * b) * spatial;
  }
  OracleResult r;
  r.lhs = lhs;
  r.rhs = std::pow(rt, a - 1.0) * std::pow(R + rt, -a) +
          rt * rt * rt * std::pow(R + rt, -4.0);
  r.ratio = r.lhs / r.rhs;
  return r;
}

/// Quadrature value of
///   phi(x,a,b) = int_0^1 int_{R^3} (|x-y|+sqrt(1-t))^{-a} (|y|+sqrt(t))^{-b} dy dt
/// for 0 < a < 5, 0 < b < 5, a + b > 3 (well-definedness range).
inline double tsai_phi_oracle(const Vec3& x, double a, double b,
                              const OracleConfig& cfg = {}) {
  if (!(a > 0.0) || !(a < 5.0) || !(b > 0.0) || !(b < 5.0) || !(a + b > 3.0))
    throw error(errc::invalid_argument,
                "phi oracle requires a, b in (0,5) with a+b > 3");
  const double R = norm(x);

  // grade toward both time endpoints: sqrt(1-t) degenerates at t = 1 and
  // sqrt(t) at t = 0 (the latter matters once b >= 2).
  std::vector<double> e1 = graded_edges(0.0, 0.5, cfg.time_panels, 2.0);
  std::vector<double> e2 = graded_edges(0.5, 1.0, cfg.time_panels, 0.5);
  e1.insert(e1.end(), e2.begin() + 1, e2.end());
  const Quad1D tq = gl_composite(cfg.nodes_per_panel, e1);

  double acc = 0.0;
  for (size_t m = 0; m < tq.x.size(); ++m) {
    const double t = tq.x[m];
    acc += tq.w[m] * detail::bipolar_spatial(R, std::sqrt(1.0 - t), a,
                                             std::sqrt(t), b, cfg);
  }
  return acc;
}

}  // namespace dss

#endif
