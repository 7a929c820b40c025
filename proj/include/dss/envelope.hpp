#ifndef DSS_ENVELOPE_HPP
#define DSS_ENVELOPE_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dss/errors.hpp"
#include "dss/field.hpp"

namespace dss {

/// Least-squares decay exponents of a sampled cell over the far region
/// {|x| >= R0 sqrt(t)}: fits log|f| ~ c0 + alpha log sqrt(t)
/// - beta log(|x| + sqrt(t)) over the nodes with non-negligible |f|.
/// Secondary diagnostic only — certificates come from envelope_fit's sup.
struct DecaySlopes {
  double alpha = 0.0;
  double beta = 0.0;
  int n_points = 0;
  bool valid = false;
};

/// Tightest measured constant for the pointwise bound
/// |f(x,t)| <= C sqrt(t)^alpha (|x| + sqrt(t))^(-beta) over the cell's stored
/// nodes in the region {|x| >= R0 sqrt(t)} (C is the exact sup of the weighted
/// samples; no fitting). The sup over the complementary stored region is
/// reported as core_bound. Enlarging the region can only increase C.
inline DecayEnvelope envelope_fit(const SpaceTimeCell& cell, double alpha,
                                  double beta, double R0 = 2.0) {
  if (!(R0 >= 0.0) || !std::isfinite(R0))
    throw error(errc::invalid_argument, "envelope region needs R0 >= 0");
  DecayEnvelope env;
  env.alpha = alpha;
  env.beta = beta;
  env.R0 = R0;
  int n_region = 0;
  for (int it = 0; it < cell.n_time(); ++it) {
    const double t = cell.time_nodes[it];
    const double rt = std::sqrt(t);
    for (int ir = 0; ir < cell.n_shell(); ++ir) {
      const double r = cell.shell_radii[ir];
      const double w = std::pow(rt, -alpha) * std::pow(r + rt, beta);
      for (int ia = 0; ia < cell.grid.n_angular(); ++ia) {
        const double mag = norm(cell.sample(it, ir, ia));
        if (r >= R0 * rt) {
          env.C = std::max(env.C, mag * w);
          ++n_region;
        } else {
          env.core_bound = std::max(env.core_bound, mag);
        }
      }
    }
  }
  if (n_region == 0)
    throw error(errc::empty_region,
                "no stored cell nodes satisfy |x| >= R0 sqrt(t)");
  env.valid = true;
  return env;
}

/// Regression diagnostic for the same region (see DecaySlopes). Nodes whose
/// magnitude is below 1e-12 of the region maximum are excluded (log-scale
/// fit); fewer than 8 usable nodes or a degenerate design leave valid=false.
inline DecaySlopes fit_decay_slopes(const SpaceTimeCell& cell,
                                    double R0 = 2.0) {
  std::vector<double> lt, lx, lf;
  double fmax = 0.0;
  for (int it = 0; it < cell.n_time(); ++it) {
    const double rt = std::sqrt(cell.time_nodes[it]);
    for (int ir = 0; ir < cell.n_shell(); ++ir) {
      const double r = cell.shell_radii[ir];
      if (r < R0 * rt) continue;
      for (int ia = 0; ia < cell.grid.n_angular(); ++ia) {
        const double mag = norm(cell.sample(it, ir, ia));
        fmax = std::max(fmax, mag);
        lt.push_back(std::log(rt));
        lx.push_back(std::log(r + rt));
        lf.push_back(mag);
      }
    }
  }
  DecaySlopes out;
  // normal equations for [1, log sqrt(t), log(|x|+sqrt(t))]
  double S[3][3] = {};
  double rhs[3] = {};
  for (size_t i = 0; i < lf.size(); ++i) {
    if (!(lf[i] > 1e-12 * fmax)) continue;
    const double row[3] = {1.0, lt[i], lx[i]};
    const double y = std::log(lf[i]);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) S[a][b] += row[a] * row[b];
      rhs[a] += row[a] * y;
    }
    ++out.n_points;
  }
  if (out.n_points < 8) return out;
  // Gaussian elimination with partial pivoting on the 3x3 system
  int piv[3] = {0, 1, 2};
  for (int c = 0; c < 3; ++c) {
    int best = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(S[piv[r]][c]) > std::abs(S[piv[best]][c])) best = r;
    std::swap(piv[c], piv[best]);
    if (std::abs(S[piv[c]][c]) < 1e-12) return out;
    for (int r = c + 1; r < 3; ++r) {
      const double m = S[piv[r]][c] / S[piv[c]][c];
      for (int cc = c; cc < 3; ++cc) S[piv[r]][cc] -= m * S[piv[c]][cc];
      rhs[piv[r]] -= m * rhs[piv[c]];
    }
  }
  double sol[3];
  for (int c = 2; c >= 0; --c) {
    double v = rhs[piv[c]];
    for (int cc = c + 1; cc < 3; ++cc) v -= S[piv[c]][cc] * sol[cc];
    sol[c] = v / S[piv[c]][c];
  }
  out.alpha = sol[1];
  out.beta = -sol[2];
  out.valid = true;
  return out;
}

/// Weighted far-field profile s(r) = sup over the stored nodes with
/// |x| >= r sqrt(t) of |f| sqrt(t)^(-alpha) (|x| + sqrt(t))^beta. The sup is
/// over nested shrinking regions, so s is non-increasing in r by
/// construction; vanishing s(r) as r grows is the little-o behaviour.
struct LittleOProfile {
  std::vector<double> r;
  std::vector<double> s;
  bool truncated = false;  // trailing r values had no nodes and were dropped
};

inline LittleOProfile littleo_profile(const SpaceTimeCell& cell, double alpha,
                                      double beta,
                                      const std::vector<double>& r_list) {
  for (size_t i = 0; i + 1 < r_list.size(); ++i)
    if (!(r_list[i] < r_list[i + 1]))
      throw error(errc::invalid_argument,
                  "profile radii must be strictly increasing");
  LittleOProfile prof;
  for (double r0 : r_list) {
    double s = 0.0;
    int n = 0;
    for (int it = 0; it < cell.n_time(); ++it) {
      const double rt = std::sqrt(cell.time_nodes[it]);
      const double wt = std::pow(rt, -alpha);
      for (int ir = 0; ir < cell.n_shell(); ++ir) {
        const double r = cell.shell_radii[ir];
        if (r < r0 * rt) continue;
        const double w = wt * std::pow(r + rt, beta);
        for (int ia = 0; ia < cell.grid.n_angular(); ++ia) {
          s = std::max(s, norm(cell.sample(it, ir, ia)) * w);
          ++n;
        }
      }
    }
    if (n == 0) {
      prof.truncated = true;  // region empty from here on (radii increase)
      break;
    }
    prof.r.push_back(r0);
    prof.s.push_back(s);
  }
  if (prof.r.empty())
    throw error(errc::empty_region, "profile region empty at the smallest r");
  return prof;
}

/// Profile in the normalization tied to a roughness exponent q: weight
/// sqrt(t)^{3/q} (|x| + sqrt(t))^{1-3/q}, i.e. (alpha, beta) = (-3/q, 1-3/q).
inline LittleOProfile littleo_profile_q(const SpaceTimeCell& cell, double q,
                                        const std::vector<double>& r_list) {
  if (!(q > 3.0))
    throw error(errc::invalid_argument, "profile normalization needs q > 3");
  return littleo_profile(cell, -3.0 / q, 1.0 - 3.0 / q, r_list);
}

}  // namespace dss

#endif
