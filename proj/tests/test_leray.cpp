#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dss/generators.hpp"
#include "dss/leray.hpp"

using namespace dss;

namespace {

// x/|x|^2 = grad ln|x|: a pure gradient, homogeneous of degree -1, hence DSS
// for every lambda. The projection must annihilate it.
DssField pure_gradient_field(double lambda, int n_radial, int n_angular) {
  const GridSpec g = build_grid(lambda, n_radial, n_angular, 3);
  DssField f = make_field(g);
  fill_field(f, [](const Vec3& x) {
    const double r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    return (1.0 / r2) * x;
  }, true);
  f.name = "grad_log";
  return f;
}

double sup_samples(const DssField& f) {
  double s = 0.0;
  for (const Vec3& v : f.samples) s = std::max(s, norm(v));
  return s;
}

}  // namespace

TEST_CASE("divergence residual distinguishes solenoidal fields") {
  GeneratorParams p;
  p.n_radial = 12;
  p.n_angular = 72;
  const DssField swirl = make_test_data(Family::swirl, p);
  CHECK(divergence_residual(swirl) < 1e-8);

  const DssField grad = pure_gradient_field(2.0, 12, 72);
  // div(x/|x|^2) = 1/|x|^2, which is 1 at |x| = 1
  CHECK(divergence_residual(grad) > 0.2);

  const GridSpec g = build_grid(2.0, 8, 24, 1);
  CHECK(divergence_residual(make_field(g)) == 0.0);
}

TEST_CASE("projection annihilates a pure gradient") {
  const DssField grad = pure_gradient_field(2.0, 8, 24);
  const double tol = 0.02;
  // div(x/|x|^2) = 1/|x|^2 passed exactly
  const DssField out = leray_project(grad, tol, {}, [](const Vec3& x) {
    const double r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    return 1.0 / r2;
  });
  CHECK(sup_samples(out) <= tol * sup_samples(grad));
}

TEST_CASE("projection is the identity on solenoidal input") {
  GeneratorParams p;
  p.n_radial = 8;
  p.n_angular = 24;
  const DssField swirl = make_test_data(Family::swirl, p);
  const DssField out =
      leray_project(swirl, 1e-3, {}, divergence_closure(Family::swirl, p));
  for (size_t i = 0; i < out.samples.size(); ++i)
    CHECK(norm(out.samples[i] - swirl.samples[i]) <= 1e-12);
}

TEST_CASE("projection of the zero field") {
  const GridSpec g = build_grid(2.0, 8, 24, 1);
  const DssField out = leray_project(make_field(g), 1e-3);
  CHECK(sup_samples(out) == 0.0);
}

TEST_CASE("projection extracts the solenoidal part of a composite") {
  // swirl + grad ln|x|: the correction depends only on the divergence, so
  // the projection must return the swirl part untouched.
  const double lam = 2.0;
  const GridSpec g = build_grid(lam, 12, 128, 3);
  DssField swirl = make_field(g);
  fill_field(swirl, [](const Vec3& x) {
    const double r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    return (1.0 / r2) * Vec3{-x.y, x.x, 0.0};
  }, true);
  DssField comp = make_field(g);
  fill_field(comp, [](const Vec3& x) {
    const double r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    return (1.0 / r2) * Vec3{x.x - x.y, x.y + x.x, x.z};
  }, true);

  const DssField proj = leray_project(
      comp, 0.02, {},
      [](const Vec3& x) {
        return 1.0 / (x.x * x.x + x.y * x.y + x.z * x.z);
      });
  double diff = 0.0;
  for (size_t i = 0; i < proj.samples.size(); ++i)
    diff = std::max(diff, norm(proj.samples[i] - swirl.samples[i]));
  CHECK(diff <= 0.03);  // sup |swirl| = 1 on the annulus
}

TEST_CASE("projection sees a narrow divergence spike when configured") {
  GeneratorParams p;
  p.n_radial = 12;
  p.n_angular = 128;
  const DssField f = make_test_data(Family::point_singular, p);

  LerayConfig cfg;
  cfg.far_nz = 24;
  cfg.far_nphi = 48;
  const auto g = divergence_closure(Family::point_singular, p);
  DssField proj;
  REQUIRE_NOTHROW(proj = leray_project(f, 0.02, cfg, g));

  double corr = 0.0;
  for (size_t i = 0; i < f.samples.size(); ++i)
    corr = std::max(corr, norm(proj.samples[i] - f.samples[i]));
  CHECK(corr > 5e-3);  // the correction is not spuriously zero

  // and it stays below the certified kernel bound for the sampled sup
  const SphereQuad sph = make_sphere_quad(cfg.far_nz, cfg.far_nphi);
  const AnnulusQuad aq = make_annulus_quad(p.lambda, 8, sph);
  double g0 = 0.0;
  for (int j = 0; j < aq.size(); ++j) g0 = std::max(g0, std::abs(g(aq.p[j])));
  REQUIRE(g0 > 0.0);
  CHECK(corr <= detail::div_projection_bound(p.lambda, g0) * 1.05);
}

TEST_CASE("projection is idempotent within tolerance") {
  const GridSpec g = build_grid(2.0, 12, 128, 3);
  DssField comp = make_field(g);
  fill_field(comp, [](const Vec3& x) {
    const double r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    return (1.0 / r2) * Vec3{x.x - x.y, x.y + x.x, x.z};
  }, true);
  const double tol = 0.02;
  const DssField once = leray_project(
      comp, tol, {},
      [](const Vec3& x) {
        return 1.0 / (x.x * x.x + x.y * x.y + x.z * x.z);
      });
  const DssField twice = leray_project(once, tol);
  double diff = 0.0;
  for (size_t i = 0; i < once.samples.size(); ++i)
    diff = std::max(diff, norm(once.samples[i] - twice.samples[i]));
  CHECK(diff <= 2.0 * tol * std::max(1.0, sup_samples(comp)));
}
