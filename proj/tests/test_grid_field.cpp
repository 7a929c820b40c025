#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dss/field.hpp"
#include "dss/grid.hpp"

using namespace dss;

namespace {

Vec3 swirl_fn(const Vec3& x) {
  const double r2 = x.x * x.x + x.y * x.y + x.z * x.z;
  return Vec3{-x.y / r2, x.x / r2, 0.0};
}

Vec3 unit_sample(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v{g(rng), g(rng), g(rng)};
  return (1.0 / norm(v)) * v;
}

}  // namespace

TEST_CASE("grid construction") {
  const GridSpec g = build_grid(2.0, 32, 96, 1);
  REQUIRE(g.n_radial == 32);
  for (int i = 0; i < 32; ++i)
    CHECK(g.radial_nodes[i] == Catch::Approx(std::pow(2.0, i / 32.0)).epsilon(1e-14));
  CHECK(g.radial_nodes.front() == 1.0);
  CHECK(g.radial_nodes.back() < 2.0);

  CHECK_THROWS_AS(build_grid(1.0, 32, 96, 1), error);
  CHECK_THROWS_AS(build_grid(0.5, 32, 96, 1), error);
  CHECK_THROWS_AS(build_grid(2.0, 2, 96, 1), error);
  CHECK_THROWS_AS(build_grid(2.0, 16, 96, 2), error);

  const GridSpec thin = build_grid(1.1, 8, 24, 1);
  CHECK(thin.radial_nodes.back() / thin.radial_nodes.front() < 1.1);
}

TEST_CASE("sphere mesh weights sum to the full solid angle") {
  for (int n : {24, 72, 96, 128}) {
    const SphereMesh m = make_sphere_mesh(n);
    double s = m.size() * m.weight();
    CHECK(s == Catch::Approx(4.0 * pi).epsilon(1e-13));
    CHECK(m.nz % 2 == 0);
    CHECK(m.nphi % 2 == 0);
  }
  CHECK_THROWS_AS(make_sphere_mesh(3, 8), error);
  CHECK_THROWS_AS(make_sphere_mesh(4, 7), error);
}

TEST_CASE("evaluation of a homogeneous degree -1 field") {
  const GridSpec g = build_grid(2.0, 24, 96, 3);
  DssField f = make_field(g);
  fill_field(f, swirl_fn, /*keep_closure=*/false);

  // closed form at (4,0,0) is (0, 1/4, 0); interpolation only in the angle
  const Vec3 v = dss_eval(f, Vec3{4.0, 0.0, 0.0});
  CHECK(v.x == Catch::Approx(0.0).margin(2e-3));
  CHECK(v.y == Catch::Approx(0.25).epsilon(0.02));
  CHECK(v.z == Catch::Approx(0.0).margin(1e-12));

  DssField fc = make_field(g);
  fill_field(fc, swirl_fn, /*keep_closure=*/true);
  const Vec3 vc = dss_eval(fc, Vec3{4.0, 0.0, 0.0});
  CHECK(vc.y == Catch::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("node evaluation returns the stored sample exactly") {
  const GridSpec g = build_grid(2.0, 16, 96, 3);
  DssField f = make_field(g);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (auto& s : f.samples) s = Vec3{gauss(rng), gauss(rng), gauss(rng)};

  for (int ir : {0, 5, 15})
    for (int ia : {0, 17, 95}) {
      const Vec3 x = g.node_point(ir, ia);
      const Vec3 v = dss_eval(f, x);
      const Vec3& s = f.sample(ir, ia);
      CHECK(v.x == s.x);
      CHECK(v.y == s.y);
      CHECK(v.z == s.z);
    }
}

TEST_CASE("scaling rule is exact for both evaluation paths") {
  const GridSpec g = build_grid(2.0, 12, 72, 1);
  DssField f = make_field(g);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  for (auto& s : f.samples) s = Vec3{gauss(rng), gauss(rng), gauss(rng)};

  DssField fc = make_field(g);
  fill_field(fc, swirl_fn, true);

  std::uniform_real_distribution<double> rad(0.02, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 x = rad(rng) * unit_sample(rng);
    for (const DssField* u : {&f, &fc}) {
      const Vec3 a = dss_eval(*u, x);
      const Vec3 b = 2.0 * dss_eval(*u, 2.0 * x);
      CHECK(norm(a - b) <= 1e-13 * (norm(a) + 1e-300));
    }
  }
}

TEST_CASE("origin and zero-field behaviour") {
  const GridSpec g = build_grid(2.0, 8, 24, 1);
  DssField f = make_field(g);
  CHECK_THROWS_AS(dss_eval(f, Vec3{0.0, 0.0, 0.0}), error);
  const Vec3 v = dss_eval(f, Vec3{0.3, -1.2, 7.0});
  CHECK(norm(v) == 0.0);
}

TEST_CASE("cubic radial interpolation beats linear on a smooth profile") {
  // log-periodic in r so the profile is a genuine 2-DSS field
  auto smooth = [](const Vec3& x) {
    const double r = norm(x);
    return Vec3{std::sin(2.0 * pi * std::log2(r)) / r, 0.0, 0.0};
  };
  double err[2];
  int slot = 0;
  for (int order : {1, 3}) {
    const GridSpec g = build_grid(2.0, 24, 512, order);
    DssField f = make_field(g);
    fill_field(f, smooth, false);
    double e = 0.0;
    for (int i = 0; i < 40; ++i) {
      const double r = std::pow(2.0, (i + 0.5) / 40.0);
      const Vec3 p{r, 0.0, 0.0};
      e = std::max(e, norm(dss_eval(f, p) - smooth(p)));
    }
    err[slot++] = e;
  }
  CHECK(err[1] < 0.2 * err[0]);
}

TEST_CASE("space-time cell evaluation and band reduction") {
  const GridSpec g = build_grid(2.0, 16, 512, 3);
  auto v = [](const Vec3& x, double t) {
    const double r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    return (1.0 / (r2 + 2.0 * t)) * x;
  };
  SpaceTimeCell c = make_cell(g, 0.5, 8.0, 28, 6);
  fill_cell(c, v, /*keep_closure=*/false);

  const Vec3 got = dss_eval_spacetime(c, Vec3{8.0, 0.0, 0.0}, 4.0);
  CHECK(got.x == Catch::Approx(1.0 / 9.0).epsilon(5e-3));
  CHECK(std::abs(got.y) < 1e-12);

  // identity on the fundamental band at stored nodes
  const Vec3 node = c.node_point(10, 40);
  const Vec3 at_node = dss_eval_spacetime(c, node, 1.0);
  const Vec3& stored = c.sample(0, 10, 40);
  CHECK(at_node.x == stored.x);
  CHECK(at_node.y == stored.y);
  CHECK(at_node.z == stored.z);

  // scaling law across the band boundary, interpolated path
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rad(1.0, 3.0), tim(0.6, 2.5);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 x = rad(rng) * unit_sample(rng);
    const double t = tim(rng);
    const Vec3 a = dss_eval_spacetime(c, x, t);
    const Vec3 b = 2.0 * dss_eval_spacetime(c, 2.0 * x, 4.0 * t);
    CHECK(norm(a - b) <= 1e-12 * (norm(a) + 1e-300));
  }

  CHECK_THROWS_AS(dss_eval_spacetime(c, Vec3{0.5, 0, 0}, 17.0), error);  // r_red 0.125
  CHECK_THROWS_AS(dss_eval_spacetime(c, Vec3{1, 0, 0}, 0.0), error);
  CHECK_THROWS_AS(dss_eval_spacetime(c, Vec3{0, 0, 0}, 1.0), error);

  SpaceTimeCell zc = make_cell(g, 0.5, 8.0, 8, 4);
  CHECK(norm(dss_eval_spacetime(zc, Vec3{1.3, 0.2, 0.0}, 2.0)) == 0.0);
}

TEST_CASE("cell shell validation") {
  const GridSpec g = build_grid(2.0, 8, 24, 1);
  CHECK_THROWS_AS(make_cell(g, 2.0, 1.0, 8, 4), error);
  CHECK_THROWS_AS(make_cell(g, 0.0, 1.0, 8, 4), error);
  CHECK_THROWS_AS(make_cell(g, 0.5, 8.0, 2, 4), error);
}
