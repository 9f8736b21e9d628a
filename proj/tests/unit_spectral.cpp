#include "doctest.h"
#include "support.hpp"

using namespace nlsobs;
using namespace nlsobs::test;
using std::numbers::pi;

TEST_CASE("geometry rejects bad shapes") {
  CHECK_THROWS_AS(TorusGeometry::create({2 * pi}, {6}), ShapeError);
  CHECK_THROWS_AS(TorusGeometry::create({-1.0}, {8}), ShapeError);
  CHECK_THROWS_AS(TorusGeometry::create({1.0, 1.0, 1.0}, {4, 4, 4}), ShapeError);
  CHECK_THROWS_AS(TorusGeometry::create({1.0}, {2}), ShapeError);
  CHECK_NOTHROW(TorusGeometry::create({1.0, 2.0}, {4, 8}));
}

TEST_CASE("rank order is ascending eigenvalue then lexicographic wavenumber") {
  auto g = TorusGeometry::circle(16);
  CHECK(g->wavenumber(g->flat_at_rank(0))[0] == 0);
  CHECK(g->wavenumber(g->flat_at_rank(1))[0] == -1);
  CHECK(g->wavenumber(g->flat_at_rank(2))[0] == 1);
  CHECK(g->wavenumber(g->flat_at_rank(3))[0] == -2);
  for (int r = 1; r < g->total(); ++r)
    CHECK(g->eigenvalue(g->flat_at_rank(r)) >= g->eigenvalue(g->flat_at_rank(r - 1)));
  for (int f = 0; f < g->total(); ++f) CHECK(g->flat_at_rank(g->rank_of(f)) == f);
}

TEST_CASE("single Fourier mode and constants") {
  auto g = TorusGeometry::circle(8);
  CVector x(8);
  for (int j = 0; j < 8; ++j) x[j] = std::polar(1.0, g->grid_point(j)[0]);
  const SpectralField u = to_spectral(x, g);
  for (int f = 0; f < 8; ++f) {
    if (g->wavenumber(f)[0] == 1)
      CHECK(std::abs(u[f] - std::sqrt(2 * pi)) < 1e-13);
    else
      CHECK(std::abs(u[f]) < 1e-14);
  }
  const cplx c(0.3, -1.2);
  const SpectralField v = to_spectral(CVector::Constant(8, c), g);
  CHECK(std::abs(v[g->flat_index({0, 0})] - c * std::sqrt(2 * pi)) < 1e-13);
  CHECK(max_abs(CVector(v.coeffs() - SpectralField::mode(g, {0, 0}, c * std::sqrt(2 * pi)).coeffs())) < 1e-13);

  const CVector one = to_physical(SpectralField::mode(g, {0, 0}, std::sqrt(2 * pi)));
  CHECK(max_abs(CVector(one - CVector::Ones(8))) < 1e-14);
  CHECK(max_abs(to_physical(SpectralField(g))) == 0.0);
}

TEST_CASE("transforms round-trip and satisfy Parseval") {
  for (auto g : {TorusGeometry::circle(64), TorusGeometry::create({2 * pi, 3.0}, {16, 32}),
                 TorusGeometry::create({2 * pi, 2 * pi}, {64, 64})}) {
    CVector x(g->total());
    for (auto& v : x) v = cplx(uniform(), uniform());
    const SpectralField u = to_spectral(x, g);
    CHECK((to_physical(u) - x).norm() <= 1e-12 * x.norm());
    const SpectralField w = random_field(g, 0.9);
    CHECK((to_spectral(to_physical(w), g).coeffs() - w.coeffs()).norm() <= 1e-12 * w.coeffs().norm());
    // Grid L2 norm equals coefficient norm.
    const double cell = g->volume() / g->total();
    CHECK(std::abs(std::sqrt(cell) * x.norm() - u.coeffs().norm()) <= 1e-12 * u.coeffs().norm());
  }
}

TEST_CASE("Sobolev products on modes and random data") {
  auto g = TorusGeometry::circle(32);
  for (int k : {0, 1, -3, 7}) {
    const SpectralField e = SpectralField::mode(g, {k, 0});
    for (double s : {0.0, 1.0, 2.5}) {
      CHECK(std::abs(sobolev_inner(e, e, SobolevScale(s)) - std::pow(1.0 + k * k, s)) < 1e-12 * std::pow(1.0 + k * k, s));
      CHECK(std::abs(real_inner(e * cplx(0, 1), e, SobolevScale(s))) < 1e-15);
    }
  }
  CHECK(std::abs(sobolev_inner(SpectralField::mode(g, {2, 0}), SpectralField::mode(g, {-2, 0}), SobolevScale(1))) == 0.0);

  const SpectralField u = random_field(g), v = random_field(g), w = random_field(g);
  // s = 0 against the grid quadrature.
  const CVector xu = to_physical(u), xv = to_physical(v);
  const cplx grid = (g->volume() / g->total()) * (xu.array() * xv.conjugate().array()).sum();
  CHECK(std::abs(sobolev_inner(u, v, SobolevScale(0)) - grid) < 1e-12 * std::abs(grid));

  // Coordinate expansion: weighted 2m-dimensional real dot product.
  const SobolevScale s(1.5);
  const RVector hw = s.half_weights(*g);
  double dot = 0.0;
  for (int f = 0; f < g->total(); ++f)
    dot += hw[f] * hw[f] * (u[f].real() * v[f].real() + u[f].imag() * v[f].imag());
  CHECK(std::abs(real_inner(u, v, s) - dot) < 1e-12 * std::abs(dot));

  SUBCASE("real inner product axioms") {
    for (int trial = 0; trial < 20; ++trial) {
      const double a = uniform(), b = uniform();
      const SpectralField x = random_field(g), y = random_field(g), z = random_field(g);
      CHECK(std::abs(real_inner(x, y, s) - real_inner(y, x, s)) < 1e-12 * (1 + std::abs(real_inner(x, y, s))));
      const double lhs = real_inner(x * a + y * b, z, s);
      const double rhs = a * real_inner(x, z, s) + b * real_inner(y, z, s);
      CHECK(std::abs(lhs - rhs) < 1e-12 * (1 + std::abs(lhs)));
      CHECK(real_inner(x, x, s) > 0.0);
    }
  }
  (void)w;
}

TEST_CASE("multiplier is the Sobolev isometry") {
  auto g = TorusGeometry::circle(64);
  const SpectralField u = random_field(g);
  CHECK(max_abs(CVector(apply_multiplier(u, 0.0).coeffs() - u.coeffs())) == 0.0);
  const SpectralField e = SpectralField::mode(g, {5, 0});
  CHECK(std::abs(apply_multiplier(e, 2.0)[g->flat_index({5, 0})] - 26.0) < 1e-12);
  for (double s : {0.5, 1.0, 3.0}) {
    const double a = sobolev_norm(apply_multiplier(u, s), SobolevScale(0));
    CHECK(std::abs(a - sobolev_norm(u, SobolevScale(s))) < 1e-12 * a);
    CHECK((apply_multiplier(apply_multiplier(u, s), -s).coeffs() - u.coeffs()).norm() < 1e-12 * u.coeffs().norm());
  }
}

TEST_CASE("frequency split projections") {
  auto g = TorusGeometry::circle(16);
  const FrequencySplit p3(3);
  const auto low = p3.low_modes(*g);
  REQUIRE(low.size() == 3);
  std::vector<int> ks;
  for (int f : low) ks.push_back(g->wavenumber(f)[0]);
  std::sort(ks.begin(), ks.end());
  CHECK(ks == std::vector<int>{-1, 0, 1});
  CHECK(project_low(SpectralField::mode(g, {2, 0}), p3).coeffs().norm() == 0.0);

  auto g2 = TorusGeometry::create({2 * pi, 2 * pi}, {16, 16});
  for (auto geom : {g, g2}) {
    for (int n : {1, 5, 17}) {
      if (n >= geom->total()) continue;
      const FrequencySplit sp(n);
      const SpectralField u = random_field(geom);
      const SpectralField lo = project_low(u, sp), hi = project_high(u, sp);
      CHECK(project_high(lo, sp).coeffs().norm() == 0.0);
      CHECK(project_low(hi, sp).coeffs().norm() == 0.0);
      CHECK((project_low(lo, sp).coeffs() - lo.coeffs()).norm() == 0.0);
      CHECK((project_high(hi, sp).coeffs() - hi.coeffs()).norm() == 0.0);
      CHECK(((lo + hi).coeffs() - u.coeffs()).norm() == 0.0);
      const SpectralField a = apply_multiplier(project_high(u, sp), 1.3);
      const SpectralField b = project_high(apply_multiplier(u, 1.3), sp);
      CHECK((a.coeffs() - b.coeffs()).norm() <= 1e-14 * a.coeffs().norm());
    }
  }
  CHECK_THROWS(FrequencySplit(-1).validate(*g));
}

TEST_CASE("observation windows") {
  auto g = TorusGeometry::circle(128);
  const auto w = reference_window(g);
  CHECK(w.samples().minCoeff() >= 0.0);
  CHECK(w.samples().maxCoeff() <= 1.0);
  CHECK(w.in_plateau({1.5, 0.0}));
  CHECK(!w.in_plateau({1.1, 0.0}));
  CHECK(w.in_support({1.1, 0.0}));
  CHECK(!w.in_support({3.0, 0.0}));
  CHECK(w.value({1.5, 0.0}) == 1.0);
  CHECK(w.value({0.5, 0.0}) == 0.0);
  CHECK(w.value({1.1, 0.0}) > 0.0);
  CHECK(w.value({1.1, 0.0}) < 1.0);

  const SpectralField u = random_field(g);
  const auto every = ObservationWindow::everywhere(g);
  CHECK((observe(u, every).coeffs() - u.coeffs()).norm() < 1e-13 * u.coeffs().norm());
  for (int t = 0; t < 10; ++t) {
    const SpectralField r = random_field(g, 0.95);
    CHECK(sobolev_norm(observe(r, w), SobolevScale(0)) <= sobolev_norm(r, SobolevScale(0)) * (1 + 1e-14));
  }
  // A Gaussian bump far from the interval is invisible up to its own tail.
  CVector x(g->total());
  for (int j = 0; j < g->total(); ++j) {
    const double d = g->grid_point(j)[0] - 4.5;
    x[j] = std::exp(-d * d / (2 * 0.15 * 0.15));
  }
  CHECK(sobolev_norm(observe(to_spectral(x, g), w), SobolevScale(0)) < 1e-12);

  CHECK_THROWS_AS(ObservationWindow::slab(g, 2.0, 1.0), ShapeError);
  WindowBox bad{{AxisInterval::range(1.0, 2.0)}, {AxisInterval::range(0.5, 1.5)}};
  CHECK_THROWS_AS(ObservationWindow::from_boxes(g, {bad}), ShapeError);
  CHECK(ObservationWindow::nowhere(g).samples().norm() == 0.0);
}

TEST_CASE("observation factor reproduces the unaliased product norm") {
  auto g = TorusGeometry::circle(32);
  const auto w = reference_window(g);
  const SpectralField u = random_field(g, 0.9);
  // Direct evaluation of ||b u||_{H^s} on a much finer grid.
  auto fine = TorusGeometry::circle(1024);
  CVector c = CVector::Zero(fine->total());
  for (int f = 0; f < g->total(); ++f) c[fine->flat_index(g->wavenumber(f))] = u[f];
  CVector x = to_physical(SpectralField(fine, c));
  for (int j = 0; j < fine->total(); ++j) x[j] *= w.value(fine->grid_point(j));
  const SpectralField bu = to_spectral(x, fine);
  for (double s : {0.0, 1.0}) {
    const CMatrix& R = w.observation_factor(s);
    CHECK(R.rows() == g->total());
    const double direct = sobolev_norm(bu, SobolevScale(s));
    const double via = (R.triangularView<Eigen::Upper>() * u.coeffs()).norm();
    CHECK(std::abs(via - direct) <= 1e-9 * direct);
  }
  // b = 1 gives the plain Sobolev norm.
  const CMatrix& R1 = ObservationWindow::everywhere(g).observation_factor(1.0);
  const double a = (R1.triangularView<Eigen::Upper>() * u.coeffs()).norm();
  CHECK(std::abs(a - sobolev_norm(u, SobolevScale(1))) < 1e-13 * a);
}

TEST_CASE("ray check on the circle and on 2-D windows") {
  auto g1 = TorusGeometry::circle(64);
  auto r1 = gcc_ray_check(reference_window(g1), 2 * pi, {1000, 2, 3});
  CHECK(r1.passed);
  CHECK(r1.rays_tested == 2000);
  CHECK(r1.worst_entry_time < 2 * pi);

  auto g2 = TorusGeometry::create({2 * pi, 2 * pi}, {32, 32});
  const WindowBox vertical{{AxisInterval::range(1, 2), AxisInterval::whole()},
                           {AxisInterval::range(1.25, 1.75), AxisInterval::whole()}};
  const WindowBox horizontal{{AxisInterval::whole(), AxisInterval::range(1, 2)},
                             {AxisInterval::whole(), AxisInterval::range(1.25, 1.75)}};
  auto strip = gcc_ray_check(ObservationWindow::from_boxes(g2, {vertical}), 4 * pi, {100, 100, 7});
  CHECK(!strip.passed);
  CHECK(strip.worst_ray.direction[0] == 0.0);
  CHECK(!ObservationWindow::from_boxes(g2, {vertical}).in_plateau(strip.worst_ray.origin));
  CHECK(std::isinf(strip.worst_entry_time));

  const auto cross = ObservationWindow::from_boxes(g2, {vertical, horizontal});
  auto rc = gcc_ray_check(cross, 4 * pi, {100, 100, 7});
  CHECK(rc.passed);
  CHECK(rc.rays_tested >= 10000);

  SUBCASE("monotone in the horizon") {
    bool passed_before = false;
    for (double T0 : {0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0}) {
      const bool p = gcc_ray_check(cross, T0, {60, 40, 11}).passed;
      if (passed_before) CHECK(p);
      passed_before = passed_before || p;
    }
    CHECK(passed_before);
  }
  CHECK(!gcc_ray_check(ObservationWindow::nowhere(g1), 100.0, {10, 2, 1}).passed);
}
