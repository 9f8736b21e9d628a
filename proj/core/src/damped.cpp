#include <cmath>
#include <string>

#include <Eigen/LU>

#include "fft.hpp"
#include "internal.hpp"
#include "nlsobs/dynamics.hpp"
#include "nlsobs/errors.hpp"

namespace nlsobs {

DampingSpec DampingSpec::from_window(const ObservationWindow& w, double amplitude) {
  return DampingSpec{w.geometry(), amplitude * w.samples()};
}

DampingSpec DampingSpec::none(GeometryPtr geometry) {
  const int n = geometry->total();
  return DampingSpec{std::move(geometry), RVector::Zero(n)};
}

namespace {

// B = a (1 - Lap)^{-1} a, column by column through grid products.
CMatrix damping_operator(const TorusGeometry& g, const RVector& a) {
  const int n = g.total();
  CMatrix B(n, n);
  CVector e(n), x(n), c(n);
  for (int k = 0; k < n; ++k) {
    e.setZero();
    e[k] = 1.0;
    detail::coeffs_to_grid(g, e.data(), x.data());
    x.array() *= a.array();
    detail::grid_to_coeffs(g, x.data(), c.data());
    for (int f = 0; f < n; ++f) c[f] /= 1.0 + g.eigenvalue(f);
    detail::coeffs_to_grid(g, c.data(), x.data());
    x.array() *= a.array();
    detail::grid_to_coeffs(g, x.data(), c.data());
    B.col(k) = c;
  }
  return B;
}

}  // namespace

DampedTrajectory evolve_damped(const SpectralField& u0, const NonlinearitySpec& nl,
                               const DampingSpec& damping, double T, double dt, int record_stride) {
  const int steps = checked_step_count(T, dt, "evolve_damped");
  if (record_stride < 1 || steps % record_stride != 0)
    throw PreconditionError("evolve_damped: record stride must divide the step count");
  require_same_geometry(u0.geometry(), damping.geometry, "evolve_damped");
  const auto& geom = u0.geometry();
  const auto& g = *geom;
  const int n = g.total();
  if (damping.a.size() != n) throw ShapeError("evolve_damped: damping samples differ from the grid size");

  // B is C-linear because a is real, so i - B is factored as a complex matrix.
  CMatrix K = cplx(0.0, 1.0) * CMatrix::Identity(n, n) - damping_operator(g, damping.a);
  Eigen::PartialPivLU<CMatrix> lu(K);
  const double rc = lu.rcond();
  if (!(rc > 1e-12)) throw ConditioningError("evolve_damped: i - B is numerically singular (rcond " + std::to_string(rc) + ")");

  const auto grid = detail::PaddedGrid::for_degree(geom, nl.product_factors());
  CVector x(grid.total()), fx(n), lam(n);
  RVector h1w(n);
  for (int f = 0; f < n; ++f) {
    lam[f] = g.eigenvalue(f);
    h1w[f] = 1.0 + g.eigenvalue(f);
  }
  auto rhs = [&](const CVector& u, CVector& out) {
    out = lam.cwiseProduct(u);
    if (!nl.is_zero()) {
      grid.to_grid(u.data(), x.data());
      for (int j = 0; j < grid.total(); ++j) x[j] *= nl.dP(std::norm(x[j]));
      grid.to_coeffs(x.data(), fx.data());
      out += fx;
    }
    out = lu.solve(out);
  };
  auto h1 = [&](const CVector& u) { return std::sqrt((h1w.array() * u.array().abs2()).sum()); };

  DampedTrajectory result{PotentialPath::zeros(geom, 0.0, dt * record_stride, steps / record_stride), {}, {}};
  CMatrix& rec = result.path.mutable_data();
  result.times.reserve(steps + 1);
  result.h1_norms.reserve(steps + 1);

  CVector u = u0.coeffs(), k1(n), k2(n), k3(n), k4(n), tmp(n);
  rec.col(0) = u;
  result.times.push_back(0.0);
  result.h1_norms.push_back(h1(u));
  for (int s = 1; s <= steps; ++s) {
    rhs(u, k1);
    tmp = u + 0.5 * dt * k1;
    rhs(tmp, k2);
    tmp = u + 0.5 * dt * k2;
    rhs(tmp, k3);
    tmp = u + dt * k3;
    rhs(tmp, k4);
    u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double norm = h1(u);
    if (!std::isfinite(norm) || norm > 1e6)
      throw BlowUpError("evolve_damped: solution left the bounded regime at step " + std::to_string(s), s);
    result.times.push_back(s * dt);
    result.h1_norms.push_back(norm);
    if (s % record_stride == 0) rec.col(s / record_stride) = u;
  }
  return result;
}

}  // namespace nlsobs
