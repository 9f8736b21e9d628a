#include <algorithm>
#include <cmath>
#include <string>

#include "fft.hpp"
#include "internal.hpp"
#include "nlsobs/dynamics.hpp"
#include "nlsobs/errors.hpp"

namespace nlsobs {

SpectralField linear_propagator(const SpectralField& u, double t) {
  const auto& g = *u.geometry();
  CVector c = u.coeffs();
  for (int f = 0; f < g.total(); ++f) c[f] *= std::polar(1.0, -g.eigenvalue(f) * t);
  return SpectralField(u.geometry(), std::move(c));
}

int checked_step_count(double T, double dt, const char* where) {
  if (!(dt > 0.0) || !(T > 0.0)) throw PreconditionError(std::string(where) + ": T and dt must be positive");
  const double x = T / dt;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, x))
    throw PreconditionError(std::string(where) + ": T/dt must be an integer");
  return static_cast<int>(r);
}

PotentialPath evolve_nls(const SpectralField& u0, const NonlinearitySpec& nl, double T, double dt,
                         const NlsOptions& options) {
  const int steps = checked_step_count(T, dt, "evolve_nls");
  const int stride = options.record_stride;
  if (stride < 1 || steps % stride != 0)
    throw PreconditionError("evolve_nls: record stride must divide the step count");
  const auto& geom = u0.geometry();
  const auto& g = *geom;
  const int n = g.total();

  CVector half(n);
  for (int f = 0; f < n; ++f) half[f] = std::polar(1.0, -0.5 * g.eigenvalue(f) * dt);

  const auto grid = detail::PaddedGrid::for_degree(geom, nl.product_factors());
  CVector x(grid.total());
  CVector u = u0.coeffs();
  CMatrix out(n, steps / stride + 1);
  out.col(0) = u;
  for (int s = 1; s <= steps; ++s) {
    u.array() *= half.array();
    if (!nl.is_zero()) {
      grid.to_grid(u.data(), x.data());
      double peak = 0.0;
      for (int j = 0; j < grid.total(); ++j) {
        const double r = std::norm(x[j]);
        peak = std::max(peak, r);
        x[j] *= std::polar(1.0, -nl.dP(r) * dt);
      }
      if (!std::isfinite(peak) || std::sqrt(peak) > options.blowup_limit)
        throw BlowUpError("evolve_nls: solution left the bounded regime at step " + std::to_string(s), s);
      grid.to_coeffs(x.data(), u.data());
    }
    u.array() *= half.array();
    if (!u.allFinite())
      throw BlowUpError("evolve_nls: non-finite state at step " + std::to_string(s), s);
    if (s % stride == 0) out.col(s / stride) = u;
  }
  return PotentialPath(geom, 0.0, dt * stride, std::move(out));
}

}  // namespace nlsobs
