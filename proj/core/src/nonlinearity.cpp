#include <cmath>

#include "fft.hpp"
#include "nlsobs/dynamics.hpp"
#include "nlsobs/errors.hpp"

namespace nlsobs {

NonlinearitySpec::NonlinearitySpec(std::vector<double> coefficients, bool defocusing)
    : c_(std::move(coefficients)), defocusing_(defocusing) {
  for (double c : c_)
    if (!std::isfinite(c)) throw PreconditionError("nonlinearity: non-finite coefficient");
  while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
  if (defocusing_ && (c_.size() < 2 || c_.back() <= 0.0))
    throw PreconditionError("nonlinearity: defocusing requires a positive leading coefficient");
}

NonlinearitySpec NonlinearitySpec::cubic(double c) { return NonlinearitySpec({0.0, c}, c > 0.0); }

double NonlinearitySpec::dP(double r) const {
  double acc = 0.0;
  for (int j = degree(); j >= 0; --j) acc = acc * r + c_[j];
  return acc;
}

double NonlinearitySpec::d2P(double r) const {
  double acc = 0.0;
  for (int j = degree(); j >= 1; --j) acc = acc * r + j * c_[j];
  return acc;
}

double NonlinearitySpec::P(double r) const {
  double acc = 0.0;
  for (int j = degree(); j >= 0; --j) acc = acc * r + c_[j] / (j + 1);
  return acc * r;
}

void gauss_legendre01(int count, std::vector<double>& nodes, std::vector<double>& weights) {
  if (count < 1) throw PreconditionError("gauss_legendre01: need at least one node");
  nodes.resize(count);
  weights.resize(count);
  const unsigned n = static_cast<unsigned>(count);
  for (int i = 0; i < count; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double p = std::legendre(n, x);
      const double pm = n > 0 ? std::legendre(n - 1, x) : 0.0;
      dp = n * (x * p - pm) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double p = std::legendre(n, x), pm = std::legendre(n - 1, x);
    dp = n * (x * p - pm) / (x * x - 1.0);
    nodes[count - 1 - i] = 0.5 * (x + 1.0);
    weights[count - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

namespace {

detail::PaddedGrid padded(const GeometryPtr& g, const NonlinearitySpec& nl) {
  return detail::PaddedGrid::for_degree(g, nl.product_factors());
}

}  // namespace

SpectralField eval_f(const SpectralField& u, const NonlinearitySpec& nl) {
  if (nl.is_zero()) return SpectralField(u.geometry());
  const auto grid = padded(u.geometry(), nl);
  CVector x(grid.total());
  grid.to_grid(u.coeffs().data(), x.data());
  for (int j = 0; j < grid.total(); ++j) x[j] *= nl.dP(std::norm(x[j]));
  CVector c(u.size());
  grid.to_coeffs(x.data(), c.data());
  return SpectralField(u.geometry(), std::move(c));
}

SpectralField eval_df(const SpectralField& v, const SpectralField& w, const NonlinearitySpec& nl) {
  require_same_geometry(v.geometry(), w.geometry(), "eval_df");
  if (nl.is_zero()) return SpectralField(v.geometry());
  const auto grid = padded(v.geometry(), nl);
  CVector xv(grid.total()), xw(grid.total());
  grid.to_grid(v.coeffs().data(), xv.data());
  grid.to_grid(w.coeffs().data(), xw.data());
  for (int j = 0; j < grid.total(); ++j) {
    const double r = std::norm(xv[j]);
    const double q = nl.d2P(r);
    xw[j] = (nl.dP(r) + q * r) * xw[j] + q * xv[j] * xv[j] * std::conj(xw[j]);
  }
  CVector c(v.size());
  grid.to_coeffs(xw.data(), c.data());
  return SpectralField(v.geometry(), std::move(c));
}

SpectralField eval_h(const SpectralField& v, const SpectralField& w, const NonlinearitySpec& nl) {
  require_same_geometry(v.geometry(), w.geometry(), "eval_h");
  if (nl.degree() < 1) return SpectralField(v.geometry());
  // The tau-integrand is a polynomial of degree 2 deg P'; deg + 1 nodes integrate it exactly.
  std::vector<double> tau, wt;
  gauss_legendre01(nl.degree() + 1, tau, wt);
  const auto grid = padded(v.geometry(), nl);
  CVector xv(grid.total()), xw(grid.total()), acc = CVector::Zero(grid.total());
  grid.to_grid(v.coeffs().data(), xv.data());
  grid.to_grid(w.coeffs().data(), xw.data());
  auto df = [&](cplx z, cplx d) {
    const double r = std::norm(z);
    const double q = nl.d2P(r);
    return (nl.dP(r) + q * r) * d + q * z * z * std::conj(d);
  };
  for (int j = 0; j < grid.total(); ++j) {
    const cplx base = df(xv[j], xw[j]);
    cplx s = 0.0;
    for (std::size_t q = 0; q < tau.size(); ++q) s += wt[q] * (df(xv[j] + tau[q] * xw[j], xw[j]) - base);
    acc[j] = s;
  }
  CVector c(v.size());
  grid.to_coeffs(acc.data(), c.data());
  return SpectralField(v.geometry(), std::move(c));
}

PotentialPath eval_f(const PotentialPath& u, const NonlinearitySpec& nl) {
  CMatrix out(u.data().rows(), u.data().cols());
  for (int j = 0; j < u.node_count(); ++j) out.col(j) = eval_f(u.at(j), nl).coeffs();
  return PotentialPath(u.geometry(), u.start(), u.dt(), std::move(out));
}

PotentialPath eval_h(const PotentialPath& v, const PotentialPath& w, const NonlinearitySpec& nl) {
  require_same_grid(v, w, "eval_h");
  CMatrix out(v.data().rows(), v.data().cols());
  for (int j = 0; j < v.node_count(); ++j) out.col(j) = eval_h(v.at(j), w.at(j), nl).coeffs();
  return PotentialPath(v.geometry(), v.start(), v.dt(), std::move(out));
}

ConservedQuantities conserved_quantities(const SpectralField& u, const NonlinearitySpec& nl) {
  const auto& g = *u.geometry();
  ConservedQuantities q;
  for (int f = 0; f < g.total(); ++f) {
    const double a = std::norm(u[f]);
    q.mass += a;
    q.energy += g.eigenvalue(f) * a;
  }
  if (!nl.is_zero()) {
    // P(|u|^2) is a product of 2 deg + 2 factors; its mean is exact on this grid.
    const auto grid = detail::PaddedGrid::for_degree(u.geometry(), 2 * nl.degree() + 2);
    CVector x(grid.total());
    grid.to_grid(u.coeffs().data(), x.data());
    double s = 0.0;
    for (int j = 0; j < grid.total(); ++j) s += nl.P(std::norm(x[j]));
    q.energy += s * g.volume() / grid.total();
  }
  return q;
}

}  // namespace nlsobs
