#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "fft.hpp"
#include "nlsobs/dynamics.hpp"
#include "nlsobs/errors.hpp"

namespace nlsobs {

struct LinearizedPropagator::Impl {
  FrequencySplit split;
  PotentialPath v;
  NonlinearitySpec nl;
  LinearizedOptions options;
  RVector mask;
  CVector e_half;
  CVector e_full;
  std::optional<detail::PaddedGrid> grid;
  bool trivial = false;

  Impl(const FrequencySplit& s, const PotentialPath& path, const NonlinearitySpec& f,
       const LinearizedOptions& o)
      : split(s), v(path), nl(f), options(o) {
    const auto& g = *v.geometry();
    split.validate(g);
    if (options.substeps < 1) throw PreconditionError("linearized: substeps must be >= 1");
    mask = split.high_mask(g);
    const double h = v.dt() / options.substeps;
    e_half.resize(g.total());
    e_full.resize(g.total());
    for (int f = 0; f < g.total(); ++f) {
      e_half[f] = std::polar(1.0, -0.5 * h * g.eigenvalue(f));
      e_full[f] = e_half[f] * e_half[f];
    }
    // Df(0) w = P'(0) w, so a vanishing path with P'(0) = 0 decouples entirely.
    trivial = nl.is_zero() || (nl.dP(0.0) == 0.0 && v.data().isZero(0.0));
    if (!trivial) grid.emplace(detail::PaddedGrid::for_degree(v.geometry(), nl.product_factors()));
  }

  // Pointwise coefficients of Df(v): Df(v) w = a1 w + a2 conj(w).
  void coefficients(const CVector& x0, const CVector& x1, double th, CVector& a1, CVector& a2) const {
    for (int j = 0; j < grid->total(); ++j) {
      const cplx z = (1.0 - th) * x0[j] + th * x1[j];
      const double r = std::norm(z);
      const double q = nl.d2P(r);
      a1[j] = nl.dP(r) + q * r;
      a2[j] = q * z * z;
    }
  }
};

LinearizedPropagator::LinearizedPropagator(const FrequencySplit& split, const PotentialPath& v,
                                           const NonlinearitySpec& nl, const LinearizedOptions& options)
    : impl_(std::make_unique<Impl>(split, v, nl, options)) {}

LinearizedPropagator::~LinearizedPropagator() = default;

const PotentialPath& LinearizedPropagator::potential() const { return impl_->v; }
const FrequencySplit& LinearizedPropagator::split() const { return impl_->split; }
bool LinearizedPropagator::trivial_coupling() const { return impl_->trivial; }

void LinearizedPropagator::advance(int j, Eigen::Ref<CMatrix> w, const CMatrix* source0,
                                   const CMatrix* source1) const {
  const Impl& m = *impl_;
  const int n = static_cast<int>(m.mask.size());
  if (j < 0 || j >= m.v.steps()) throw ShapeError("linearized: interval index outside the grid");
  if (w.rows() != n) throw ShapeError("linearized: state rows differ from the mode count");
  if ((source0 == nullptr) != (source1 == nullptr))
    throw ShapeError("linearized: both source nodes are required");
  if (source0 && (source0->rows() != n || source0->cols() != w.cols() || source1->rows() != n ||
                  source1->cols() != w.cols()))
    throw ShapeError("linearized: source shape differs from the state");

  const int k = m.options.substeps;
  const double h = m.v.dt() / k;
  const int mt = m.trivial ? 0 : m.grid->total();

  CVector x0(mt), x1(mt), pad(mt);
  std::array<CVector, 3> a1, a2;
  for (auto& a : a1) a.resize(mt);
  for (auto& a : a2) a.resize(mt);
  if (!m.trivial) {
    const CVector vj = m.v.data().col(j), vj1 = m.v.data().col(j + 1);
    m.grid->to_grid(vj.data(), x0.data());
    m.grid->to_grid(vj1.data(), x1.data());
  }

  CVector k1(n), k2(n), k3(n), k4(n), tmp(n), z(n);
  // N(z) = Q(-i Df(v) z + h) at the stage whose coefficients are in slot s.
  auto rhs = [&](int slot, double th, int col, const CVector& in, CVector& out) {
    if (m.trivial) {
      out.setZero();
    } else {
      m.grid->to_grid(in.data(), pad.data());
      const CVector& b1 = a1[slot];
      const CVector& b2 = a2[slot];
      for (int q = 0; q < mt; ++q) pad[q] = b1[q] * pad[q] + b2[q] * std::conj(pad[q]);
      m.grid->to_coeffs(pad.data(), out.data());
      out *= cplx(0.0, -1.0);
    }
    if (source0) out += (1.0 - th) * source0->col(col) + th * source1->col(col);
    out.array() *= m.mask.array();
  };

  for (int sub = 0; sub < k; ++sub) {
    const double ta = static_cast<double>(sub) / k;
    const double tm = (sub + 0.5) / k;
    const double tb = static_cast<double>(sub + 1) / k;
    if (!m.trivial) {
      m.coefficients(x0, x1, ta, a1[0], a2[0]);
      m.coefficients(x0, x1, tm, a1[1], a2[1]);
      m.coefficients(x0, x1, tb, a1[2], a2[2]);
    }
    for (int c = 0; c < w.cols(); ++c) {
      z = w.col(c);
      rhs(0, ta, c, z, k1);
      tmp = (z + 0.5 * h * k1).cwiseProduct(m.e_half);
      rhs(1, tm, c, tmp, k2);
      tmp = z.cwiseProduct(m.e_half) + 0.5 * h * k2;
      rhs(1, tm, c, tmp, k3);
      tmp = z.cwiseProduct(m.e_full) + h * k3.cwiseProduct(m.e_half);
      rhs(2, tb, c, tmp, k4);
      w.col(c) = z.cwiseProduct(m.e_full) +
                 (h / 6.0) * (k1.cwiseProduct(m.e_full) + 2.0 * (k2 + k3).cwiseProduct(m.e_half) + k4);
    }
  }
}

namespace {

void require_high_band(const SpectralField& w, const FrequencySplit& split) {
  const auto& g = *w.geometry();
  const double scale = w.coeffs().cwiseAbs().maxCoeff();
  for (int f = 0; f < g.total(); ++f)
    if (split.is_low(g, f) && std::abs(w[f]) > 1e-12 * std::max(scale, 1e-300))
      throw PreconditionError("linearized: initial state must lie in the high band");
}

}  // namespace

PotentialPath evolve_with_source(const LinearizedPropagator& prop, const SpectralField& w_s,
                                 const PotentialPath* h) {
  const auto& v = prop.potential();
  require_same_geometry(v.geometry(), w_s.geometry(), "evolve_with_source");
  require_high_band(w_s, prop.split());
  if (h) require_same_grid(v, *h, "evolve_with_source");
  const int n = v.geometry()->total();
  CMatrix out(n, v.node_count());
  CMatrix w = project_high(w_s, prop.split()).coeffs();
  out.col(0) = w;
  CMatrix s0(n, 1), s1(n, 1);
  for (int j = 0; j < v.steps(); ++j) {
    if (h) {
      s0 = h->data().col(j);
      s1 = h->data().col(j + 1);
      prop.advance(j, w, &s0, &s1);
    } else {
      prop.advance(j, w);
    }
    out.col(j + 1) = w;
  }
  return PotentialPath(v.geometry(), v.start(), v.dt(), std::move(out));
}

PotentialPath evolve_with_source(const FrequencySplit& split, const PotentialPath& v,
                                 const SpectralField& w_s, const PotentialPath& h,
                                 const NonlinearitySpec& nl, const LinearizedOptions& options) {
  LinearizedPropagator prop(split, v, nl, options);
  return evolve_with_source(prop, w_s, &h);
}

PotentialPath evolve_linearized(const FrequencySplit& split, const PotentialPath& v,
                                const SpectralField& w_s, double s, const NonlinearitySpec& nl,
                                const LinearizedOptions& options) {
  const int js = v.node_of(s);
  if (js < 0 || js >= v.steps()) throw ShapeError("evolve_linearized: start time is not an interior grid node");
  require_same_geometry(v.geometry(), w_s.geometry(), "evolve_linearized");
  require_high_band(w_s, split);
  if (js == 0) {
    LinearizedPropagator prop(split, v, nl, options);
    return evolve_with_source(prop, w_s, nullptr);
  }
  CMatrix tail = v.data().rightCols(v.node_count() - js);
  PotentialPath sub(v.geometry(), v.time(js), v.dt(), std::move(tail));
  LinearizedPropagator prop(split, sub, nl, options);
  return evolve_with_source(prop, w_s, nullptr);
}

}  // namespace nlsobs
