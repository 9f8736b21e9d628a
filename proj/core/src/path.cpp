#include <algorithm>
#include <cmath>

#include "nlsobs/dynamics.hpp"
#include "nlsobs/errors.hpp"

namespace nlsobs {

PotentialPath::PotentialPath(GeometryPtr geometry, double start, double dt, CMatrix nodes)
    : geometry_(std::move(geometry)), start_(start), dt_(dt), nodes_(std::move(nodes)) {
  if (nodes_.cols() < 2) throw ShapeError("path: at least two time nodes are required");
  if (nodes_.rows() != geometry_->total()) throw ShapeError("path: row count differs from the mode count");
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw ShapeError("path: time step must be positive");
}

PotentialPath PotentialPath::zeros(GeometryPtr geometry, double start, double dt, int steps) {
  const int n = geometry->total();
  return PotentialPath(std::move(geometry), start, dt, CMatrix::Zero(n, steps + 1));
}

PotentialPath PotentialPath::constant(const SpectralField& u, double start, double dt, int steps) {
  CMatrix m = u.coeffs().replicate(1, steps + 1);
  return PotentialPath(u.geometry(), start, dt, std::move(m));
}

SpectralField PotentialPath::at(int j) const { return SpectralField(geometry_, nodes_.col(j)); }

CVector PotentialPath::interpolate(double t) const {
  const double x = (t - start_) / dt_;
  if (x < -1e-9 || x > steps() + 1e-9) throw ShapeError("path: interpolation time outside the grid");
  int j = static_cast<int>(std::floor(x));
  j = std::clamp(j, 0, steps() - 1);
  const double th = std::clamp(x - j, 0.0, 1.0);
  return (1.0 - th) * nodes_.col(j) + th * nodes_.col(j + 1);
}

int PotentialPath::node_of(double t) const {
  const double x = (t - start_) / dt_;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 || r < 0 || r > steps()) return -1;
  return static_cast<int>(r);
}

bool PotentialPath::same_grid(const PotentialPath& o) const {
  return same_geometry(geometry_, o.geometry_) && node_count() == o.node_count() &&
         std::abs(start_ - o.start_) <= 1e-12 * std::max(1.0, std::abs(start_)) &&
         std::abs(dt_ - o.dt_) <= 1e-12 * dt_;
}

PotentialPath PotentialPath::operator+(const PotentialPath& o) const {
  require_same_grid(*this, o, "path sum");
  return PotentialPath(geometry_, start_, dt_, nodes_ + o.nodes_);
}

PotentialPath PotentialPath::operator-(const PotentialPath& o) const {
  require_same_grid(*this, o, "path difference");
  return PotentialPath(geometry_, start_, dt_, nodes_ - o.nodes_);
}

PotentialPath PotentialPath::operator*(double a) const {
  return PotentialPath(geometry_, start_, dt_, nodes_ * a);
}

void require_same_grid(const PotentialPath& a, const PotentialPath& b, const char* where) {
  if (!a.same_grid(b)) throw ShapeError(std::string(where) + ": time grids differ");
}

namespace {

RVector node_norms(const PotentialPath& u, const SobolevScale& s) {
  const RVector w = s.weights(*u.geometry());
  RVector out(u.node_count());
  for (int j = 0; j < u.node_count(); ++j)
    out[j] = std::sqrt((w.array() * u.data().col(j).array().abs2()).sum());
  return out;
}

}  // namespace

double sup_norm(const PotentialPath& u, const SobolevScale& s) { return node_norms(u, s).maxCoeff(); }

double l1_norm(const PotentialPath& u, const SobolevScale& s) {
  const RVector n = node_norms(u, s);
  return u.dt() * (n.sum() - 0.5 * (n[0] + n[n.size() - 1]));
}

double l2_norm(const PotentialPath& u, const SobolevScale& s) {
  const RVector n = node_norms(u, s).array().square();
  return std::sqrt(u.dt() * (n.sum() - 0.5 * (n[0] + n[n.size() - 1])));
}

PotentialPath project_low(const PotentialPath& u, const FrequencySplit& split) {
  const RVector mask = split.high_mask(*u.geometry());
  CMatrix m = u.data();
  for (int f = 0; f < m.rows(); ++f)
    if (mask[f] != 0.0) m.row(f).setZero();
  return PotentialPath(u.geometry(), u.start(), u.dt(), std::move(m));
}

PotentialPath project_high(const PotentialPath& u, const FrequencySplit& split) {
  const RVector mask = split.high_mask(*u.geometry());
  CMatrix m = u.data();
  for (int f = 0; f < m.rows(); ++f)
    if (mask[f] == 0.0) m.row(f).setZero();
  return PotentialPath(u.geometry(), u.start(), u.dt(), std::move(m));
}

}  // namespace nlsobs
