#include "nlsobs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fft.hpp"
#include "nlsobs/errors.hpp"

namespace nlsobs {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

TorusGeometry::TorusGeometry(std::vector<double> lengths, std::vector<int> sizes) {
  if (lengths.size() != sizes.size() || sizes.empty() || sizes.size() > 2)
    throw ShapeError("torus: dimension must be 1 or 2 with one length per axis");
  dim_ = static_cast<int>(sizes.size());
  total_ = 1;
  volume_ = 1.0;
  for (int a = 0; a < dim_; ++a) {
    if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a]))
      throw ShapeError("torus: side lengths must be positive");
    if (!is_pow2(sizes[a])) throw ShapeError("torus: grid sizes must be powers of two");
    lengths_[a] = lengths[a];
    sizes_[a] = sizes[a];
    total_ *= sizes[a];
    volume_ *= lengths[a];
  }
  if (total_ < 4) throw ShapeError("torus: at least 4 modes are required");

  wavenumbers_.resize(total_);
  eigenvalues_.resize(total_);
  for (int f = 0; f < total_; ++f) {
    std::array<int, 2> idx{f / sizes_[1], f % sizes_[1]};
    if (dim_ == 1) idx = {f, 0};
    std::array<int, 2> k{0, 0};
    double lam = 0.0;
    for (int a = 0; a < dim_; ++a) {
      k[a] = idx[a] < sizes_[a] / 2 ? idx[a] : idx[a] - sizes_[a];
      const double q = 2.0 * std::numbers::pi * k[a] / lengths_[a];
      lam += q * q;
    }
    wavenumbers_[f] = k;
    eigenvalues_[f] = lam;
  }
  by_rank_.resize(total_);
  std::iota(by_rank_.begin(), by_rank_.end(), 0);
  std::sort(by_rank_.begin(), by_rank_.end(), [&](int a, int b) {
    if (eigenvalues_[a] != eigenvalues_[b]) return eigenvalues_[a] < eigenvalues_[b];
    return wavenumbers_[a] < wavenumbers_[b];
  });
  rank_.resize(total_);
  for (int r = 0; r < total_; ++r) rank_[by_rank_[r]] = r;
}

std::shared_ptr<const TorusGeometry> TorusGeometry::create(std::vector<double> lengths,
                                                           std::vector<int> sizes) {
  return std::make_shared<const TorusGeometry>(std::move(lengths), std::move(sizes));
}

std::shared_ptr<const TorusGeometry> TorusGeometry::circle(int n, double length) {
  return create({length}, {n});
}

int TorusGeometry::flat_index(std::array<int, 2> k) const {
  int flat = 0;
  for (int a = 0; a < dim_; ++a) {
    const int n = sizes_[a];
    if (k[a] < -n / 2 || k[a] >= n / 2) return -1;
    const int i = k[a] < 0 ? k[a] + n : k[a];
    flat = a == 0 ? i : flat * n + i;
  }
  return flat;
}

std::array<double, 2> TorusGeometry::grid_point(int flat) const {
  if (dim_ == 1) return {lengths_[0] * flat / sizes_[0], 0.0};
  const int i0 = flat / sizes_[1], i1 = flat % sizes_[1];
  return {lengths_[0] * i0 / sizes_[0], lengths_[1] * i1 / sizes_[1]};
}

bool TorusGeometry::operator==(const TorusGeometry& o) const {
  return dim_ == o.dim_ && lengths_ == o.lengths_ && sizes_ == o.sizes_;
}

std::string TorusGeometry::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "torus d=" << dim_;
  for (int a = 0; a < dim_; ++a) os << " L" << a << "=" << lengths_[a] << " N" << a << "=" << sizes_[a];
  return os.str();
}

bool same_geometry(const GeometryPtr& a, const GeometryPtr& b) {
  return a == b || (a && b && *a == *b);
}

void require_same_geometry(const GeometryPtr& a, const GeometryPtr& b, const char* where) {
  if (!same_geometry(a, b)) throw ShapeError(std::string(where) + ": geometry mismatch");
}

SpectralField::SpectralField(GeometryPtr geometry)
    : geometry_(std::move(geometry)), coeffs_(CVector::Zero(geometry_->total())) {}

SpectralField::SpectralField(GeometryPtr geometry, CVector coeffs)
    : geometry_(std::move(geometry)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != geometry_->total())
    throw ShapeError("spectral field: coefficient count differs from the mode count");
  if (!coeffs_.allFinite()) throw ShapeError("spectral field: non-finite coefficient");
}

SpectralField SpectralField::mode(GeometryPtr geometry, std::array<int, 2> k, cplx amplitude) {
  const int f = geometry->flat_index(k);
  if (f < 0) throw ShapeError("spectral field: wavenumber outside the truncation");
  CVector c = CVector::Zero(geometry->total());
  c[f] = amplitude;
  return SpectralField(std::move(geometry), std::move(c));
}

SpectralField SpectralField::operator+(const SpectralField& o) const {
  require_same_geometry(geometry_, o.geometry_, "field sum");
  return SpectralField(geometry_, coeffs_ + o.coeffs_);
}

SpectralField SpectralField::operator-(const SpectralField& o) const {
  require_same_geometry(geometry_, o.geometry_, "field difference");
  return SpectralField(geometry_, coeffs_ - o.coeffs_);
}

SpectralField SpectralField::operator*(cplx a) const { return SpectralField(geometry_, coeffs_ * a); }

SobolevScale::SobolevScale(double s) : s_(s) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw PreconditionError("sobolev exponent must be >= 0");
}

double SobolevScale::weight(double lambda) const { return std::pow(1.0 + lambda, s_); }

RVector SobolevScale::weights(const TorusGeometry& g) const {
  RVector w(g.total());
  for (int f = 0; f < g.total(); ++f) w[f] = weight(g.eigenvalue(f));
  return w;
}

RVector SobolevScale::half_weights(const TorusGeometry& g) const {
  RVector w(g.total());
  for (int f = 0; f < g.total(); ++f) w[f] = std::pow(1.0 + g.eigenvalue(f), 0.5 * s_);
  return w;
}

void FrequencySplit::validate(const TorusGeometry& g) const {
  if (n_ < 0 || n_ > g.total()) throw PreconditionError("frequency split rank outside [0, N_tot]");
}

std::vector<int> FrequencySplit::high_modes(const TorusGeometry& g) const {
  validate(g);
  std::vector<int> out;
  for (int r = n_; r < g.total(); ++r) out.push_back(g.flat_at_rank(r));
  return out;
}

std::vector<int> FrequencySplit::low_modes(const TorusGeometry& g) const {
  validate(g);
  std::vector<int> out;
  for (int r = 0; r < n_; ++r) out.push_back(g.flat_at_rank(r));
  return out;
}

RVector FrequencySplit::high_mask(const TorusGeometry& g) const {
  validate(g);
  RVector m(g.total());
  for (int f = 0; f < g.total(); ++f) m[f] = is_low(g, f) ? 0.0 : 1.0;
  return m;
}

SpectralField to_spectral(const CVector& samples, const GeometryPtr& geometry) {
  if (samples.size() != geometry->total())
    throw ShapeError("to_spectral: sample count differs from the grid size");
  CVector work = samples;
  CVector c(geometry->total());
  detail::grid_to_coeffs(*geometry, work.data(), c.data());
  return SpectralField(geometry, std::move(c));
}

CVector to_physical(const SpectralField& u) {
  CVector x(u.size());
  detail::coeffs_to_grid(*u.geometry(), u.coeffs().data(), x.data());
  return x;
}

cplx sobolev_inner(const SpectralField& u, const SpectralField& v, const SobolevScale& s) {
  require_same_geometry(u.geometry(), v.geometry(), "sobolev_inner");
  const RVector w = s.weights(*u.geometry());
  cplx acc = 0.0;
  for (int f = 0; f < u.size(); ++f) acc += w[f] * u[f] * std::conj(v[f]);
  return acc;
}

double real_inner(const SpectralField& u, const SpectralField& v, const SobolevScale& s) {
  return sobolev_inner(u, v, s).real();
}

double sobolev_norm(const SpectralField& u, const SobolevScale& s) {
  const RVector w = s.weights(*u.geometry());
  return std::sqrt((w.array() * u.coeffs().array().abs2()).sum());
}

SpectralField apply_multiplier(const SpectralField& u, double s) {
  const RVector w = SobolevScale(std::abs(s)).half_weights(*u.geometry());
  CVector c = u.coeffs();
  if (s >= 0.0)
    c.array() *= w.array();
  else
    c.array() /= w.array();
  return SpectralField(u.geometry(), std::move(c));
}

SpectralField project_low(const SpectralField& u, const FrequencySplit& split) {
  const auto& g = *u.geometry();
  split.validate(g);
  CVector c = u.coeffs();
  for (int f = 0; f < g.total(); ++f)
    if (!split.is_low(g, f)) c[f] = 0.0;
  return SpectralField(u.geometry(), std::move(c));
}

SpectralField project_high(const SpectralField& u, const FrequencySplit& split) {
  const auto& g = *u.geometry();
  split.validate(g);
  CVector c = u.coeffs();
  for (int f = 0; f < g.total(); ++f)
    if (split.is_low(g, f)) c[f] = 0.0;
  return SpectralField(u.geometry(), std::move(c));
}

SpectralField observe(const SpectralField& u, const ObservationWindow& w) {
  require_same_geometry(u.geometry(), w.geometry(), "observe");
  CVector x = to_physical(u);
  x.array() *= w.samples().array();
  return to_spectral(x, u.geometry());
}

}  // namespace nlsobs
