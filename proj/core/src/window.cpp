#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include <Eigen/QR>

#include "nlsobs/errors.hpp"
#include "nlsobs/spectral.hpp"

namespace nlsobs {

namespace {

double psi(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

double wrap(double x, double L) {
  double y = std::fmod(x, L);
  if (y < 0.0) y += L;
  return y;
}

void validate_box(const TorusGeometry& g, const WindowBox& box) {
  if (static_cast<int>(box.support.size()) != g.dim() ||
      static_cast<int>(box.plateau.size()) != g.dim())
    throw ShapeError("window box: need one support and one plateau interval per axis");
  for (int a = 0; a < g.dim(); ++a) {
    const auto& s = box.support[a];
    const auto& p = box.plateau[a];
    if (s.full) continue;
    if (!(s.hi > s.lo) || s.hi - s.lo > g.length(a))
      throw ShapeError("window box: support interval must satisfy lo < hi <= lo + L");
    if (p.full || p.lo < s.lo || p.hi > s.hi || p.hi < p.lo)
      throw ShapeError("window box: plateau must lie inside the support interval");
  }
}

// Profile of one axis factor at coordinate x.
double axis_profile(const AxisInterval& s, const AxisInterval& p, double x, double L) {
  if (s.full) return 1.0;
  const double y = wrap(x - s.lo, L);
  const double width = s.hi - s.lo;
  if (y <= 0.0 || y >= width) return 0.0;
  const double rise_len = p.lo - s.lo;
  const double fall_len = s.hi - p.hi;
  const double rise = rise_len > 0.0 ? smooth_step(y / rise_len) : 1.0;
  const double fall = fall_len > 0.0 ? smooth_step((width - y) / fall_len) : 1.0;
  return rise * fall;
}

bool axis_contains(const AxisInterval& iv, bool support_full, double x, double L, bool open) {
  if (iv.full || support_full) return true;
  const double y = wrap(x - iv.lo, L);
  const double width = iv.hi - iv.lo;
  return open ? (y > 0.0 && y < width) : y <= width;
}

}  // namespace

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = psi(t), b = psi(1.0 - t);
  return a / (a + b);
}

struct ObservationWindow::FactorCache {
  std::mutex mutex;
  std::map<double, CMatrix> by_exponent;
};

ObservationWindow::ObservationWindow(GeometryPtr geometry, std::vector<WindowBox> boxes)
    : geometry_(std::move(geometry)), boxes_(std::move(boxes)), factors_(std::make_shared<FactorCache>()) {
  const auto& g = *geometry_;
  for (const auto& b : boxes_) validate_box(g, b);
  samples_ = RVector::Zero(g.total());
  for (int f = 0; f < g.total(); ++f) samples_[f] = value(g.grid_point(f));
}

double ObservationWindow::value(const std::array<double, 2>& x) const {
  const auto& g = *geometry_;
  double miss = 1.0;
  for (const auto& b : boxes_) {
    double v = 1.0;
    for (int a = 0; a < g.dim(); ++a) v *= axis_profile(b.support[a], b.plateau[a], x[a], g.length(a));
    miss *= 1.0 - v;
  }
  return 1.0 - miss;
}

const CMatrix& ObservationWindow::observation_factor(double s) const {
  std::lock_guard<std::mutex> lock(factors_->mutex);
  auto it = factors_->by_exponent.find(s);
  if (it != factors_->by_exponent.end()) return it->second;

  const auto& g = *geometry_;
  // The window spectrum decays slower than any exponential; 32x resolves it in 1D.
  const int pad = g.dim() == 1 ? 32 : 2;
  std::vector<double> lengths;
  std::vector<int> sizes;
  for (int a = 0; a < g.dim(); ++a) {
    lengths.push_back(g.length(a));
    sizes.push_back(pad * g.size(a));
  }
  const GeometryPtr fine = TorusGeometry::create(lengths, sizes);
  RVector b(fine->total());
  for (int f = 0; f < fine->total(); ++f) b[f] = value(fine->grid_point(f));
  const RVector hw = SobolevScale(s).half_weights(*fine);

  CMatrix B(fine->total(), g.total());
  for (int f = 0; f < g.total(); ++f) {
    CVector x = to_physical(SpectralField::mode(fine, g.wavenumber(f)));
    x.array() *= b.array();
    B.col(f) = hw.cast<cplx>().cwiseProduct(to_spectral(x, fine).coeffs());
  }
  Eigen::HouseholderQR<CMatrix> qr(B);
  CMatrix R = qr.matrixQR().topRows(g.total()).triangularView<Eigen::Upper>();
  return factors_->by_exponent.emplace(s, std::move(R)).first->second;
}

ObservationWindow ObservationWindow::from_boxes(GeometryPtr geometry, std::vector<WindowBox> boxes) {
  return ObservationWindow(std::move(geometry), std::move(boxes));
}

ObservationWindow ObservationWindow::everywhere(GeometryPtr geometry) {
  WindowBox b;
  b.support.assign(geometry->dim(), AxisInterval::whole());
  b.plateau.assign(geometry->dim(), AxisInterval::whole());
  return ObservationWindow(std::move(geometry), {b});
}

ObservationWindow ObservationWindow::nowhere(GeometryPtr geometry) {
  return ObservationWindow(std::move(geometry), {});
}

ObservationWindow ObservationWindow::slab(GeometryPtr geometry, double lo, double hi,
                                          double plateau_fraction, int axis) {
  if (axis < 0 || axis >= geometry->dim()) throw ShapeError("window slab: axis out of range");
  if (!(plateau_fraction >= 0.0 && plateau_fraction <= 1.0))
    throw ShapeError("window slab: plateau fraction must lie in [0, 1]");
  WindowBox b;
  b.support.assign(geometry->dim(), AxisInterval::whole());
  b.plateau.assign(geometry->dim(), AxisInterval::whole());
  const double mid = 0.5 * (lo + hi), half = 0.5 * plateau_fraction * (hi - lo);
  b.support[axis] = AxisInterval::range(lo, hi);
  b.plateau[axis] = AxisInterval::range(mid - half, mid + half);
  return ObservationWindow(std::move(geometry), {b});
}

bool ObservationWindow::in_plateau(const std::array<double, 2>& x) const {
  const auto& g = *geometry_;
  for (const auto& b : boxes_) {
    bool inside = true;
    for (int a = 0; a < g.dim() && inside; ++a)
      inside = axis_contains(b.plateau[a], b.support[a].full, x[a], g.length(a), false);
    if (inside) return true;
  }
  return false;
}

bool ObservationWindow::in_support(const std::array<double, 2>& x) const {
  const auto& g = *geometry_;
  for (const auto& b : boxes_) {
    bool inside = true;
    for (int a = 0; a < g.dim() && inside; ++a)
      inside = axis_contains(b.support[a], false, x[a], g.length(a), true);
    if (inside) return true;
  }
  return false;
}

std::string ObservationWindow::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "window boxes=" << boxes_.size();
  for (const auto& b : boxes_) {
    os << " [";
    for (std::size_t a = 0; a < b.support.size(); ++a) {
      const auto& s = b.support[a];
      const auto& p = b.plateau[a];
      if (s.full)
        os << " full";
      else
        os << " (" << s.lo << "," << s.hi << ";" << p.lo << "," << p.hi << ")";
    }
    os << " ]";
  }
  return os.str();
}

}  // namespace nlsobs
