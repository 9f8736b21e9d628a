#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <numbers>
#include <memory>
#include <string>
#include <vector>

#include "nlsobs/types.hpp"

namespace nlsobs {

// Flat torus prod_i [0, L_i) with an N_1 (x N_2) Fourier truncation.
//
// Coefficients are stored in FFT order, row-major over axes: axis-0 index
// i_0 is the slow one. Wavenumbers lie in [-N/2, N/2 - 1].
class TorusGeometry {
 public:
  TorusGeometry(std::vector<double> lengths, std::vector<int> sizes);

  static std::shared_ptr<const TorusGeometry> create(std::vector<double> lengths,
                                                     std::vector<int> sizes);
  static std::shared_ptr<const TorusGeometry> circle(int n, double length = 2.0 * std::numbers::pi);

  int dim() const { return dim_; }
  double length(int axis) const { return lengths_[axis]; }
  int size(int axis) const { return sizes_[axis]; }
  int total() const { return total_; }
  double volume() const { return volume_; }

  std::array<int, 2> wavenumber(int flat) const { return wavenumbers_[flat]; }
  double eigenvalue(int flat) const { return eigenvalues_[flat]; }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

  // Rank order: ascending eigenvalue, ties broken lexicographically in k.
  int flat_at_rank(int rank) const { return by_rank_[rank]; }
  int rank_of(int flat) const { return rank_[flat]; }

  // Flat index of a wavenumber, or -1 when it is not represented.
  int flat_index(std::array<int, 2> k) const;
  std::array<double, 2> grid_point(int flat) const;

  bool operator==(const TorusGeometry& other) const;
  std::string describe() const;

 private:
  int dim_;
  std::array<double, 2> lengths_{1.0, 1.0};
  std::array<int, 2> sizes_{1, 1};
  int total_;
  double volume_;
  std::vector<std::array<int, 2>> wavenumbers_;
  std::vector<double> eigenvalues_;
  std::vector<int> by_rank_;
  std::vector<int> rank_;
};

using GeometryPtr = std::shared_ptr<const TorusGeometry>;

bool same_geometry(const GeometryPtr& a, const GeometryPtr& b);
void require_same_geometry(const GeometryPtr& a, const GeometryPtr& b, const char* where);

// Coefficients u_k against the L2-orthonormal basis e^{i k.(2 pi/L) x}/sqrt(vol).
class SpectralField {
 public:
  explicit SpectralField(GeometryPtr geometry);
  SpectralField(GeometryPtr geometry, CVector coeffs);

  static SpectralField mode(GeometryPtr geometry, std::array<int, 2> k, cplx amplitude = 1.0);

  const GeometryPtr& geometry() const { return geometry_; }
  const CVector& coeffs() const { return coeffs_; }
  cplx operator[](int flat) const { return coeffs_[flat]; }
  int size() const { return static_cast<int>(coeffs_.size()); }

  SpectralField operator+(const SpectralField& o) const;
  SpectralField operator-(const SpectralField& o) const;
  SpectralField operator*(cplx a) const;
  friend SpectralField operator*(cplx a, const SpectralField& u) { return u * a; }

 private:
  GeometryPtr geometry_;
  CVector coeffs_;
};

class SobolevScale {
 public:
  explicit SobolevScale(double s = 0.0);
  double exponent() const { return s_; }
  double weight(double lambda) const;  // (1 + lambda)^s
  RVector weights(const TorusGeometry& g) const;
  RVector half_weights(const TorusGeometry& g) const;  // (1 + lambda)^{s/2}

 private:
  double s_;
};

class FrequencySplit {
 public:
  explicit FrequencySplit(int n = 0) : n_(n) {}
  int rank() const { return n_; }
  void validate(const TorusGeometry& g) const;
  bool is_low(const TorusGeometry& g, int flat) const { return g.rank_of(flat) < n_; }
  // Flat indices of the high band, in rank order.
  std::vector<int> high_modes(const TorusGeometry& g) const;
  std::vector<int> low_modes(const TorusGeometry& g) const;
  // 1.0 on the high band, 0.0 on the low band.
  RVector high_mask(const TorusGeometry& g) const;

 private:
  int n_;
};

// Periodic interval on one axis; `full` covers the whole circle.
struct AxisInterval {
  bool full = true;
  double lo = 0.0;
  double hi = 0.0;

  static AxisInterval whole() { return {}; }
  static AxisInterval range(double lo, double hi) { return {false, lo, hi}; }
};

// A box is a product of axis intervals: the support set and a plateau inside it.
struct WindowBox {
  std::vector<AxisInterval> support;
  std::vector<AxisInterval> plateau;
};

// Grid samples of a smooth cutoff b with b = 1 on the plateau union and
// b = 0 outside the support union.
class ObservationWindow {
 public:
  static ObservationWindow from_boxes(GeometryPtr geometry, std::vector<WindowBox> boxes);
  static ObservationWindow everywhere(GeometryPtr geometry);
  static ObservationWindow nowhere(GeometryPtr geometry);
  // Interval [lo, hi) on axis 0 (whole extent on other axes) with a centred
  // plateau covering `plateau_fraction` of its length.
  static ObservationWindow slab(GeometryPtr geometry, double lo, double hi,
                                double plateau_fraction = 0.5, int axis = 0);

  const GeometryPtr& geometry() const { return geometry_; }
  const RVector& samples() const { return samples_; }
  const std::vector<WindowBox>& boxes() const { return boxes_; }
  bool empty() const { return boxes_.empty(); }
  double value(const std::array<double, 2>& x) const;  // b at an arbitrary point
  // Upper-triangular R with R^* R = C^* (1 - Laplacian)^s C on the grid's modes, where
  // C u = b u is formed on a refined grid so the product does not alias. Cached per s.
  const CMatrix& observation_factor(double s) const;
  bool in_plateau(const std::array<double, 2>& x) const;
  bool in_support(const std::array<double, 2>& x) const;
  std::string describe() const;

 private:
  ObservationWindow(GeometryPtr geometry, std::vector<WindowBox> boxes);
  struct FactorCache;
  GeometryPtr geometry_;
  std::vector<WindowBox> boxes_;
  RVector samples_;
  std::shared_ptr<FactorCache> factors_;
};

// Smooth step: 0 for t <= 0, 1 for t >= 1, C-infinity in between.
double smooth_step(double t);

SpectralField to_spectral(const CVector& samples, const GeometryPtr& geometry);
CVector to_physical(const SpectralField& u);

cplx sobolev_inner(const SpectralField& u, const SpectralField& v, const SobolevScale& s);
double real_inner(const SpectralField& u, const SpectralField& v, const SobolevScale& s);
double sobolev_norm(const SpectralField& u, const SobolevScale& s);

SpectralField apply_multiplier(const SpectralField& u, double s);
SpectralField project_low(const SpectralField& u, const FrequencySplit& split);
SpectralField project_high(const SpectralField& u, const FrequencySplit& split);
SpectralField observe(const SpectralField& u, const ObservationWindow& w);

struct GccSampling {
  std::size_t positions = 100;
  std::size_t directions = 100;  // 2-D only; rounded up to a multiple of 4
  std::uint64_t seed = 0;
};

struct Ray {
  std::array<double, 2> origin{0.0, 0.0};
  std::array<double, 2> direction{1.0, 0.0};
};

struct GccReport {
  bool passed = false;
  double horizon = 0.0;
  std::size_t rays_tested = 0;
  std::size_t rays_failed = 0;
  Ray worst_ray;
  // First time the worst ray is inside the plateau; +inf if never within the horizon.
  double worst_entry_time = std::numeric_limits<double>::infinity();
};

GccReport gcc_ray_check(const ObservationWindow& w, double T0, const GccSampling& sampling);

}  // namespace nlsobs
