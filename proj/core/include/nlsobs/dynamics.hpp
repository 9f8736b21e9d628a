#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "nlsobs/spectral.hpp"

namespace nlsobs {

// f(u) = P'(|u|^2) u with P'(r) = sum_j c_j r^j and P(0) = 0.
class NonlinearitySpec {
 public:
  NonlinearitySpec() = default;  // f = 0
  // coefficients[j] multiplies r^j; coefficients[0] is the (optional) constant.
  explicit NonlinearitySpec(std::vector<double> coefficients, bool defocusing = false);

  static NonlinearitySpec cubic(double c = 1.0);  // P'(r) = c r, defocusing when c > 0
  static NonlinearitySpec none() { return {}; }

  const std::vector<double>& coefficients() const { return c_; }
  bool defocusing() const { return defocusing_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 when f = 0
  bool is_zero() const { return c_.empty(); }
  // Number of band-limited factors in f(u): 2 deg + 1.
  int product_factors() const { return is_zero() ? 1 : 2 * degree() + 1; }

  double dP(double r) const;
  double d2P(double r) const;
  double P(double r) const;

 private:
  std::vector<double> c_;
  bool defocusing_ = false;
};

// Uniform time grid t_j = start + j dt, j = 0..steps, one coefficient vector per node.
class PotentialPath {
 public:
  PotentialPath(GeometryPtr geometry, double start, double dt, CMatrix nodes);
  static PotentialPath zeros(GeometryPtr geometry, double start, double dt, int steps);
  static PotentialPath constant(const SpectralField& u, double start, double dt, int steps);

  const GeometryPtr& geometry() const { return geometry_; }
  double start() const { return start_; }
  double dt() const { return dt_; }
  int steps() const { return static_cast<int>(nodes_.cols()) - 1; }
  int node_count() const { return static_cast<int>(nodes_.cols()); }
  double time(int j) const { return start_ + dt_ * j; }
  double end() const { return time(steps()); }

  const CMatrix& data() const { return nodes_; }
  CMatrix& mutable_data() { return nodes_; }
  SpectralField at(int j) const;
  // Piecewise-linear in the coefficients.
  CVector interpolate(double t) const;
  // Node index of time t, or -1 when t is not on the grid.
  int node_of(double t) const;
  bool same_grid(const PotentialPath& o) const;

  PotentialPath operator+(const PotentialPath& o) const;
  PotentialPath operator-(const PotentialPath& o) const;
  PotentialPath operator*(double a) const;

 private:
  GeometryPtr geometry_;
  double start_;
  double dt_;
  CMatrix nodes_;
};

void require_same_grid(const PotentialPath& a, const PotentialPath& b, const char* where);

// max_j ||u(t_j)||_{H^s}
double sup_norm(const PotentialPath& u, const SobolevScale& s);
// Trapezoid quadrature of ||u(t)||_{H^s} (p = 1) or its square root for p = 2.
double l1_norm(const PotentialPath& u, const SobolevScale& s);
double l2_norm(const PotentialPath& u, const SobolevScale& s);
PotentialPath project_low(const PotentialPath& u, const FrequencySplit& split);
PotentialPath project_high(const PotentialPath& u, const FrequencySplit& split);

SpectralField eval_f(const SpectralField& u, const NonlinearitySpec& nl);
SpectralField eval_df(const SpectralField& v, const SpectralField& w, const NonlinearitySpec& nl);
// H(v, w) = int_0^1 [Df(v + tau w) - Df(v)] w dtau.
SpectralField eval_h(const SpectralField& v, const SpectralField& w, const NonlinearitySpec& nl);
// Path versions, node by node.
PotentialPath eval_f(const PotentialPath& u, const NonlinearitySpec& nl);
PotentialPath eval_h(const PotentialPath& v, const PotentialPath& w, const NonlinearitySpec& nl);

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre01(int count, std::vector<double>& nodes, std::vector<double>& weights);

// e^{tA} with A = i Laplacian: u_k -> e^{-i lambda_k t} u_k.
SpectralField linear_propagator(const SpectralField& u, double t);

struct NlsOptions {
  int record_stride = 1;       // keep every stride-th step
  double blowup_limit = 1e6;   // sup-norm guard
};

// Strang splitting: half linear phase, exact pointwise phase rotation
// u e^{-i P'(|u|^2) dt} on the padded grid, half linear phase.
PotentialPath evolve_nls(const SpectralField& u0, const NonlinearitySpec& nl, double T, double dt,
                         const NlsOptions& options = {});

struct LinearizedOptions {
  int substeps = 1;  // Lawson RK4 steps per grid interval
};

// Integrates dw/dt = A w + Q_n(-i Df(v(t)) w) + Q_n h(t) (the last term optional)
// with a Lawson RK4 scheme, advancing blocks of columns together.
class LinearizedPropagator {
 public:
  LinearizedPropagator(const FrequencySplit& split, const PotentialPath& v,
                       const NonlinearitySpec& nl, const LinearizedOptions& options = {});
  ~LinearizedPropagator();
  LinearizedPropagator(const LinearizedPropagator&) = delete;
  LinearizedPropagator& operator=(const LinearizedPropagator&) = delete;

  // Advance every column of `w` (N_tot x c) from node j to j + 1. Optional
  // sources are node values at j and j + 1 (same shape as w), interpolated linearly.
  void advance(int j, Eigen::Ref<CMatrix> w, const CMatrix* source0 = nullptr,
               const CMatrix* source1 = nullptr) const;

  const PotentialPath& potential() const;
  const FrequencySplit& split() const;
  bool trivial_coupling() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// S_n(v)(t, s) w_s on the nodes t >= s of v's grid.
PotentialPath evolve_linearized(const FrequencySplit& split, const PotentialPath& v,
                                const SpectralField& w_s, double s, const NonlinearitySpec& nl,
                                const LinearizedOptions& options = {});
// Duhamel solution with source h, starting from v.start().
PotentialPath evolve_with_source(const FrequencySplit& split, const PotentialPath& v,
                                 const SpectralField& w_s, const PotentialPath& h,
                                 const NonlinearitySpec& nl, const LinearizedOptions& options = {});
// Same, reusing a prepared propagator.
PotentialPath evolve_with_source(const LinearizedPropagator& prop, const SpectralField& w_s,
                                 const PotentialPath* h);

struct DampingSpec {
  GeometryPtr geometry;
  RVector a;  // real grid samples

  static DampingSpec from_window(const ObservationWindow& w, double amplitude);
  static DampingSpec none(GeometryPtr geometry);
};

struct DampedTrajectory {
  PotentialPath path;
  std::vector<double> times;     // every step
  std::vector<double> h1_norms;  // every step
};

// i u_t + Lap u - a (1 - Lap)^{-1} a u_t = P'(|u|^2) u, rearranged as
// u_t = (i - B)^{-1}(-Lap u + f(u)) and integrated with classical RK4.
DampedTrajectory evolve_damped(const SpectralField& u0, const NonlinearitySpec& nl,
                               const DampingSpec& damping, double T, double dt,
                               int record_stride = 1);

struct ConservedQuantities {
  double mass = 0.0;
  double energy = 0.0;
};

ConservedQuantities conserved_quantities(const SpectralField& u, const NonlinearitySpec& nl);

}  // namespace nlsobs
