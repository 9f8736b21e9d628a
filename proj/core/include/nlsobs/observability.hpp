#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlsobs/dynamics.hpp"

namespace nlsobs {

// Composite trapezoid weights on `nodes` equally spaced points; they sum to (nodes - 1) dt.
std::vector<double> trapezoid_weights(int nodes, double dt);

// Observations of a path on its time grid, stored whitened: column j is R u(t_j)
// with R = window.observation_factor(s), so its Euclidean norm is ||b u(t_j)||_{H^s}.
class ObservedTrace {
 public:
  ObservedTrace(GeometryPtr geometry, double start, double dt, CMatrix nodes);
  static ObservedTrace of(const PotentialPath& u, const ObservationWindow& w, const SobolevScale& s);
  static ObservedTrace zeros(GeometryPtr geometry, double start, double dt, int steps);

  const GeometryPtr& geometry() const { return path_.geometry(); }
  double start() const { return path_.start(); }
  double dt() const { return path_.dt(); }
  int node_count() const { return path_.node_count(); }
  double duration() const { return path_.end() - path_.start(); }
  const CMatrix& data() const { return path_.data(); }
  const std::vector<double>& weights() const { return weights_; }
  const PotentialPath& as_path() const { return path_; }

  ObservedTrace operator+(const ObservedTrace& o) const;
  ObservedTrace operator-(const ObservedTrace& o) const;
  ObservedTrace operator*(double a) const;

 private:
  explicit ObservedTrace(PotentialPath p);
  PotentialPath path_;
  std::vector<double> weights_;
};

// Real coordinates of Q_n H^s: (Re, Im) of each high mode in rank order,
// scaled by (1 + lambda)^{s/2}, so the Euclidean product is the real H^s product.
class HighBandCoordinates {
 public:
  HighBandCoordinates(GeometryPtr geometry, const FrequencySplit& split, const SobolevScale& scale);

  int dimension() const { return 2 * static_cast<int>(modes_.size()); }
  const std::vector<int>& modes() const { return modes_; }
  RVector coordinates(const SpectralField& u) const;
  SpectralField field(const RVector& xi) const;
  // Coefficient vectors of unit coordinate vectors first .. first + count - 1.
  CMatrix basis_block(int first, int count) const;

 private:
  GeometryPtr geometry_;
  std::vector<int> modes_;
  RVector half_weights_;
};

// Coordinates of L2([0, T], H^s) for whitened traces: per node and entry, sqrt(q_j)(Re, Im).
class TraceCoordinates {
 public:
  TraceCoordinates(GeometryPtr geometry, int nodes, double dt);

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(nodes_) * 2 * geometry_->total(); }
  int block_size() const { return 2 * geometry_->total(); }
  RVector coordinates(const ObservedTrace& g) const;
  ObservedTrace trace(const RVector& y, double start) const;
  // Coordinates of one observed node value into block_size() doubles.
  void node_coordinates(int j, const cplx* observed, double* out) const;
  double norm(const ObservedTrace& g) const;

 private:
  GeometryPtr geometry_;
  int nodes_;
  double dt_;
  std::vector<double> sqrt_weights_;
};

// Everything that determines O_{n,v} = C S_n(v)(., 0).
struct ObservationProblem {
  FrequencySplit split;
  PotentialPath v;
  ObservationWindow window;
  SobolevScale scale;
  NonlinearitySpec nl;
  LinearizedOptions options{};

  // Canonical text (potential included through a content digest).
  std::string describe() const;
};

class ObservationOperator {
 public:
  ObservationOperator(RMatrix matrix, HighBandCoordinates domain, TraceCoordinates codomain, double T);

  const RMatrix& matrix() const { return matrix_; }
  const HighBandCoordinates& domain() const { return domain_; }
  const TraceCoordinates& codomain() const { return codomain_; }
  double horizon() const { return T_; }
  RVector apply(const RVector& xi) const { return matrix_ * xi; }
  RVector apply_transpose(const RVector& y) const { return matrix_.transpose() * y; }

 private:
  RMatrix matrix_;
  HighBandCoordinates domain_;
  TraceCoordinates codomain_;
  double T_;
};

ObservationOperator assemble_observation(const ObservationProblem& problem, int workers = 1);
// Matrix-free O xi: one linearized trajectory, observed and mapped to coordinates.
RVector apply_observation(const ObservationProblem& problem, const RVector& xi);

class GramianOperator {
 public:
  GramianOperator(RMatrix G, double T, std::string description = {});

  const RMatrix& matrix() const { return G_; }
  const RVector& eigenvalues() const { return eigenvalues_; }  // ascending
  const RMatrix& eigenvectors() const { return eigenvectors_; }
  double lambda_min() const { return eigenvalues_[0]; }
  double lambda_max() const { return eigenvalues_[eigenvalues_.size() - 1]; }
  int size() const { return static_cast<int>(G_.rows()); }
  double horizon() const { return T_; }
  const std::string& description() const { return description_; }

 private:
  RMatrix G_;
  double T_;
  std::string description_;
  RVector eigenvalues_;
  RMatrix eigenvectors_;
};

struct GramianOptions {
  int workers = 1;
  int block_steps = 32;  // time nodes folded into each rank update
  // Binary cache directory; empty means "use the environment variable if set".
  std::optional<std::filesystem::path> cache_dir;
  bool use_cache = true;
};

GramianOperator assemble_gramian(const ObservationOperator& O);
// Streaming assembly: never stores O, only G += sum_j q_j Y_j^T Y_j.
GramianOperator assemble_gramian(const ObservationProblem& problem, const GramianOptions& options = {});

class GramianInverse {
 public:
  const RMatrix& matrix() const { return inverse_; }
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }
  RVector apply(const RVector& x) const { return inverse_ * x; }

 private:
  friend GramianInverse gramian_inverse(const GramianOperator& G, double rcond);
  RMatrix inverse_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

// Throws ObservabilityError when lambda_min <= rcond lambda_max.
GramianInverse gramian_inverse(const GramianOperator& G, double rcond = 1e-10);
// lambda_min^{-1/2}; throws ObservabilityError when lambda_min <= 0.
double observability_constant(const GramianOperator& G);

// Pi = O G^{-1} O^T on trace coordinates.
RVector apply_projector(const RVector& y, const ObservationOperator& O, const GramianInverse& Ginv);
ObservedTrace apply_projector(const ObservedTrace& g, const ObservationOperator& O,
                              const GramianInverse& Ginv);

struct ObservedCauchySolution {
  SpectralField w0;
  PotentialPath trajectory;
};

// F_n(v)(g, h) with O and G^{-1} prepared once.
class ObservedCauchySolver {
 public:
  explicit ObservedCauchySolver(ObservationProblem problem, int workers = 1, double rcond = 1e-10);

  ObservedCauchySolution solve(const ObservedTrace& g, const PotentialPath* h) const;
  // || Pi (C w - g) || in L2([0, T], H^s).
  double observation_residual(const PotentialPath& w, const ObservedTrace& g) const;
  double trace_norm(const ObservedTrace& g) const { return O_.codomain().norm(g); }

  const ObservationProblem& problem() const { return problem_; }
  const ObservationOperator& observation() const { return O_; }
  const GramianOperator& gramian() const { return G_; }
  const GramianInverse& inverse() const { return Ginv_; }
  const LinearizedPropagator& propagator() const { return *prop_; }

 private:
  ObservationProblem problem_;
  std::unique_ptr<LinearizedPropagator> prop_;
  ObservationOperator O_;
  GramianOperator G_;
  GramianInverse Ginv_;
};

ObservedCauchySolution solve_observed_cauchy(const FrequencySplit& split, const PotentialPath& v,
                                             const ObservationWindow& w, const ObservedTrace& g,
                                             const PotentialPath& h, const NonlinearitySpec& nl,
                                             const SobolevScale& s);

}  // namespace nlsobs
