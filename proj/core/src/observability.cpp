#include "nlsobs/observability.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "nlsobs/errors.hpp"
#include "nlsobs/gramian_cache.hpp"

namespace nlsobs {

std::vector<double> trapezoid_weights(int nodes, double dt) {
  if (nodes < 2) throw ShapeError("trapezoid weights: at least two nodes are required");
  std::vector<double> w(static_cast<std::size_t>(nodes), dt);
  w.front() = w.back() = 0.5 * dt;
  return w;
}

ObservedTrace::ObservedTrace(PotentialPath p)
    : path_(std::move(p)), weights_(trapezoid_weights(path_.node_count(), path_.dt())) {}

ObservedTrace::ObservedTrace(GeometryPtr geometry, double start, double dt, CMatrix nodes)
    : ObservedTrace(PotentialPath(std::move(geometry), start, dt, std::move(nodes))) {}

ObservedTrace ObservedTrace::of(const PotentialPath& u, const ObservationWindow& w, const SobolevScale& s) {
  require_same_geometry(u.geometry(), w.geometry(), "observed trace");
  const CMatrix& R = w.observation_factor(s.exponent());
  CMatrix out = R.triangularView<Eigen::Upper>() * u.data();
  return ObservedTrace(PotentialPath(u.geometry(), u.start(), u.dt(), std::move(out)));
}

ObservedTrace ObservedTrace::zeros(GeometryPtr geometry, double start, double dt, int steps) {
  return ObservedTrace(PotentialPath::zeros(std::move(geometry), start, dt, steps));
}

ObservedTrace ObservedTrace::operator+(const ObservedTrace& o) const { return ObservedTrace(path_ + o.path_); }
ObservedTrace ObservedTrace::operator-(const ObservedTrace& o) const { return ObservedTrace(path_ - o.path_); }
ObservedTrace ObservedTrace::operator*(double a) const { return ObservedTrace(path_ * a); }

HighBandCoordinates::HighBandCoordinates(GeometryPtr geometry, const FrequencySplit& split,
                                         const SobolevScale& scale)
    : geometry_(std::move(geometry)),
      modes_(split.high_modes(*geometry_)),
      half_weights_(scale.half_weights(*geometry_)) {}

RVector HighBandCoordinates::coordinates(const SpectralField& u) const {
  require_same_geometry(geometry_, u.geometry(), "high-band coordinates");
  RVector xi(dimension());
  for (std::size_t r = 0; r < modes_.size(); ++r) {
    const int f = modes_[r];
    xi[2 * r] = half_weights_[f] * u[f].real();
    xi[2 * r + 1] = half_weights_[f] * u[f].imag();
  }
  return xi;
}

SpectralField HighBandCoordinates::field(const RVector& xi) const {
  if (xi.size() != dimension()) throw ShapeError("high-band coordinates: wrong vector length");
  CVector c = CVector::Zero(geometry_->total());
  for (std::size_t r = 0; r < modes_.size(); ++r) {
    const int f = modes_[r];
    c[f] = cplx(xi[2 * r], xi[2 * r + 1]) / half_weights_[f];
  }
  return SpectralField(geometry_, std::move(c));
}

CMatrix HighBandCoordinates::basis_block(int first, int count) const {
  CMatrix B = CMatrix::Zero(geometry_->total(), count);
  for (int c = 0; c < count; ++c) {
    const int j = first + c;
    const int f = modes_[j / 2];
    B(f, c) = (j % 2 == 0 ? cplx(1.0, 0.0) : cplx(0.0, 1.0)) / half_weights_[f];
  }
  return B;
}

TraceCoordinates::TraceCoordinates(GeometryPtr geometry, int nodes, double dt)
    : geometry_(std::move(geometry)), nodes_(nodes), dt_(dt) {
  for (double q : trapezoid_weights(nodes, dt)) sqrt_weights_.push_back(std::sqrt(q));
}

void TraceCoordinates::node_coordinates(int j, const cplx* observed, double* out) const {
  const double sq = sqrt_weights_[j];
  for (int f = 0; f < geometry_->total(); ++f) {
    out[2 * f] = sq * observed[f].real();
    out[2 * f + 1] = sq * observed[f].imag();
  }
}

RVector TraceCoordinates::coordinates(const ObservedTrace& g) const {
  require_same_geometry(geometry_, g.geometry(), "trace coordinates");
  if (g.node_count() != nodes_ || std::abs(g.dt() - dt_) > 1e-12 * dt_)
    throw ShapeError("trace coordinates: time grid mismatch");
  RVector y(dimension());
  const int b = block_size();
  for (int j = 0; j < nodes_; ++j) node_coordinates(j, g.data().col(j).data(), y.data() + static_cast<Eigen::Index>(j) * b);
  return y;
}

ObservedTrace TraceCoordinates::trace(const RVector& y, double start) const {
  if (y.size() != dimension()) throw ShapeError("trace coordinates: wrong vector length");
  const int n = geometry_->total();
  CMatrix m(n, nodes_);
  for (int j = 0; j < nodes_; ++j) {
    const double* p = y.data() + static_cast<Eigen::Index>(j) * block_size();
    for (int f = 0; f < n; ++f) m(f, j) = cplx(p[2 * f], p[2 * f + 1]) / sqrt_weights_[j];
  }
  return ObservedTrace(geometry_, start, dt_, std::move(m));
}

double TraceCoordinates::norm(const ObservedTrace& g) const { return coordinates(g).norm(); }

std::string ObservationProblem::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << v.geometry()->describe() << "\n"
     << "split n=" << split.rank() << "\n"
     << window.describe() << "\n"
     << "window-digest=" << hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(window.samples().data()),
                                                            sizeof(double) * window.samples().size())))
     << "\n"
     << "observation=refined-product-v2\n"
     << "sobolev s=" << scale.exponent() << "\n"
     << "nonlinearity";
  for (double c : nl.coefficients()) os << " " << c;
  os << "\n"
     << "time start=" << v.start() << " dt=" << v.dt() << " steps=" << v.steps() << " T=" << v.end() - v.start()
     << "\n"
     << "substeps=" << options.substeps << "\n"
     << "potential-digest="
     << hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(v.data().data()),
                                       sizeof(cplx) * v.data().size())))
     << "\n";
  return os.str();
}

ObservationOperator::ObservationOperator(RMatrix matrix, HighBandCoordinates domain, TraceCoordinates codomain,
                                         double T)
    : matrix_(std::move(matrix)), domain_(std::move(domain)), codomain_(std::move(codomain)), T_(T) {}

namespace {

// Runs fn(begin, end) over a partition of [0, count) on up to `workers` threads.
template <class Fn>
void parallel_ranges(int workers, int count, Fn&& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    const int b = count * t / workers, e = count * (t + 1) / workers;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& th : pool) th.join();
}

// Observe columns [b, e) of W at node j and write their trace coordinates via sink(col, ptr).
template <class Sink>
void observe_columns(const CMatrix& R, const TraceCoordinates& tc, int j, const CMatrix& W, int b, int e,
                     Sink&& sink) {
  const CMatrix Z = R.triangularView<Eigen::Upper>() * W.middleCols(b, e - b);
  std::vector<double> buf(static_cast<std::size_t>(tc.block_size()));
  for (int col = b; col < e; ++col) {
    tc.node_coordinates(j, Z.col(col - b).data(), buf.data());
    sink(col, buf.data());
  }
}

void check_problem(const ObservationProblem& p) {
  require_same_geometry(p.v.geometry(), p.window.geometry(), "observation problem");
  p.split.validate(*p.v.geometry());
  if (p.split.rank() >= p.v.geometry()->total())
    throw PreconditionError("observation problem: the high band is empty (n >= N_tot)");
}

}  // namespace

ObservationOperator assemble_observation(const ObservationProblem& problem, int workers) {
  check_problem(problem);
  const auto& geom = problem.v.geometry();
  HighBandCoordinates hb(geom, problem.split, problem.scale);
  TraceCoordinates tc(geom, problem.v.node_count(), problem.v.dt());
  const CMatrix& R = problem.window.observation_factor(problem.scale.exponent());
  LinearizedPropagator prop(problem.split, problem.v, problem.nl, problem.options);
  const int m2 = hb.dimension();
  const int bs = tc.block_size();
  RMatrix O(tc.dimension(), m2);
  CMatrix W = hb.basis_block(0, m2);
  for (int j = 0; j < problem.v.node_count(); ++j) {
    parallel_ranges(workers, m2, [&](int b, int e) {
      if (j > 0) prop.advance(j - 1, W.middleCols(b, e - b));
      observe_columns(R, tc, j, W, b, e, [&](int col, const double* p) {
        std::memcpy(O.col(col).data() + static_cast<Eigen::Index>(j) * bs, p, sizeof(double) * bs);
      });
    });
  }
  return ObservationOperator(std::move(O), std::move(hb), std::move(tc), problem.v.end() - problem.v.start());
}

RVector apply_observation(const ObservationProblem& problem, const RVector& xi) {
  check_problem(problem);
  HighBandCoordinates hb(problem.v.geometry(), problem.split, problem.scale);
  TraceCoordinates tc(problem.v.geometry(), problem.v.node_count(), problem.v.dt());
  const auto w = evolve_linearized(problem.split, problem.v, hb.field(xi), problem.v.start(), problem.nl,
                                   problem.options);
  return tc.coordinates(ObservedTrace::of(w, problem.window, problem.scale));
}

GramianOperator::GramianOperator(RMatrix G, double T, std::string description)
    : G_(std::move(G)), T_(T), description_(std::move(description)) {
  if (G_.rows() != G_.cols()) throw ShapeError("gramian: matrix must be square");
  Eigen::SelfAdjointEigenSolver<RMatrix> es(G_);
  if (es.info() != Eigen::Success) throw ConditioningError("gramian: eigendecomposition failed");
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
}

GramianOperator assemble_gramian(const ObservationOperator& O) {
  const auto& M = O.matrix();
  RMatrix G = RMatrix::Zero(M.cols(), M.cols());
  G.selfadjointView<Eigen::Lower>().rankUpdate(M.transpose());
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  return GramianOperator(std::move(G), O.horizon());
}

GramianOperator assemble_gramian(const ObservationProblem& problem, const GramianOptions& options) {
  check_problem(problem);
  const std::string key = problem.describe();
  std::optional<GramianCache> cache;
  if (options.use_cache) {
    if (options.cache_dir)
      cache.emplace(*options.cache_dir);
    else
      cache = GramianCache::from_environment();
  }
  const double T = problem.v.end() - problem.v.start();
  if (cache) {
    if (auto G = cache->load(key)) return GramianOperator(std::move(*G), T, key);
  }

  const auto& geom = problem.v.geometry();
  HighBandCoordinates hb(geom, problem.split, problem.scale);
  TraceCoordinates tc(geom, problem.v.node_count(), problem.v.dt());
  const CMatrix& R = problem.window.observation_factor(problem.scale.exponent());
  LinearizedPropagator prop(problem.split, problem.v, problem.nl, problem.options);
  const int m2 = hb.dimension();
  const int bs = tc.block_size();
  const int K = std::max(1, options.block_steps);
  RMatrix G = RMatrix::Zero(m2, m2);
  RMatrix Yt(m2, static_cast<Eigen::Index>(K) * bs);  // transposed trace rows for K nodes
  CMatrix W = hb.basis_block(0, m2);
  int filled = 0;
  const int nodes = problem.v.node_count();
  for (int j = 0; j < nodes; ++j) {
    parallel_ranges(options.workers, m2, [&](int b, int e) {
      if (j > 0) prop.advance(j - 1, W.middleCols(b, e - b));
      observe_columns(R, tc, j, W, b, e, [&](int col, const double* p) {
        for (int r = 0; r < bs; ++r) Yt(col, static_cast<Eigen::Index>(filled) * bs + r) = p[r];
      });
    });
    ++filled;
    if (filled == K || j == nodes - 1) {
      G.selfadjointView<Eigen::Lower>().rankUpdate(Yt.leftCols(static_cast<Eigen::Index>(filled) * bs));
      filled = 0;
    }
  }
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  if (cache) cache->store(key, G);
  return GramianOperator(std::move(G), T, key);
}

GramianInverse gramian_inverse(const GramianOperator& G, double rcond) {
  const double lmin = G.lambda_min(), lmax = G.lambda_max();
  if (!(lmax > 0.0) || !(lmin > rcond * lmax)) {
    std::ostringstream os;
    os << "gramian not invertible: lambda_min=" << lmin << " lambda_max=" << lmax << " rcond=" << rcond;
    throw ObservabilityError(os.str(), lmin);
  }
  GramianInverse inv;
  const auto& V = G.eigenvectors();
  inv.inverse_ = V * G.eigenvalues().cwiseInverse().asDiagonal() * V.transpose();
  inv.inverse_ = 0.5 * (inv.inverse_ + inv.inverse_.transpose()).eval();
  inv.lambda_min_ = lmin;
  inv.lambda_max_ = lmax;
  return inv;
}

double observability_constant(const GramianOperator& G) {
  if (!(G.lambda_min() > 0.0))
    throw ObservabilityError("observability constant undefined: lambda_min <= 0", G.lambda_min());
  return 1.0 / std::sqrt(G.lambda_min());
}

RVector apply_projector(const RVector& y, const ObservationOperator& O, const GramianInverse& Ginv) {
  if (y.size() != O.matrix().rows()) throw ShapeError("projector: trace length differs from the operator");
  return O.apply(Ginv.apply(O.apply_transpose(y)));
}

ObservedTrace apply_projector(const ObservedTrace& g, const ObservationOperator& O, const GramianInverse& Ginv) {
  const RVector y = O.codomain().coordinates(g);
  return O.codomain().trace(apply_projector(y, O, Ginv), g.start());
}

ObservedCauchySolver::ObservedCauchySolver(ObservationProblem problem, int workers, double rcond)
    : problem_(std::move(problem)),
      prop_(std::make_unique<LinearizedPropagator>(problem_.split, problem_.v, problem_.nl, problem_.options)),
      O_(assemble_observation(problem_, workers)),
      G_(assemble_gramian(O_)),
      Ginv_(gramian_inverse(G_, rcond)) {}

ObservedCauchySolution ObservedCauchySolver::solve(const ObservedTrace& g, const PotentialPath* h) const {
  const auto& v = problem_.v;
  require_same_grid(v, g.as_path(), "observed Cauchy solve");
  const auto geom = v.geometry();
  RVector y = O_.codomain().coordinates(g);
  if (h) {
    const auto duhamel = evolve_with_source(*prop_, SpectralField(geom), h);
    y -= O_.codomain().coordinates(ObservedTrace::of(duhamel, problem_.window, problem_.scale));
  }
  const RVector xi = Ginv_.apply(O_.apply_transpose(y));
  SpectralField w0 = O_.domain().field(xi);
  PotentialPath traj = evolve_with_source(*prop_, w0, h);
  return {std::move(w0), std::move(traj)};
}

double ObservedCauchySolver::observation_residual(const PotentialPath& w, const ObservedTrace& g) const {
  const RVector r = O_.codomain().coordinates(ObservedTrace::of(w, problem_.window, problem_.scale)) - O_.codomain().coordinates(g);
  return apply_projector(r, O_, Ginv_).norm();
}

ObservedCauchySolution solve_observed_cauchy(const FrequencySplit& split, const PotentialPath& v,
                                             const ObservationWindow& w, const ObservedTrace& g,
                                             const PotentialPath& h, const NonlinearitySpec& nl,
                                             const SobolevScale& s) {
  ObservedCauchySolver solver(ObservationProblem{split, v, w, s, nl});
  return solver.solve(g, &h);
}

}  // namespace nlsobs
