#include "nlsobs/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlsobs {

void ReconstructionConfig::validate() const {
  if (!(eta > 0.0)) throw PreconditionError("reconstruction: eta must be positive");
  if (!(R > 0.0) || !(R <= R0)) throw PreconditionError("reconstruction: need 0 < R <= R0");
  if (max_iterations < 1) throw PreconditionError("reconstruction: max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw PreconditionError("reconstruction: tolerance must be positive");
}

double gate_chi(double x) { return smooth_step(2.0 * (1.0 - std::abs(x))); }

double FixedPointReport::max_contraction() const {
  double m = 0.0;
  for (double k : contraction_factors) m = std::max(m, k);
  return m;
}

PotentialPath phi_source(const PotentialPath& v, const PotentialPath& w, const PotentialPath* h,
                         const NonlinearitySpec& nl, const FrequencySplit& split) {
  require_same_grid(v, w, "phi source");
  CMatrix s(v.data().rows(), v.data().cols());
  const cplx mi(0.0, -1.0);
  for (int j = 0; j < v.node_count(); ++j) {
    const SpectralField vj = v.at(j);
    s.col(j) = mi * (eval_f(vj, nl).coeffs() + eval_h(vj, w.at(j), nl).coeffs());
  }
  if (h) {
    require_same_grid(v, *h, "phi source");
    s += h->data();
  }
  return project_high(PotentialPath(v.geometry(), v.start(), v.dt(), std::move(s)), split);
}

PotentialPath phi_map(const ObservedCauchySolver& solver, const ObservedTrace& g, const PotentialPath* h,
                      const PotentialPath& w) {
  const auto& p = solver.problem();
  const PotentialPath src = phi_source(p.v, w, h, p.nl, p.split);
  return solver.solve(g, &src).trajectory;
}

PotentialPath phi_map(const FrequencySplit& split, const PotentialPath& v, const ObservationWindow& window,
                      const ObservedTrace& g, const PotentialPath& h, const PotentialPath& w,
                      const NonlinearitySpec& nl, const SobolevScale& s) {
  ObservedCauchySolver solver(ObservationProblem{split, v, window, s, nl});
  return phi_map(solver, g, &h, w);
}

FixedPointResult fixed_point_solve(const ObservedCauchySolver& solver, const ObservedTrace& g,
                                   const PotentialPath* h, const ReconstructionConfig& cfg,
                                   const PotentialPath* start) {
  cfg.validate();
  const auto& p = solver.problem();
  const SobolevScale& s = p.scale;
  PotentialPath w = start ? project_high(*start, p.split) : PotentialPath::zeros(p.v.geometry(), p.v.start(), p.v.dt(), p.v.steps());
  require_same_grid(p.v, w, "fixed point start");

  FixedPointReport report;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    PotentialPath next = phi_map(solver, g, h, w);
    const double inc = sup_norm(next - w, s);
    ++report.iterations;
    if (!report.increments.empty()) report.contraction_factors.push_back(inc / report.increments.back());
    report.increments.push_back(inc);
    w = std::move(next);
    if (!std::isfinite(inc)) break;
    if (inc <= cfg.tolerance) {
      report.converged = true;
      break;
    }
  }
  if (!report.converged) {
    std::ostringstream os;
    os << "fixed point did not converge in " << report.iterations << " iterations (last increment "
       << report.increments.back() << ", max contraction " << report.max_contraction() << ")";
    throw ContractionError(os.str(), std::move(report));
  }
  // Independent checks: the Duhamel line and the projected observation line.
  const PotentialPath src = phi_source(p.v, w, h, p.nl, p.split);
  const PotentialPath z = evolve_with_source(solver.propagator(), w.at(0), &src);
  report.duhamel_residual = sup_norm(z - w, s);
  report.observation_residual = solver.observation_residual(w, g);
  return {std::move(w), std::move(report)};
}

FixedPointResult fixed_point_solve(const FrequencySplit& split, const PotentialPath& v,
                                   const ObservationWindow& window, const ObservedTrace& g,
                                   const PotentialPath& h, const NonlinearitySpec& nl,
                                   const SobolevScale& s, const ReconstructionConfig& cfg) {
  ObservedCauchySolver solver(ObservationProblem{split, v, window, s, nl});
  return fixed_point_solve(solver, g, &h, cfg);
}

ReconstructResult reconstruct(const FrequencySplit& split, const PotentialPath& v_low, const PotentialPath& h1,
                              const PotentialPath& h2, const ObservationWindow& window,
                              const NonlinearitySpec& nl, const SobolevScale& s, const ReconstructionConfig& cfg) {
  cfg.validate();
  require_same_grid(v_low, h1, "reconstruct");
  require_same_grid(v_low, h2, "reconstruct");
  const ObservedTrace cv = ObservedTrace::of(v_low, window, s);
  TraceCoordinates tc(v_low.geometry(), v_low.node_count(), v_low.dt());
  const double norm = tc.norm(cv);
  const double gate = gate_chi(norm / cfg.eta);
  const ObservedTrace g = cv * (-gate);
  ObservedCauchySolver solver(ObservationProblem{split, v_low + h1, window, s, nl});
  auto fp = fixed_point_solve(solver, g, &h2, cfg);
  return {std::move(fp.w), std::move(fp.report), norm, gate};
}

VerificationResult verify_reconstruction(const PotentialPath& u, const FrequencySplit& split,
                                         const ObservationWindow& window, const NonlinearitySpec& nl,
                                         const SobolevScale& s, const ReconstructionConfig& cfg, int workers) {
  cfg.validate();
  VerificationResult out;
  const PotentialPath v = project_low(u, split);
  const PotentialPath qu = project_high(u, split);
  const ObservedTrace g = ObservedTrace::of(qu, window, s);
  TraceCoordinates tc(u.geometry(), u.node_count(), u.dt());
  out.high_norm = sup_norm(qu, s);
  out.observation_norm = tc.norm(g);
  if (out.observation_norm > cfg.eta || out.high_norm > cfg.R) {
    std::ostringstream os;
    os << "preconditions not met: ||C Q_n u|| = " << out.observation_norm << " (eta " << cfg.eta
       << "), ||Q_n u|| = " << out.high_norm << " (R " << cfg.R << "); increase n";
    out.advice = os.str();
    return out;
  }
  out.preconditions_met = true;
  ObservedCauchySolver solver(ObservationProblem{split, v, window, s, nl}, workers);
  out.observability_constant = observability_constant(solver.gramian());
  auto fp = fixed_point_solve(solver, g, nullptr, cfg);
  out.absolute_error = sup_norm(fp.w - qu, s);
  out.relative_error = out.high_norm > 0.0 ? out.absolute_error / out.high_norm : out.absolute_error;
  out.report = std::move(fp.report);
  return out;
}

GapReport determining_modes_gap(const PotentialPath& u1, const PotentialPath& u2, const FrequencySplit& split,
                                const ObservationWindow& window, const SobolevScale& s) {
  require_same_grid(u1, u2, "determining_modes_gap");
  const PotentialPath z = u1 - u2;
  GapReport r;
  r.state_gap = sup_norm(z, s);
  r.observation_gap = TraceCoordinates(z.geometry(), z.node_count(), z.dt()).norm(ObservedTrace::of(z, window, s));
  r.low_mode_gap = sup_norm(project_low(z, split), s);
  return r;
}

}  // namespace nlsobs
