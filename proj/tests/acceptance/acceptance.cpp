// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "nlsobs/reconstruction.hpp"
#include "support.hpp"

using namespace nlsobs;
using namespace nlsobs::test;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

ExperimentConfig config(const char* name) { return ExperimentConfig::load(std::string(NLSOBS_CONFIG_DIR) + "/" + name); }

std::string fmt(const char* f, auto... xs) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

// Low band of a cubic trajectory from the reference data, used as the potential.
PotentialPath reference_potential(const ExperimentConfig& cfg, const FrequencySplit& split) {
  const auto g = cfg.geometry();
  return project_low(reference_trajectory(make_initial_data(cfg.initial, g, cfg.seed), cfg.nonlinearity_spec(),
                                          cfg.T, cfg.dt, cfg.reference_substeps),
                     split);
}

GramianOptions no_cache() {
  GramianOptions o;
  o.use_cache = false;
  return o;
}

Outcome solver_fidelity() {
  const auto r = run_convergence(config("convergence.json"));
  const auto& e = r.entries.front();
  return {r.plane_wave_error <= 1e-6 && e.mass_drift <= 1e-8 && e.energy_drift <= 1e-6,
          fmt("plane wave %.2e (<= 1e-6), mass drift %.2e (<= 1e-8), energy drift %.2e (<= 1e-6)",
              r.plane_wave_error, e.mass_drift, e.energy_drift)};
}

Outcome free_gramian() {
  const auto cfg = config("reconstruct.json");
  const auto g = cfg.geometry();
  const int steps = static_cast<int>(std::lround(cfg.T / cfg.dt));
  const ObservationProblem p{FrequencySplit(8), PotentialPath::zeros(g, 0.0, cfg.dt, steps),
                             ObservationWindow::everywhere(g), SobolevScale(cfg.sobolev), NonlinearitySpec::none()};
  const auto G = assemble_gramian(p, no_cache());
  const double dev = (G.matrix() - cfg.T * RMatrix::Identity(G.size(), G.size())).cwiseAbs().maxCoeff();
  return {dev <= 1e-10, fmt("max |G - T I| = %.2e (<= 1e-10), dimension %d", dev, static_cast<int>(G.size()))};
}

Outcome projector_laws() {
  const auto cfg = config("reconstruct.json");
  const auto g = cfg.geometry();
  const FrequencySplit split(8);
  const ObservationProblem p{split, reference_potential(cfg, split), cfg.window(g), SobolevScale(cfg.sobolev),
                             cfg.nonlinearity_spec()};
  const auto O = assemble_observation(p);
  const auto inv = gramian_inverse(assemble_gramian(O));
  const auto& M = O.matrix();
  double idem = 0.0, sym = 0.0, fix = 0.0;
  for (int t = 0; t < 20; ++t) {
    const RVector a = RVector::Random(M.rows()), b = RVector::Random(M.rows());
    const RVector pa = apply_projector(a, O, inv);
    idem = std::max(idem, (apply_projector(pa, O, inv) - pa).norm() / pa.norm());
    sym = std::max(sym, std::abs(pa.dot(b) - a.dot(apply_projector(b, O, inv))) / (a.norm() * b.norm()));
    const RVector y = M * RVector::Random(M.cols());
    fix = std::max(fix, (apply_projector(y, O, inv) - y).norm() / y.norm());
  }
  return {idem <= 1e-9 && sym <= 1e-9 && fix <= 1e-9,
          fmt("idempotence %.2e, symmetry %.2e, Pi O = O %.2e (each <= 1e-9, 20 inputs)", idem, sym, fix)};
}

Outcome uniform_observability() {
  const auto cfg = config("gramian_scan.json");
  const auto entries = run_gramian_scan(cfg);
  const int base = cfg.sizes.front();
  double lmin = std::numeric_limits<double>::infinity(), ratio = 0.0, change = 0.0;
  std::map<int, std::pair<double, double>> cobs;  // potential -> (min, max) over n
  std::map<std::pair<int, int>, double> at_base;
  for (const auto& e : entries)
    if (e.grid == base) {
      lmin = std::min(lmin, e.lambda_min);
      auto [it, fresh] = cobs.try_emplace(e.potential, e.c_obs, e.c_obs);
      if (!fresh) it->second = {std::min(it->second.first, e.c_obs), std::max(it->second.second, e.c_obs)};
      at_base[{e.rank, e.potential}] = e.lambda_min;
    }
  for (const auto& [p, mm] : cobs) ratio = std::max(ratio, mm.second / mm.first);
  int compared = 0;
  for (const auto& e : entries)
    if (e.grid != base) {
      const double ref = at_base.at({e.rank, e.potential});
      change = std::max(change, std::abs(e.lambda_min - ref) / ref);
      ++compared;
    }
  return {lmin > 0.0 && ratio <= 2.0 && compared > 0 && change <= 0.2,
          fmt("min lambda_min %.4e (> 0), max_n C_obs / min_n C_obs %.4f (<= 2), lambda_min change at N=%d: %.2e "
              "(<= 0.2) over %d cases",
              lmin, ratio, compared ? entries.back().grid : 0, change, compared)};
}

// sup_t ||w|| / (||C w||_{L2 H^s} + ||h||_{L1 H^s}) over a fixed probe set.
double estimate_constant(const ObservedCauchySolver& solver, double* recovery) {
  const auto& p = solver.problem();
  const auto& g = p.v.geometry();
  const HighBandCoordinates hb(g, p.split, p.scale);
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(solver.gramian().matrix());
  const auto q = trapezoid_weights(p.v.node_count(), p.v.dt());
  auto l1 = [&](const PotentialPath& h) {
    double acc = 0.0;
    for (int j = 0; j < h.node_count(); ++j) acc += q[j] * sobolev_norm(h.at(j), p.scale);
    return acc;
  };
  double worst = 0.0;
  *recovery = 0.0;
  for (int t = 0; t < 6; ++t) {
    SpectralField w0 = t == 0 ? hb.field(eig.eigenvectors().col(0)) : random_high(g, p.split.rank());
    w0 = w0 * cplx(1.0 / sobolev_norm(w0, p.scale));
    PotentialPath h = PotentialPath::zeros(g, 0.0, p.v.dt(), p.v.steps());
    if (t > 0) {
      CMatrix hm(g->total(), p.v.node_count());
      const SpectralField a = random_high(g, p.split.rank()), b = random_high(g, p.split.rank());
      for (int j = 0; j < p.v.node_count(); ++j) {
        const double s = j * p.v.dt();
        hm.col(j) = (a * std::cos(3.0 * s) + b * (s * s)).coeffs();
      }
      h = PotentialPath(g, 0.0, p.v.dt(), hm);
    }
    const auto w = evolve_with_source(p.split, p.v, w0, h, p.nl);
    const auto trace = ObservedTrace::of(w, p.window, p.scale);
    const auto sol = solver.solve(trace, &h);
    *recovery = std::max(*recovery, sobolev_norm(sol.w0 - w0, p.scale) / sobolev_norm(w0, p.scale));
    worst = std::max(worst, sup_norm(w, p.scale) / (solver.trace_norm(trace) + l1(h)));
  }
  return worst;
}

Outcome observed_cauchy() {
  const auto cfg = config("reconstruct.json");
  const auto g = cfg.geometry();
  double rec8 = 0.0, rec16 = 0.0;
  auto constant_for = [&](int n, double* rec) {
    const FrequencySplit split(n);
    const ObservedCauchySolver solver(
        ObservationProblem{split, reference_potential(cfg, split), cfg.window(g), SobolevScale(cfg.sobolev),
                           cfg.nonlinearity_spec()});
    return estimate_constant(solver, rec);
  };
  const double c8 = constant_for(8, &rec8), c16 = constant_for(16, &rec16);
  const double rel = std::abs(c16 - c8) / c8;
  const double rec = std::max(rec8, rec16);
  return {rec <= 1e-7 && rel <= 0.5,
          fmt("recovery error %.2e (<= 1e-7), estimate constant n=8 %.4f, n=16 %.4f, change %.1f%% (<= 50%%)", rec,
              c8, c16, 100.0 * rel)};
}

Outcome nonlinear_reconstruction() {
  const auto cfg = config("reconstruct.json");
  const auto g = cfg.geometry();
  const auto w = cfg.window(g);
  const auto nl = cfg.nonlinearity_spec();
  const SobolevScale s(cfg.sobolev);
  const auto u = reference_trajectory(make_initial_data(cfg.initial, g, cfg.seed), nl, cfg.T, cfg.dt,
                                      cfg.reference_substeps);
  const auto r8 = verify_reconstruction(u, FrequencySplit(8), w, nl, s, cfg.reconstruction);
  const auto r16 = verify_reconstruction(u, FrequencySplit(16), w, nl, s, cfg.reconstruction);
  if (!r8.preconditions_met || !r16.preconditions_met) return {false, r8.advice + r16.advice};

  const FrequencySplit split(8);
  const ObservedCauchySolver solver(ObservationProblem{split, project_low(u, split), w, s, nl});
  const auto trace = ObservedTrace::of(project_high(u, split), w, s);
  const auto a = fixed_point_solve(solver, trace, nullptr, cfg.reconstruction);
  PotentialPath start = free_path(random_high(g, 8), cfg.T, cfg.dt);
  start = start * (0.5 * cfg.reconstruction.R / sup_norm(start, s));
  const auto b = fixed_point_solve(solver, trace, nullptr, cfg.reconstruction, &start);
  const double agree = sup_norm(a.w - b.w, s);
  const double kappa = r8.report.max_contraction();
  const bool ok = r8.high_norm <= cfg.reconstruction.R && kappa <= 0.5 && r8.relative_error <= 1e-4 &&
                  r16.absolute_error < r8.absolute_error && agree <= 1e-8;
  return {ok, fmt("n=8: ||Q u|| %.3e (<= R=%.2g), kappa %.2e (<= 0.5), relative error %.2e (<= 1e-4); "
                  "absolute error n=8 %.2e -> n=16 %.2e; two starts differ by %.2e (<= 1e-8)",
                  r8.high_norm, cfg.reconstruction.R, kappa, r8.relative_error, r8.absolute_error,
                  r16.absolute_error, agree)};
}

Outcome determining_modes() {
  const auto r = run_determining_modes(config("determining_modes.json"));
  const auto& a = r.entries.at(0);
  const auto& b = r.entries.at(1);
  bool bounded = true;
  double cmax = 0.0;
  for (const auto& e : r.entries) cmax = std::max(cmax, e.c_prime);
  for (const auto& e : r.entries) bounded = bounded && e.residual <= cmax * e.gaps.state_gap * e.gaps.state_gap;
  const double stable = std::abs(a.c_prime - b.c_prime) / std::max(a.c_prime, b.c_prime);
  const double scaling = std::abs(a.remainder) / std::abs(b.remainder);
  const bool ok = bounded && stable <= 0.1 && scaling >= 3.0 && scaling <= 5.0;
  return {ok, fmt("C_obs %.4f; residual %.3e / %.3e at eps %.0e / %.0e; C' %.4e / %.4e (change %.2e); "
                  "remainder scaling ratio %.2f (required [3, 5])",
                  r.c_obs, a.residual, b.residual, a.epsilon, b.epsilon, a.c_prime, b.c_prime, stable, scaling)};
}

Outcome stabilization() {
  auto cfg = config("decay.json");
  const auto r1 = run_decay(cfg);
  cfg.dt *= 0.5;
  const auto r2 = run_decay(cfg);
  const double change = std::abs(r2.fit.gamma - r1.fit.gamma) / r1.fit.gamma;
  const bool ok = r1.fit.envelope_nonincreasing && r1.fit.gamma > 0.0 && r1.fit.r2 >= 0.98 && change <= 0.05;
  return {ok, fmt("envelope non-increasing: %s, gamma %.6f (> 0), R^2 %.5f (>= 0.98), gamma change at dt/2 %.2e "
                  "(<= 0.05)",
                  r1.fit.envelope_nonincreasing ? "yes" : "no", r1.fit.gamma, r1.fit.r2, change)};
}

Outcome derivative_checks() {
  auto g = TorusGeometry::circle(64);
  const SobolevScale s(1.0);
  const auto nl = NonlinearitySpec::cubic();
  double lo = 1e300, hi = 0.0, taylor = 0.0;
  for (int t = 0; t < 10; ++t) {
    const SpectralField v = random_field(g), w = random_field(g);
    const SpectralField fv = eval_f(v, nl), dfw = eval_df(v, w, nl);
    auto rem = [&](double eps) { return sobolev_norm(eval_f(v + w * eps, nl) - fv - dfw * eps, s) / (eps * eps); };
    const double ratio = rem(1e-3) / rem(1e-4);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    const SpectralField lhs = eval_f(v + w, nl);
    taylor = std::max(taylor, sobolev_norm(lhs - (fv + dfw + eval_h(v, w, nl)), s) / sobolev_norm(lhs, s));
  }
  return {lo >= 0.8 && hi <= 1.25 && taylor <= 1e-12,
          fmt("remainder ratio eps=1e-3 vs 1e-4 in [%.4f, %.4f] (within [0.8, 1.25]), Taylor identity %.2e (<= 1e-12)",
              lo, hi, taylor)};
}

Outcome gcc_checker() {
  auto check = [](const char* name) {
    const auto cfg = config(name);
    const auto g = cfg.geometry();
    return gcc_ray_check(cfg.window(g), cfg.gcc.T0, GccSampling{cfg.gcc.positions, cfg.gcc.directions, cfg.gcc.seed});
  };
  const auto interval = check("gcc_interval.json");
  const auto strip = check("gcc_strip.json");
  const auto cross = check("gcc_cross.json");
  const auto& ray = strip.worst_ray;
  const bool constant_x1 = ray.direction[0] == 0.0 && !std::isfinite(strip.worst_entry_time);
  const bool ok = interval.passed && interval.horizon == 2.0 * std::numbers::pi && !strip.passed && constant_x1 &&
                  cross.passed && cross.rays_tested >= 10000 && cross.horizon == 4.0 * std::numbers::pi;
  return {ok, fmt("interval %s (%zu rays, T0 2pi); strip %s with ray x1 = %.4f, direction (%g, %g); cross %s "
                  "(%zu rays, T0 4pi)",
                  interval.passed ? "passes" : "fails", interval.rays_tested, strip.passed ? "passes" : "fails",
                  ray.origin[0], ray.direction[0], ray.direction[1], cross.passed ? "passes" : "fails",
                  cross.rays_tested)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "solver fidelity", 5, solver_fidelity},
      {2, "free-flow Gramian identity", 10, free_gramian},
      {3, "projector laws", 30, projector_laws},
      {4, "uniform high-frequency observability", 300, uniform_observability},
      {5, "observed Cauchy solver", 60, observed_cauchy},
      {6, "nonlinear reconstruction", 120, nonlinear_reconstruction},
      {7, "determining-modes stability", 120, determining_modes},
      {8, "damped stabilization", 120, stabilization},
      {9, "derivative checks", 10, derivative_checks},
      {10, "ray condition checker", 30, gcc_checker},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && dt <= c.budget_seconds;
    failed += pass ? 0 : 1;
    std::printf("criterion %2d: %s  %s: %s; runtime %.1f s (<= %.0f s)\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), dt, c.budget_seconds);
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
