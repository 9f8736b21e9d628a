#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "internal.hpp"
#include "nlsobs/experiment.hpp"
#include "nlsobs/version.hpp"

namespace nlsobs {

namespace {

double wavenumber_norm(const std::array<int, 2>& k) { return std::hypot(double(k[0]), double(k[1])); }

// Modes near the Nyquist edge are left empty so the data stay well resolved.
bool inside_cutoff(const TorusGeometry& g, const std::array<int, 2>& k) {
  for (int a = 0; a < g.dim(); ++a)
    if (std::abs(k[a]) >= g.size(a) / 2 - 1) return false;
  return true;
}

cplx complex_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double re = n(rng);
  const double im = n(rng);
  return cplx(re, im) / std::sqrt(2.0);
}

SpectralField normalized(const SpectralField& u, const SobolevScale& s, double target) {
  const double norm = sobolev_norm(u, s);
  if (!(norm > 0.0)) throw PreconditionError("cannot normalise a zero field");
  return u * cplx(target / norm);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint64_t out = 0;
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  out = (std::uint64_t(words[0]) << 32) | words[1];
  return out;
}

std::vector<std::vector<int>> scan_sizes(const ExperimentConfig& cfg) {
  std::vector<std::vector<int>> out{cfg.sizes};
  for (int n : cfg.extra_sizes) {
    const int factor = n / cfg.sizes[0];
    std::vector<int> s = cfg.sizes;
    for (int& x : s) x *= factor;
    if (s != cfg.sizes) out.push_back(s);
  }
  return out;
}

}  // namespace

SpectralField make_initial_data(const InitialDataConfig& cfg, const GeometryPtr& g, std::uint64_t seed) {
  CVector c = CVector::Zero(g->total());
  if (cfg.kind == "modes") {
    for (const auto& m : cfg.modes) c[g->flat_index(m.k)] += cplx(m.re, m.im);
  } else {
    std::mt19937_64 rng(mix_seed(seed, 0x1d));
    for (int r = 0; r < g->total(); ++r) {
      const int f = g->flat_at_rank(r);
      const auto k = g->wavenumber(f);
      const cplx z = complex_normal(rng);
      if (inside_cutoff(*g, k)) c[f] = std::pow(cfg.decay, wavenumber_norm(k)) * z;
    }
  }
  SpectralField u(g, std::move(c));
  return cfg.h1_norm > 0.0 ? normalized(u, SobolevScale(1.0), cfg.h1_norm) : u;
}

SpectralField make_high_perturbation(const GeometryPtr& g, const FrequencySplit& split, double decay,
                                     const SobolevScale& s, std::uint64_t seed) {
  split.validate(*g);
  std::mt19937_64 rng(mix_seed(seed, 0x2e));
  CVector c = CVector::Zero(g->total());
  for (int r = split.rank(); r < g->total(); ++r) {
    const int f = g->flat_at_rank(r);
    const auto k = g->wavenumber(f);
    const cplx z = complex_normal(rng);
    if (inside_cutoff(*g, k)) c[f] = std::pow(decay, wavenumber_norm(k)) * z;
  }
  return normalized(SpectralField(g, std::move(c)), s, 1.0);
}

std::vector<SpectralField> sample_potentials(const PotentialSampling& cfg, const GeometryPtr& g,
                                             std::uint64_t seed) {
  if (cfg.modes > g->total()) throw PreconditionError("sample_potentials: more modes than the grid holds");
  std::vector<SpectralField> out;
  for (int p = 0; p < cfg.count; ++p) {
    std::mt19937_64 rng(mix_seed(seed, 0x100 + static_cast<std::uint64_t>(p)));
    CVector c = CVector::Zero(g->total());
    for (int r = 0; r < cfg.modes; ++r) c[g->flat_at_rank(r)] = complex_normal(rng);
    out.push_back(normalized(SpectralField(g, std::move(c)), SobolevScale(cfg.sobolev), cfg.radius));
  }
  return out;
}

PotentialPath free_path(const SpectralField& v0, double T, double dt) {
  const int steps = checked_step_count(T, dt, "free_path");
  CMatrix nodes(v0.size(), steps + 1);
  for (int j = 0; j <= steps; ++j) nodes.col(j) = linear_propagator(v0, j * dt).coeffs();
  return PotentialPath(v0.geometry(), 0.0, dt, std::move(nodes));
}

PotentialPath reference_trajectory(const SpectralField& u0, const NonlinearitySpec& nl, double T, double dt,
                                   int substeps) {
  if (substeps < 1) throw PreconditionError("reference_trajectory: substeps must be positive");
  const int steps = checked_step_count(T, dt, "reference_trajectory");
  NlsOptions opts;
  opts.record_stride = substeps;
  PotentialPath p = evolve_nls(u0, nl, steps * substeps * (dt / substeps), dt / substeps, opts);
  return PotentialPath(u0.geometry(), 0.0, dt, p.data());
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& norms, double lo, double hi,
                   double envelope_start, double block) {
  if (t.size() != norms.size()) throw ShapeError("fit_decay: time and norm series differ in length");
  DecayFit fit;
  fit.lo = lo;
  fit.hi = hi;
  const double slack = 1e-12 * std::max(1.0, hi);
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < lo - slack || t[i] > hi + slack) continue;
    if (!(norms[i] > 0.0)) throw NumericalError("fit_decay: non-positive norm inside the fit window");
    const double y = std::log(norms[i]);
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
    ++m;
  }
  if (m < 3) throw PreconditionError("fit_decay: fewer than three samples in the fit window");
  const double dm = static_cast<double>(m);
  const double denom = dm * stt - st * st;
  const double slope = (dm * sty - st * sy) / denom;
  const double icpt = (sy - slope * st) / dm;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / dm;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < lo - slack || t[i] > hi + slack) continue;
    const double y = std::log(norms[i]);
    ss_res += (y - icpt - slope * t[i]) * (y - icpt - slope * t[i]);
    ss_tot += (y - mean) * (y - mean);
  }
  fit.gamma = -slope;
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

  const double t_end = t.empty() ? 0.0 : t.back();
  for (double a = envelope_start; a + block <= t_end + slack; a += block) {
    double mx = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] >= a - slack && t[i] < a + block - slack) mx = std::max(mx, norms[i]);
    fit.block_maxima.push_back(mx);
  }
  fit.envelope_nonincreasing = true;
  for (std::size_t k = 1; k < fit.block_maxima.size(); ++k)
    if (fit.block_maxima[k] > fit.block_maxima[k - 1] * (1.0 + 1e-12)) fit.envelope_nonincreasing = false;
  return fit;
}

DecayResult run_decay(const ExperimentConfig& cfg) {
  const GeometryPtr g = cfg.geometry();
  const ObservationWindow w = cfg.window(g);
  const SpectralField u0 = make_initial_data(cfg.initial, g, cfg.seed);
  DecayResult r{evolve_damped(u0, cfg.nonlinearity_spec(), DampingSpec::from_window(w, cfg.damping_amplitude),
                              cfg.T, cfg.dt, cfg.output_stride),
                {}};
  r.fit = fit_decay(r.trajectory.times, r.trajectory.h1_norms, cfg.fit_window[0], cfg.fit_window[1]);
  return r;
}

std::vector<ScanEntry> run_gramian_scan(const ExperimentConfig& cfg) {
  const NonlinearitySpec nl = cfg.nonlinearity_spec();
  std::vector<ScanEntry> out;
  for (const auto& sizes : scan_sizes(cfg)) {
    const GeometryPtr g = cfg.geometry_with_sizes(sizes);
    const ObservationWindow w = cfg.window(g);
    const auto potentials = sample_potentials(cfg.potentials, g, cfg.seed);
    for (std::size_t p = 0; p < potentials.size(); ++p) {
      const PotentialPath v = free_path(potentials[p], cfg.T, cfg.dt);
      for (int n : cfg.ranks) {
        GramianOptions opts;
        opts.workers = cfg.workers;
        const GramianOperator G =
            assemble_gramian(ObservationProblem{FrequencySplit(n), v, w, SobolevScale(cfg.sobolev), nl}, opts);
        ScanEntry e;
        e.grid = sizes[0];
        e.rank = n;
        e.potential = static_cast<int>(p);
        e.lambda_min = G.lambda_min();
        e.lambda_max = G.lambda_max();
        e.c_obs = e.lambda_min > 0.0 ? 1.0 / std::sqrt(e.lambda_min) : std::numeric_limits<double>::infinity();
        out.push_back(e);
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const ScanEntry& a, const ScanEntry& b) {
    return std::tie(a.grid, a.rank, a.potential) < std::tie(b.grid, b.rank, b.potential);
  });
  return out;
}

std::vector<ReconstructEntry> run_reconstruct(const ExperimentConfig& cfg) {
  const GeometryPtr g = cfg.geometry();
  const ObservationWindow w = cfg.window(g);
  const NonlinearitySpec nl = cfg.nonlinearity_spec();
  const PotentialPath u =
      reference_trajectory(make_initial_data(cfg.initial, g, cfg.seed), nl, cfg.T, cfg.dt, cfg.reference_substeps);
  std::vector<int> ranks = cfg.ranks;
  std::sort(ranks.begin(), ranks.end());
  std::vector<ReconstructEntry> out;
  for (int n : ranks)
    out.push_back({n, verify_reconstruction(u, FrequencySplit(n), w, nl, SobolevScale(cfg.sobolev),
                                            cfg.reconstruction, cfg.workers)});
  return out;
}

DeterminingResult run_determining_modes(const ExperimentConfig& cfg) {
  const GeometryPtr g = cfg.geometry();
  const ObservationWindow w = cfg.window(g);
  const NonlinearitySpec nl = cfg.nonlinearity_spec();
  const SobolevScale s(cfg.sobolev);
  const FrequencySplit split(cfg.ranks.front());
  const SpectralField u0 = make_initial_data(cfg.initial, g, cfg.seed);
  const SpectralField delta = make_high_perturbation(g, split, cfg.initial.decay, s, cfg.seed);
  auto traj = [&](const SpectralField& a) {
    return reference_trajectory(a, nl, cfg.T, cfg.dt, cfg.reference_substeps);
  };
  const PotentialPath u1 = traj(u0);

  DeterminingResult r;
  r.rank = split.rank();
  GramianOptions opts;
  opts.workers = cfg.workers;
  r.c_obs = observability_constant(
      assemble_gramian(ObservationProblem{split, project_low(u1, split), w, s, nl}, opts));

  const PotentialPath zero = PotentialPath::zeros(g, 0.0, u1.dt(), u1.steps());
  for (double eps : cfg.epsilons) {
    const PotentialPath up = traj(u0 + delta * cplx(eps));
    const PotentialPath um = traj(u0 - delta * cplx(eps));
    DeterminingEntry e;
    e.epsilon = eps;
    e.gaps = determining_modes_gap(u1, up, split, w, s);
    e.linear_gaps = determining_modes_gap(zero, (up - um) * 0.5, split, w, s);
    r.entries.push_back(e);
  }
  // Smallest low-mode constant that makes the first-order residual non-positive.
  for (const auto& e : r.entries) {
    const auto& L = e.linear_gaps;
    if (L.low_mode_gap > 0.0)
      r.c_low = std::max(r.c_low, (L.state_gap - r.c_obs * L.observation_gap) / L.low_mode_gap);
  }
  for (auto& e : r.entries) {
    const auto& G = e.gaps;
    const auto& L = e.linear_gaps;
    e.residual = G.state_gap - r.c_obs * G.observation_gap - r.c_low * G.low_mode_gap;
    const double linear = L.state_gap - r.c_obs * L.observation_gap - r.c_low * L.low_mode_gap;
    e.remainder = e.residual - linear;
    e.c_prime = G.state_gap > 0.0 ? std::abs(e.remainder) / (G.state_gap * G.state_gap) : 0.0;
  }
  return r;
}

ConvergenceResult run_convergence(const ExperimentConfig& cfg) {
  const GeometryPtr g = cfg.geometry();
  const NonlinearitySpec nl = cfg.nonlinearity_spec();
  const SobolevScale s(cfg.sobolev);
  ConvergenceResult r;

  {
    std::array<int, 2> k{1, 0};
    SpectralField pw = normalized(SpectralField::mode(g, k), SobolevScale(1.0), 1.0);
    const int f = g->flat_index(k);
    const cplx c0 = pw[f];
    const double omega = g->eigenvalue(f) + nl.dP(std::norm(c0) / g->volume());
    const PotentialPath num = evolve_nls(pw, nl, cfg.T, cfg.dt);
    for (int j = 0; j <= num.steps(); ++j) {
      SpectralField exact = SpectralField::mode(g, k, c0 * std::polar(1.0, -omega * num.time(j)));
      r.plane_wave_error = std::max(r.plane_wave_error, sobolev_norm(num.at(j) - exact, s));
    }
  }

  const SpectralField u0 = make_initial_data(cfg.initial, g, cfg.seed);
  const int finest = 1 << (cfg.refinements + 1);
  const PotentialPath ref = reference_trajectory(u0, nl, cfg.T, cfg.dt, finest);
  const ConservedQuantities q0 = conserved_quantities(u0, nl);
  for (int level = 0; level < cfg.refinements; ++level) {
    const int sub = 1 << level;
    const PotentialPath p = reference_trajectory(u0, nl, cfg.T, cfg.dt, sub);
    ConvergenceEntry e;
    e.dt = cfg.dt / sub;
    e.error = sup_norm(p - ref, s);
    if (!r.entries.empty() && e.error > 0.0) e.order = std::log2(r.entries.back().error / e.error);
    const ConservedQuantities q = conserved_quantities(p.at(p.steps()), nl);
    e.mass_drift = std::abs(q.mass - q0.mass) / std::max(q0.mass, 1e-300);
    e.energy_drift = std::abs(q.energy - q0.energy) / std::max(std::abs(q0.energy), 1e-300);
    r.entries.push_back(e);
  }
  return r;
}

namespace {

Table make_table(std::vector<std::string> columns) {
  Table t;
  t.columns = std::move(columns);
  return t;
}

using I = std::int64_t;

void fill_decay(const ExperimentConfig& cfg, RunRecord& rec) {
  const DecayResult r = run_decay(cfg);
  Table traj = make_table({"t", "h1_norm"});
  for (std::size_t i = 0; i < r.trajectory.times.size(); i += static_cast<std::size_t>(cfg.output_stride))
    traj.rows.push_back({r.trajectory.times[i], r.trajectory.h1_norms[i]});
  Table env = make_table({"block_start", "max_h1_norm"});
  for (std::size_t k = 0; k < r.fit.block_maxima.size(); ++k)
    env.rows.push_back({0.5 + 0.5 * static_cast<double>(k), r.fit.block_maxima[k]});
  rec.tables["trajectory"] = std::move(traj);
  rec.tables["envelope"] = std::move(env);
  rec.summary["gamma"] = r.fit.gamma;
  rec.summary["r2"] = r.fit.r2;
  rec.summary["fit_lo"] = r.fit.lo;
  rec.summary["fit_hi"] = r.fit.hi;
  rec.summary["envelope_nonincreasing"] = r.fit.envelope_nonincreasing;
}

void fill_scan(const ExperimentConfig& cfg, RunRecord& rec) {
  const auto entries = run_gramian_scan(cfg);
  Table t = make_table({"grid", "rank", "potential", "lambda_min", "lambda_max", "c_obs"});
  double min_lambda = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) {
    t.rows.push_back({I(e.grid), I(e.rank), I(e.potential), e.lambda_min, e.lambda_max, e.c_obs});
    min_lambda = std::min(min_lambda, e.lambda_min);
  }
  // Per (grid, potential): spread of C_obs over ranks. Per (rank, potential): drift of lambda_min with the grid.
  double worst_ratio = 1.0;
  double worst_grid_change = 0.0;
  for (const auto& a : entries) {
    for (const auto& b : entries) {
      if (a.grid == b.grid && a.potential == b.potential)
        worst_ratio = std::max(worst_ratio, b.c_obs / a.c_obs);
      if (a.grid == cfg.sizes[0] && b.grid != a.grid && a.rank == b.rank && a.potential == b.potential)
        worst_grid_change = std::max(worst_grid_change, std::abs(b.lambda_min - a.lambda_min) / a.lambda_min);
    }
  }
  rec.tables["scan"] = std::move(t);
  rec.summary["min_lambda_min"] = min_lambda;
  rec.summary["max_c_obs_ratio"] = worst_ratio;
  rec.summary["max_grid_change"] = worst_grid_change;
}

void fill_reconstruct(const ExperimentConfig& cfg, RunRecord& rec) {
  const auto entries = run_reconstruct(cfg);
  Table t = make_table({"rank", "preconditions_met", "high_norm", "observation_norm", "observability_constant",
                        "iterations", "converged", "max_contraction", "relative_error", "absolute_error",
                        "duhamel_residual", "observation_residual"});
  Table inc = make_table({"rank", "iteration", "increment"});
  for (const auto& e : entries) {
    const auto& r = e.result;
    t.rows.push_back({I(e.rank), r.preconditions_met, r.high_norm, r.observation_norm, r.observability_constant,
                      I(r.report.iterations), r.report.converged, r.report.max_contraction(), r.relative_error,
                      r.absolute_error, r.report.duhamel_residual, r.report.observation_residual});
    for (std::size_t k = 0; k < r.report.increments.size(); ++k)
      inc.rows.push_back({I(e.rank), I(k + 1), r.report.increments[k]});
    if (!r.preconditions_met) rec.diagnostics.push_back("rank " + std::to_string(e.rank) + ": " + r.advice);
  }
  rec.tables["reconstruction"] = std::move(t);
  rec.tables["increments"] = std::move(inc);
}

void fill_determining(const ExperimentConfig& cfg, RunRecord& rec) {
  const DeterminingResult r = run_determining_modes(cfg);
  Table t = make_table({"epsilon", "state_gap", "observation_gap", "low_mode_gap", "linear_state_gap",
                        "linear_observation_gap", "linear_low_mode_gap", "residual", "remainder", "c_prime"});
  for (const auto& e : r.entries)
    t.rows.push_back({e.epsilon, e.gaps.state_gap, e.gaps.observation_gap, e.gaps.low_mode_gap,
                      e.linear_gaps.state_gap, e.linear_gaps.observation_gap, e.linear_gaps.low_mode_gap,
                      e.residual, e.remainder, e.c_prime});
  rec.tables["gaps"] = std::move(t);
  rec.summary["rank"] = I(r.rank);
  rec.summary["c_obs"] = r.c_obs;
  rec.summary["c_low"] = r.c_low;
}

void fill_convergence(const ExperimentConfig& cfg, RunRecord& rec) {
  const ConvergenceResult r = run_convergence(cfg);
  Table t = make_table({"dt", "error", "order", "mass_drift", "energy_drift"});
  for (const auto& e : r.entries) t.rows.push_back({e.dt, e.error, e.order, e.mass_drift, e.energy_drift});
  rec.tables["convergence"] = std::move(t);
  rec.summary["plane_wave_error"] = r.plane_wave_error;
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.kind = to_string(cfg.kind);
  rec.config_json = cfg.canonical_json();
  rec.version = std::string(describe_version());
  try {
    switch (cfg.kind) {
      case ExperimentKind::Decay: fill_decay(cfg, rec); break;
      case ExperimentKind::GramianScan: fill_scan(cfg, rec); break;
      case ExperimentKind::Reconstruct: fill_reconstruct(cfg, rec); break;
      case ExperimentKind::DeterminingModes: fill_determining(cfg, rec); break;
      case ExperimentKind::Convergence: fill_convergence(cfg, rec); break;
    }
  } catch (const NumericalError& e) {
    rec.exit_code = 3;
    rec.diagnostics.push_back(std::string("numerical failure: ") + e.what());
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  } catch (const ShapeError& e) {
    throw ConfigError(e.what());
  }
  rec.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace nlsobs
