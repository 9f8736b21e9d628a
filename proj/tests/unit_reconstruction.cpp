#include "doctest.h"
#include "nlsobs/reconstruction.hpp"
#include "support.hpp"

using namespace nlsobs;
using namespace nlsobs::test;

namespace {

constexpr double kDt = 1e-3;

ExperimentConfig config(const char* name) { return ExperimentConfig::load(std::string(NLSOBS_CONFIG_DIR) + "/" + name); }

}  // namespace

TEST_CASE("gate profile") {
  CHECK(gate_chi(0.0) == 1.0);
  CHECK(gate_chi(0.5) == 1.0);
  CHECK(gate_chi(-0.5) == 1.0);
  CHECK(gate_chi(1.0) == 0.0);
  CHECK(gate_chi(3.0) == 0.0);
  double prev = 1.0;
  for (double x = 0.5; x <= 1.0; x += 0.01) {
    const double c = gate_chi(x);
    CHECK(c <= prev);
    prev = c;
  }
  CHECK(gate_chi(0.75) > 0.0);
  CHECK(gate_chi(0.75) < 1.0);
  ReconstructionConfig bad;
  bad.R = 2.0;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad = {};
  bad.eta = 0.0;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("linear problems reduce to one observed Cauchy solve") {
  auto g = TorusGeometry::circle(64);
  const FrequencySplit split(8);
  const auto nl = NonlinearitySpec::none();
  const SobolevScale s(1.0);
  const auto w = reference_window(g);
  const auto v = project_low(free_path(random_field(g, 0.4), 0.5, kDt), split);
  ObservedCauchySolver solver(ObservationProblem{split, v, w, s, nl});

  const auto zero = PotentialPath::zeros(g, 0.0, kDt, v.steps());
  CHECK(sup_norm(phi_source(v, zero, nullptr, nl, split), s) == 0.0);

  const auto u_high = free_path(random_high(g, 8, 0.6, 0.05), 0.5, kDt);
  const auto trace = ObservedTrace::of(u_high, w, s);
  const auto a = phi_map(solver, trace, nullptr, zero);
  const auto b = phi_map(solver, trace, nullptr, u_high * 3.0);
  CHECK(sup_norm(a - b, s) == 0.0);

  ReconstructionConfig cfg;
  const auto fp = fixed_point_solve(solver, trace, nullptr, cfg);
  CHECK(fp.report.converged);
  REQUIRE(fp.report.increments.size() == 2);
  CHECK(fp.report.increments[1] == 0.0);
  CHECK(sup_norm(fp.w - u_high, s) <= 1e-10 * sup_norm(u_high, s));

  const auto none = fixed_point_solve(solver, ObservedTrace::zeros(g, 0.0, kDt, v.steps()), nullptr, cfg);
  CHECK(sup_norm(none.w, s) == 0.0);
}

TEST_CASE("reconstruction gate") {
  auto g = TorusGeometry::circle(64);
  const FrequencySplit split(8);
  const auto nl = NonlinearitySpec::none();
  const SobolevScale s(1.0);
  const auto w = reference_window(g);
  const auto zero = PotentialPath::zeros(g, 0.0, kDt, 300);
  ReconstructionConfig cfg;

  const auto r0 = reconstruct(split, zero, zero, zero, w, nl, s, cfg);
  CHECK(r0.gate == 1.0);
  CHECK(r0.observation_norm == 0.0);
  CHECK(sup_norm(r0.w, s) == 0.0);

  const auto v = project_low(free_path(random_field(g, 0.4, 0.1), 0.3, kDt), split);
  const double c = reconstruct(split, v, zero, zero, w, nl, s, cfg).observation_norm;
  REQUIRE(c > 0.0);
  cfg.eta = c;
  const auto closed = reconstruct(split, v, zero, zero, w, nl, s, cfg);
  CHECK(closed.gate == 0.0);
  CHECK(sup_norm(closed.w, s) == 0.0);
  cfg.eta = 2.0 * c;
  const auto open = reconstruct(split, v, zero, zero, w, nl, s, cfg);
  CHECK(open.gate == 1.0);
  // Fully open gate feeds g = -C v: the answer observes as -v up to the projector.
  const ObservedCauchySolver solver(ObservationProblem{split, v, w, s, nl});
  CHECK(solver.observation_residual(open.w, ObservedTrace::of(v, w, s) * -1.0) <= 1e-9 * c);
}

TEST_CASE("linear and cubic reconstruction from observation") {
  const auto cfg = config("reconstruct.json");
  const auto g = cfg.geometry();
  const auto w = cfg.window(g);
  const SobolevScale s(cfg.sobolev);

  SUBCASE("linear") {
    const auto u = free_path(make_initial_data(cfg.initial, g, cfg.seed), 1.0, kDt);
    const auto r = verify_reconstruction(u, FrequencySplit(8), w, NonlinearitySpec::none(), s, cfg.reconstruction);
    REQUIRE(r.preconditions_met);
    CHECK(r.relative_error <= 1e-8);
  }

  SUBCASE("cubic") {
    const auto entries = run_reconstruct(cfg);
    REQUIRE(entries.size() == 3);
    for (const auto& e : entries) {
      const auto& r = e.result;
      REQUIRE(r.preconditions_met);
      // At n = 32 the high band is ~1e-8, so only the absolute error is meaningful there.
      if (e.rank <= 16) CHECK(r.relative_error <= 1e-4);
      CHECK(r.absolute_error <= 1e-8);
      CHECK(r.report.converged);
      CHECK(r.report.max_contraction() < 1.0);
      CHECK(r.report.duhamel_residual <= 1e-7);
      CHECK(r.report.observation_residual <= 1e-7);
    }
    CHECK(entries[1].result.absolute_error < entries[0].result.absolute_error);
    CHECK(entries[2].result.absolute_error < entries[1].result.absolute_error);
    CHECK(entries[2].result.report.max_contraction() < entries[0].result.report.max_contraction());
  }

  SUBCASE("preconditions") {
    auto c = cfg.reconstruction;
    c.R = 1e-6;
    const auto u = free_path(make_initial_data(cfg.initial, g, cfg.seed), 0.1, kDt);
    const auto r = verify_reconstruction(u, FrequencySplit(8), w, cfg.nonlinearity_spec(), s, c);
    CHECK(!r.preconditions_met);
    CHECK(r.advice.find("increase n") != std::string::npos);
  }
}

TEST_CASE("fixed point is independent of the starting point") {
  const auto cfg = config("reconstruct.json");
  const auto g = cfg.geometry();
  const auto w = cfg.window(g);
  const auto nl = cfg.nonlinearity_spec();
  const SobolevScale s(cfg.sobolev);
  const FrequencySplit split(8);
  const auto u = reference_trajectory(make_initial_data(cfg.initial, g, cfg.seed), nl, 0.5, kDt, 4);
  const ObservedCauchySolver solver(ObservationProblem{split, project_low(u, split), w, s, nl});
  const auto trace = ObservedTrace::of(project_high(u, split), w, s);
  const auto a = fixed_point_solve(solver, trace, nullptr, cfg.reconstruction);
  const auto start = project_high(free_path(random_high(g, 8, 0.6, 0.05), 0.5, kDt), split);
  const auto b = fixed_point_solve(solver, trace, nullptr, cfg.reconstruction, &start);
  CHECK(sup_norm(a.w - b.w, s) <= 1e-8);
  CHECK(sup_norm(a.w - project_high(u, split), s) <= 1e-4 * sup_norm(project_high(u, split), s));
}

TEST_CASE("determining-mode gaps") {
  auto g = TorusGeometry::circle(64);
  const FrequencySplit split(8);
  const SobolevScale s(1.0);
  const auto w = reference_window(g);
  const auto u = free_path(random_field(g, 0.4), 0.5, kDt);
  const auto same = determining_modes_gap(u, u, split, w, s);
  CHECK(same.state_gap == 0.0);
  CHECK(same.observation_gap == 0.0);
  CHECK(same.low_mode_gap == 0.0);

  // Free high-band differences obey the linear observability inequality.
  GramianOptions opts;
  opts.use_cache = false;
  const double c = observability_constant(assemble_gramian(
      ObservationProblem{split, PotentialPath::zeros(g, 0.0, kDt, 500), w, s, NonlinearitySpec::none()}, opts));
  for (int t = 0; t < 5; ++t) {
    const auto z = free_path(random_high(g, 8), 0.5, kDt);
    const auto r = determining_modes_gap(u + z, u, split, w, s);
    CHECK(r.low_mode_gap <= 1e-14 * r.state_gap);
    CHECK(r.state_gap <= c * r.observation_gap * (1.0 + 1e-9));
  }
}

TEST_CASE("determining modes: residual is first order, remainder second order") {
  const auto r = run_determining_modes(config("determining_modes.json"));
  REQUIRE(r.entries.size() == 2);
  CHECK(r.c_obs > 0.0);
  CHECK(r.c_low >= 0.0);
  const auto& a = r.entries[0];
  const auto& b = r.entries[1];
  const double ratio = a.epsilon / b.epsilon;
  CHECK(std::abs(a.residual / b.residual) == doctest::Approx(ratio).epsilon(0.1));
  CHECK(std::abs(a.remainder / b.remainder) == doctest::Approx(ratio * ratio).epsilon(0.1));
  CHECK(b.c_prime == doctest::Approx(a.c_prime).epsilon(0.05));
  for (const auto& e : r.entries) CHECK(e.residual <= 0.0);
}
