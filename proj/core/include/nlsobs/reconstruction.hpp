#pragma once

#include <string>
#include <vector>

#include "nlsobs/errors.hpp"
#include "nlsobs/observability.hpp"

namespace nlsobs {

struct ReconstructionConfig {
  double eta = 0.1;         // observation smallness threshold
  double R = 0.1;           // ball radius for the high-band unknown
  double R0 = 1.0;          // outer radius
  int max_iterations = 100;
  double tolerance = 1e-10;  // on sup_t ||w^{k+1} - w^k||_{H^s}

  void validate() const;
};

// Smooth gate: 1 on [-1/2, 1/2], 0 outside (-1, 1), monotone in between.
double gate_chi(double x);

struct FixedPointReport {
  int iterations = 0;                       // applications of Phi
  std::vector<double> increments;           // ||w^{k+1} - w^k||_{C0 H^s}
  std::vector<double> contraction_factors;  // increments[k] / increments[k-1], k >= 1
  bool converged = false;
  double duhamel_residual = -1.0;      // filled after convergence
  double observation_residual = -1.0;  // ||Pi(C w - g)||

  double max_contraction() const;
};

class ContractionError : public NumericalError {
 public:
  ContractionError(const std::string& what, FixedPointReport report)
      : NumericalError(what), report_(std::move(report)) {}
  const FixedPointReport& report() const { return report_; }

 private:
  FixedPointReport report_;
};

// Source of Phi: Q_n(-i f(v) - i H(v, w) + h), node by node.
PotentialPath phi_source(const PotentialPath& v, const PotentialPath& w, const PotentialPath* h,
                         const NonlinearitySpec& nl, const FrequencySplit& split);

// Phi(w) = F_n(v)(g, -i f(v) - i H(v, w) + h).
PotentialPath phi_map(const ObservedCauchySolver& solver, const ObservedTrace& g, const PotentialPath* h,
                      const PotentialPath& w);
PotentialPath phi_map(const FrequencySplit& split, const PotentialPath& v, const ObservationWindow& window,
                      const ObservedTrace& g, const PotentialPath& h, const PotentialPath& w,
                      const NonlinearitySpec& nl, const SobolevScale& s);

struct FixedPointResult {
  PotentialPath w;
  FixedPointReport report;
};

// Picard iteration from `start` (zero when null). Throws ContractionError on failure.
FixedPointResult fixed_point_solve(const ObservedCauchySolver& solver, const ObservedTrace& g,
                                   const PotentialPath* h, const ReconstructionConfig& cfg,
                                   const PotentialPath* start = nullptr);
FixedPointResult fixed_point_solve(const FrequencySplit& split, const PotentialPath& v,
                                   const ObservationWindow& window, const ObservedTrace& g,
                                   const PotentialPath& h, const NonlinearitySpec& nl,
                                   const SobolevScale& s, const ReconstructionConfig& cfg);

struct ReconstructResult {
  PotentialPath w;
  FixedPointReport report;
  double observation_norm = 0.0;  // ||C v||_{L2 H^s}
  double gate = 0.0;              // chi(||C v|| / eta)
};

ReconstructResult reconstruct(const FrequencySplit& split, const PotentialPath& v_low, const PotentialPath& h1,
                              const PotentialPath& h2, const ObservationWindow& window,
                              const NonlinearitySpec& nl, const SobolevScale& s, const ReconstructionConfig& cfg);

struct VerificationResult {
  bool preconditions_met = false;
  std::string advice;
  double relative_error = 0.0;
  double absolute_error = 0.0;
  double high_norm = 0.0;         // ||Q_n u||_{C0 H^s}
  double observation_norm = 0.0;  // ||C Q_n u||_{L2 H^s}
  double observability_constant = 0.0;
  FixedPointReport report;
};

VerificationResult verify_reconstruction(const PotentialPath& u, const FrequencySplit& split,
                                         const ObservationWindow& window, const NonlinearitySpec& nl,
                                         const SobolevScale& s, const ReconstructionConfig& cfg, int workers = 1);

struct GapReport {
  double state_gap = 0.0;        // ||u1 - u2||_{C0 H^s}
  double observation_gap = 0.0;  // ||C(u1 - u2)||_{L2 H^s}
  double low_mode_gap = 0.0;     // ||P_n(u1 - u2)||_{C0 H^s}
};

GapReport determining_modes_gap(const PotentialPath& u1, const PotentialPath& u2, const FrequencySplit& split,
                                const ObservationWindow& window, const SobolevScale& s);

}  // namespace nlsobs
