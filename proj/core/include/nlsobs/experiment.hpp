#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nlsobs/reconstruction.hpp"

namespace nlsobs {

enum class ExperimentKind { Decay, GramianScan, Reconstruct, DeterminingModes, Convergence };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& name);  // throws ConfigError

struct InitialDataConfig {
  std::string kind = "random";  // "random" | "modes"
  double decay = 0.3;           // random: |u_k| ~ decay^{|k|}
  double h1_norm = 1.0;         // normalisation; <= 0 keeps raw amplitudes
  struct Mode {
    std::array<int, 2> k{0, 0};
    double re = 0.0;
    double im = 0.0;
  };
  std::vector<Mode> modes;
};

struct PotentialSampling {
  int count = 5;
  int modes = 8;         // lowest ranks that carry the potential
  double radius = 1.0;   // Sobolev-ball radius
  double sobolev = 2.0;  // ball exponent
};

struct GccConfig {
  double T0 = 2.0 * std::numbers::pi;
  std::size_t positions = 100;
  std::size_t directions = 100;
  std::uint64_t seed = 7;
};

struct ExperimentConfig {
  int schema_version = 1;
  ExperimentKind kind = ExperimentKind::Reconstruct;
  std::vector<double> lengths{2.0 * std::numbers::pi};
  std::vector<int> sizes{64};
  bool window_everywhere = false;
  std::vector<WindowBox> window_boxes;
  std::vector<double> nonlinearity{0.0, 1.0};
  bool defocusing = true;
  double T = 1.0;
  double dt = 1e-3;
  int reference_substeps = 10;
  double sobolev = 1.0;
  std::vector<int> ranks{8, 16, 32};
  ReconstructionConfig reconstruction;
  InitialDataConfig initial;
  PotentialSampling potentials;
  double damping_amplitude = 10.0;
  std::array<double, 2> fit_window{1.0, 10.0};
  int output_stride = 10;
  std::vector<double> epsilons{1e-3, 1e-4};
  int refinements = 3;
  GccConfig gcc;
  std::vector<int> extra_sizes;  // gramian-scan: repeat at these grid sizes (axis 0 scaled, others too)
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output = "results";

  static ExperimentConfig from_json_text(const std::string& text);  // throws ConfigError
  static ExperimentConfig load(const std::filesystem::path& path);   // IoError / ConfigError
  // Every field, keys sorted, floats at 17 significant digits.
  std::string canonical_json() const;

  GeometryPtr geometry() const;
  GeometryPtr geometry_with_sizes(const std::vector<int>& sizes) const;
  ObservationWindow window(const GeometryPtr& g) const;
  NonlinearitySpec nonlinearity_spec() const;
};

// ---- typed experiment building blocks ----

SpectralField make_initial_data(const InitialDataConfig& cfg, const GeometryPtr& g, std::uint64_t seed);
// Unit-norm (in H^s) random high-band field with decay^{|k|} envelope.
SpectralField make_high_perturbation(const GeometryPtr& g, const FrequencySplit& split, double decay,
                                     const SobolevScale& s, std::uint64_t seed);
// Seeded low-band initial potentials, each normalised to the ball radius.
std::vector<SpectralField> sample_potentials(const PotentialSampling& cfg, const GeometryPtr& g, std::uint64_t seed);
// v(t) = e^{tA} v0 on the uniform grid.
PotentialPath free_path(const SpectralField& v0, double T, double dt);
// Reference trajectory on the dt grid computed with dt / substeps.
PotentialPath reference_trajectory(const SpectralField& u0, const NonlinearitySpec& nl, double T, double dt,
                                   int substeps);

struct DecayFit {
  double gamma = 0.0;
  double r2 = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool envelope_nonincreasing = false;
  std::vector<double> block_maxima;
};

// Log-linear least squares of norms on [lo, hi]; envelope = maxima over
// consecutive blocks of length `block` starting at `envelope_start`.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& norms, double lo, double hi,
                   double envelope_start = 0.5, double block = 0.5);

struct DecayResult {
  DampedTrajectory trajectory;
  DecayFit fit;
};
DecayResult run_decay(const ExperimentConfig& cfg);

struct ScanEntry {
  int grid = 0;  // N along axis 0
  int rank = 0;
  int potential = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double c_obs = 0.0;
};
std::vector<ScanEntry> run_gramian_scan(const ExperimentConfig& cfg);

struct ReconstructEntry {
  int rank = 0;
  VerificationResult result;
};
std::vector<ReconstructEntry> run_reconstruct(const ExperimentConfig& cfg);

struct DeterminingEntry {
  double epsilon = 0.0;
  GapReport gaps;          // nonlinear perturbation
  GapReport linear_gaps;   // odd part (u(+eps) - u(-eps)) / 2
  double residual = 0.0;   // state - (C_obs obs + C low)
  double remainder = 0.0;  // residual minus its first-order part
  double c_prime = 0.0;    // |remainder| / state^2
};
struct DeterminingResult {
  int rank = 0;
  double c_obs = 0.0;
  double c_low = 0.0;
  std::vector<DeterminingEntry> entries;
};
DeterminingResult run_determining_modes(const ExperimentConfig& cfg);

struct ConvergenceEntry {
  double dt = 0.0;
  double error = 0.0;  // sup_t ||u_dt - u_ref||_{H^s}
  double order = 0.0;  // log2 of the error ratio to the previous row (0 on the first)
  double mass_drift = 0.0;
  double energy_drift = 0.0;
};
struct ConvergenceResult {
  double plane_wave_error = 0.0;
  std::vector<ConvergenceEntry> entries;
};
ConvergenceResult run_convergence(const ExperimentConfig& cfg);

// ---- records ----

using Cell = std::variant<std::int64_t, double, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct RunRecord {
  std::string kind;
  std::string config_json;  // canonical echo; re-runnable
  std::string version;
  double duration_seconds = 0.0;  // not exported, see export_record
  std::map<std::string, Table> tables;
  std::map<std::string, Cell> summary;
  std::vector<std::string> diagnostics;
  int exit_code = 0;  // 0 ok, 3 numerical failure
};

// Never throws numerical errors; they are recorded with exit_code 3.
RunRecord run_experiment(const ExperimentConfig& cfg);

enum class ExportFormat { Csv, Json };

std::string format_double(double x);  // %.17g, with nan/inf spelled out
std::string table_to_csv(const Table& t);
// Sorted keys; the wall-clock duration is left out so reruns are byte-identical.
std::string record_to_json(const RunRecord& r);
// Json: <dir>/record.json. Csv: <dir>/<table>.csv per table. Throws IoError.
std::vector<std::filesystem::path> export_record(const RunRecord& r, ExportFormat format,
                                                 const std::filesystem::path& dir);

int cli_main(int argc, char** argv);

}  // namespace nlsobs
