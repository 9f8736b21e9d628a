#include <iostream>

#include "CLI11.hpp"
#include "nlsobs/experiment.hpp"
#include "nlsobs/version.hpp"

namespace nlsobs {

namespace {

constexpr int kUsageError = 2;
constexpr int kIoError = 4;

void print_summary(const RunRecord& r, std::ostream& os) {
  os << "kind: " << r.kind << "\n";
  for (const auto& [key, value] : r.summary) {
    os << key << ": ";
    std::visit(
        [&](const auto& x) {
          using X = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<X, double>)
            os << format_double(x);
          else if constexpr (std::is_same_v<X, bool>)
            os << (x ? "true" : "false");
          else
            os << x;
        },
        value);
    os << "\n";
  }
  for (const auto& [name, t] : r.tables) os << "table " << name << ": " << t.rows.size() << " rows\n";
  for (const auto& d : r.diagnostics) os << "diagnostic: " << d << "\n";
}

int do_run(const std::string& config_path, const std::string& output, const std::string& format) {
  const ExperimentConfig cfg = ExperimentConfig::load(config_path);
  const RunRecord rec = run_experiment(cfg);
  const std::filesystem::path dir = output.empty() ? cfg.output : output;
  if (format == "json" || format == "both") export_record(rec, ExportFormat::Json, dir);
  if (format == "csv" || format == "both") export_record(rec, ExportFormat::Csv, dir);
  print_summary(rec, std::cout);
  std::cout << "output: " << dir.string() << "\n";
  std::cerr << "elapsed: " << rec.duration_seconds << " s\n";
  return rec.exit_code;
}

int do_check_gcc(const std::string& config_path, double T0_override) {
  const ExperimentConfig cfg = ExperimentConfig::load(config_path);
  const GeometryPtr g = cfg.geometry();
  const ObservationWindow w = cfg.window(g);
  const double T0 = T0_override > 0.0 ? T0_override : cfg.gcc.T0;
  const GccReport r = gcc_ray_check(w, T0, GccSampling{cfg.gcc.positions, cfg.gcc.directions, cfg.gcc.seed});
  std::cout << (r.passed ? "pass" : "FAIL") << ": " << r.rays_tested << " rays, " << r.rays_failed
            << " missed the window within T0 = " << format_double(T0) << "\n";
  std::cout << "window: " << w.describe() << "\n";
  const auto& ray = r.worst_ray;
  std::cout << "worst ray: origin (" << format_double(ray.origin[0]) << ", " << format_double(ray.origin[1])
            << ") direction (" << format_double(ray.direction[0]) << ", " << format_double(ray.direction[1])
            << ") entry time " << format_double(r.worst_entry_time) << "\n";
  return r.passed ? 0 : 1;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Observability and high-frequency reconstruction experiments for NLS on tori", "nlsobs"};
  app.require_subcommand(1);

  std::string run_config, run_output, run_format = "both";
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config and export its record");
  run->add_option("config", run_config, "Config file (a previous record.json is accepted too)")->required();
  run->add_option("-o,--output", run_output, "Output directory (default: the config's output field)");
  run->add_option("-f,--format", run_format, "Export format")
      ->check(CLI::IsMember({"csv", "json", "both"}))
      ->capture_default_str();

  std::string gcc_config;
  double gcc_T0 = 0.0;
  auto* gcc = app.add_subcommand("check-gcc", "Sample rays and test whether they all meet the window");
  gcc->add_option("config", gcc_config, "Config file with geometry, window and gcc sections")->required();
  gcc->add_option("--T0", gcc_T0, "Override the horizon from the config");

  bool describe = false;
  auto* version = app.add_subcommand("version", "Print the version");
  version->add_flag("--describe", describe, "Print the git-describe string instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (*version) {
      std::cout << (describe ? describe_version() : semantic_version()) << "\n";
      return 0;
    }
    if (*run) return do_run(run_config, run_output, run_format);
    if (*gcc) return do_check_gcc(gcc_config, gcc_T0);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace nlsobs
