#pragma once

// Config-driven experiments: JSON config -> model, perturbation, solve,
// fits, check suite -> report and plot-data files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "specpert/asymptotics.hpp"
#include "specpert/checks.hpp"
#include "specpert/kernels.hpp"
#include "specpert/models.hpp"

namespace specpert {

using Json = nlohmann::json;

inline constexpr Index kMaxDimension = 5000;

struct WobbleConfig {
  std::string type = "none";  // none | deterministic | random
  double c = 0.0;
  std::optional<std::uint64_t> seed;
};

struct ModelConfig {
  std::string type = "diagonal";  // diagonal | two_sequence | nystrom
  std::optional<AsymptoticLaw> law;
  std::optional<AsymptoticLaw> law2;
  Index n = 0;
  WobbleConfig wobble;
  std::string kernel;  // brownian_motion | brownian_bridge | expression in s, t
  QuadratureRule rule = QuadratureRule::GaussLegendre;
  /// Nystrom only: keep the leading `rank` eigenpairs (the resolved part).
  std::optional<Index> rank;

  Index effective_dim() const { return rank.value_or(n); }
};

struct PerturbationConfig {
  std::string recipe = "none";  // none | rank_one | random_sign | kernel
  RankOneMode mode = RankOneMode::Lemma1;
  double sigma = 0.0;
  double delta = 1.0;
  std::optional<std::uint64_t> seed;
  std::string rho;  // kernel recipe
};

struct SolverConfig {
  double rtol = 1e-10;
  Index homotopy_steps = 11;
};

struct CheckConfig {
  std::string name;
  std::optional<double> delta;
  std::vector<Index> ns;
};

struct FitConfig {
  std::optional<FitWindow> window;
  std::optional<double> exponent;
  std::optional<double> tol_a;
  std::optional<double> tol_b;
};

struct OutputConfig {
  std::string directory;
  bool json = true;
  bool csv = true;
};

struct SweepConfig {
  std::vector<double> sigma;
  std::vector<double> delta;
  std::vector<Index> n;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ModelConfig model;
  PerturbationConfig perturbation;
  SolverConfig solver;
  std::vector<CheckConfig> checks;
  FitConfig fit;
  OutputConfig output;
  std::uint64_t seed = 0;
  SweepConfig sweep;
  /// Applied to every check when set (sweeps over delta).
  std::optional<double> check_delta;

  Json to_json() const;
};

/// Names accepted in the "checks" list.
const std::vector<std::string>& known_checks();

/// Throws CONFIG_INVALID with the offending field path.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Replaces every seed in the config.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

struct FitComparison {
  std::string label;  // all | odd | even
  std::optional<FitResult> base;
  std::optional<FitResult> perturbed;
  std::optional<ComparisonVerdict> verdict;
};

struct ReportError {
  std::string code;
  std::string message;
};

struct ExperimentReport {
  Json config;
  Json model;
  Json perturbation;
  std::vector<FitComparison> fits;
  std::vector<CheckReport> checks;
  std::map<std::string, std::string> artifacts;
  std::optional<ReportError> error;
  int exit_code = 0;
  /// Wall-clock seconds per stage; written to a separate file so the
  /// report itself is reproducible byte for byte.
  std::map<std::string, double> timings;

  Index passed_count() const;
  /// Localization constant c2 when a localization check ran.
  std::optional<double> c2_star() const;
};

Json to_json(const FitResult& f);
FitResult fit_from_json(const Json& j);
Json to_json(const ComparisonVerdict& v);
ComparisonVerdict verdict_from_json(const Json& j);
Json to_json(const CheckReport& r);
CheckReport check_from_json(const Json& j);
/// Everything except timings.
Json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const Json& j);

/// Runs the experiment and writes artifacts under config.output.directory
/// (skipped when the directory is empty). Never throws for model, solver or
/// check errors: they are embedded in the report with exit code 2.
ExperimentReport run_experiment(const ExperimentConfig& config);

struct SweepPoint {
  double sigma = 0.0;
  double delta = 0.0;
  Index n = 0;
  ExperimentReport report;
};

/// Cartesian grid over config.sweep (empty axes keep the base value). Each
/// point writes into <directory>/point_<i>; the summary CSV is written once
/// at the end. Points run on up to `workers` threads in grid order.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, unsigned workers);

/// 17 significant digits; +-inf and nan spelled out.
std::string format_double(double v);

/// Reads a column of values from a CSV file (last column of each row;
/// non-numeric rows such as headers are skipped).
std::vector<double> read_values_csv(const std::filesystem::path& path);

}  // namespace specpert
