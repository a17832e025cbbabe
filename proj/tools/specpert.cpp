// specpert: config-driven spectral perturbation experiments.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "specpert/error.hpp"
#include "specpert/experiment.hpp"

#ifndef SPECPERT_CONFIG_DIR
#define SPECPERT_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace specpert;

namespace {

struct Common {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format;
  unsigned workers = 1;
};

void apply(const Common& opts, ExperimentConfig& c) {
  if (opts.seed) override_seed(c, *opts.seed);
  if (!opts.out.empty()) c.output.directory = opts.out;
  if (c.output.directory.empty()) c.output.directory = (fs::path("out") / c.name).string();
  if (!opts.format.empty()) {
    c.output.json = opts.format != "csv";
    c.output.csv = opts.format != "json";
  }
}

void print_report(const ExperimentReport& r, const std::string& directory) {
  for (const auto& fc : r.fits) {
    if (!fc.verdict) continue;
    std::printf("fit %-4s a: %s -> %s  b: %s -> %s  %s\n", fc.label.c_str(), format_double(fc.base->a_hat).c_str(),
                format_double(fc.perturbed->a_hat).c_str(), format_double(fc.base->b_hat).c_str(),
                format_double(fc.perturbed->b_hat).c_str(), fc.verdict->preserved ? "preserved" : "NOT preserved");
  }
  for (const auto& c : r.checks) {
    std::printf("[%s] %s", c.passed ? "PASS" : "FAIL", c.name.c_str());
    for (const auto& f : c.flags) std::printf(" %s", f.c_str());
    std::printf("\n");
  }
  if (r.error) std::printf("error %s: %s\n", r.error->code.c_str(), r.error->message.c_str());
  std::printf("%lld/%zu checks passed, exit %d, output %s\n", static_cast<long long>(r.passed_count()),
              r.checks.size(), r.exit_code, directory.c_str());
}

int run_config(ExperimentConfig c, const Common& opts) {
  apply(opts, c);
  const ExperimentReport r = run_experiment(c);
  print_report(r, c.output.directory);
  return r.exit_code;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

fs::path demo_path(std::string name) {
  if (name.rfind("demo_", 0) != 0) name = "demo_" + name;
  if (name.size() < 5 || name.substr(name.size() - 5) != ".json") name += ".json";
  for (const fs::path dir : {fs::path(SPECPERT_CONFIG_DIR), fs::path("configs")}) {
    if (fs::exists(dir / name)) return dir / name;
  }
  throw Error(ErrorCode::Io, "demo config " + name + " not found");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral perturbation experiments"};
  app.require_subcommand(1);
  Common opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", opts.out, "Output directory");
    sub->add_option("--seed", opts.seed, "Seed overriding every seed in the config");
    sub->add_option("--format", opts.format, "Report formats")->check(CLI::IsMember({"json", "csv", "both"}));
    sub->add_option("--workers", opts.workers, "Parallel workers")->check(CLI::PositiveNumber);
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("config", config_path, "Config file")->required();
  add_common(run);

  auto* sweep = app.add_subcommand("sweep", "Run the config's sigma/delta/N grid");
  sweep->add_option("config", config_path, "Config file")->required();
  add_common(sweep);

  std::string only;
  auto* check = app.add_subcommand("check", "Run selected checks of a config");
  check->add_option("config", config_path, "Config file")->required();
  check->add_option("--only", only, "Comma-separated check names")->required();
  add_common(check);

  std::string demo_name;
  auto* demo = app.add_subcommand("demo", "Run a bundled demo config");
  demo->add_option("name", demo_name, "diagonal, two_sequence, brownian, bridge or violating")->required();
  add_common(demo);

  std::string csv_path;
  std::optional<double> exponent;
  std::string window_text;
  auto* fit = app.add_subcommand("fit", "Two-term fit of a column of values");
  fit->add_option("csv", csv_path, "CSV file; the last column holds the values")->required();
  fit->add_option("--exponent", exponent, "Exponent B (estimated when omitted)");
  fit->add_option("--window", window_text, "first,last (1-based)");
  fit->add_option("--out", opts.out, "Write fit.json into this directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_config(load_config(config_path), opts);
    if (demo->parsed()) return run_config(load_config(demo_path(demo_name)), opts);
    if (check->parsed()) {
      ExperimentConfig c = load_config(config_path);
      std::vector<CheckConfig> selected;
      for (const auto& name : split_list(only)) {
        const auto& known = known_checks();
        if (std::find(known.begin(), known.end(), name) == known.end()) {
          throw Error(ErrorCode::ConfigInvalid, "--only: unknown check '" + name + "'");
        }
        auto it = std::find_if(c.checks.begin(), c.checks.end(), [&](const CheckConfig& cc) { return cc.name == name; });
        selected.push_back(it != c.checks.end() ? *it : CheckConfig{name, std::nullopt, {}});
      }
      c.checks = selected;
      return run_config(c, opts);
    }
    if (sweep->parsed()) {
      ExperimentConfig c = load_config(config_path);
      apply(opts, c);
      const auto points = run_sweep(c, opts.workers);
      int worst = 0;
      for (const auto& p : points) {
        std::printf("sigma=%s delta=%s N=%lld: %lld/%zu passed, exit %d\n", format_double(p.sigma).c_str(),
                    format_double(p.delta).c_str(), static_cast<long long>(p.n),
                    static_cast<long long>(p.report.passed_count()), p.report.checks.size(), p.report.exit_code);
        worst = std::max(worst, p.report.exit_code);
      }
      std::printf("summary %s\n", (fs::path(c.output.directory) / "sweep_summary.csv").string().c_str());
      return worst;
    }
    if (fit->parsed()) {
      const auto values = read_values_csv(csv_path);
      const auto n = static_cast<Index>(values.size());
      FitWindow window = default_window(n);
      if (!window_text.empty()) {
        const auto parts = split_list(window_text);
        if (parts.size() != 2) throw Error(ErrorCode::InvalidArgument, "--window expects first,last");
        window = {std::stoll(parts[0]), std::stoll(parts[1])};
      }
      const double b = exponent ? *exponent : estimate_exponent(values);
      const Json j = to_json(fit_two_term(values, b, window));
      const std::string text = j.dump(2) + "\n";
      std::cout << text;
      if (!opts.out.empty()) {
        fs::create_directories(opts.out);
        std::ofstream(fs::path(opts.out) / "fit.json") << text;
      }
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
