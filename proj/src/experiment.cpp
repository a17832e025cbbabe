#include "specpert/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "specpert/error.hpp"

namespace specpert {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// ---------------------------------------------------------------- json io

Json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double to_num(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorCode::ParseError, "expected a number, got " + j.dump());
}

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Vector vec_from(const Json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = to_num(j[i]);
  return v;
}

Json map_json(const std::map<std::string, double>& m) {
  Json o = Json::object();
  for (const auto& [k, v] : m) o[k] = num(v);
  return o;
}

std::map<std::string, double> map_from(const Json& j) {
  std::map<std::string, double> m;
  for (const auto& [k, v] : j.items()) m[k] = to_num(v);
  return m;
}

Json law_json(const AsymptoticLaw& law) {
  return {{"a", num(law.a)}, {"b", num(law.b)}, {"exponent", num(law.exponent)}, {"delta", num(law.delta)}};
}

// ---------------------------------------------------------- config parsing

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigInvalid, path + ": " + what);
}

class Fields {
 public:
  Fields(const Json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) invalid(path_, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
      if (!ok.count(key)) invalid(at(key), "unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const Json& raw(const char* key) const { return j_.at(key); }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const char* key) const {
    if (!has(key)) invalid(at(key), "missing");
    return parse_number(j_.at(key), at(key));
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  Index integer(const char* key) const {
    if (!has(key)) invalid(at(key), "missing");
    return parse_integer(j_.at(key), at(key));
  }
  Index integer(const char* key, Index fallback) const { return has(key) ? integer(key) : fallback; }

  std::string string(const char* key) const {
    if (!has(key)) invalid(at(key), "missing");
    if (!j_.at(key).is_string()) invalid(at(key), "expected a string");
    return j_.at(key).get<std::string>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  static double parse_number(const Json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      try {
        return evaluate_constant(s);
      } catch (const Error& e) {
        invalid(path, e.what());
      }
    }
    invalid(path, "expected a number or constant expression");
  }

  static Index parse_integer(const Json& v, const std::string& path) {
    if (v.is_number_integer()) return v.get<Index>();
    if (v.is_number()) {
      const double d = v.get<double>();
      if (d == std::floor(d) && std::abs(d) < 1e15) return static_cast<Index>(d);
    }
    invalid(path, "expected an integer");
  }

 private:
  const Json& j_;
  std::string path_;
};

std::uint64_t parse_seed(const Json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  invalid(path, "expected a nonnegative integer seed");
}

AsymptoticLaw parse_law(const Json& j, const std::string& path) {
  const Fields f(j, path, {"a", "b", "exponent", "delta"});
  AsymptoticLaw law;
  law.a = f.number("a");
  law.b = f.number("b", 0.0);
  law.exponent = f.number("exponent");
  law.delta = f.number("delta", kInf);
  try {
    law.validate();
  } catch (const Error& e) {
    invalid(path, e.what());
  }
  return law;
}

std::vector<Index> parse_indices(const Json& j, const std::string& path) {
  if (!j.is_array()) invalid(path, "expected an array of indices");
  std::vector<Index> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Index v = Fields::parse_integer(j[i], path + "[" + std::to_string(i) + "]");
    if (v < 1) invalid(path, "indices are 1-based");
    out.push_back(v);
  }
  return out;
}

std::vector<double> parse_numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) invalid(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(Fields::parse_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ModelConfig parse_model(const Json& j) {
  const Fields f(j, "model", {"type", "law", "laws", "N", "wobble", "kernel", "rule", "rank"});
  ModelConfig m;
  m.type = f.string("type");
  m.n = f.integer("N");
  if (m.n < 2) invalid("model.N", "must be at least 2");
  if (m.n > kMaxDimension) invalid("model.N", "exceeds the dense-solve limit " + std::to_string(kMaxDimension));
  if (m.type == "diagonal") {
    if (f.has("rank")) invalid("model.rank", "only valid for nystrom models");
    m.law = parse_law(f.raw("law"), "model.law");
    if (f.has("wobble")) {
      const Fields w(f.raw("wobble"), "model.wobble", {"type", "c", "seed"});
      m.wobble.type = w.string("type", "none");
      if (m.wobble.type != "none" && m.wobble.type != "deterministic" && m.wobble.type != "random") {
        invalid("model.wobble.type", "expected none, deterministic or random");
      }
      m.wobble.c = w.number("c", 0.0);
      if (w.has("seed")) m.wobble.seed = parse_seed(w.raw("seed"), "model.wobble.seed");
    }
  } else if (m.type == "two_sequence") {
    if (f.has("rank")) invalid("model.rank", "only valid for nystrom models");
    if (!f.has("laws") || !f.raw("laws").is_array() || f.raw("laws").size() != 2) {
      invalid("model.laws", "expected an array of two laws");
    }
    m.law = parse_law(f.raw("laws")[0], "model.laws[0]");
    m.law2 = parse_law(f.raw("laws")[1], "model.laws[1]");
  } else if (m.type == "nystrom") {
    m.kernel = f.string("kernel");
    const std::string rule = f.string("rule", "gauss_legendre");
    if (rule == "gauss_legendre") {
      m.rule = QuadratureRule::GaussLegendre;
    } else if (rule == "midpoint") {
      m.rule = QuadratureRule::Midpoint;
    } else {
      invalid("model.rule", "expected gauss_legendre or midpoint");
    }
    if (f.has("law")) m.law = parse_law(f.raw("law"), "model.law");
    if (f.has("rank")) {
      m.rank = f.integer("rank");
      if (*m.rank < 2 || *m.rank > m.n) invalid("model.rank", "must lie in [2, N]");
    }
  } else {
    invalid("model.type", "expected diagonal, two_sequence or nystrom");
  }
  return m;
}

PerturbationConfig parse_perturbation(const Json& j) {
  const Fields f(j, "perturbation", {"recipe", "mode", "sigma", "delta", "seed", "rho"});
  PerturbationConfig p;
  p.recipe = f.string("recipe");
  if (p.recipe == "none") return p;
  if (p.recipe == "rank_one") {
    const std::string mode = f.string("mode", "lemma1");
    if (mode == "lemma1") {
      p.mode = RankOneMode::Lemma1;
    } else if (mode == "theorem1") {
      p.mode = RankOneMode::Theorem1;
    } else {
      invalid("perturbation.mode", "expected lemma1 or theorem1");
    }
  } else if (p.recipe == "random_sign") {
    if (f.has("seed")) p.seed = parse_seed(f.raw("seed"), "perturbation.seed");
  } else if (p.recipe == "kernel") {
    p.rho = f.string("rho");
    try {
      (void)Expression(p.rho);
    } catch (const Error& e) {
      invalid("perturbation.rho", e.what());
    }
    return p;
  } else {
    invalid("perturbation.recipe", "expected none, rank_one, random_sign or kernel");
  }
  p.sigma = f.number("sigma");
  p.delta = f.number("delta");
  return p;
}

}  // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{
      "lemma1_condition", "theorem1_condition", "residual_radius", "localization", "sandwich",
      "homotopy",         "stationarity",       "coefficient_sum", "frak_c",       "extremal_j"};
  return names;
}

ExperimentConfig parse_config(const Json& j) {
  const Fields f(j, "", {"name", "model", "perturbation", "solver", "checks", "fit", "output", "seed", "sweep"});
  ExperimentConfig c;
  c.name = f.string("name", "experiment");
  if (!f.has("model")) invalid("model", "missing");
  c.model = parse_model(f.raw("model"));
  if (f.has("perturbation")) c.perturbation = parse_perturbation(f.raw("perturbation"));
  if (f.has("seed")) c.seed = parse_seed(f.raw("seed"), "seed");
  if (f.has("solver")) {
    const Fields s(f.raw("solver"), "solver", {"rtol", "homotopy_steps"});
    c.solver.rtol = s.number("rtol", c.solver.rtol);
    if (!(c.solver.rtol > 0.0 && c.solver.rtol < 1.0)) invalid("solver.rtol", "must lie in (0, 1)");
    c.solver.homotopy_steps = s.integer("homotopy_steps", c.solver.homotopy_steps);
    if (c.solver.homotopy_steps < 2) invalid("solver.homotopy_steps", "must be at least 2");
  }
  if (f.has("checks")) {
    const Json& list = f.raw("checks");
    if (list.is_string() && list.get<std::string>() == "all") {
      for (const auto& name : known_checks()) c.checks.push_back({name, std::nullopt, {}});
    } else if (list.is_array()) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "checks[" + std::to_string(i) + "]";
        CheckConfig cc;
        if (list[i].is_string()) {
          cc.name = list[i].get<std::string>();
        } else {
          const Fields cf(list[i], path, {"name", "delta", "ns"});
          cc.name = cf.string("name");
          if (cf.has("delta")) cc.delta = cf.number("delta");
          if (cf.has("ns")) cc.ns = parse_indices(cf.raw("ns"), path + ".ns");
        }
        const auto& known = known_checks();
        if (std::find(known.begin(), known.end(), cc.name) == known.end()) {
          invalid(path, "unknown check '" + cc.name + "'");
        }
        c.checks.push_back(std::move(cc));
      }
    } else {
      invalid("checks", "expected \"all\" or an array");
    }
  } else {
    for (const auto& name : known_checks()) c.checks.push_back({name, std::nullopt, {}});
  }
  if (f.has("fit")) {
    const Fields ff(f.raw("fit"), "fit", {"window", "exponent", "tol_a", "tol_b"});
    if (ff.has("window")) {
      const auto w = parse_indices(ff.raw("window"), "fit.window");
      if (w.size() != 2 || w[0] < 2 || w[1] < w[0] || w[1] > c.model.effective_dim()) {
        invalid("fit.window", "expected [first, last] with 2 <= first <= last <= N");
      }
      c.fit.window = FitWindow{w[0], w[1]};
    }
    if (ff.has("exponent")) c.fit.exponent = ff.number("exponent");
    if (ff.has("tol_a")) c.fit.tol_a = ff.number("tol_a");
    if (ff.has("tol_b")) c.fit.tol_b = ff.number("tol_b");
  }
  if (f.has("output")) {
    const Fields o(f.raw("output"), "output", {"directory", "formats"});
    c.output.directory = o.string("directory", "");
    const std::string formats = o.string("formats", "both");
    if (formats != "json" && formats != "csv" && formats != "both") {
      invalid("output.formats", "expected json, csv or both");
    }
    c.output.json = formats != "csv";
    c.output.csv = formats != "json";
  }
  if (f.has("sweep")) {
    const Fields s(f.raw("sweep"), "sweep", {"sigma", "delta", "N"});
    if (s.has("sigma")) c.sweep.sigma = parse_numbers(s.raw("sigma"), "sweep.sigma");
    if (s.has("delta")) c.sweep.delta = parse_numbers(s.raw("delta"), "sweep.delta");
    if (s.has("N")) {
      c.sweep.n = parse_indices(s.raw("N"), "sweep.N");
      for (Index v : c.sweep.n) {
        if (v > kMaxDimension) invalid("sweep.N", "exceeds the dense-solve limit");
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.perturbation.seed = seed;
  config.model.wobble.seed = seed;
}

Json ExperimentConfig::to_json() const {
  Json m = {{"type", model.type}, {"N", model.n}};
  if (model.type == "two_sequence") {
    m["laws"] = Json::array({law_json(*model.law), law_json(*model.law2)});
  } else if (model.law) {
    m["law"] = law_json(*model.law);
  }
  if (model.type == "diagonal") {
    Json w = {{"type", model.wobble.type}, {"c", num(model.wobble.c)}};
    if (model.wobble.seed) w["seed"] = *model.wobble.seed;
    m["wobble"] = w;
  }
  if (model.type == "nystrom") {
    m["kernel"] = model.kernel;
    m["rule"] = model.rule == QuadratureRule::GaussLegendre ? "gauss_legendre" : "midpoint";
    if (model.rank) m["rank"] = *model.rank;
  }
  Json p = {{"recipe", perturbation.recipe}};
  if (perturbation.recipe == "rank_one") p["mode"] = perturbation.mode == RankOneMode::Lemma1 ? "lemma1" : "theorem1";
  if (perturbation.recipe == "rank_one" || perturbation.recipe == "random_sign") {
    p["sigma"] = num(perturbation.sigma);
    p["delta"] = num(perturbation.delta);
  }
  if (perturbation.seed) p["seed"] = *perturbation.seed;
  if (perturbation.recipe == "kernel") p["rho"] = perturbation.rho;
  Json checks_json = Json::array();
  for (const auto& cc : checks) {
    Json e = {{"name", cc.name}};
    if (cc.delta) e["delta"] = num(*cc.delta);
    if (!cc.ns.empty()) e["ns"] = cc.ns;
    checks_json.push_back(e);
  }
  Json fit_json = Json::object();
  if (fit.window) fit_json["window"] = {fit.window->first, fit.window->last};
  if (fit.exponent) fit_json["exponent"] = num(*fit.exponent);
  if (fit.tol_a) fit_json["tol_a"] = num(*fit.tol_a);
  if (fit.tol_b) fit_json["tol_b"] = num(*fit.tol_b);
  Json out = {{"name", name},
              {"model", m},
              {"perturbation", p},
              {"solver", {{"rtol", num(solver.rtol)}, {"homotopy_steps", solver.homotopy_steps}}},
              {"checks", checks_json},
              {"fit", fit_json},
              {"output", {{"formats", output.json && output.csv ? "both" : (output.json ? "json" : "csv")}}},
              {"seed", seed}};
  if (check_delta) out["check_delta"] = num(*check_delta);
  return out;
}

// ------------------------------------------------------------ report json

Json to_json(const FitResult& f) {
  Json ranks = f.ranks;
  return {{"a_hat", num(f.a_hat)},
          {"b_hat", num(f.b_hat)},
          {"exponent", num(f.exponent)},
          {"delta_hat", num(f.delta_hat)},
          {"c_hat", num(f.c_hat)},
          {"window", {f.window.first, f.window.last}},
          {"ranks", ranks},
          {"residuals", vec_json(f.residuals)},
          {"rmse", num(f.rmse)},
          {"exact", f.exact}};
}

FitResult fit_from_json(const Json& j) {
  FitResult f;
  f.a_hat = to_num(j.at("a_hat"));
  f.b_hat = to_num(j.at("b_hat"));
  f.exponent = to_num(j.at("exponent"));
  f.delta_hat = to_num(j.at("delta_hat"));
  f.c_hat = to_num(j.at("c_hat"));
  f.window = {j.at("window")[0].get<Index>(), j.at("window")[1].get<Index>()};
  f.ranks = j.at("ranks").get<std::vector<Index>>();
  f.residuals = vec_from(j.at("residuals"));
  f.rmse = to_num(j.at("rmse"));
  f.exact = j.at("exact").get<bool>();
  return f;
}

Json to_json(const ComparisonVerdict& v) {
  return {{"delta_a", num(v.delta_a)},
          {"delta_b", num(v.delta_b)},
          {"preserved", v.preserved},
          {"tol_a", num(v.tol_a)},
          {"tol_b", num(v.tol_b)}};
}

ComparisonVerdict verdict_from_json(const Json& j) {
  ComparisonVerdict v;
  v.delta_a = to_num(j.at("delta_a"));
  v.delta_b = to_num(j.at("delta_b"));
  v.preserved = j.at("preserved").get<bool>();
  v.tol_a = to_num(j.at("tol_a"));
  v.tol_b = to_num(j.at("tol_b"));
  return v;
}

Json to_json(const CheckReport& r) {
  Json margins = Json::array();
  for (const auto& m : r.margins) margins.push_back({m.n, num(m.margin)});
  return {{"name", r.name},
          {"passed", r.passed},
          {"constants", map_json(r.constants)},
          {"criteria", map_json(r.criteria)},
          {"margins", margins},
          {"worst_index", r.worst_index},
          {"slack", num(r.slack)},
          {"flags", r.flags},
          {"notes", r.notes}};
}

CheckReport check_from_json(const Json& j) {
  CheckReport r;
  r.name = j.at("name").get<std::string>();
  r.passed = j.at("passed").get<bool>();
  r.constants = map_from(j.at("constants"));
  r.criteria = map_from(j.at("criteria"));
  for (const auto& m : j.at("margins")) r.margins.push_back({m[0].get<Index>(), to_num(m[1])});
  r.worst_index = j.at("worst_index").get<Index>();
  r.slack = to_num(j.at("slack"));
  r.flags = j.at("flags").get<std::vector<std::string>>();
  r.notes = j.at("notes").get<std::string>();
  return r;
}

Json to_json(const ExperimentReport& r) {
  Json fits = Json::array();
  for (const auto& fc : r.fits) {
    Json e = {{"label", fc.label}};
    e["base"] = fc.base ? to_json(*fc.base) : Json();
    e["perturbed"] = fc.perturbed ? to_json(*fc.perturbed) : Json();
    e["verdict"] = fc.verdict ? to_json(*fc.verdict) : Json();
    fits.push_back(e);
  }
  Json checks = Json::array();
  Index passed = 0;
  for (const auto& c : r.checks) {
    checks.push_back(to_json(c));
    passed += c.passed ? 1 : 0;
  }
  Json out = {{"config", r.config},
              {"model", r.model},
              {"perturbation", r.perturbation},
              {"fits", fits},
              {"checks", checks},
              {"summary",
               {{"total", r.checks.size()}, {"passed", passed}, {"failed", static_cast<Index>(r.checks.size()) - passed}}},
              {"artifacts", r.artifacts},
              {"exit_code", r.exit_code}};
  out["error"] = r.error ? Json{{"code", r.error->code}, {"message", r.error->message}} : Json();
  return out;
}

ExperimentReport report_from_json(const Json& j) {
  ExperimentReport r;
  r.config = j.at("config");
  r.model = j.at("model");
  r.perturbation = j.at("perturbation");
  for (const auto& e : j.at("fits")) {
    FitComparison fc;
    fc.label = e.at("label").get<std::string>();
    if (!e.at("base").is_null()) fc.base = fit_from_json(e.at("base"));
    if (!e.at("perturbed").is_null()) fc.perturbed = fit_from_json(e.at("perturbed"));
    if (!e.at("verdict").is_null()) fc.verdict = verdict_from_json(e.at("verdict"));
    r.fits.push_back(std::move(fc));
  }
  for (const auto& c : j.at("checks")) r.checks.push_back(check_from_json(c));
  r.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  if (!j.at("error").is_null()) {
    r.error = ReportError{j.at("error").at("code").get<std::string>(), j.at("error").at("message").get<std::string>()};
  }
  r.exit_code = j.at("exit_code").get<int>();
  return r;
}

Index ExperimentReport::passed_count() const {
  return static_cast<Index>(std::count_if(checks.begin(), checks.end(), [](const CheckReport& c) { return c.passed; }));
}

std::optional<double> ExperimentReport::c2_star() const {
  for (const auto& c : checks) {
    if (c.name == "localization" && c.constants.count("c2")) return c.constants.at("c2");
  }
  return std::nullopt;
}

// ------------------------------------------------------------------ runner

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SpectralModel build_model(const ExperimentConfig& c) {
  const ModelConfig& m = c.model;
  if (m.type == "diagonal") {
    Wobble w = NoWobble{};
    if (m.wobble.type == "deterministic") w = DeterministicWobble{m.wobble.c};
    if (m.wobble.type == "random") w = RandomWobble{m.wobble.c, m.wobble.seed.value_or(c.seed)};
    return build_diagonal_K(*m.law, m.n, w);
  }
  if (m.type == "two_sequence") return build_two_sequence_K(*m.law, *m.law2, m.n);
  KernelSpec kernel = m.kernel == "brownian_motion"   ? KernelSpec::brownian_motion()
                      : m.kernel == "brownian_bridge" ? KernelSpec::brownian_bridge()
                                                      : KernelSpec::custom(m.kernel);
  SpectralModel full = nystrom_model(kernel, m.n, m.rule);
  const Index keep = std::min(m.rank.value_or(full.dim()), full.dim());
  SpectralModel model(full.lambdas().head(keep), Provenance::Nystrom);
  const NystromData& data = *full.nystrom();
  model.with_nystrom({data.nodes, data.weights, data.vectors.leftCols(keep)});
  if (m.law) model.with_law(*m.law);
  return model;
}

PerturbationMatrix build_perturbation(const ExperimentConfig& c, const SpectralModel& k) {
  const PerturbationConfig& p = c.perturbation;
  const Index n = k.dim();
  if (p.recipe == "rank_one") return build_rank_one_perturbation(p.sigma, p.delta, n, p.mode);
  if (p.recipe == "random_sign") return build_random_sign_perturbation(p.sigma, p.delta, n, p.seed.value_or(c.seed));
  if (p.recipe == "kernel") {
    if (!k.nystrom()) throw Error(ErrorCode::ConfigInvalid, "perturbation.recipe: kernel requires a nystrom model");
    return metric_perturbation_from_kernel(k, KernelSpec::custom(p.rho));
  }
  return PerturbationMatrix::zero(n);
}

Json model_summary(const ExperimentConfig& c, const SpectralModel& k) {
  Json j = {{"type", c.model.type},
            {"N", k.dim()},
            {"provenance", to_string(k.provenance())},
            {"lambda_first", num(k.lambda(1))},
            {"lambda_last", num(k.lambda(k.dim()))}};
  if (k.law()) j["law"] = law_json(*k.law());
  if (k.second_law()) j["law2"] = law_json(*k.second_law());
  if (c.model.type == "diagonal") j["wobble_c"] = num(k.wobble_c());
  return j;
}

std::string definiteness_name(Definiteness d) {
  switch (d) {
    case Definiteness::Zero: return "zero";
    case Definiteness::PositiveSemidefinite: return "positive_semidefinite";
    case Definiteness::NegativeSemidefinite: return "negative_semidefinite";
    case Definiteness::Indefinite: return "indefinite";
  }
  return "unknown";
}

double check_delta(const ExperimentConfig& c, const CheckConfig& cc) {
  if (cc.delta) return *cc.delta;
  if (c.check_delta) return *c.check_delta;
  if (c.model.law && std::isfinite(c.model.law->delta)) return c.model.law->delta;
  if (c.perturbation.recipe == "rank_one" || c.perturbation.recipe == "random_sign") return c.perturbation.delta;
  return 1.0;
}

std::vector<Index> window_indices(const CheckConfig& cc, Index n) {
  std::vector<Index> base = cc.ns.empty() ? std::vector<Index>{10, 50, 100} : cc.ns;
  std::vector<Index> out;
  for (Index v : base) {
    if (v >= 1 && v < n) out.push_back(v);
  }
  return out;
}

CheckReport residual_radius_report(const SpectralModel& k, const PerturbationMatrix& b, double delta) {
  CheckReport r;
  r.name = "residual_radius";
  r.slack = 1e-12;
  const auto radii = residual_radii(k, b, delta);
  for (Index i = 0; i < k.dim(); ++i) {
    const double bound = radii.bound(i);
    const double margin = bound > 0.0 ? (bound - radii.radius(i)) / bound : -radii.radius(i) / k.lambdas()(i);
    r.margins.push_back({i + 1, margin});
  }
  r.constants["c1"] = radii.c1;
  r.constants["delta"] = delta;
  r.constants["max_radius_rel"] = (radii.radius.array() / k.lambdas().array()).maxCoeff();
  r.finalize();
  return r;
}

CheckReport frak_c_report(const SpectralModel& k, const PerturbationMatrix& b, double delta,
                          const std::vector<Index>& ns) {
  CheckReport r;
  r.name = "frak_c";
  r.slack = 1e-12;
  const double c = check_theorem1_condition(b, delta).constants.at("c");
  double exponent = 1.0;
  if (k.law()) exponent = k.law()->exponent;
  const double power = std::min({1.0, delta, exponent});
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double c_integral = 0.0;
  for (Index n : ns) {
    const FrakC fc = frak_C(k, n, delta, c, Window::Side::Head);
    r.margins.push_back({n, fc.bound > 0.0 ? (fc.bound - fc.value) / fc.bound : -fc.value});
    c_integral = std::max(c_integral, fc.c_integral);
    if (fc.value > 0.0 && n >= 2) {
      const double normalized = fc.value * std::pow(static_cast<double>(n), power) / std::log(static_cast<double>(n));
      lo = std::min(lo, normalized);
      hi = std::max(hi, normalized);
    }
  }
  r.constants["c"] = c;
  r.constants["delta"] = delta;
  r.constants["max_c_integral"] = c_integral;
  if (hi > 0.0) {
    r.constants["normalized_ratio"] = hi / lo;
    r.criteria["normalized_ratio"] = 10.0 - hi / lo;
  }
  r.finalize();
  return r;
}

std::string suffixed(const std::string& name, Index n) { return name + "[n=" + std::to_string(n) + "]"; }

struct CheckContext {
  const ExperimentConfig& config;
  const SpectralModel& k;
  const PerturbationMatrix& b;
  const PerturbedSpectrum& perturbed;
  std::optional<std::pair<PerturbationMatrix, PerturbationMatrix>> signs;

  const std::pair<PerturbationMatrix, PerturbationMatrix>& split() {
    if (!signs) signs = split_sign(b);
    return *signs;
  }
};

std::vector<CheckReport> run_check(CheckContext& ctx, const CheckConfig& cc) {
  const double delta = check_delta(ctx.config, cc);
  const SpectralModel& k = ctx.k;
  const PerturbationMatrix& b = ctx.b;
  const Index n = k.dim();
  if (cc.name == "lemma1_condition") return {check_lemma1_condition(b, delta)};
  if (cc.name == "theorem1_condition") return {check_theorem1_condition(b, delta)};
  if (cc.name == "residual_radius") return {residual_radius_report(k, b, delta)};
  if (cc.name == "localization") return {localization_check(k, b, ctx.perturbed, delta)};
  if (cc.name == "sandwich") return {sandwich_check(k, b)};
  if (cc.name == "homotopy") return {homotopy_check(k, b, ctx.config.solver.homotopy_steps)};
  if (cc.name == "frak_c") {
    std::vector<Index> ns;
    for (Index v : cc.ns.empty() ? std::vector<Index>{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000} : cc.ns) {
      if (v >= 2 && v <= n) ns.push_back(v);
    }
    return {frak_c_report(k, b, delta, ns)};
  }
  const auto& [plus, minus] = ctx.split();
  std::vector<CheckReport> out;
  if (cc.name == "stationarity" || cc.name == "coefficient_sum") {
    const bool stationarity = cc.name == "stationarity";
    for (Index w : window_indices(cc, n)) {
      const RayleighPoint head = head_extremizer(k, plus, w);
      CheckReport r = stationarity ? stationarity_check(k, plus, head) : coefficient_sum_check(k, plus, head, delta);
      r.name = suffixed(r.name, w);
      out.push_back(std::move(r));
    }
    for (Index w : window_indices(cc, n)) {
      const RayleighPoint tail = tail_extremizer(k, minus, w);
      CheckReport r = stationarity ? stationarity_check(k, minus, tail) : coefficient_sum_check(k, minus, tail, delta);
      r.name = suffixed(r.name, w);
      out.push_back(std::move(r));
    }
    return out;
  }
  if (cc.name == "extremal_j") {
    const std::vector<Index> ns = cc.ns.empty() ? default_extremal_indices(n) : cc.ns;
    out.push_back(extremal_J_check(k, plus, delta, ns));
    if (definiteness(minus) != Definiteness::Zero) out.push_back(extremal_J_check(k, minus, delta, ns));
    return out;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown check '" + cc.name + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string residual_csv(const FitResult& f) {
  std::ostringstream s;
  s << "n,residual\n";
  for (std::size_t i = 0; i < f.ranks.size(); ++i) {
    s << f.ranks[i] << ',' << format_double(f.residuals(static_cast<Index>(i))) << '\n';
  }
  return s.str();
}

void fill_residuals(std::vector<std::string>& column, const std::optional<FitResult>& f) {
  if (!f) return;
  for (std::size_t i = 0; i < f->ranks.size(); ++i) {
    column[static_cast<std::size_t>(f->ranks[i] - 1)] = format_double(f->residuals(static_cast<Index>(i)));
  }
}

struct Solved {
  std::optional<SpectralModel> k;
  std::optional<PerturbationMatrix> b;
  std::optional<PerturbedSpectrum> perturbed;
  double exponent = 0.0;
  double loc_delta = 1.0;
};

void write_artifacts(const ExperimentConfig& c, ExperimentReport& report, const Solved& s) {
  const fs::path dir(c.output.directory);
  fs::create_directories(dir);
  if (c.output.csv && s.perturbed) {
    const SpectralModel& k = *s.k;
    const Vector& mu = s.perturbed->values;
    const Index n = k.dim();
    std::vector<std::string> res_base(static_cast<std::size_t>(n));
    std::vector<std::string> res_pert(static_cast<std::size_t>(n));
    for (const auto& fc : report.fits) {
      fill_residuals(res_base, fc.base);
      fill_residuals(res_pert, fc.perturbed);
    }
    std::ostringstream spec;
    spec << "n,lambda,lambda_pert,mu_base,mu_pert,residual_base,residual_pert\n";
    for (Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      spec << i + 1 << ',' << format_double(k.lambdas()(i)) << ',' << format_double(mu(i)) << ','
           << format_double(std::pow(k.lambdas()(i), -1.0 / s.exponent)) << ','
           << format_double(std::pow(mu(i), -1.0 / s.exponent)) << ',' << res_base[u] << ',' << res_pert[u]
           << '\n';
    }
    write_text(dir / "spectrum.csv", spec.str());
    report.artifacts["spectrum"] = "spectrum.csv";

    double c2 = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double rel = std::abs(mu(i) / k.lambdas()(i) - 1.0);
      if (rel > 1e-11) c2 = std::max(c2, rel * std::pow(static_cast<double>(i + 1), 1.0 + s.loc_delta));
    }
    std::ostringstream loc;
    loc << "n,delta_lower,delta_upper,lambda_pert\n";
    for (Index i = 0; i < n; ++i) {
      const double w = c2 * std::pow(static_cast<double>(i + 1), -(1.0 + s.loc_delta));
      loc << i + 1 << ',' << format_double(k.lambdas()(i) * (1.0 - w)) << ','
          << format_double(k.lambdas()(i) * (1.0 + w)) << ',' << format_double(mu(i)) << '\n';
    }
    write_text(dir / "localization.csv", loc.str());
    report.artifacts["localization"] = "localization.csv";

    for (const auto& fc : report.fits) {
      if (fc.label == "all" || !fc.perturbed) continue;
      const std::string file = "residuals_" + fc.label + ".csv";
      write_text(dir / file, residual_csv(*fc.perturbed));
      report.artifacts["residuals_" + fc.label] = file;
    }
  }
  if (c.output.json) report.artifacts["report"] = "report.json";
  report.artifacts["timings"] = "timings.json";
  if (c.output.json) write_text(dir / "report.json", to_json(report).dump(2) + "\n");
  write_text(dir / "timings.json", map_json(report.timings).dump(2) + "\n");
}

void fail(ExperimentReport& report, const std::string& code, const std::string& message) {
  if (!report.error) report.error = ReportError{code, message};
  report.exit_code = 2;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = config.to_json();
  Solved s;
  const auto t_total = Clock::now();
  try {
    auto t0 = Clock::now();
    s.k.emplace(build_model(config));
    report.model = model_summary(config, *s.k);
    report.timings["build_model"] = seconds_since(t0);

    t0 = Clock::now();
    s.b.emplace(build_perturbation(config, *s.k));
    report.timings["build_perturbation"] = seconds_since(t0);
    report.perturbation = {{"tag", s.b->tag()},
                           {"norm", num(spectral_norm(s.b->entries()))},
                           {"definiteness", definiteness_name(definiteness(*s.b))}};

    t0 = Clock::now();
    s.perturbed.emplace(solve_generalized(*s.k, *s.b, {.compute_vectors = false}));
    report.timings["solve"] = seconds_since(t0);
  } catch (const Error& e) {
    fail(report, std::string(to_string(e.code())), e.what());
  } catch (const std::exception& e) {
    fail(report, "INTERNAL", e.what());
  }

  if (s.perturbed) {
    const SpectralModel& k = *s.k;
    const auto t0 = Clock::now();
    const std::span<const double> base(k.lambdas().data(), static_cast<std::size_t>(k.dim()));
    const std::span<const double> pert(s.perturbed->values.data(), static_cast<std::size_t>(k.dim()));
    try {
      s.exponent = config.fit.exponent ? *config.fit.exponent
                   : k.law()            ? k.law()->exponent
                                        : estimate_exponent(base);
      const FitWindow window = config.fit.window.value_or(default_window(k.dim()));
      auto compare = [&](FitComparison& fc) {
        const auto [def_a, def_b] = default_tolerances(*fc.base);
        fc.verdict = compare_fits(*fc.base, *fc.perturbed, config.fit.tol_a.value_or(def_a),
                                  config.fit.tol_b.value_or(def_b));
      };
      if (config.model.type == "two_sequence") {
        const auto fb = fit_two_sequence(base, s.exponent, window);
        const auto fp = fit_two_sequence(pert, s.exponent, window);
        FitComparison odd{"odd", fb.odd, fp.odd, std::nullopt};
        FitComparison even{"even", fb.even, fp.even, std::nullopt};
        compare(odd);
        compare(even);
        report.fits = {odd, even};
      } else {
        FitComparison all{"all", fit_two_term(base, s.exponent, window), fit_two_term(pert, s.exponent, window),
                          std::nullopt};
        compare(all);
        report.fits = {all};
      }
    } catch (const Error& e) {
      fail(report, std::string(to_string(e.code())), e.what());
    }
    report.timings["fit"] = seconds_since(t0);

    CheckContext ctx{config, k, *s.b, *s.perturbed, std::nullopt};
    for (const auto& cc : config.checks) {
      const auto tc = Clock::now();
      if (cc.name == "localization") s.loc_delta = check_delta(config, cc);
      try {
        for (auto& r : run_check(ctx, cc)) report.checks.push_back(std::move(r));
      } catch (const Error& e) {
        CheckReport r;
        r.name = cc.name;
        r.passed = false;
        r.flags.push_back("ERROR");
        r.notes = e.what();
        report.checks.push_back(std::move(r));
        fail(report, std::string(to_string(e.code())), e.what());
      }
      report.timings["check:" + cc.name] = seconds_since(tc);
    }
    if (std::none_of(config.checks.begin(), config.checks.end(),
                     [](const CheckConfig& cc) { return cc.name == "localization"; })) {
      s.loc_delta = check_delta(config, CheckConfig{});
    }
  }

  if (report.exit_code != 2) {
    report.exit_code = std::all_of(report.checks.begin(), report.checks.end(),
                                   [](const CheckReport& r) { return r.passed; })
                           ? 0
                           : 1;
  }
  report.timings["total"] = seconds_since(t_total);
  if (!config.output.directory.empty()) {
    try {
      write_artifacts(config, report, s);
    } catch (const std::exception& e) {
      fail(report, "IO", e.what());
    }
  }
  return report;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, unsigned workers) {
  const std::vector<double> sigmas = config.sweep.sigma.empty() ? std::vector<double>{config.perturbation.sigma}
                                                                 : config.sweep.sigma;
  const std::vector<double> deltas =
      config.sweep.delta.empty() ? std::vector<double>{config.perturbation.delta} : config.sweep.delta;
  const std::vector<Index> sizes = config.sweep.n.empty() ? std::vector<Index>{config.model.n} : config.sweep.n;

  std::vector<SweepPoint> points;
  std::vector<ExperimentConfig> configs;
  for (double sigma : sigmas) {
    for (double delta : deltas) {
      for (Index n : sizes) {
        ExperimentConfig c = config;
        c.perturbation.sigma = sigma;
        c.perturbation.delta = delta;
        if (!config.sweep.delta.empty()) c.check_delta = delta;
        c.model.n = n;
        if (c.model.rank && *c.model.rank > n) c.model.rank = n;
        if (c.fit.window && c.fit.window->last > c.model.effective_dim()) c.fit.window.reset();
        if (!config.output.directory.empty()) {
          c.output.directory = (fs::path(config.output.directory) / ("point_" + std::to_string(points.size()))).string();
        }
        points.push_back({sigma, delta, n, {}});
        configs.push_back(std::move(c));
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) points[i].report = run_experiment(configs[i]);
  };
  const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(points.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (!config.output.directory.empty()) {
    std::ostringstream csv;
    csv << "sigma,delta,N,deltaA,deltaB,c2_star,passed_count,exit_code\n";
    for (const auto& p : points) {
      std::string da;
      std::string db;
      const ComparisonVerdict* worst = nullptr;
      for (const auto& fc : p.report.fits) {
        if (fc.verdict && (!worst || std::abs(fc.verdict->delta_b) > std::abs(worst->delta_b))) worst = &*fc.verdict;
      }
      if (worst) {
        da = format_double(worst->delta_a);
        db = format_double(worst->delta_b);
      }
      const auto c2 = p.report.c2_star();
      csv << format_double(p.sigma) << ',' << format_double(p.delta) << ',' << p.n << ',' << da << ',' << db << ','
          << (c2 ? format_double(*c2) : "") << ',' << p.report.passed_count() << ',' << p.report.exit_code << '\n';
    }
    fs::create_directories(config.output.directory);
    write_text(fs::path(config.output.directory) / "sweep_summary.csv", csv.str());
  }
  return points;
}

std::vector<double> read_values_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto pos = line.rfind(',');
    const std::string field = pos == std::string::npos ? line : line.substr(pos + 1);
    if (field.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0') continue;
    values.push_back(v);
  }
  return values;
}

}  // namespace specpert
