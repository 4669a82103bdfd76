#include "wlab/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

namespace wlab {

namespace {

using nlohmann::ordered_json;

void reject_unknown_keys(const ordered_json& obj,
                         const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

double require_number(const ordered_json& obj, const std::string& key,
                      const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw ConfigError("missing or non-numeric '" + key + "' in " + where);
  return obj[key].get<double>();
}

int require_positive_int(const ordered_json& obj, const std::string& key,
                         const std::string& where) {
  const double v = require_number(obj, key, where);
  if (v < 1 || v != std::floor(v))
    throw ConfigError("'" + key + "' in " + where + " must be a positive integer");
  return static_cast<int>(v);
}

LambdaParametrization parse_parametrization(const ordered_json& model_obj) {
  LambdaParametrization p;
  if (!model_obj.contains("lambda_parametrization")) return p;
  const std::string s = model_obj["lambda_parametrization"].get<std::string>();
  if (s == "linear")
    p.kind = LambdaParametrization::Kind::kLinear;
  else if (s == "quadratic")
    p.kind = LambdaParametrization::Kind::kQuadratic;
  else if (s == "constant")
    p.kind = LambdaParametrization::Kind::kConstant;
  else
    throw ConfigError("lambda_parametrization must be linear|quadratic|constant");
  return p;
}

ParameterLaw parse_prior(const ordered_json& obj) {
  reject_unknown_keys(obj, {"type", "sigma2", "value", "a", "b"}, "model.prior");
  const std::string type = obj.value("type", "");
  if (type == "gaussian")
    return ParameterLaw::gaussian(require_number(obj, "sigma2", "model.prior"));
  if (type == "point_mass")
    return ParameterLaw::point_mass(require_number(obj, "value", "model.prior"));
  if (type == "uniform")
    return ParameterLaw::uniform(require_number(obj, "a", "model.prior"),
                                 require_number(obj, "b", "model.prior"));
  throw ConfigError("model.prior.type must be gaussian|point_mass|uniform");
}

std::pair<DriftModel, std::string> parse_model(const ordered_json& obj) {
  if (!obj.is_object()) throw ConfigError("'model' must be an object");
  const std::string kind = obj.value("kind", "");
  const auto param = parse_parametrization(obj);

  if (kind == "deterministic") {
    reject_unknown_keys(obj, {"kind", "hdot", "scale", "lambda_parametrization"},
                        "model");
    const std::string hdot = obj.value("hdot", "const");
    const double scale = obj.contains("scale")
                             ? require_number(obj, "scale", "model")
                             : 1.0;
    std::function<double(double)> density;
    if (hdot == "const")
      density = [scale](double) { return scale; };
    else if (hdot == "ramp")
      density = [scale](double t) { return scale * t; };
    else if (hdot == "zero")
      density = [](double) { return 0.0; };
    else
      throw ConfigError("model.hdot must be const|ramp|zero");
    return {DriftModel::deterministic(density, param, hdot), "deterministic"};
  }
  if (kind == "gauss_channel") {
    reject_unknown_keys(obj, {"kind", "sigma2", "prior", "lambda_parametrization"},
                        "model");
    if (obj.contains("prior"))
      return {DriftModel::channel(parse_prior(obj["prior"]), param),
              "gauss_channel"};
    const double sigma2 = obj.contains("sigma2")
                              ? require_number(obj, "sigma2", "model")
                              : 1.0;
    return {DriftModel::gauss_channel(sigma2, param), "gauss_channel"};
  }
  if (kind == "markov") {
    reject_unknown_keys(obj, {"kind", "f", "lambda_parametrization"}, "model");
    const std::string f = obj.value("f", "tanh");
    if (f != "tanh") throw ConfigError("model.f must be tanh for markov");
    return {DriftModel::markov(tanh_map(), param), "markov"};
  }
  if (kind == "path_functional") {
    reject_unknown_keys(obj, {"kind", "f", "lambda_parametrization"}, "model");
    const std::string f = obj.value("f", "linear");
    if (f == "linear")
      return {DriftModel::path_functional(identity_map(), param),
              "path_functional"};
    if (f == "tanh")
      return {DriftModel::path_functional(tanh_map(), param), "path_functional"};
    throw ConfigError("model.f must be linear|tanh for path_functional");
  }
  throw ConfigError(
      "model.kind must be deterministic|gauss_channel|markov|path_functional");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  ordered_json root;
  try {
    root = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("scenario must be a JSON object");
  reject_unknown_keys(root,
                      {"model", "grid", "lambda_grid", "engine", "n_paths",
                       "seed", "antithetic", "smoother_size", "outputs"},
                      "scenario");

  ScenarioConfig cfg;
  if (!root.contains("model")) throw ConfigError("missing 'model'");
  std::tie(cfg.model, cfg.model_name) = parse_model(root["model"]);

  if (!root.contains("grid") || !root["grid"].is_object())
    throw ConfigError("missing 'grid' object");
  reject_unknown_keys(root["grid"], {"n_steps"}, "grid");
  cfg.n_steps = require_positive_int(root["grid"], "n_steps", "grid");

  if (!root.contains("lambda_grid") || !root["lambda_grid"].is_object())
    throw ConfigError("missing 'lambda_grid' object");
  reject_unknown_keys(root["lambda_grid"], {"start", "stop", "count"},
                      "lambda_grid");
  const double start = require_number(root["lambda_grid"], "start", "lambda_grid");
  const double stop = require_number(root["lambda_grid"], "stop", "lambda_grid");
  const int count = require_positive_int(root["lambda_grid"], "count",
                                         "lambda_grid");
  if (stop < start) throw ConfigError("lambda_grid must be monotone");
  if (count == 1 && stop != start)
    throw ConfigError("lambda_grid: count 1 requires start == stop");
  cfg.lambda_grid.resize(count);
  for (int i = 0; i < count; ++i)
    cfg.lambda_grid[i] =
        count == 1 ? start : start + (stop - start) * i / (count - 1);

  if (!root.contains("engine") || !root["engine"].is_object())
    throw ConfigError("missing 'engine' object");
  const auto& engine_obj = root["engine"];
  reject_unknown_keys(engine_obj, {"type", "nodes", "particles"}, "engine");
  const std::string etype = engine_obj.value("type", "");
  if (etype == "quadrature") {
    cfg.engine.type = EngineType::kQuadrature;
    cfg.engine.size = require_positive_int(engine_obj, "nodes", "engine");
  } else if (etype == "particle") {
    cfg.engine.type = EngineType::kParticle;
    cfg.engine.size = require_positive_int(engine_obj, "particles", "engine");
  } else {
    throw ConfigError("engine.type must be quadrature|particle");
  }

  cfg.n_paths = require_positive_int(root, "n_paths", "scenario");
  const double seed = require_number(root, "seed", "scenario");
  if (seed < 0 || seed != std::floor(seed))
    throw ConfigError("'seed' must be a non-negative integer");
  cfg.seed = static_cast<std::uint64_t>(seed);

  if (root.contains("antithetic")) {
    if (!root["antithetic"].is_boolean())
      throw ConfigError("'antithetic' must be a boolean");
    cfg.antithetic = root["antithetic"].get<bool>();
  }
  if (root.contains("smoother_size"))
    cfg.smoother_size = require_positive_int(root, "smoother_size", "scenario");

  if (!root.contains("outputs") || !root["outputs"].is_object())
    throw ConfigError("missing 'outputs' object");
  const auto& out_obj = root["outputs"];
  reject_unknown_keys(out_obj, {"directory", "formats"}, "outputs");
  if (!out_obj.contains("directory") || !out_obj["directory"].is_string())
    throw ConfigError("outputs.directory must be a string");
  cfg.out_dir = out_obj["directory"].get<std::string>();
  cfg.write_csv = cfg.write_json = false;
  if (!out_obj.contains("formats") || !out_obj["formats"].is_array())
    throw ConfigError("outputs.formats must be an array");
  for (const auto& f : out_obj["formats"]) {
    const std::string s = f.get<std::string>();
    if (s == "csv")
      cfg.write_csv = true;
    else if (s == "json")
      cfg.write_json = true;
    else
      throw ConfigError("outputs.formats entries must be csv|json");
  }
  if (!cfg.write_csv && !cfg.write_json)
    throw ConfigError("outputs.formats must name at least one format");
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_scenario(text);
}

double report_rel_err(double estimate, double oracle) {
  return oracle != 0.0 ? std::fabs(estimate - oracle) / std::fabs(oracle)
                       : std::fabs(estimate);
}

void ReportTable::add(const std::string& quantity, std::optional<double> lambda,
                      double estimate, double stderr_) {
  rows_.push_back({quantity, lambda, estimate, stderr_, std::nullopt,
                   std::nullopt, std::nullopt});
}

void ReportTable::add_checked(const std::string& quantity,
                              std::optional<double> lambda, double estimate,
                              double stderr_, double oracle, double rel_tol,
                              double abs_tol, double se_mult) {
  const double err = std::fabs(estimate - oracle);
  const double allowance =
      std::max({se_mult * stderr_, rel_tol * std::fabs(oracle), abs_tol});
  rows_.push_back({quantity, lambda, estimate, stderr_, oracle,
                   report_rel_err(estimate, oracle), err <= allowance});
}

void ReportTable::add_predicate(const std::string& quantity,
                                std::optional<double> lambda, double estimate,
                                bool pass, std::optional<double> oracle,
                                double stderr_) {
  std::optional<double> rel;
  if (oracle) rel = report_rel_err(estimate, *oracle);
  rows_.push_back({quantity, lambda, estimate, stderr_, oracle, rel, pass});
}

bool ReportTable::all_passed() const { return failures() == 0; }

int ReportTable::failures() const {
  int n = 0;
  for (const auto& row : rows_)
    if (row.pass.has_value() && !*row.pass) ++n;
  return n;
}

void ReportTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "quantity,lambda,estimate,stderr,oracle,rel_err,pass\n";
  for (const auto& row : rows_) {
    out << row.quantity << ',';
    if (row.lambda) out << fmt_double(*row.lambda);
    out << ',' << fmt_double(row.estimate) << ',' << fmt_double(row.stderr_)
        << ',';
    if (row.oracle) out << fmt_double(*row.oracle);
    out << ',';
    if (row.rel_err) out << fmt_double(*row.rel_err);
    out << ',';
    if (row.pass) out << (*row.pass ? 1 : 0);
    out << '\n';
  }
}

void ReportTable::write_json(const std::string& path) const {
  ordered_json root;
  root["schema_version"] = 1;
  ordered_json rows = ordered_json::array();
  for (const auto& row : rows_) {
    ordered_json r;
    r["quantity"] = row.quantity;
    r["lambda"] = row.lambda ? ordered_json(*row.lambda) : ordered_json(nullptr);
    r["estimate"] = row.estimate;
    r["stderr"] = row.stderr_;
    r["oracle"] = row.oracle ? ordered_json(*row.oracle) : ordered_json(nullptr);
    r["rel_err"] =
        row.rel_err ? ordered_json(*row.rel_err) : ordered_json(nullptr);
    r["pass"] = row.pass ? ordered_json(*row.pass) : ordered_json(nullptr);
    rows.push_back(r);
  }
  root["rows"] = rows;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << root.dump(2) << '\n';
}

}  // namespace wlab
