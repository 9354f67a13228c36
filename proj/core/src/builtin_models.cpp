#include "sdde/builtin_models.hpp"

#include <cmath>

namespace sdde {

namespace {

double sech2(double x) {
  const double c = std::cosh(x);
  return 1.0 / (c * c);
}

/// Merges user parameters over the defaults; unknown keys are a config error.
json merge_params(const BuiltinInfo& info, const json& params) {
  if (!params.is_object()) throw Error(ErrorCode::config, "params must be an object");
  json out = info.defaults;
  for (const auto& [key, value] : params.items()) {
    if (!out.contains(key)) {
      throw Error(ErrorCode::config, "unknown parameter '" + key + "' for model '" + info.id + "'");
    }
    if (!value.is_number()) throw Error(ErrorCode::config, "parameter '" + key + "' must be a number");
    out[key] = value;
  }
  return out;
}

const BuiltinInfo& info_for(const std::string& id) {
  for (const auto& info : builtin_registry()) {
    if (info.id == id) return info;
  }
  throw Error(ErrorCode::config, "unknown built-in model '" + id + "'");
}

double num(const json& p, const char* key) { return p.at(key).get<double>(); }

void finish(ModelSpec& spec, const ModelOptions& options) {
  if (options.zero_tol) spec.zero_tol = *options.zero_tol;
}

ModelPtr make_ode(const json& p, const ModelOptions& options) {
  const double nd = num(p, "n");
  const int n = static_cast<int>(nd);
  if (n < 1 || n > 8 || nd != n) throw Error(ErrorCode::config, "ode: n must be an integer in [1, 8]");
  const double rate = num(p, "rate"), coupling = num(p, "coupling");

  ModelSpec spec;
  spec.name = "ode";
  spec.grid = Grid::uniform(1.0, options.grid_nodes);
  spec.n = n;
  spec.L = LinearMap(spec.grid, n, n);
  spec.L.add_point(Mat::Identity(n, n), 0.0);
  spec.delays.push_back({"d1", [](const Vec&) { return 0.0; },
                         [n](const Vec&) { return RowVec(RowVec::Zero(n)); }});
  Mat A = rate * Mat::Identity(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    A(i, i + 1) += coupling;
    A(i + 1, i) -= coupling;
  }
  spec.g = {[A](const Vec& v) { return Vec(A * v); }, [A](const Vec&) { return Mat(A); }};
  spec.W_box = Box{Vec::Constant(n, -2.0), Vec::Constant(n, 2.0)};
  spec.V_box = spec.W_box;
  spec.hypothesis = {Hypothesis::single_stratum, DelaySet::all(1), std::nullopt};
  spec.witness = SegmentC1::constant(spec.grid, Vec::Constant(n, 0.5));
  finish(spec, options);
  return Model::create(std::move(spec));
}

ModelPtr make_eq1(const json& p, const ModelOptions& options) {
  const double a = num(p, "a"), b = num(p, "b"), c = num(p, "c");
  const double base = num(p, "rho_base"), amp = num(p, "rho_amp");
  const double r = 2.0;
  if (base - std::abs(amp) < 0.0 || base + std::abs(amp) > r) {
    throw Error(ErrorCode::config, "eq1: rho must stay in [0, 2]");
  }

  ModelSpec spec;
  spec.name = "eq1";
  spec.grid = Grid::uniform(r, options.grid_nodes);
  spec.n = 1;
  spec.L = LinearMap(spec.grid, 1, 1);
  spec.L.add_point(Mat::Identity(1, 1), 0.0);
  spec.delays.push_back({"d1", [](const Vec&) { return 0.0; }, [](const Vec&) { return RowVec(RowVec::Zero(1)); }});
  spec.delays.push_back({"rho", [base, amp](const Vec& w) { return base + amp * std::sin(w(0)); },
                         [amp](const Vec& w) { return RowVec(RowVec::Constant(1, amp * std::cos(w(0)))); }});
  spec.g = {[a, b, c](const Vec& v) { return Vec(Vec::Constant(1, a * v(0) + b * v(1) + c * std::tanh(v(1)))); },
            [a, b, c](const Vec& v) {
              Mat j(1, 2);
              j << a, b + c * sech2(v(1));
              return j;
            }};
  spec.W_box = Box{Vec::Constant(1, -3.0), Vec::Constant(1, 3.0)};
  spec.V_box = Box{Vec::Constant(2, -3.0), Vec::Constant(2, 3.0)};
  if (base - std::abs(amp) > 0.0) {
    spec.hypothesis = {Hypothesis::single_stratum, DelaySet::of(2, {0}), std::nullopt};
  } else {
    spec.hypothesis = {Hypothesis::d1_bounded, DelaySet::none(2), std::nullopt};
  }
  spec.witness = SegmentC1::constant(spec.grid, Vec::Constant(1, 0.1));
  finish(spec, options);
  return Model::create(std::move(spec));
}

ModelPtr make_mvw(const json& p, const ModelOptions& options) {
  const double gain = num(p, "gain"), amp = num(p, "delta_amp"), freq = num(p, "delta_freq");
  const double r = 2.0;
  if (std::abs(amp) >= 1.0) throw Error(ErrorCode::config, "mvw: |delta_amp| must be < 1");

  ModelSpec spec;
  spec.name = "mvw";
  spec.grid = Grid::uniform(r, options.grid_nodes);
  spec.n = 1;
  spec.L = LinearMap(spec.grid, 1, 1);
  spec.L.add_point(Mat::Identity(1, 1), 0.0).add_point(Mat::Identity(1, 1), -r);
  spec.delays.push_back({"d1", [amp, freq](const Vec& w) { return 1.0 + amp * std::sin(freq * w(0)); },
                         [amp, freq](const Vec& w) {
                           return RowVec(RowVec::Constant(1, amp * freq * std::cos(freq * w(0))));
                         }});
  spec.g = {[gain](const Vec& v) { return Vec(Vec::Constant(1, -std::tanh(gain * v(0)))); },
            [gain](const Vec& v) { return Mat(Mat::Constant(1, 1, -gain * sech2(gain * v(0)))); }};
  spec.W_box = Box{Vec::Constant(1, -4.0), Vec::Constant(1, 4.0)};
  spec.V_box = Box{Vec::Constant(1, -3.0), Vec::Constant(1, 3.0)};
  spec.hypothesis = {Hypothesis::bounded_g, DelaySet::none(1), 1.0};
  spec.witness = SegmentC1::constant(spec.grid, Vec::Constant(1, 0.2));
  finish(spec, options);
  return Model::create(std::move(spec));
}

ModelPtr make_twodelay(const json& p, const ModelOptions& options) {
  const double a1 = num(p, "a1"), b1 = num(p, "b1"), a2 = num(p, "a2"), b2 = num(p, "b2");
  const double r = 2.0;

  ModelSpec spec;
  spec.name = "twodelay";
  spec.grid = Grid::uniform(r, options.grid_nodes);
  spec.n = 2;
  spec.L = LinearMap(spec.grid, 2, 3);
  Mat point = Mat::Zero(3, 2);
  point(0, 0) = 1.0;
  point(1, 1) = 1.0;
  spec.L.add_point(point, 0.0);
  Mat mean = Mat::Zero(3, 2);
  mean(2, 1) = 1.0 / r;
  spec.L.set_density(std::vector<Mat>(static_cast<std::size_t>(spec.grid->size()), mean));
  // Delay 1 reacts to the current state and history mean of species 2, delay 2 to species 2.
  spec.delays.push_back({"d1", [](const Vec& w) { return 0.8 + 0.3 * std::tanh(w(0) + w(2)); },
                         [](const Vec& w) {
                           const double s = 0.3 * sech2(w(0) + w(2));
                           RowVec g(3);
                           g << s, 0.0, s;
                           return g;
                         }});
  spec.delays.push_back({"d2", [](const Vec& w) { return 1.2 + 0.4 * std::tanh(w(1)); },
                         [](const Vec& w) {
                           RowVec g(3);
                           g << 0.0, 0.4 * sech2(w(1)), 0.0;
                           return g;
                         }});
  // v = (x(t-d1), x(t-d2)), each in R^2: v(0)=x1(t-d1), v(3)=x2(t-d2).
  spec.g = {[a1, b1, a2, b2](const Vec& v) {
              Vec out(2);
              out << a1 * v(0) + b1 * std::tanh(v(3)), a2 * v(3) + b2 * std::tanh(v(0));
              return out;
            },
            [a1, b1, a2, b2](const Vec& v) {
              Mat j = Mat::Zero(2, 4);
              j(0, 0) = a1;
              j(0, 3) = b1 * sech2(v(3));
              j(1, 3) = a2;
              j(1, 0) = b2 * sech2(v(0));
              return j;
            }};
  spec.W_box = Box{Vec::Constant(3, -1.5), Vec::Constant(3, 1.5)};
  spec.V_box = Box{Vec::Constant(4, -3.0), Vec::Constant(4, 3.0)};
  spec.hypothesis = {Hypothesis::single_stratum, DelaySet::none(2), std::nullopt};
  Vec c(2);
  c << 0.3, -0.2;
  spec.witness = SegmentC1::constant(spec.grid, c);
  finish(spec, options);
  return Model::create(std::move(spec));
}

}  // namespace

const std::vector<BuiltinInfo>& builtin_registry() {
  static const std::vector<BuiltinInfo> registry = {
      {"ode", "all delays zero: x' = rate x + coupling S x",
       json{{"n", 1}, {"rate", -1.0}, {"coupling", 0.0}}},
      {"eq1", "x'(t) = a x(t) + b x(t-rho) + c tanh(x(t-rho)), rho = rho_base + rho_amp sin(x(t))",
       json{{"a", -0.5}, {"b", 0.0}, {"c", -1.0}, {"rho_base", 1.0}, {"rho_amp", 0.5}}},
      {"mvw", "x'(t) = -tanh(gain x(t - 1 - delta(x(t) + x(t-2))))",
       json{{"gain", 1.5}, {"delta_amp", 0.5}, {"delta_freq", 1.0}}},
      {"twodelay", "two species, delays 0.8+0.3tanh(x1(t)+mean x2), 1.2+0.4tanh(x2(t))",
       json{{"a1", -0.8}, {"b1", 1.0}, {"a2", -0.5}, {"b2", 0.6}}},
  };
  return registry;
}

bool is_builtin(const std::string& id) {
  for (const auto& info : builtin_registry()) {
    if (info.id == id) return true;
  }
  return false;
}

ModelPtr make_builtin(const std::string& id, const ModelOptions& options) {
  const BuiltinInfo& info = info_for(id);
  if (options.grid_nodes < 3) throw Error(ErrorCode::config, "grid needs at least 3 nodes");
  const json p = merge_params(info, options.params);
  if (id == "ode") return make_ode(p, options);
  if (id == "eq1") return make_eq1(p, options);
  if (id == "mvw") return make_mvw(p, options);
  return make_twodelay(p, options);
}

std::vector<DelaySet> expected_strata(const std::string& id, const Model& model) {
  if (id == "ode") return {DelaySet::all(model.k())};
  if (id == "eq1") return {DelaySet::of(2, {0})};
  if (id == "mvw" || id == "twodelay") return {DelaySet::none(model.k())};
  throw Error(ErrorCode::config, "no expected strata for '" + id + "'");
}

ModelPtr model_from_json(const json& doc, std::optional<int> grid_override) {
  if (!doc.is_object()) throw Error(ErrorCode::config, "model definition must be an object");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "builtin" && key != "params" && key != "grid" && key != "zero_tol") {
      throw Error(ErrorCode::config, "unknown key '" + key + "' in model definition");
    }
  }
  if (!doc.contains("builtin") || !doc["builtin"].is_string()) {
    throw Error(ErrorCode::config, "model definition needs a string 'builtin'");
  }
  ModelOptions options;
  if (doc.contains("params")) options.params = doc["params"];
  if (doc.contains("grid")) {
    if (!doc["grid"].is_number_integer()) throw Error(ErrorCode::config, "'grid' must be an integer");
    options.grid_nodes = doc["grid"].get<int>();
  }
  if (doc.contains("zero_tol")) {
    if (!doc["zero_tol"].is_number()) throw Error(ErrorCode::config, "'zero_tol' must be a number");
    options.zero_tol = doc["zero_tol"].get<double>();
  }
  if (grid_override) options.grid_nodes = *grid_override;
  return make_builtin(doc["builtin"].get<std::string>(), options);
}

ModelPtr load_model(const std::string& source, std::optional<int> grid_override) {
  if (is_builtin(source)) {
    ModelOptions options;
    if (grid_override) options.grid_nodes = *grid_override;
    return make_builtin(source, options);
  }
  json doc;
  try {
    doc = json::parse(read_file(source));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, "cannot parse model definition '" + source + "': " + e.what());
  }
  return model_from_json(doc, grid_override);
}

}  // namespace sdde
