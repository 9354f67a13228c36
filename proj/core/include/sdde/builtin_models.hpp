#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdde/io.hpp"
#include "sdde/model.hpp"

namespace sdde {

/// Registry entry for the example systems shipped with the library.
struct BuiltinInfo {
  std::string id;
  std::string description;
  /// Parameter names with their defaults.
  json defaults;
};

const std::vector<BuiltinInfo>& builtin_registry();
bool is_builtin(const std::string& id);

struct ModelOptions {
  json params = json::object();
  int grid_nodes = Grid::kDefaultNodes;
  std::optional<double> zero_tol;
};

/// ode      x' = rate x + coupling S x (all delays zero, S skew);   params n, rate, coupling
/// eq1      x'(t) = a x(t) + b x(t - rho) + c tanh(x(t - rho)),
///          rho = rho_base + rho_amp sin(x(t));                      params a, b, c, rho_base, rho_amp
/// mvw      x'(t) = -tanh(gain x(t - 1 - delta(x(t) + x(t-2)))),
///          delta(w) = delta_amp sin(delta_freq w);                  params gain, delta_amp, delta_freq
/// twodelay two species with two positive state-dependent delays and an averaged L.
/// Unknown parameter names are rejected with a config error.
ModelPtr make_builtin(const std::string& id, const ModelOptions& options = {});

/// Strata the atlas of a built-in must consist of with default parameters.
std::vector<DelaySet> expected_strata(const std::string& id, const Model& model);

/// Model definition document:
///   {"builtin": id, "params": {...}, "grid": nodes, "zero_tol": tol}
/// Keys other than these are rejected.
ModelPtr model_from_json(const json& doc, std::optional<int> grid_override = std::nullopt);

/// A built-in id or the path of a model definition document.
ModelPtr load_model(const std::string& source, std::optional<int> grid_override = std::nullopt);

}  // namespace sdde
