#pragma once

#include <doctest.h>

#include <functional>
#include <optional>

#include "sdde/atlas.hpp"
#include "sdde/builtin_models.hpp"
#include "sdde/error.hpp"
#include "sdde/sampling.hpp"

namespace testutil {

/// Error code thrown by f, or nullopt when it returns normally.
inline std::optional<sdde::ErrorCode> error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const sdde::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline double inf_norm(const sdde::Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

/// phi(t) = slope * t + offset in every component, with exact derivatives.
inline sdde::SegmentC1 affine(const sdde::GridPtr& grid, int n, double slope, double offset = 0.0) {
  return sdde::SegmentC1::sample(
      grid, n, [&](double t) { return sdde::Vec(sdde::Vec::Constant(n, slope * t + offset)); },
      [&](double) { return sdde::Vec(sdde::Vec::Constant(n, slope)); });
}

inline sdde::ModelPtr builtin(const std::string& id, sdde::json params = sdde::json::object()) {
  sdde::ModelOptions options;
  options.params = std::move(params);
  return sdde::make_builtin(id, options);
}

/// Lifted samples of U, i.e. points of X_f, with L phi in box.
inline std::vector<sdde::SegmentC1> on_manifold(sdde::Rng& rng, const sdde::Model& m, int count,
                                                const std::optional<sdde::Box>& box,
                                                double amplitude = 0.8) {
  std::vector<sdde::SegmentC1> out;
  for (const auto& phi : sdde::sample_in_U(rng, m, count, amplitude, box)) out.push_back(sdde::lift_to_manifold(m, phi));
  return out;
}

/// Sample of a shrunk box so that small perturbations stay inside.
inline sdde::Vec inner_point(sdde::Rng& rng, const sdde::Box& box, double margin = 0.05) {
  sdde::Box inner = box;
  const sdde::Vec pad = margin * (box.upper - box.lower);
  inner.lower += pad;
  inner.upper -= pad;
  return sdde::random_in_box(rng, inner);
}

}  // namespace testutil
