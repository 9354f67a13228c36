#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdde/atlas.hpp"
#include "sdde/io.hpp"
#include "sdde/model.hpp"
#include "sdde/sampling.hpp"

namespace sdde {

struct HarnessConfig {
  std::uint64_t seed = 1;
  int segments = 64;  // random segments per segment-based check
  int pairs = 32;     // random (w, x) / manifold samples per check
  int seeds = 6;      // atlas seeds
  int jobs = 1;       // checks run concurrently when > 1
  double amplitude = 0.8;
};

struct CheckResult {
  std::string name;
  std::string module;
  std::string anchor;  // the property being checked, in words
  int samples = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

struct VerificationReport {
  std::string model;
  HarnessConfig config;
  json environment;
  std::vector<CheckResult> checks;        // sorted by name
  std::vector<std::string> not_scheduled; // registry entries that do not apply to this model

  bool passed() const;
  const CheckResult* find(const std::string& name) const;
  json to_json() const;
  std::string to_text() const;
};

/// Everything a check may use; built once per suite run.
struct CheckContext {
  ModelPtr model;
  std::string builtin_id;  // empty for custom models
  HarnessConfig config;
  const Atlas* atlas = nullptr;
};

struct CheckSpec {
  std::string name;
  std::string module;
  std::string anchor;
  std::function<bool(const CheckContext&)> applies;
  std::function<CheckResult(const CheckContext&, Rng&)> run;
};

/// Every invariant check known to the harness, in registration order.
const std::vector<CheckSpec>& check_registry();

/// Runs every applicable check. Model registration failures surface as a
/// failed "model.registration" check.
VerificationReport run_suite(const std::string& builtin_id, const HarnessConfig& config = {});
VerificationReport run_suite(ModelPtr model, const HarnessConfig& config = {}, const std::string& builtin_id = "");

// Sample generators shared by the checks (exposed for tests and tools).
namespace samples {

/// Segments in U with stratum J whose L-image the frame covers (when J != K).
std::vector<SegmentC1> in_stratum(const CheckContext& ctx, Rng& rng, const DelaySet& J, int count);
/// Lifted points of X_fJ.
std::vector<SegmentC1> on_manifold(const CheckContext& ctx, Rng& rng, const DelaySet& J, int count);
/// Points chi of X_0 with chi in U_J and L chi covered.
std::vector<SegmentC1> in_X0(const CheckContext& ctx, Rng& rng, const DelaySet& J, int count);
/// Points of X_0 on X_f: chi in X_0 shifted by a constant c with f(chi + c) = 0.
std::vector<SegmentC1> in_X0_and_Xf(const CheckContext& ctx, Rng& rng, const DelaySet& J, int count);

}  // namespace samples

}  // namespace sdde
