#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdde/model.hpp"

namespace sdde {

struct IntegrateOptions {
  double h = 1e-2;
  double T = 1.0;
  int max_overlap_iterations = 25;
  double overlap_tol = 1e-12;
  /// Required compatibility |phi0'(0) - f(phi0)| of the initial segment.
  double initial_manifold_tol = 1e-8;
};

struct StepDiagnostic {
  double t = 0.0;                  // end of the step
  double midpoint_residual = 0.0;  // |x'(s) - f(x_s)| at s = step midpoint
  DelaySet stratum;                // stratum of x_t at the end of the step
  int overlap_iterations = 0;      // 0 when no delay argument fell inside the step
};

/// Dense C^1 solution on [-r, t_end]: Hermite data at the initial grid nodes
/// and at every step node.
class Trajectory {
 public:
  const Model& model() const noexcept { return *model_; }
  double h() const noexcept { return h_; }
  double T() const noexcept { return T_; }
  double t_end() const noexcept { return times_.back(); }
  bool truncated() const noexcept { return truncated_; }
  const std::string& truncation_reason() const noexcept { return reason_; }

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<Vec>& values() const noexcept { return values_; }
  const std::vector<Vec>& derivs() const noexcept { return derivs_; }
  const std::vector<StepDiagnostic>& diagnostics() const noexcept { return diagnostics_; }
  /// Index of the first node at time 0.
  int first_step_node() const noexcept { return initial_nodes_ - 1; }

  Vec eval(double t) const;
  Vec eval_deriv(double t) const;
  /// Value/derivative of the piece on the left (side < 0) or right of node j.
  Vec one_sided(int node, int side, bool derivative) const;

  /// x_t resampled onto the model grid. Requires t in [0, t_end].
  SegmentC1 segment_at(double t) const;

  /// CSV rows t, x_1..x_n, x'_1..x'_n, residual, stratum at every stride-th step node.
  void write_csv(std::ostream& out, int stride = 1) const;

 private:
  friend Trajectory integrate(ModelPtr model, const SegmentC1& phi0, const IntegrateOptions& options);

  int locate(double t) const;

  ModelPtr model_;
  double h_ = 0.0, T_ = 0.0;
  int initial_nodes_ = 0;
  std::vector<double> times_;
  std::vector<Vec> values_, derivs_;
  std::vector<StepDiagnostic> diagnostics_;
  double initial_residual_ = 0.0;
  bool truncated_ = false;
  std::string reason_;
};

/// Classical RK4 for x'(t) = f(x_t) from phi0 on X_f. Delay arguments inside
/// the current step are read from the step's Hermite polynomial and resolved by
/// fixed-point iteration. Leaving U truncates the trajectory (see truncated()).
Trajectory integrate(ModelPtr model, const SegmentC1& phi0, const IntegrateOptions& options);

}  // namespace sdde
