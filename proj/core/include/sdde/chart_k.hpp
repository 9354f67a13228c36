#pragma once

#include <optional>
#include <vector>

#include "sdde/bump.hpp"
#include "sdde/fixed_point.hpp"
#include "sdde/model.hpp"

namespace sdde {

/// Y_K = diag(psi_1 e_1, ..., psi_n e_n) with (Y_K x)(0) = 0, (Y_K x)'(0) = x,
/// L(Y_K x) = 0.
struct FrameK {
  MatSegmentC1 Y;
  double z = 0.0;
  std::vector<Bump> bumps;

  SegmentC1 apply(const Vec& x) const { return Y.apply(x); }
};

/// z defaults to -r/2.
FrameK build_frame_k(const Model& model, std::optional<double> z = std::nullopt);

/// Result of inverting a chart at chi in X_0.
struct ChartSolve {
  SegmentC1 phi;  // chi + Y x, on X_f
  Vec x;          // = phi'(0) = f(phi)
  int iterations = 0;
  double residual = 0.0;
};

/// Chart for the stratum where every delay vanishes: R^K phi = phi - Y_K phi'(0).
class ChartK {
 public:
  ChartK(ModelPtr model, FrameK frame, SolverSettings settings = {});
  static ChartK build(ModelPtr model, std::optional<double> z = std::nullopt, SolverSettings settings = {});

  const Model& model() const noexcept { return *model_; }
  const ModelPtr& model_ptr() const noexcept { return model_; }
  const FrameK& frame() const noexcept { return frame_; }
  const SolverSettings& settings() const noexcept { return settings_; }

  SegmentC1 project(const SegmentC1& phi) const;
  /// Solves x = f(chi + Y_K x); chi must have chi'(0) = 0.
  ChartSolve invert(const SegmentC1& chi) const;
  /// chi = eta + Y_K x with x from the chain rule evaluated at time 0; phi on X_f in U_K.
  SegmentC1 tangent_lift(const SegmentC1& phi, const SegmentC1& eta) const;
  /// A_K(phi) = phi - Y_K x*(R^K phi).
  SegmentC1 almost_graph(const SegmentC1& phi) const;
  /// B_K(psi) = psi + Y_K x*(R^K psi).
  SegmentC1 almost_graph_inverse(const SegmentC1& psi) const;

 private:
  ModelPtr model_;
  FrameK frame_;
  SolverSettings settings_;
};

/// Requires |chi'(0)| to vanish up to round-off.
void require_in_X0(const SegmentC1& chi);

}  // namespace sdde
