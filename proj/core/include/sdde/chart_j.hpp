#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "sdde/bump.hpp"
#include "sdde/chart_k.hpp"
#include "sdde/fixed_point.hpp"
#include "sdde/io.hpp"
#include "sdde/model.hpp"

namespace sdde {

struct FrameJOptions {
  double beta = 50.0;        // softmin sharpness when several delays stay positive
  double ratio = 0.6;        // upper bound for delta_{m+1} / delta_m
  int box_samples = 256;     // deterministic coverage-box sample for the W^J check
  std::size_t cache_capacity = 4096;
};

/// One level of the exhaustion: bumps vanishing on [-r, -delta].
struct FrameLevel {
  double delta = 0.0;
  std::vector<Bump> bumps;  // one per component
};

/// w -> Y_J(w): blend of level frames psi_m driven by C^1 cutoffs a_m of a
/// proxy p(w) <= d^J(w), so that Y_J(w) x vanishes on [-r, -d^J(w)].
class FrameJ {
 public:
  static std::shared_ptr<const FrameJ> build(ModelPtr model, DelaySet J, Box box, FrameJOptions options = {});

  const Model& model() const noexcept { return *model_; }
  const DelaySet& J() const noexcept { return J_; }
  const Box& box() const noexcept { return box_; }
  const std::vector<FrameLevel>& levels() const noexcept { return levels_; }
  const FrameJOptions& options() const noexcept { return options_; }
  double min_sampled_dJ() const noexcept { return min_dj_; }
  double min_sampled_proxy() const noexcept { return min_proxy_; }

  /// Proxy p(w) for d^J (exact when one delay stays positive, softmin otherwise).
  double proxy(const Vec& w) const;
  RowVec proxy_gradient(const Vec& w) const;

  /// True when w is in the coverage box and d^J(w) >= smallest level.
  bool covers(const Vec& w) const;

  /// Y_J(w); memoized per w. Throws outside_box.
  MatSegmentC1 Y(const Vec& w) const;
  SegmentC1 apply(const Vec& w, const Vec& x) const { return Y(w).apply(x); }
  /// DY_J(w) w_tilde, a C^1_{n x n} element.
  MatSegmentC1 dY(const Vec& w, const Vec& w_tilde) const;
  SegmentC1 dY_apply(const Vec& w, const Vec& w_tilde, const Vec& x) const { return dY(w, w_tilde).apply(x); }

  /// Blend weights c_m(w) with Y_J(w) = sum_m c_m Psi_m (sum c_m = 1).
  Vec weights(const Vec& w) const;
  Vec weights_derivative(const Vec& w, const Vec& w_tilde) const;

  json report() const;

 private:
  struct Cache {
    std::mutex mutex;
    std::map<std::vector<double>, MatSegmentC1> entries;
  };

  FrameJ() = default;
  void require_covered(const Vec& w) const;
  MatSegmentC1 combine(const Vec& c, double slope_at_zero) const;
  /// Cutoff a_m and its derivative in p for transition m (psi_m -> psi_{m+1}).
  std::pair<double, double> cutoff(int m, double p) const;

  ModelPtr model_;
  DelaySet J_;
  Box box_;
  FrameJOptions options_;
  std::vector<FrameLevel> levels_;
  std::vector<double> lo_, hi_;
  double gap_ = 0.0;
  double min_dj_ = 0.0;
  double min_proxy_ = 0.0;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

using FrameJPtr = std::shared_ptr<const FrameJ>;

/// Chart for a stratum J != K: R^J phi = phi - Y_J(L phi) phi'(0).
class ChartJ {
 public:
  ChartJ(ModelPtr model, FrameJPtr frame, SolverSettings settings = {});
  static ChartJ build(ModelPtr model, DelaySet J, Box box, FrameJOptions options = {},
                      SolverSettings settings = {});

  const Model& model() const noexcept { return *model_; }
  const FrameJ& frame() const noexcept { return *frame_; }
  const FrameJPtr& frame_ptr() const noexcept { return frame_; }
  const DelaySet& J() const noexcept { return frame_->J(); }
  const SolverSettings& settings() const noexcept { return settings_; }

  SegmentC1 project(const SegmentC1& phi) const;
  /// DR^J(phi) chi = chi - (DY_J(L phi) L chi) phi'(0) - Y_J(L phi) chi'(0).
  SegmentC1 drj(const SegmentC1& phi, const SegmentC1& chi) const;
  /// Solves x = f(chi + Y_J(L chi) x) with L chi frozen.
  ChartSolve invert(const SegmentC1& chi) const;
  /// Tangent vector chi at phi in X_fJ with DR^J(phi) chi = eta.
  SegmentC1 tangent_lift(const SegmentC1& phi, const SegmentC1& eta) const;
  /// Y_J(L chi) x*(chi); zero exactly when chi is on X_f.
  SegmentC1 graph_offset(const SegmentC1& chi) const;
  /// A_J(phi) = phi - Y_J(L phi) x*(R^J phi).
  SegmentC1 almost_graph(const SegmentC1& phi) const;
  /// B_J(rho) = rho + Y_J(L rho) x*(R^J rho).
  SegmentC1 almost_graph_inverse(const SegmentC1& rho) const;

 private:
  ModelPtr model_;
  FrameJPtr frame_;
  SolverSettings settings_;
};

}  // namespace sdde
