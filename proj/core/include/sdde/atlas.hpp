#pragma once

#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "sdde/chart_j.hpp"
#include "sdde/chart_k.hpp"
#include "sdde/io.hpp"
#include "sdde/model.hpp"

namespace sdde {

/// phi + sum_nu q_nu eta_nu e_nu with q = f(phi) - phi'(0); the bumps vanish
/// on [-r, -d^J(L phi)] (or [-r, -r/2] when J = K) so L and hat are unchanged.
SegmentC1 lift_to_manifold(const Model& model, const SegmentC1& phi);

struct AtlasOptions {
  /// Coverage boxes per stratum; strata without an entry use the model's W box
  /// when the frame can be built on it, else the padded bounding box of the witnesses.
  std::map<DelaySet, Box> boxes;
  double box_padding = 0.25;
  FrameJOptions frame;
  SolverSettings solver;
  std::optional<double> z_k;
};

struct StratumInfo {
  DelaySet J;
  std::vector<SegmentC1> witnesses;  // lifted seeds, on X_f
  bool near_boundary = false;        // some d_k(L phi) in (zero_tol, 10 zero_tol]
};

/// Chart selected for a point of X_f together with its image in X_0.
struct ChartImage {
  DelaySet J;
  bool is_k = false;
  SegmentC1 image;
};

class Atlas {
 public:
  const Model& model() const noexcept { return *model_; }
  const ModelPtr& model_ptr() const noexcept { return model_; }
  std::vector<DelaySet> strata() const;
  const std::map<DelaySet, StratumInfo>& stratum_info() const noexcept { return info_; }
  std::size_t size() const noexcept { return info_.size(); }

  const std::optional<ChartK>& chart_k() const noexcept { return chart_k_; }
  const ChartJ* chart_j(const DelaySet& J) const;

  /// Throws no_chart_for_stratum when the stratum of phi has no chart or phi
  /// is outside its coverage.
  ChartImage chart_for(const SegmentC1& phi) const;

  /// Inverse of the chart of stratum J at a point of X_0.
  ChartSolve invert(const DelaySet& J, const SegmentC1& chi) const;

  json manifest() const;

 private:
  friend Atlas build_atlas(ModelPtr model, const std::vector<SegmentC1>& seeds, const AtlasOptions& options);

  ModelPtr model_;
  std::map<DelaySet, StratumInfo> info_;
  std::optional<ChartK> chart_k_;
  std::map<DelaySet, ChartJ> charts_j_;
};

/// Classifies and lifts the seeds, then builds one chart per discovered stratum.
Atlas build_atlas(ModelPtr model, const std::vector<SegmentC1>& seeds, const AtlasOptions& options = {});

json box_to_json(const Box& box);

}  // namespace sdde
