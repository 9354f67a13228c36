#include "sdde/atlas.hpp"

#include <algorithm>
#include <cmath>

namespace sdde {

namespace {

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double distance_to_zero_delay(const Model& model, const Vec& w) {
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < model.k(); ++k) {
    const double d = model.delay(k, w);
    if (d > model.zero_tol()) m = std::min(m, d);
  }
  return m;
}

Box witness_box(const Model& model, const std::vector<SegmentC1>& witnesses, double padding) {
  Vec lo = model.apply_L(witnesses.front()), hi = lo;
  for (const auto& w : witnesses) {
    const Vec l = model.apply_L(w);
    lo = lo.cwiseMin(l);
    hi = hi.cwiseMax(l);
  }
  Box box{lo.array() - padding, hi.array() + padding};
  if (model.W_box()) {
    box.lower = box.lower.cwiseMax(model.W_box()->lower);
    box.upper = box.upper.cwiseMin(model.W_box()->upper);
  }
  return box;
}

}  // namespace

json box_to_json(const Box& box) { return {{"lower", to_std(box.lower)}, {"upper", to_std(box.upper)}}; }

SegmentC1 lift_to_manifold(const Model& model, const SegmentC1& phi) {
  const Vec fphi = model.rhs_f(phi);  // throws outside_W / outside_V
  const Vec q = fphi - phi.deriv_at_zero();
  if (q.lpNorm<Eigen::Infinity>() == 0.0) return phi;

  const Vec w = model.apply_L(phi);
  const DelaySet J = model.classify(w);
  const double z = J.is_full() ? -model.r() / 2 : -model.dmin(J, w);
  SegmentC1 out = phi;
  for (int nu = 0; nu < model.n(); ++nu) {
    if (q(nu) == 0.0) continue;
    out += q(nu) * make_vector_bump(model, nu, z);
  }
  return out;
}

std::vector<DelaySet> Atlas::strata() const {
  std::vector<DelaySet> out;
  for (const auto& [J, info] : info_) out.push_back(J);
  return out;
}

const ChartJ* Atlas::chart_j(const DelaySet& J) const {
  auto it = charts_j_.find(J);
  return it == charts_j_.end() ? nullptr : &it->second;
}

ChartImage Atlas::chart_for(const SegmentC1& phi) const {
  const auto J = model_->membership(phi);
  if (!J) throw Error(ErrorCode::no_chart_for_stratum, "segment is outside U");
  if (J->is_full()) {
    if (!chart_k_) throw Error(ErrorCode::no_chart_for_stratum, "no chart for stratum " + J->to_string());
    return {*J, true, chart_k_->project(phi)};
  }
  const ChartJ* chart = chart_j(*J);
  if (!chart) throw Error(ErrorCode::no_chart_for_stratum, "no chart for stratum " + J->to_string());
  if (!chart->frame().covers(model_->apply_L(phi))) {
    throw Error(ErrorCode::no_chart_for_stratum,
                "segment lies outside the coverage box of the chart for " + J->to_string());
  }
  return {*J, false, chart->project(phi)};
}

ChartSolve Atlas::invert(const DelaySet& J, const SegmentC1& chi) const {
  if (J.is_full()) {
    if (!chart_k_) throw Error(ErrorCode::no_chart_for_stratum, "no chart for stratum " + J.to_string());
    return chart_k_->invert(chi);
  }
  const ChartJ* chart = chart_j(J);
  if (!chart) throw Error(ErrorCode::no_chart_for_stratum, "no chart for stratum " + J.to_string());
  return chart->invert(chi);
}

Atlas build_atlas(ModelPtr model, const std::vector<SegmentC1>& seeds, const AtlasOptions& options) {
  if (!model) throw Error(ErrorCode::invalid_argument, "atlas needs a model");
  Atlas atlas;
  atlas.model_ = model;
  const Model& m = *model;

  for (const auto& seed : seeds) {
    const auto J = m.membership(seed);
    if (!J) throw Error(ErrorCode::outside_W, "seed is not in U");
    SegmentC1 lifted = lift_to_manifold(m, seed);
    auto& info = atlas.info_[*J];
    info.J = *J;
    if (distance_to_zero_delay(m, m.apply_L(seed)) <= 10.0 * m.zero_tol()) info.near_boundary = true;
    info.witnesses.push_back(std::move(lifted));
  }

  for (const auto& [J, info] : atlas.info_) {
    if (J.is_full()) {
      atlas.chart_k_ = ChartK::build(model, options.z_k, options.solver);
      continue;
    }
    if (auto it = options.boxes.find(J); it != options.boxes.end()) {
      atlas.charts_j_.emplace(J, ChartJ::build(model, J, it->second, options.frame, options.solver));
      continue;
    }
    std::optional<ChartJ> chart;
    if (m.W_box()) {
      try {
        chart = ChartJ::build(model, J, *m.W_box(), options.frame, options.solver);
      } catch (const Error& e) {
        // the W box touches a zero delay, or is too thin for the grid
        if (e.code() != ErrorCode::box_not_in_WJ && e.code() != ErrorCode::grid_too_coarse) throw;
      }
    }
    if (!chart) {
      chart = ChartJ::build(model, J, witness_box(m, info.witnesses, options.box_padding), options.frame,
                            options.solver);
    }
    atlas.charts_j_.emplace(J, std::move(*chart));
  }
  return atlas;
}

json Atlas::manifest() const {
  const Model& m = *model_;
  json doc;
  doc["model"] = m.name();
  doc["grid"] = {{"r", m.r()}, {"M", m.grid_ptr()->size()}};
  doc["zero_tol"] = m.zero_tol();
  doc["hypothesis"] = to_string(m.hypothesis().kind);
  json strata = json::array();
  for (const auto& [J, info] : info_) {
    json s;
    s["J"] = J.to_string();
    s["near_boundary"] = info.near_boundary;
    json witnesses = json::array();
    double worst_manifold = 0.0, worst_round_trip = 0.0;
    for (const auto& w : info.witnesses) {
      witnesses.push_back(segment_to_json(w));
      worst_manifold = std::max(worst_manifold, m.on_manifold_residual(w));
      try {
        const ChartImage img = chart_for(w);
        const SegmentC1 back = invert(J, img.image).phi;
        worst_round_trip = std::max(worst_round_trip, norm_c1(back - w));
      } catch (const Error&) {
        worst_round_trip = std::numeric_limits<double>::infinity();
      }
    }
    s["witnesses"] = witnesses;
    s["max_on_manifold_residual"] = worst_manifold;
    s["max_round_trip_residual"] = std::isfinite(worst_round_trip) ? json(worst_round_trip) : json(nullptr);
    if (J.is_full()) {
      s["chart"] = {{"kind", "projection"}, {"z", chart_k_->frame().z}};
    } else {
      const ChartJ& chart = charts_j_.at(J);
      s["chart"] = {{"kind", "frame"}, {"frame", chart.frame().report()}};
      s["coverage_box"] = box_to_json(chart.frame().box());
    }
    strata.push_back(std::move(s));
  }
  doc["strata"] = strata;
  return doc;
}

}  // namespace sdde
