#include "sdde/chart_k.hpp"

namespace sdde {

void require_in_X0(const SegmentC1& chi) {
  const double d = chi.deriv_at_zero().lpNorm<Eigen::Infinity>();
  if (d > 1e-12 * std::max(1.0, chi.derivs().lpNorm<Eigen::Infinity>())) {
    throw Error(ErrorCode::invalid_argument, "segment is not in X_0 (nonzero derivative at 0)");
  }
}

FrameK build_frame_k(const Model& model, std::optional<double> z) {
  FrameK frame;
  frame.z = z.value_or(-model.r() / 2);
  std::vector<SegmentC1> entries;
  for (int nu = 0; nu < model.n(); ++nu) {
    frame.bumps.push_back(make_component_bump(model, nu, frame.z));
    entries.push_back(frame.bumps.back().phi);
  }
  frame.Y = MatSegmentC1::diagonal(entries);
  return frame;
}

ChartK::ChartK(ModelPtr model, FrameK frame, SolverSettings settings)
    : model_(std::move(model)), frame_(std::move(frame)), settings_(settings) {
  if (!model_) throw Error(ErrorCode::invalid_argument, "chart needs a model");
  if (frame_.Y.dim() != model_->n()) throw Error(ErrorCode::dimension_mismatch, "frame has wrong dimension");
}

ChartK ChartK::build(ModelPtr model, std::optional<double> z, SolverSettings settings) {
  FrameK frame = build_frame_k(*model, z);
  return ChartK(std::move(model), std::move(frame), settings);
}

SegmentC1 ChartK::project(const SegmentC1& phi) const {
  return phi - frame_.apply(phi.deriv_at_zero());
}

ChartSolve ChartK::invert(const SegmentC1& chi) const {
  require_in_X0(chi);
  const Model& m = *model_;
  const int n = m.n();
  auto F = [&](const Vec& x) { return m.rhs_f(chi + frame_.apply(x)); };
  auto dF = [&](const Vec& x) {
    const SegmentC1 phi = chi + frame_.apply(x);
    Mat J(n, n);
    for (int nu = 0; nu < n; ++nu) J.col(nu) = m.df(phi, frame_.Y.column(nu));
    return J;
  };
  const SolveResult s = solve_fixed_point(F, dF, Vec::Zero(n), settings_);
  ChartSolve out;
  out.phi = chi + frame_.apply(s.x);
  out.x = s.x;
  out.iterations = s.iterations;
  out.residual = s.residual;
  return out;
}

SegmentC1 ChartK::tangent_lift(const SegmentC1& phi, const SegmentC1& eta) const {
  const Model& m = *model_;
  const int n = m.n();
  const Vec w = m.apply_L(phi);
  const Vec v = m.hat(phi);
  const Vec l_eta = m.apply_L(eta);
  const Vec eta0 = eta.value_at_zero();
  const Vec dphi0 = phi.deriv_at_zero();
  Vec bracket(n * m.k());
  for (int k = 0; k < m.k(); ++k) {
    const double dd = m.dim_f() > 0 ? (m.delay_gradient(k, w) * l_eta)(0) : 0.0;
    bracket.segment(k * n, n) = eta0 - dphi0 * dd;
  }
  const Vec x = m.dg(v) * bracket;
  return eta + frame_.apply(x);
}

SegmentC1 ChartK::almost_graph(const SegmentC1& phi) const {
  return phi - frame_.apply(invert(project(phi)).x);
}

SegmentC1 ChartK::almost_graph_inverse(const SegmentC1& psi) const {
  return psi + frame_.apply(invert(project(psi)).x);
}

}  // namespace sdde
