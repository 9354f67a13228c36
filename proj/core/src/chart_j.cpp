#include "sdde/chart_j.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdde/sampling.hpp"

namespace sdde {

namespace {

std::vector<Vec> coverage_sample(const Box& box, int count) {
  std::vector<Vec> out;
  const int dim = box.dim();
  if (dim == 0) {
    out.emplace_back(0);
    return out;
  }
  if (dim <= 10) {
    for (std::uint32_t mask = 0; mask < (1u << dim); ++mask) {
      Vec u(dim);
      for (int i = 0; i < dim; ++i) u(i) = (mask >> i) & 1u ? 1.0 : 0.0;
      out.push_back(box.at(u));
    }
  }
  out.push_back(box.center());
  for (int s = 0; s < count; ++s) out.push_back(box.at(halton_point(s, dim)));
  return out;
}

/// Projected gradient descent for min of d_k over the box, started at w.
/// Catches isolated zeros that the coverage sample steps over.
double refine_delay_min(const Model& model, int k, const Box& box, Vec w) {
  double value = model.delay(k, w);
  double step = 0.1 * (box.upper - box.lower).maxCoeff();
  for (int it = 0; it < 200 && step > 1e-14; ++it) {
    const RowVec grad = model.delay_gradient(k, w);
    const double norm = grad.lpNorm<Eigen::Infinity>();
    if (!(norm > 0.0)) break;
    const Vec trial = (w - step * grad.transpose() / norm).cwiseMax(box.lower).cwiseMin(box.upper);
    const double next = model.in_W(trial) ? model.delay(k, trial) : value;
    if (next < value) {
      w = trial;
      value = next;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  return value;
}

}  // namespace

std::shared_ptr<const FrameJ> FrameJ::build(ModelPtr model, DelaySet J, Box box, FrameJOptions options) {
  if (!model) throw Error(ErrorCode::invalid_argument, "frame needs a model");
  if (J.k() != model->k()) throw Error(ErrorCode::invalid_argument, "delay set has the wrong size");
  if (J.is_full()) throw Error(ErrorCode::invalid_argument, "use the chart for J = K");
  if (box.dim() != model->dim_f() || box.upper.size() != box.lower.size()) {
    throw Error(ErrorCode::dimension_mismatch, "coverage box has the wrong dimension");
  }
  for (int i = 0; i < box.dim(); ++i) {
    if (!(box.lower(i) <= box.upper(i))) throw Error(ErrorCode::invalid_argument, "coverage box is empty");
  }
  if (!(options.beta > 0.0) || !(options.ratio > 0.0 && options.ratio < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "bad frame options");
  }

  std::shared_ptr<FrameJ> frame(new FrameJ());
  frame->model_ = model;
  frame->J_ = J;
  frame->box_ = std::move(box);
  frame->options_ = options;
  const int positive = J.complement().size();
  frame->gap_ = positive > 1 ? 1.5 * std::log(static_cast<double>(positive)) / options.beta : 0.0;

  const double r = model->r();
  const double margin = 10.0 * model->zero_tol();
  double min_dj = std::numeric_limits<double>::infinity();
  double min_p = std::numeric_limits<double>::infinity();
  for (const Vec& w : coverage_sample(frame->box_, options.box_samples)) {
    if (!model->in_W(w)) {
      throw Error(ErrorCode::box_not_in_WJ, "coverage box leaves W");
    }
    const double dj = model->dmin(J, w);
    if (!(dj > margin)) {
      std::ostringstream msg;
      msg << "d^J = " << dj << " on the coverage box for J = " << J.to_string();
      throw Error(ErrorCode::box_not_in_WJ, msg.str());
    }
    min_dj = std::min(min_dj, dj);
    min_p = std::min(min_p, frame->proxy(w));
  }
  if (model->dim_f() > 0) {
    // refine each positive delay from the sample points where it is smallest
    const std::vector<Vec> sample = coverage_sample(frame->box_, options.box_samples);
    for (int k = 0; k < model->k(); ++k) {
      if (J.contains(k)) continue;
      std::vector<std::pair<double, std::size_t>> order;
      for (std::size_t i = 0; i < sample.size(); ++i) order.push_back({model->delay(k, sample[i]), i});
      const std::size_t starts = std::min<std::size_t>(4, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(starts), order.end());
      for (std::size_t s = 0; s < starts; ++s) {
        const double low = refine_delay_min(*model, k, frame->box_, sample[order[s].second]);
        if (!(low > margin)) {
          std::ostringstream msg;
          msg << "delay " << k + 1 << " reaches " << low << " inside the coverage box for J = " << J.to_string();
          throw Error(ErrorCode::box_not_in_WJ, msg.str());
        }
        min_dj = std::min(min_dj, low);
      }
    }
  }
  if (!(min_p > 0.0)) throw Error(ErrorCode::box_not_in_WJ, "proxy for d^J is not positive on the box");
  frame->min_dj_ = min_dj;
  frame->min_proxy_ = min_p;

  const double target = std::min(min_p, r) / 2.0;
  int L = 1;
  if (model->dim_f() > 0) {
    L = std::max(1, static_cast<int>(std::ceil(std::log(target / r) / std::log(options.ratio) - 1e-12)));
  }
  const double rho = std::pow(target / r, 1.0 / L);
  std::vector<double> deltas;
  for (int m = 1; m <= L; ++m) deltas.push_back(m == L ? target : r * std::pow(rho, m));
  if (model->dim_f() == 0) deltas = {std::min(min_dj, r)};

  for (double delta : deltas) {
    FrameLevel level;
    level.delta = delta;
    for (int nu = 0; nu < model->n(); ++nu) level.bumps.push_back(make_component_bump(*model, nu, -delta));
    frame->levels_.push_back(std::move(level));
  }
  for (int t = 0; t + 1 < static_cast<int>(deltas.size()); ++t) {
    const double prev = t == 0 ? r : deltas[static_cast<std::size_t>(t - 1)];
    const double lo = deltas[static_cast<std::size_t>(t)] + frame->gap_;
    frame->lo_.push_back(lo);
    frame->hi_.push_back(lo + 0.5 * (prev - deltas[static_cast<std::size_t>(t)]));
  }
  return frame;
}

double FrameJ::proxy(const Vec& w) const {
  const Model& m = *model_;
  if (J_.complement().size() == 1) {
    for (int k = 0; k < m.k(); ++k) {
      if (!J_.contains(k)) return m.delay(k, w);
    }
  }
  const double dmin = m.dmin(J_, w);
  double sum = 0.0;
  for (int k = 0; k < m.k(); ++k) {
    if (!J_.contains(k)) sum += std::exp(-options_.beta * (m.delay(k, w) - dmin));
  }
  return dmin - std::log(sum) / options_.beta;
}

RowVec FrameJ::proxy_gradient(const Vec& w) const {
  const Model& m = *model_;
  RowVec grad = RowVec::Zero(m.dim_f());
  if (m.dim_f() == 0) return grad;
  const double dmin = m.dmin(J_, w);
  double sum = 0.0;
  for (int k = 0; k < m.k(); ++k) {
    if (J_.contains(k)) continue;
    const double weight = std::exp(-options_.beta * (m.delay(k, w) - dmin));
    sum += weight;
    grad += weight * m.delay_gradient(k, w);
  }
  return grad / sum;
}

bool FrameJ::covers(const Vec& w) const {
  if (w.size() != box_.dim()) return false;
  if (box_.dim() > 0) {
    const Vec slack = Vec::Constant(w.size(), 1e-12);
    if (!Box{box_.lower - slack, box_.upper + slack}.contains(w)) return false;
  }
  if (!model_->in_W(w)) return false;
  return model_->dmin(J_, w) >= levels_.back().delta;
}

void FrameJ::require_covered(const Vec& w) const {
  if (!covers(w)) {
    std::ostringstream msg;
    msg << "w = [" << w.transpose() << "] is outside the coverage of the frame for J = " << J_.to_string();
    throw Error(ErrorCode::outside_box, msg.str());
  }
}

std::pair<double, double> FrameJ::cutoff(int t, double p) const {
  const double lo = lo_[static_cast<std::size_t>(t)], hi = hi_[static_cast<std::size_t>(t)];
  const double s = std::clamp((hi - p) / (hi - lo), 0.0, 1.0);
  const double a = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
  const double da_ds = 30.0 * s * s * (1.0 - s) * (1.0 - s);
  return {a, -da_ds / (hi - lo)};
}

Vec FrameJ::weights(const Vec& w) const {
  const int L = static_cast<int>(levels_.size());
  Vec c = Vec::Zero(L);
  if (L == 1) {
    c(0) = 1.0;
    return c;
  }
  const double p = proxy(w);
  double prev = 1.0;  // a_{t-1}, with a_{-1} = 1 so that c_0 = 1 - a_0
  for (int t = 0; t + 1 < L; ++t) {
    const double a = cutoff(t, p).first;
    c(t) = prev - a;
    prev = a;
  }
  c(L - 1) = prev;
  return c;
}

Vec FrameJ::weights_derivative(const Vec& w, const Vec& w_tilde) const {
  const int L = static_cast<int>(levels_.size());
  Vec dc = Vec::Zero(L);
  if (L == 1) return dc;
  const double p = proxy(w);
  const double dp = (proxy_gradient(w) * w_tilde)(0);
  double prev = 0.0;
  for (int t = 0; t + 1 < L; ++t) {
    const double da = cutoff(t, p).second * dp;
    dc(t) = prev - da;
    prev = da;
  }
  dc(L - 1) = prev;
  return dc;
}

MatSegmentC1 FrameJ::combine(const Vec& c, double slope_at_zero) const {
  const int n = model_->n();
  const int M = model_->grid_ptr()->size();
  std::vector<SegmentC1> entries;
  entries.reserve(static_cast<std::size_t>(n));
  for (int nu = 0; nu < n; ++nu) {
    Mat values = Mat::Zero(M, 1), derivs = Mat::Zero(M, 1);
    for (std::size_t m = 0; m < levels_.size(); ++m) {
      const double cm = c(static_cast<int>(m));
      if (cm == 0.0) continue;
      const SegmentC1& psi = levels_[m].bumps[static_cast<std::size_t>(nu)].phi;
      values += cm * psi.values();
      derivs += cm * psi.derivs();
    }
    // The weights sum to 1 (or 0 for derivatives); keep the data at 0 exact.
    values(M - 1, 0) = 0.0;
    derivs(M - 1, 0) = slope_at_zero;
    entries.emplace_back(model_->grid_ptr(), std::move(values), std::move(derivs));
  }
  return MatSegmentC1::diagonal(entries);
}

MatSegmentC1 FrameJ::Y(const Vec& w) const {
  require_covered(w);
  std::vector<double> key(w.data(), w.data() + w.size());
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    if (auto it = cache_->entries.find(key); it != cache_->entries.end()) return it->second;
  }
  MatSegmentC1 y = combine(weights(w), 1.0);
  std::lock_guard<std::mutex> lock(cache_->mutex);
  if (cache_->entries.size() >= options_.cache_capacity) cache_->entries.clear();
  return cache_->entries.try_emplace(std::move(key), std::move(y)).first->second;
}

MatSegmentC1 FrameJ::dY(const Vec& w, const Vec& w_tilde) const {
  require_covered(w);
  if (w_tilde.size() != w.size()) throw Error(ErrorCode::dimension_mismatch, "direction has wrong size");
  return combine(weights_derivative(w, w_tilde), 0.0);
}

json FrameJ::report() const {
  json doc;
  doc["J"] = J_.to_string();
  doc["box"] = {{"lower", std::vector<double>(box_.lower.data(), box_.lower.data() + box_.lower.size())},
                {"upper", std::vector<double>(box_.upper.data(), box_.upper.data() + box_.upper.size())}};
  doc["beta"] = options_.beta;
  doc["softmin_gap"] = gap_;
  doc["min_sampled_dJ"] = min_dj_;
  doc["min_sampled_proxy"] = min_proxy_;
  json levels = json::array();
  for (const auto& level : levels_) {
    double worst = 0.0;
    int basis = 0;
    for (const auto& b : level.bumps) {
      worst = std::max(worst, b.certificate.worst());
      basis = std::max(basis, b.basis_size);
    }
    levels.push_back({{"delta", level.delta}, {"basis_size", basis}, {"certificate", worst}});
  }
  doc["levels"] = levels;
  json transitions = json::array();
  for (std::size_t t = 0; t < lo_.size(); ++t) transitions.push_back({{"lower", lo_[t]}, {"upper", hi_[t]}});
  doc["transitions"] = transitions;
  return doc;
}

ChartJ::ChartJ(ModelPtr model, FrameJPtr frame, SolverSettings settings)
    : model_(std::move(model)), frame_(std::move(frame)), settings_(settings) {
  if (!model_ || !frame_) throw Error(ErrorCode::invalid_argument, "chart needs a model and a frame");
}

ChartJ ChartJ::build(ModelPtr model, DelaySet J, Box box, FrameJOptions options, SolverSettings settings) {
  FrameJPtr frame = FrameJ::build(model, J, std::move(box), options);
  return ChartJ(std::move(model), std::move(frame), settings);
}

SegmentC1 ChartJ::project(const SegmentC1& phi) const {
  return phi - frame_->apply(model_->apply_L(phi), phi.deriv_at_zero());
}

SegmentC1 ChartJ::drj(const SegmentC1& phi, const SegmentC1& chi) const {
  const Vec w = model_->apply_L(phi);
  return chi - frame_->dY_apply(w, model_->apply_L(chi), phi.deriv_at_zero()) -
         frame_->apply(w, chi.deriv_at_zero());
}

ChartSolve ChartJ::invert(const SegmentC1& chi) const {
  require_in_X0(chi);
  const Model& m = *model_;
  const int n = m.n();
  const MatSegmentC1 Y = frame_->Y(m.apply_L(chi));
  auto F = [&](const Vec& x) { return m.rhs_f(chi + Y.apply(x)); };
  auto dF = [&](const Vec& x) {
    const SegmentC1 phi = chi + Y.apply(x);
    Mat J(n, n);
    for (int nu = 0; nu < n; ++nu) J.col(nu) = m.df(phi, Y.column(nu));
    return J;
  };
  const SolveResult s = solve_fixed_point(F, dF, Vec::Zero(n), settings_);
  ChartSolve out;
  out.phi = chi + Y.apply(s.x);
  out.x = s.x;
  out.iterations = s.iterations;
  out.residual = s.residual;
  return out;
}

SegmentC1 ChartJ::tangent_lift(const SegmentC1& phi, const SegmentC1& eta) const {
  const Model& m = *model_;
  const int n = m.n();
  const Vec w = m.apply_L(phi);
  const Vec l_eta = m.apply_L(eta);
  const Vec dphi0 = phi.deriv_at_zero();
  const SegmentC1 zeta = eta + frame_->dY_apply(w, l_eta, dphi0);
  Vec bracket(n * m.k());
  for (int k = 0; k < m.k(); ++k) {
    const double dd = m.dim_f() > 0 ? (m.delay_gradient(k, w) * l_eta)(0) : 0.0;
    if (J().contains(k)) {
      bracket.segment(k * n, n) = eta.value_at_zero() - dphi0 * dd;
    } else {
      const double t = -m.delay(k, w);
      bracket.segment(k * n, n) = zeta.eval(t) - phi.eval_deriv(t) * dd;
    }
  }
  const Vec x = m.dg(m.hat(phi)) * bracket;
  return zeta + frame_->apply(w, x);
}

SegmentC1 ChartJ::graph_offset(const SegmentC1& chi) const {
  return frame_->apply(model_->apply_L(chi), invert(chi).x);
}

SegmentC1 ChartJ::almost_graph(const SegmentC1& phi) const {
  return phi - frame_->apply(model_->apply_L(phi), invert(project(phi)).x);
}

SegmentC1 ChartJ::almost_graph_inverse(const SegmentC1& rho) const {
  return rho + frame_->apply(model_->apply_L(rho), invert(project(rho)).x);
}

}  // namespace sdde
