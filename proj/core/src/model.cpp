#include "sdde/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdde/sampling.hpp"

namespace sdde {

namespace {

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

bool Box::contains(const Vec& p) const {
  if (p.size() != lower.size()) return false;
  for (int i = 0; i < p.size(); ++i) {
    if (!(p(i) >= lower(i) && p(i) <= upper(i))) return false;
  }
  return true;
}

std::string to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::none: return "none";
    case Hypothesis::bounded_g: return "bounded_g";
    case Hypothesis::d1_bounded: return "d1_bounded";
    case Hypothesis::single_stratum: return "single_stratum";
  }
  return "none";
}

std::shared_ptr<const Model> Model::create(ModelSpec spec) {
  if (!spec.grid) throw Error(ErrorCode::config, "model needs a grid");
  if (spec.n < 1) throw Error(ErrorCode::config, "model needs n >= 1");
  if (spec.delays.empty() || static_cast<int>(spec.delays.size()) > DelaySet::kMaxDelays) {
    throw Error(ErrorCode::config, "model needs between 1 and 32 delays");
  }
  if (spec.L.n() != spec.n || !same_grid(spec.L.grid_ptr(), spec.grid)) {
    throw Error(ErrorCode::config, "L does not match the model dimension or grid");
  }
  for (const auto& d : spec.delays) {
    if (!d.value || !d.gradient) throw Error(ErrorCode::config, "delay '" + d.name + "' is incomplete");
  }
  if (!spec.g.value || !spec.g.jacobian) throw Error(ErrorCode::config, "g is incomplete");
  if (spec.W_box && spec.W_box->dim() != spec.L.dim_f()) {
    throw Error(ErrorCode::config, "W box has wrong dimension");
  }
  const int nk = spec.n * static_cast<int>(spec.delays.size());
  if (spec.V_box && spec.V_box->dim() != nk) throw Error(ErrorCode::config, "V box has wrong dimension");
  if (!(spec.zero_tol >= 0.0)) throw Error(ErrorCode::config, "zero_tol must be nonnegative");
  if (spec.hypothesis.kind == Hypothesis::single_stratum && spec.hypothesis.stratum.k() != nk / spec.n) {
    throw Error(ErrorCode::config, "declared stratum has the wrong delay count");
  }

  auto model = std::shared_ptr<const Model>(new Model(std::move(spec)));
  model->self_check();
  return model;
}

void Model::self_check() const {
  const int samples = std::max(1, spec_.self_check_samples);
  const double tol = spec_.gradient_rel_tol;
  const int df = dim_f();

  std::vector<Vec> ws;
  if (spec_.W_box) {
    for (int s = 0; s < samples; ++s) ws.push_back(spec_.W_box->at(halton_point(s, df)));
  }
  if (spec_.witness) ws.push_back(apply_L(*spec_.witness));
  if (ws.empty()) ws.push_back(Vec::Zero(df));

  for (const Vec& w : ws) {
    if (!in_W(w)) continue;
    for (int j = 0; j < k(); ++j) {
      const double d = spec_.delays[static_cast<std::size_t>(j)].value(w);
      if (!(d >= 0.0 && d <= r())) {
        std::ostringstream msg;
        msg << "delay " << j + 1 << " = " << d << " leaves [0, r]";
        throw Error(ErrorCode::config, msg.str());
      }
      const RowVec grad = delay_gradient(j, w);
      if (grad.size() != df) throw Error(ErrorCode::dimension_mismatch, "delay gradient has wrong size");
      for (int i = 0; i < df; ++i) {
        const double eps = 1e-6 * std::max(1.0, std::abs(w(i)));
        Vec wp = w, wm = w;
        wp(i) += eps;
        wm(i) -= eps;
        if (!in_W(wp) || !in_W(wm)) continue;
        const double fd = (spec_.delays[static_cast<std::size_t>(j)].value(wp) -
                           spec_.delays[static_cast<std::size_t>(j)].value(wm)) / (2 * eps);
        if (!close_rel(grad(i), fd, tol)) {
          std::ostringstream msg;
          msg << "gradient of delay " << j + 1 << " component " << i << ": " << grad(i)
              << " vs finite difference " << fd;
          throw Error(ErrorCode::gradient_check_failed, msg.str());
        }
      }
    }
  }

  const int nk = n() * k();
  std::vector<Vec> vs;
  const Box vbox = spec_.V_box ? *spec_.V_box : Box{Vec::Constant(nk, -2.0), Vec::Constant(nk, 2.0)};
  for (int s = 0; s < samples; ++s) vs.push_back(vbox.at(halton_point(s, nk)));
  if (spec_.witness && in_W(apply_L(*spec_.witness))) vs.push_back(hat(*spec_.witness));
  for (const Vec& v : vs) {
    if (!in_V(v)) continue;
    const Vec gv = g(v);
    if (gv.size() != n()) throw Error(ErrorCode::dimension_mismatch, "g returns wrong dimension");
    if (spec_.hypothesis.kind == Hypothesis::bounded_g && spec_.hypothesis.bound &&
        gv.lpNorm<Eigen::Infinity>() > *spec_.hypothesis.bound) {
      throw Error(ErrorCode::config, "g exceeds its declared bound");
    }
    const Mat jac = dg(v);
    if (jac.rows() != n() || jac.cols() != nk) throw Error(ErrorCode::dimension_mismatch, "Dg has wrong shape");
    for (int c = 0; c < nk; ++c) {
      const double eps = 1e-6 * std::max(1.0, std::abs(v(c)));
      Vec vp = v, vm = v;
      vp(c) += eps;
      vm(c) -= eps;
      if (!in_V(vp) || !in_V(vm)) continue;
      const Vec fd = (g(vp) - g(vm)) / (2 * eps);
      for (int mu = 0; mu < n(); ++mu) {
        if (!close_rel(jac(mu, c), fd(mu), tol)) {
          std::ostringstream msg;
          msg << "Dg entry (" << mu << "," << c << "): " << jac(mu, c) << " vs finite difference " << fd(mu);
          throw Error(ErrorCode::gradient_check_failed, msg.str());
        }
      }
    }
  }

  if (spec_.witness) {
    if (!same_grid(spec_.witness->grid_ptr(), spec_.grid) || spec_.witness->dim() != n()) {
      throw Error(ErrorCode::config, "witness segment does not match the model");
    }
    if (!membership(*spec_.witness)) throw Error(ErrorCode::config, "witness segment is not in U");
  }
}

bool Model::in_W(const Vec& w) const {
  if (w.size() != dim_f()) return false;
  if (!w.allFinite()) return false;
  return spec_.in_W ? spec_.in_W(w) : true;
}

bool Model::in_V(const Vec& v) const {
  if (v.size() != n() * k()) return false;
  if (!v.allFinite()) return false;
  return spec_.in_V ? spec_.in_V(v) : true;
}

void Model::require_W(const Vec& w) const {
  if (!in_W(w)) throw Error(ErrorCode::outside_W, "L phi is not in W");
}

void Model::require_V(const Vec& v) const {
  if (!in_V(v)) throw Error(ErrorCode::outside_V, "hat phi is not in V");
}

double Model::delay(int k, const Vec& w) const {
  // Clamp round-off; the registration check guarantees 0 <= d <= r on samples.
  return std::clamp(spec_.delays.at(static_cast<std::size_t>(k)).value(w), 0.0, r());
}

RowVec Model::delay_gradient(int k, const Vec& w) const {
  return spec_.delays.at(static_cast<std::size_t>(k)).gradient(w);
}

DelaySet Model::classify(const Vec& w) const {
  require_W(w);
  DelaySet J = DelaySet::none(k());
  for (int j = 0; j < k(); ++j) {
    if (delay(j, w) <= spec_.zero_tol) J = J.with(j);
  }
  return J;
}

double Model::dmin(const DelaySet& J, const Vec& w) const {
  if (J.is_full()) throw Error(ErrorCode::invalid_argument, "d^J is undefined for J = K");
  require_W(w);
  double m = std::numeric_limits<double>::infinity();
  for (int j = 0; j < k(); ++j) {
    if (!J.contains(j)) m = std::min(m, delay(j, w));
  }
  return m;
}

Vec Model::hat(const SegmentC1& phi) const {
  if (phi.dim() != n()) throw Error(ErrorCode::dimension_mismatch, "segment has wrong dimension");
  return hat_fn(apply_L(phi), [&](double t) { return phi.eval(t); });
}

Vec Model::rhs_f(const SegmentC1& phi) const {
  const Vec v = hat(phi);
  require_V(v);
  return g(v);
}

Vec Model::df(const SegmentC1& phi, const SegmentC1& chi) const {
  if (phi.dim() != n() || chi.dim() != n()) throw Error(ErrorCode::dimension_mismatch, "segment has wrong dimension");
  return df_core(phi, [&](double t) { return chi.eval(t); }, apply_L(chi));
}

Vec Model::df_ext(const SegmentC1& phi, const SegmentC0& chi) const {
  if (phi.dim() != n() || chi.dim() != n()) throw Error(ErrorCode::dimension_mismatch, "segment has wrong dimension");
  return df_core(phi, [&](double t) { return chi.eval(t); }, spec_.L.apply(chi));
}

std::optional<DelaySet> Model::membership(const SegmentC1& phi) const {
  if (phi.dim() != n()) return std::nullopt;
  const Vec w = apply_L(phi);
  if (!in_W(w)) return std::nullopt;
  const Vec v = hat_fn(w, [&](double t) { return phi.eval(t); });
  if (!in_V(v)) return std::nullopt;
  return classify(w);
}

double Model::on_manifold_residual(const SegmentC1& phi) const {
  return (phi.deriv_at_zero() - rhs_f(phi)).lpNorm<Eigen::Infinity>();
}

double Model::tangent_residual(const SegmentC1& phi, const SegmentC1& chi) const {
  return (chi.deriv_at_zero() - df(phi, chi)).lpNorm<Eigen::Infinity>();
}

}  // namespace sdde
