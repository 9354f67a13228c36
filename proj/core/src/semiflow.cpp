#include "sdde/semiflow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace sdde {

namespace {

Vec hermite_value(double a, double h, const Vec& xa, const Vec& da, const Vec& xb, const Vec& db, double t) {
  const double s = (t - a) / h;
  const HermiteBasis b = HermiteBasis::value(s);
  return b.h00 * xa + (b.h10 * h) * da + b.h01 * xb + (b.h11 * h) * db;
}

Vec hermite_slope(double a, double h, const Vec& xa, const Vec& da, const Vec& xb, const Vec& db, double t) {
  const double s = (t - a) / h;
  const HermiteBasis b = HermiteBasis::slope(s);
  return (b.h00 / h) * xa + b.h10 * da + (b.h01 / h) * xb + b.h11 * db;
}

/// x_{t_s} during the step [t_n, t_n + h]: history up to t_n, the provisional
/// step polynomial on (t_n, t_s), and the stage value at offset 0.
class StepView {
 public:
  StepView(const Trajectory& traj, double t_n, double h, const Vec& xn, const Vec& fn, const Vec& X,
           const Vec& F, double t_s, const Vec& stage)
      : traj_(traj), t_n_(t_n), h_(h), xn_(xn), fn_(fn), X_(X), F_(F), t_s_(t_s), stage_(stage) {}

  Vec eval(double s) const {
    if (s == 0.0) return stage_;
    const double tau = t_s_ + s;
    if (tau <= t_n_) return traj_.eval(tau);
    touched_ = true;
    return hermite_value(t_n_, h_, xn_, fn_, X_, F_, tau);
  }

  bool touched() const noexcept { return touched_; }

 private:
  const Trajectory& traj_;
  double t_n_, h_;
  const Vec &xn_, &fn_, &X_, &F_;
  double t_s_;
  const Vec& stage_;
  mutable bool touched_ = false;
};

/// x_t for t inside the stored history.
class HistoryView {
 public:
  HistoryView(const Trajectory& traj, double t) : traj_(traj), t_(t) {}
  Vec eval(double s) const { return traj_.eval(t_ + s); }

 private:
  const Trajectory& traj_;
  double t_;
};

}  // namespace

int Trajectory::locate(double t) const {
  if (!(t >= times_.front() && t <= times_.back())) {
    std::ostringstream msg;
    msg << "time " << t << " outside the trajectory [" << times_.front() << ", " << times_.back() << "]";
    throw Error(ErrorCode::domain, msg.str());
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  int i = static_cast<int>(it - times_.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(times_.size()) - 2);
}

Vec Trajectory::eval(double t) const {
  const int i = locate(t);
  const std::size_t a = static_cast<std::size_t>(i), b = a + 1;
  if (t == times_[a]) return values_[a];
  if (t == times_[b]) return values_[b];
  return hermite_value(times_[a], times_[b] - times_[a], values_[a], derivs_[a], values_[b], derivs_[b], t);
}

Vec Trajectory::eval_deriv(double t) const {
  const int i = locate(t);
  const std::size_t a = static_cast<std::size_t>(i), b = a + 1;
  if (t == times_[a]) return derivs_[a];
  if (t == times_[b]) return derivs_[b];
  return hermite_slope(times_[a], times_[b] - times_[a], values_[a], derivs_[a], values_[b], derivs_[b], t);
}

Vec Trajectory::one_sided(int node, int side, bool derivative) const {
  const int last = static_cast<int>(times_.size()) - 1;
  if (node < 0 || node > last) throw Error(ErrorCode::domain, "node index out of range");
  const int piece = side < 0 ? node - 1 : node;
  if (piece < 0 || piece >= last) throw Error(ErrorCode::domain, "no piece on that side");
  const std::size_t a = static_cast<std::size_t>(piece), b = a + 1;
  const double h = times_[b] - times_[a];
  const double t = times_[static_cast<std::size_t>(node)];
  return derivative ? hermite_slope(times_[a], h, values_[a], derivs_[a], values_[b], derivs_[b], t)
                    : hermite_value(times_[a], h, values_[a], derivs_[a], values_[b], derivs_[b], t);
}

SegmentC1 Trajectory::segment_at(double t) const {
  if (!(t >= 0.0 && t <= t_end())) throw Error(ErrorCode::domain, "segment time outside [0, t_end]");
  const GridPtr& grid = model_->grid_ptr();
  const int M = grid->size(), n = model_->n();
  Mat values(M, n), derivs(M, n);
  for (int i = 0; i < M; ++i) {
    const double tau = i == M - 1 ? t : t + grid->node(i);
    values.row(i) = eval(tau).transpose();
    derivs.row(i) = eval_deriv(tau).transpose();
  }
  return SegmentC1(grid, std::move(values), std::move(derivs));
}

void Trajectory::write_csv(std::ostream& out, int stride) const {
  const int n = model_->n();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= n; ++i) out << ",dx" << i;
  out << ",residual,stratum\n";
  out.precision(17);
  const int first = first_step_node();
  const std::string initial_stratum = [&] {
    const auto J = model_->membership(segment_at(0.0));
    return J ? J->to_string() : std::string("outside");
  }();
  stride = std::max(1, stride);
  const int last = static_cast<int>(times_.size()) - 1;
  for (int j = first; j <= last; ++j) {
    if ((j - first) % stride != 0 && j != last) continue;
    const std::size_t u = static_cast<std::size_t>(j);
    out << times_[u];
    for (int i = 0; i < n; ++i) out << ',' << values_[u](i);
    for (int i = 0; i < n; ++i) out << ',' << derivs_[u](i);
    if (j == first) {
      out << ',' << initial_residual_ << ',' << initial_stratum << '\n';
    } else {
      const StepDiagnostic& d = diagnostics_[static_cast<std::size_t>(j - first - 1)];
      out << ',' << d.midpoint_residual << ",\"" << d.stratum.to_string() << "\"\n";
    }
  }
}

Trajectory integrate(ModelPtr model_ptr, const SegmentC1& phi0, const IntegrateOptions& opt) {
  if (!model_ptr) throw Error(ErrorCode::invalid_argument, "integrate needs a model");
  const Model& model = *model_ptr;
  if (!same_grid(phi0.grid_ptr(), model.grid_ptr()) || phi0.dim() != model.n()) {
    throw Error(ErrorCode::grid_mismatch, "initial segment does not match the model grid");
  }
  if (!(opt.h > 0.0) || opt.h > model.r() / 4) throw Error(ErrorCode::invalid_argument, "step must satisfy 0 < h <= r/4");
  if (!(opt.T >= 0.0)) throw Error(ErrorCode::invalid_argument, "horizon must be nonnegative");

  Trajectory traj;
  traj.model_ = model_ptr;
  traj.h_ = opt.h;
  traj.T_ = opt.T;
  traj.initial_residual_ = model.on_manifold_residual(phi0);
  if (traj.initial_residual_ > opt.initial_manifold_tol) {
    std::ostringstream msg;
    msg << "initial segment is not on X_f (residual " << traj.initial_residual_ << "); lift it first";
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
  const Grid& grid = phi0.grid();
  traj.initial_nodes_ = grid.size();
  for (int i = 0; i < grid.size(); ++i) {
    traj.times_.push_back(grid.node(i));
    traj.values_.push_back(phi0.values().row(i).transpose());
    traj.derivs_.push_back(phi0.derivs().row(i).transpose());
  }

  const LinearMap& L = model.L();
  double t_n = 0.0;
  while (t_n < opt.T * (1 - 1e-12)) {
    const double h = std::min(opt.h, opt.T - t_n);
    const Vec xn = traj.values_.back();
    const Vec fn = traj.derivs_.back();
    Vec X = xn + h * fn;
    Vec F = fn;
    int iterations = 0;
    bool converged = false;
    try {
      for (int it = 1; it <= opt.max_overlap_iterations; ++it) {
        bool touched = false;
        auto stage_f = [&](double c, const Vec& Y) {
          StepView view(traj, t_n, h, xn, fn, X, F, t_n + c * h, Y);
          const Vec k = model.rhs_f_view(view);
          touched = touched || view.touched();
          return k;
        };
        const Vec k1 = stage_f(0.0, xn);
        const Vec k2 = stage_f(0.5, xn + (h / 2) * k1);
        const Vec k3 = stage_f(0.5, xn + (h / 2) * k2);
        const Vec k4 = stage_f(1.0, xn + h * k3);
        const Vec X_new = xn + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        StepView end(traj, t_n, h, xn, fn, X_new, F, t_n + h, X_new);
        const Vec F_new = model.rhs_f_view(end);
        touched = touched || end.touched();
        const double change = std::max((X_new - X).lpNorm<Eigen::Infinity>(), (F_new - F).lpNorm<Eigen::Infinity>());
        X = X_new;
        F = F_new;
        iterations = touched ? it : 0;
        if (!touched || change <= opt.overlap_tol * std::max(1.0, X.lpNorm<Eigen::Infinity>())) {
          converged = true;
          break;
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::outside_W && e.code() != ErrorCode::outside_V) throw;
      traj.truncated_ = true;
      std::ostringstream msg;
      msg << "left U during the step from t = " << t_n << ": " << e.what();
      traj.reason_ = msg.str();
      break;
    }
    if (!converged) {
      std::ostringstream msg;
      msg << "overlap iteration did not converge in the step from t = " << t_n;
      throw Error(ErrorCode::overlap_no_convergence, msg.str());
    }

    const double t_next = (opt.T - t_n) <= opt.h * (1 + 1e-12) ? opt.T : t_n + h;
    traj.times_.push_back(t_next);
    traj.values_.push_back(X);
    traj.derivs_.push_back(F);

    StepDiagnostic d;
    d.t = t_next;
    d.overlap_iterations = iterations;
    try {
      const double mid = t_n + h / 2;
      const HistoryView view(traj, mid);
      d.midpoint_residual = (traj.eval_deriv(mid) - model.rhs_f_view(view)).lpNorm<Eigen::Infinity>();
      const HistoryView at_end(traj, t_next);
      d.stratum = model.classify(L.apply_fn([&](double s) { return at_end.eval(s); }));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::outside_W && e.code() != ErrorCode::outside_V) throw;
      d.midpoint_residual = std::numeric_limits<double>::quiet_NaN();
      traj.diagnostics_.push_back(d);
      traj.truncated_ = true;
      traj.reason_ = std::string("left U at t = ") + std::to_string(t_next) + ": " + e.what();
      break;
    }
    traj.diagnostics_.push_back(d);
    t_n = t_next;
  }
  return traj;
}

}  // namespace sdde
