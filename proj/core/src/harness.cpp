#include "sdde/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <unsupported/Eigen/MatrixFunctions>

#include "sdde/builtin_models.hpp"
#include "sdde/semiflow.hpp"

namespace sdde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Running maximum of residuals for one check.
struct Acc {
  double tol;
  int samples = 0;
  double max = 0.0;
  bool ok = true;
  std::string note;

  explicit Acc(double tolerance) : tol(tolerance) {}

  void add(double residual) {
    ++samples;
    if (std::isnan(residual)) residual = kInf;
    max = std::max(max, residual);
  }
  void fail(const std::string& why) {
    ok = false;
    if (note.empty()) note = why;
  }
  CheckResult result() const {
    CheckResult r;
    r.samples = samples;
    r.max_residual = max;
    r.tolerance = tol;
    r.passed = ok && max <= tol;
    r.note = note;
    return r;
  }
};

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }
double dist(const SegmentC1& a, const SegmentC1& b) { return norm_c1(a - b); }

bool has_k(const CheckContext& ctx) { return ctx.atlas && ctx.atlas->chart_k().has_value(); }

std::vector<DelaySet> j_strata(const CheckContext& ctx) {
  std::vector<DelaySet> out;
  if (!ctx.atlas) return out;
  for (const auto& J : ctx.atlas->strata()) {
    if (!J.is_full() && ctx.atlas->chart_j(J)) out.push_back(J);
  }
  return out;
}

bool has_j(const CheckContext& ctx) { return !j_strata(ctx).empty(); }

std::vector<DelaySet> all_strata(const CheckContext& ctx) {
  return ctx.atlas ? ctx.atlas->strata() : std::vector<DelaySet>{};
}

/// Points of the coverage box at which the frame is defined.
std::vector<Vec> covered_points(const FrameJ& frame, Rng& rng, int count) {
  std::vector<Vec> out;
  for (int attempt = 0; attempt < 200 * count && static_cast<int>(out.size()) < count; ++attempt) {
    Vec w = random_in_box(rng, frame.box());
    if (frame.covers(w)) out.push_back(std::move(w));
  }
  if (static_cast<int>(out.size()) < count) throw Error(ErrorCode::outside_box, "could not sample covered points");
  return out;
}

bool covered(const CheckContext& ctx, const DelaySet& J, const Vec& w) {
  if (J.is_full()) return true;
  const ChartJ* chart = ctx.atlas ? ctx.atlas->chart_j(J) : nullptr;
  if (chart) return chart->frame().covers(w);
  return !ctx.model->W_box() || ctx.model->W_box()->contains(w);
}

template <class Gen>
std::vector<SegmentC1> draw(const CheckContext& ctx, const DelaySet& J, int count, Gen&& gen) {
  const Model& m = *ctx.model;
  std::vector<SegmentC1> out;
  for (int attempt = 0; attempt < 200 * std::max(1, count) && static_cast<int>(out.size()) < count; ++attempt) {
    SegmentC1 phi = gen();
    const auto s = m.membership(phi);
    if (!s || !(*s == J) || !covered(ctx, J, m.apply_L(phi))) continue;
    out.push_back(std::move(phi));
  }
  if (static_cast<int>(out.size()) < count) {
    throw Error(ErrorCode::invalid_argument, "could not sample enough segments in stratum " + J.to_string());
  }
  return out;
}

Vec solve_linear(const Mat& A, const Vec& b) { return A.fullPivLu().solve(b); }

// ---------------------------------------------------------------------------
// funcspace

CheckResult funcspace_linearity(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-12);
  const auto& grid = ctx.model->grid_ptr();
  const int n = ctx.model->n();
  for (int s = 0; s < ctx.config.segments; ++s) {
    const SegmentC1 phi = random_smooth_segment(rng, grid, n), psi = random_smooth_segment(rng, grid, n);
    const double a = uniform(rng, -2, 2), b = uniform(rng, -2, 2);
    const SegmentC1 comb = a * phi + b * psi;
    double worst = 0.0;
    for (int i = 0; i < grid->size(); ++i) {
      const double t = grid->node(i);
      worst = std::max(worst, inf_norm(comb.eval(t) - (a * phi.eval(t) + b * psi.eval(t))));
    }
    for (int k = 0; k < 8; ++k) {
      const double t = uniform(rng, -grid->r(), 0.0);
      worst = std::max(worst, inf_norm(comb.eval(t) - (a * phi.eval(t) + b * psi.eval(t))));
      worst = std::max(worst, inf_norm(comb.eval_deriv(t) - (a * phi.eval_deriv(t) + b * psi.eval_deriv(t))));
    }
    acc.add(worst);
  }
  return acc.result();
}

CheckResult funcspace_derivative(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-6);
  const auto& grid = ctx.model->grid_ptr();
  const double eps = 1e-5;
  for (int s = 0; s < ctx.config.segments; ++s) {
    const SegmentC1 phi = random_smooth_segment(rng, grid, ctx.model->n());
    const int i = static_cast<int>(uniform(rng, 0, grid->size() - 1));
    const double a = grid->node(i), h = grid->spacing(i);
    const double t = a + uniform(rng, 0.1, 0.9) * h;  // away from nodes so t +- eps stays in one piece
    const Vec fd = (phi.eval(t + eps) - phi.eval(t - eps)) / (2 * eps);
    const Vec d = phi.eval_deriv(t);
    acc.add(inf_norm(fd - d) / std::max(1.0, inf_norm(d)));
  }
  return acc.result();
}

CheckResult funcspace_mat_apply(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-12);
  const auto& grid = ctx.model->grid_ptr();
  const int n = ctx.model->n();
  for (int s = 0; s < ctx.config.pairs; ++s) {
    std::vector<SegmentC1> cols;
    for (int mu = 0; mu < n; ++mu) cols.push_back(random_smooth_segment(rng, grid, n));
    const MatSegmentC1 A(cols);
    const Vec q = random_vec(rng, n, 2.0);
    const SegmentC1 aq = mat_apply(A, q);
    double worst = 0.0;
    for (int k = 0; k < 8; ++k) {
      const double t = uniform(rng, -grid->r(), 0.0);
      worst = std::max(worst, inf_norm(aq.eval(t) - A.eval(t) * q));
    }
    for (int mu = 0; mu < n; ++mu) worst = std::max(worst, dist(mat_apply(A, Vec::Unit(n, mu)), A.column(mu)));
    acc.add(worst);
  }
  return acc.result();
}

CheckResult funcspace_cubic(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-12);
  const auto& grid = ctx.model->grid_ptr();
  for (int s = 0; s < ctx.config.pairs; ++s) {
    const Vec c = random_vec(rng, 4, 1.0);
    auto p = [&](double t) { return Vec(Vec::Constant(1, c(0) + t * (c(1) + t * (c(2) + t * c(3))))); };
    auto dp = [&](double t) { return Vec(Vec::Constant(1, c(1) + t * (2 * c(2) + 3 * t * c(3)))); };
    const SegmentC1 phi = SegmentC1::sample(grid, 1, p, dp);
    double worst = 0.0;
    for (double t : refinement_times(*grid)) {
      const double scale = std::max(1.0, std::abs(p(t)(0)));
      worst = std::max(worst, std::abs(phi.eval(t, 0) - p(t)(0)) / scale);
      worst = std::max(worst, std::abs(phi.eval_deriv(t, 0) - dp(t)(0)) / std::max(1.0, std::abs(dp(t)(0))));
    }
    acc.add(worst);
  }
  return acc.result();
}

CheckResult funcspace_norms(const CheckContext& ctx, Rng& rng) {
  Acc acc(0.0);
  const auto& grid = ctx.model->grid_ptr();
  for (int s = 0; s < ctx.config.segments; ++s) {
    const SegmentC1 phi = random_smooth_segment(rng, grid, ctx.model->n());
    // residual = how far norm_c1 falls below norm_c0 (never, by definition)
    acc.add(std::max(0.0, norm_c0(phi) - norm_c1(phi)));
  }
  return acc.result();
}

// ---------------------------------------------------------------------------
// model

std::vector<SegmentC1> any_in_U(const CheckContext& ctx, Rng& rng, int count) {
  return sample_in_U(rng, *ctx.model, count, ctx.config.amplitude, ctx.model->W_box());
}

CheckResult model_linearity(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const Model& m = *ctx.model;
  const auto phis = any_in_U(ctx, rng, ctx.config.pairs);
  for (const auto& phi : phis) {
    const SegmentC1 chi = random_smooth_segment(rng, m.grid_ptr(), m.n());
    const SegmentC1 psi = random_smooth_segment(rng, m.grid_ptr(), m.n());
    const double a = uniform(rng, -2, 2), b = uniform(rng, -2, 2);
    const SegmentC1 comb = a * chi + b * psi;
    double worst = inf_norm(m.apply_L(comb) - (a * m.apply_L(chi) + b * m.apply_L(psi)));
    worst = std::max(worst, inf_norm(m.df(phi, comb) - (a * m.df(phi, chi) + b * m.df(phi, psi))));
    const SegmentC0 c0 = SegmentC0::from_nodes(chi), p0 = SegmentC0::from_nodes(psi);
    const SegmentC0 comb0 = SegmentC0::from_nodes(comb);
    worst = std::max(worst, inf_norm(m.df_ext(phi, comb0) - (a * m.df_ext(phi, c0) + b * m.df_ext(phi, p0))));
    worst = std::max(worst, inf_norm(m.L().apply(comb0) - (a * m.L().apply(c0) + b * m.L().apply(p0))));
    acc.add(worst);
  }
  return acc.result();
}

CheckResult model_df_fd(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-5);
  const Model& m = *ctx.model;
  const double eps = 1e-5;
  for (const auto& phi : any_in_U(ctx, rng, ctx.config.segments)) {
    const SegmentC1 chi = random_smooth_segment(rng, m.grid_ptr(), m.n());
    const Vec fd = (m.rhs_f(phi + eps * chi) - m.rhs_f(phi - eps * chi)) / (2 * eps);
    const Vec d = m.df(phi, chi);
    acc.add(inf_norm(d - fd) / std::max(inf_norm(d), 1e-3));
  }
  return acc.result();
}

CheckResult model_df_ext(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-14);
  const Model& m = *ctx.model;
  for (const auto& phi : any_in_U(ctx, rng, ctx.config.pairs)) {
    const SegmentC1 chi = random_smooth_segment(rng, m.grid_ptr(), m.n());
    const Vec d = m.df(phi, chi);
    acc.add(inf_norm(m.df_ext_fn(phi, chi) - d) / std::max(1.0, inf_norm(d)));
  }
  return acc.result();
}

CheckResult model_membership(const CheckContext& ctx, Rng& rng) {
  Acc acc(0.0);
  const Model& m = *ctx.model;
  for (int s = 0; s < ctx.config.segments; ++s) {
    const SegmentC1 phi = random_smooth_segment(rng, m.grid_ptr(), m.n(), ctx.config.amplitude);
    const auto J = m.membership(phi);
    if (!J) continue;
    const Vec w = m.apply_L(phi);
    int mismatches = 0;
    for (int k = 0; k < m.k(); ++k) {
      if (J->contains(k) != (m.delay(k, w) <= m.zero_tol())) ++mismatches;
    }
    acc.add(mismatches);
  }
  if (acc.samples == 0) acc.fail("no sampled segment was in U");
  return acc.result();
}

CheckResult model_shift_invariance(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const Model& m = *ctx.model;
  for (const auto& phi : any_in_U(ctx, rng, ctx.config.pairs)) {
    const Vec w = m.apply_L(phi);
    const DelaySet J = m.classify(w);
    const double z = J.is_full() ? -m.r() / 2 : -m.dmin(J, w);
    SegmentC1 psi = SegmentC1::zero(m.grid_ptr(), m.n());
    const Vec q = random_vec(rng, m.n(), 2.0);
    for (int nu = 0; nu < m.n(); ++nu) psi += q(nu) * make_vector_bump(m, nu, z);
    double worst = inf_norm(m.apply_L(psi));
    for (int k = 0; k < m.k(); ++k) worst = std::max(worst, inf_norm(psi.eval(-m.delay(k, w))));
    worst = std::max(worst, inf_norm(m.rhs_f(phi + psi) - m.rhs_f(phi)));
    acc.add(worst);
  }
  return acc.result();
}

// ---------------------------------------------------------------------------
// bump

std::vector<ScalarFunctional> random_functional(Rng& rng, const GridPtr& grid, int q) {
  std::vector<ScalarFunctional> rows(static_cast<std::size_t>(q));
  for (auto& row : rows) {
    row.grid = grid;
    const int points = 1 + static_cast<int>(uniform(rng, 0, 3));
    for (int p = 0; p < points; ++p) row.points.emplace_back(uniform(rng, -1, 1), uniform(rng, -grid->r(), 0.0));
    if (uniform(rng, 0, 1) < 0.5) {
      const double a = uniform(rng, -1, 1), b = uniform(rng, -1, 1);
      for (int i = 0; i < grid->size(); ++i) row.density.push_back(a + b * std::sin(grid->node(i)));
    }
  }
  return rows;
}

CheckResult bump_certificates(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const auto& grid = ctx.model->grid_ptr();
  for (int s = 0; s < ctx.config.pairs; ++s) {
    BumpRequest req;
    req.grid = grid;
    req.lambda = random_functional(rng, grid, static_cast<int>(uniform(rng, 0, 4)));
    req.z = uniform(rng, -grid->r(), -grid->r() / 4);
    const Bump b = make_bump(req);
    // Recompute the certificate independently of the one stored in the bump.
    acc.add(certify_bump(b.phi, req.lambda, req.z).worst());
    if (b.phi.value_at_zero()(0) != 0.0) acc.fail("phi(0) is not exactly zero");
    if (b.z_snapped < req.z) acc.fail("support starts left of z");
  }
  return acc.result();
}

CheckResult bump_determinism(const CheckContext& ctx, Rng& rng) {
  Acc acc(0.0);
  const auto& grid = ctx.model->grid_ptr();
  for (int s = 0; s < ctx.config.pairs; ++s) {
    BumpRequest req;
    req.grid = grid;
    req.lambda = random_functional(rng, grid, static_cast<int>(uniform(rng, 0, 4)));
    req.z = uniform(rng, -grid->r(), -grid->r() / 4);
    const Bump a = make_bump(req), b = make_bump(req);
    acc.add(std::max((a.phi.values() - b.phi.values()).lpNorm<Eigen::Infinity>(),
                     (a.phi.derivs() - b.phi.derivs()).lpNorm<Eigen::Infinity>()));
  }
  return acc.result();
}

CheckResult bump_vector(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const Model& m = *ctx.model;
  for (int s = 0; s < ctx.config.pairs; ++s) {
    const double z = uniform(rng, -m.r(), -m.r() / 4);
    for (int nu = 0; nu < m.n(); ++nu) {
      const SegmentC1 eta = make_vector_bump(m, nu, z);
      double worst = inf_norm(m.apply_L(eta));
      worst = std::max(worst, std::abs(eta.deriv_at_zero()(nu) - 1.0));
      worst = std::max(worst, inf_norm(eta.value_at_zero()));
      for (double t : refinement_times(*m.grid_ptr())) {
        if (t <= z) worst = std::max({worst, inf_norm(eta.eval(t)), inf_norm(eta.eval_deriv(t))});
      }
      acc.add(worst);
    }
  }
  return acc.result();
}

// ---------------------------------------------------------------------------
// chart K

const DelaySet full(const CheckContext& ctx) { return DelaySet::all(ctx.model->k()); }

CheckResult k_frame(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const Model& m = *ctx.model;
  const FrameK& frame = ctx.atlas->chart_k()->frame();
  for (int s = 0; s < ctx.config.pairs; ++s) {
    const Vec x = random_vec(rng, m.n(), 2.0);
    const SegmentC1 yx = frame.apply(x);
    acc.add(std::max({inf_norm(yx.value_at_zero()), inf_norm(yx.deriv_at_zero() - x), inf_norm(m.apply_L(yx))}));
  }
  return acc.result();
}

CheckResult k_projection(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-12);
  const Model& m = *ctx.model;
  const ChartK& chart = *ctx.atlas->chart_k();
  for (int s = 0; s < ctx.config.segments; ++s) {
    const SegmentC1 phi = random_smooth_segment(rng, m.grid_ptr(), m.n());
    const SegmentC1 psi = random_smooth_segment(rng, m.grid_ptr(), m.n());
    const double a = uniform(rng, -2, 2), b = uniform(rng, -2, 2);
    const SegmentC1 p = chart.project(phi);
    double worst = dist(chart.project(p), p);
    worst = std::max(worst, dist(chart.project(a * phi + b * psi), a * p + b * chart.project(psi)));
    if (inf_norm(p.deriv_at_zero()) != 0.0) acc.fail("(R^K phi)'(0) is not exactly zero");
    worst = std::max(worst, norm_c1(chart.project(chart.frame().apply(random_vec(rng, m.n(), 2.0)))));
    acc.add(worst);
  }
  return acc.result();
}

CheckResult k_invariance(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const Model& m = *ctx.model;
  const FrameK& frame = ctx.atlas->chart_k()->frame();
  for (const auto& phi : samples::in_stratum(ctx, rng, full(ctx), ctx.config.pairs)) {
    const Vec x = random_vec(rng, m.n(), 2.0);
    acc.add(inf_norm(m.rhs_f(phi + frame.apply(x)) - m.rhs_f(phi)));
  }
  return acc.result();
}

// Shared by both chart kinds.
template <class Chart>
void round_trip(const CheckContext& ctx, Rng& rng, const Chart& chart, const DelaySet& J, Acc& acc) {
  for (const auto& phi : samples::on_manifold(ctx, rng, J, ctx.config.pairs)) {
    const ChartSolve s = chart.invert(chart.project(phi));
    if (s.iterations > 20) acc.fail("Newton needed more than 20 iterations");
    acc.add(dist(s.phi, phi));
  }
}

template <class Chart>
void project_invert(const CheckContext& ctx, Rng& rng, const Chart& chart, const DelaySet& J, Acc& acc) {
  const Model& m = *ctx.model;
  for (const auto& chi : samples::in_X0(ctx, rng, J, ctx.config.pairs)) {
    const ChartSolve s = chart.invert(chi);
    if (s.iterations > 20) acc.fail("Newton needed more than 20 iterations");
    acc.add(std::max(dist(chart.project(s.phi), chi), m.on_manifold_residual(s.phi)));
  }
}

template <class Chart>
void injectivity(const CheckContext& ctx, Rng& rng, const Chart& chart, const DelaySet& J, Acc& acc) {
  const auto pts = samples::on_manifold(ctx, rng, J, ctx.config.pairs);
  for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
    const double gap = dist(pts[i], pts[i + 1]);
    if (gap == 0.0) continue;
    const double image_gap = dist(chart.project(pts[i]), chart.project(pts[i + 1]));
    // residual 1 when two distinct points collapse to one chart image
    acc.add(image_gap > 0.0 ? 0.0 : 1.0);
  }
}

template <class Chart>
void almost_graph(const CheckContext& ctx, Rng& rng, const Chart& chart, const DelaySet& J, Acc& acc,
                  Acc& fixes, Acc& image) {
  const Model& m = *ctx.model;
  const auto on = samples::on_manifold(ctx, rng, J, ctx.config.pairs);
  for (const auto& phi : on) {
    // off-manifold neighbour: perturb the derivative at 0 through the frame
    const SegmentC1 near = phi + 0.05 * (chart.project(phi + 0.1 * random_smooth_segment(rng, m.grid_ptr(), m.n())) -
                                         chart.project(phi));
    acc.add(std::max(dist(chart.almost_graph_inverse(chart.almost_graph(near)), near),
                     dist(chart.almost_graph(chart.almost_graph_inverse(near)), near)));
    image.add(inf_norm(chart.almost_graph(phi).deriv_at_zero()));
  }
  for (const auto& chi : samples::in_X0_and_Xf(ctx, rng, J, ctx.config.pairs)) fixes.add(dist(chart.almost_graph(chi), chi));
}

CheckResult k_round_trip(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-9);
  round_trip(ctx, rng, *ctx.atlas->chart_k(), full(ctx), acc);
  return acc.result();
}

CheckResult k_project_invert(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-9);
  project_invert(ctx, rng, *ctx.atlas->chart_k(), full(ctx), acc);
  return acc.result();
}

CheckResult k_injectivity(const CheckContext& ctx, Rng& rng) {
  Acc acc(0.0);
  injectivity(ctx, rng, *ctx.atlas->chart_k(), full(ctx), acc);
  return acc.result();
}

CheckResult k_tangent(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-9);
  const Model& m = *ctx.model;
  const ChartK& chart = *ctx.atlas->chart_k();
  for (const auto& phi : samples::on_manifold(ctx, rng, full(ctx), ctx.config.pairs)) {
    const SegmentC1 eta = random_x0_segment(rng, m.grid_ptr(), m.n());
    const SegmentC1 chi = chart.tangent_lift(phi, eta);
    // R^K is linear, so its derivative is R^K itself.
    acc.add(std::max(m.tangent_residual(phi, chi), dist(chart.project(chi), eta)));
  }
  return acc.result();
}

CheckResult k_almost_graph(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-9), fixes(1e-10), image(1e-10);
  almost_graph(ctx, rng, *ctx.atlas->chart_k(), full(ctx), acc, fixes, image);
  Acc all(1e-9);
  all.samples = acc.samples + fixes.samples + image.samples;
  all.max = acc.max;
  if (fixes.max > fixes.tol) all.fail("A_K moves a point of X_0 on X_f");
  if (image.max > image.tol) all.fail("A_K maps a point of X_f outside X_0");
  std::ostringstream note;
  note << "fixes " << fixes.max << ", image derivative " << image.max;
  if (all.note.empty()) all.note = note.str();
  return all.result();
}

// ---------------------------------------------------------------------------
// chart J

CheckResult j_frame(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const Model& m = *ctx.model;
  for (const auto& J : j_strata(ctx)) {
    const FrameJ& frame = ctx.atlas->chart_j(J)->frame();
    for (const Vec& w : covered_points(frame, rng, ctx.config.pairs)) {
      const Vec x = random_vec(rng, m.n(), 2.0);
      const SegmentC1 yx = frame.apply(w, x);
      double worst = std::max({inf_norm(yx.value_at_zero()), inf_norm(yx.deriv_at_zero() - x), inf_norm(m.apply_L(yx))});
      for (int k = 0; k < m.k(); ++k) {
        if (J.contains(k)) continue;
        const double end = -m.delay(k, w);
        for (double t : refinement_times(*m.grid_ptr())) {
          if (t <= end) worst = std::max(worst, inf_norm(yx.eval(t)));
        }
        worst = std::max(worst, inf_norm(yx.eval(end)));
      }
      acc.add(worst);
    }
  }
  return acc.result();
}

CheckResult j_frame_derivative(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const Model& m = *ctx.model;
  for (const auto& J : j_strata(ctx)) {
    const FrameJ& frame = ctx.atlas->chart_j(J)->frame();
    for (const Vec& w : covered_points(frame, rng, ctx.config.pairs)) {
      const Vec wt = random_vec(rng, m.dim_f(), 1.0);
      const Vec x = random_vec(rng, m.n(), 2.0);
      const SegmentC1 d = frame.dY_apply(w, wt, x);
      acc.add(std::max({inf_norm(d.value_at_zero()), inf_norm(d.deriv_at_zero()), inf_norm(m.apply_L(d))}));
    }
  }
  return acc.result();
}

CheckResult j_dy_fd(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-4);
  const Model& m = *ctx.model;
  const double eps = 1e-5;
  for (const auto& J : j_strata(ctx)) {
    const FrameJ& frame = ctx.atlas->chart_j(J)->frame();
    int done = 0;
    for (int attempt = 0; attempt < 50 * ctx.config.pairs && done < ctx.config.pairs; ++attempt) {
      const Vec w = random_in_box(rng, frame.box());
      const Vec wt = random_vec(rng, m.dim_f(), 1.0);
      if (!frame.covers(w) || !frame.covers(w + eps * wt) || !frame.covers(w - eps * wt)) continue;
      const Vec x = random_vec(rng, m.n(), 2.0);
      const SegmentC1 fd = (1.0 / (2 * eps)) * (frame.apply(w + eps * wt, x) - frame.apply(w - eps * wt, x));
      const SegmentC1 d = frame.dY_apply(w, wt, x);
      acc.add(norm_c1(d - fd) / std::max(norm_c1(d), 1e-3 * inf_norm(x)));
      ++done;
    }
    if (done < ctx.config.pairs) acc.fail("could not sample interior points of the coverage box");
  }
  return acc.result();
}

CheckResult j_invariance(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const Model& m = *ctx.model;
  for (const auto& J : j_strata(ctx)) {
    const FrameJ& frame = ctx.atlas->chart_j(J)->frame();
    for (const auto& phi : samples::in_stratum(ctx, rng, J, ctx.config.pairs)) {
      const Vec x = random_vec(rng, m.n(), 2.0);
      const SegmentC1 moved = phi + frame.apply(m.apply_L(phi), x);
      const auto s = m.membership(moved);
      if (!s || !(*s == J)) acc.fail("phi + Y_J(L phi) x left the stratum");
      acc.add(inf_norm(m.rhs_f(moved) - m.rhs_f(phi)));
    }
  }
  return acc.result();
}

CheckResult j_columns(const CheckContext& ctx, Rng& rng) {
  Acc acc(0.0);
  const Model& m = *ctx.model;
  for (const auto& J : j_strata(ctx)) {
    const FrameJ& frame = ctx.atlas->chart_j(J)->frame();
    for (const Vec& w : covered_points(frame, rng, ctx.config.pairs)) {
      const MatSegmentC1 Y = frame.Y(w);
      const int M = m.grid_ptr()->size(), n = m.n();
      Mat data(2 * M * n, n);
      for (int nu = 0; nu < n; ++nu) {
        const SegmentC1& c = Y.column(nu);
        data.col(nu) << Eigen::Map<const Vec>(c.values().data(), M * n), Eigen::Map<const Vec>(c.derivs().data(), M * n);
      }
      const double smin = Eigen::JacobiSVD<Mat>(data).singularValues().minCoeff();
      // residual: shortfall of the smallest singular value below 1e-8
      acc.add(smin > 1e-8 ? 0.0 : 1e-8 - smin);
      const Vec x = random_vec(rng, n, 2.0);
      if (inf_norm(Y.apply(x).deriv_at_zero() - x) > 1e-12) acc.fail("Y_J(w) x has derivative at 0 different from x");
    }
  }
  return acc.result();
}

CheckResult j_projection(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-12);
  const Model& m = *ctx.model;
  for (const auto& J : j_strata(ctx)) {
    const ChartJ& chart = *ctx.atlas->chart_j(J);
    for (const auto& chi : samples::in_X0(ctx, rng, J, ctx.config.pairs)) {
      const Vec x = random_vec(rng, m.n(), 2.0);
      const SegmentC1 phi = chi + chart.frame().apply(m.apply_L(chi), x);
      const SegmentC1 p = chart.project(phi);
      if (inf_norm(p.deriv_at_zero()) != 0.0) acc.fail("(R^J phi)'(0) is not exactly zero");
      acc.add(std::max(dist(chart.project(chi), chi), dist(p, chi)));
    }
  }
  return acc.result();
}

CheckResult j_drj_fd(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-4);
  const Model& m = *ctx.model;
  const double eps = 1e-5;
  for (const auto& J : j_strata(ctx)) {
    const ChartJ& chart = *ctx.atlas->chart_j(J);
    int done = 0;
    for (const auto& phi : samples::in_stratum(ctx, rng, J, 2 * ctx.config.pairs)) {
      if (done == ctx.config.pairs) break;
      const SegmentC1 chi = random_smooth_segment(rng, m.grid_ptr(), m.n(), 0.5);
      if (!chart.frame().covers(m.apply_L(phi + eps * chi)) || !chart.frame().covers(m.apply_L(phi - eps * chi))) continue;
      const SegmentC1 fd = (1.0 / (2 * eps)) * (chart.project(phi + eps * chi) - chart.project(phi - eps * chi));
      const SegmentC1 d = chart.drj(phi, chi);
      acc.add(norm_c1(d - fd) / std::max(norm_c1(d), 1e-3));
      ++done;
    }
  }
  return acc.result();
}

CheckResult j_round_trip(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-9);
  for (const auto& J : j_strata(ctx)) round_trip(ctx, rng, *ctx.atlas->chart_j(J), J, acc);
  return acc.result();
}

CheckResult j_project_invert(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-9);
  for (const auto& J : j_strata(ctx)) project_invert(ctx, rng, *ctx.atlas->chart_j(J), J, acc);
  return acc.result();
}

CheckResult j_injectivity(const CheckContext& ctx, Rng& rng) {
  Acc acc(0.0);
  for (const auto& J : j_strata(ctx)) injectivity(ctx, rng, *ctx.atlas->chart_j(J), J, acc);
  return acc.result();
}

CheckResult j_tangent(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-9);
  const Model& m = *ctx.model;
  for (const auto& J : j_strata(ctx)) {
    const ChartJ& chart = *ctx.atlas->chart_j(J);
    for (const auto& phi : samples::on_manifold(ctx, rng, J, ctx.config.pairs)) {
      const SegmentC1 eta = random_x0_segment(rng, m.grid_ptr(), m.n());
      const SegmentC1 chi = chart.tangent_lift(phi, eta);
      acc.add(std::max(m.tangent_residual(phi, chi), dist(chart.drj(phi, chi), eta)));
    }
  }
  return acc.result();
}

CheckResult j_almost_graph(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-9), fixes(1e-10), image(1e-10);
  for (const auto& J : j_strata(ctx)) almost_graph(ctx, rng, *ctx.atlas->chart_j(J), J, acc, fixes, image);
  Acc all(1e-9);
  all.samples = acc.samples + fixes.samples + image.samples;
  all.max = acc.max;
  if (fixes.max > fixes.tol) all.fail("A_J moves a point of X_0 on X_f");
  if (image.max > image.tol) all.fail("A_J maps a point of X_f outside X_0");
  std::ostringstream note;
  note << "fixes " << fixes.max << ", image derivative " << image.max;
  if (all.note.empty()) all.note = note.str();
  return all.result();
}

CheckResult j_graph_offset(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const Model& m = *ctx.model;
  for (const auto& J : j_strata(ctx)) {
    const ChartJ& chart = *ctx.atlas->chart_j(J);
    for (const auto& chi : samples::in_X0_and_Xf(ctx, rng, J, ctx.config.pairs / 2)) {
      acc.add(norm_c1(chart.graph_offset(chi)));
    }
    for (const auto& chi : samples::in_X0(ctx, rng, J, ctx.config.pairs / 2)) {
      const ChartSolve s = chart.invert(chi);
      const SegmentC1 offset = chart.graph_offset(chi);
      // off X_f the offset must leave X_0: its derivative at 0 is x = f(R_J^{-1} chi)
      if (inf_norm(s.x) > 1e-8 && !(inf_norm(offset.deriv_at_zero()) > 0.0)) acc.fail("offset stays in X_0");
      acc.add(inf_norm(offset.deriv_at_zero() - s.x));
      (void)m;
    }
  }
  return acc.result();
}

// ---------------------------------------------------------------------------
// atlas

CheckResult atlas_partition(const CheckContext& ctx, Rng& rng) {
  Acc acc(0.0);
  const Model& m = *ctx.model;
  if (!m.W_box()) {
    acc.fail("model declares no W box");
    return acc.result();
  }
  for (int s = 0; s < ctx.config.segments; ++s) {
    const Vec w = random_in_box(rng, *m.W_box());
    if (!m.in_W(w)) continue;
    const DelaySet J = m.classify(w);
    int violations = 0;
    for (int k = 0; k < m.k(); ++k) {
      const double d = m.delay(k, w);
      if (J.contains(k) ? d > m.zero_tol() : d <= m.zero_tol()) ++violations;
    }
    if (!(m.classify(w) == J)) ++violations;
    acc.add(violations);
  }
  return acc.result();
}

CheckResult atlas_lift(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-10);
  const Model& m = *ctx.model;
  for (const auto& phi : any_in_U(ctx, rng, ctx.config.pairs)) {
    const SegmentC1 lifted = lift_to_manifold(m, phi);
    const double preserved = std::max(inf_norm(m.apply_L(lifted) - m.apply_L(phi)), inf_norm(m.hat(lifted) - m.hat(phi)));
    if (preserved > 1e-12) acc.fail("lift changed L phi or hat phi");
    if (!(m.membership(lifted) == m.membership(phi))) acc.fail("lift changed the stratum");
    acc.add(m.on_manifold_residual(lifted));
  }
  return acc.result();
}

CheckResult atlas_lift_idempotent(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-12);
  const Model& m = *ctx.model;
  for (const auto& phi : any_in_U(ctx, rng, ctx.config.pairs)) {
    const SegmentC1 once = lift_to_manifold(m, phi);
    acc.add(dist(lift_to_manifold(m, once), once));
  }
  return acc.result();
}

CheckResult atlas_witnesses(const CheckContext& ctx, Rng&) {
  Acc acc(1e-9);
  const Model& m = *ctx.model;
  for (const auto& [J, info] : ctx.atlas->stratum_info()) {
    for (const auto& w : info.witnesses) {
      if (!(m.membership(w) == J)) acc.fail("witness not in its stratum");
      if (m.on_manifold_residual(w) > 1e-10) acc.fail("witness not on X_f");
      const ChartImage img = ctx.atlas->chart_for(w);
      acc.add(dist(ctx.atlas->invert(img.J, img.image).phi, w));
    }
  }
  return acc.result();
}

CheckResult atlas_expected(const CheckContext& ctx, Rng&) {
  Acc acc(0.0);
  const auto expected = expected_strata(ctx.builtin_id, *ctx.model);
  const auto found = ctx.atlas->strata();
  const std::set<DelaySet> a(expected.begin(), expected.end()), b(found.begin(), found.end());
  acc.add(a == b ? 0.0 : 1.0);
  if (!(a == b)) {
    std::string got;
    for (const auto& J : found) got += J.to_string() + " ";
    acc.fail("found strata " + got);
  }
  if (found.size() > (std::size_t{1} << ctx.model->k())) acc.fail("more than 2^k strata");
  return acc.result();
}

// ---------------------------------------------------------------------------
// semiflow

SegmentC1 semiflow_start(const CheckContext& ctx, Rng& rng) {
  const auto strata = all_strata(ctx);
  return samples::on_manifold(ctx, rng, strata.front(), 1).front();
}

CheckResult semiflow_continuity(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-12);
  const Model& m = *ctx.model;
  IntegrateOptions opt;
  opt.h = m.r() / 40;
  opt.T = m.r();
  const Trajectory traj = integrate(ctx.model, semiflow_start(ctx, rng), opt);
  if (traj.truncated()) acc.fail(traj.truncation_reason());
  const int last = static_cast<int>(traj.times().size()) - 1;
  for (int j = 1; j < last; ++j) {
    const double jump = std::max(inf_norm(traj.one_sided(j, -1, false) - traj.one_sided(j, 1, false)),
                                 inf_norm(traj.one_sided(j, -1, true) - traj.one_sided(j, 1, true)));
    acc.add(jump / std::max(1.0, inf_norm(traj.derivs()[static_cast<std::size_t>(j)])));
  }
  acc.add(dist(traj.segment_at(0.0), traj.segment_at(0.0)));
  return acc.result();
}

struct DenseSegment {
  const Trajectory& traj;
  double t;
  Vec eval(double s) const { return traj.eval(t + s); }
};

Trajectory semiflow_run(const CheckContext& ctx, const SegmentC1& start) {
  IntegrateOptions opt;
  opt.h = ctx.model->r() / 320;  // keeps steps straddling history breakpoints below tolerance
  opt.T = 2 * ctx.model->r();
  return integrate(ctx.model, start, opt);
}

CheckResult semiflow_residual(const CheckContext& ctx, Rng& rng) {
  Acc acc(1e-6);
  const SegmentC1 start = semiflow_start(ctx, rng);
  const Trajectory traj = semiflow_run(ctx, start);
  if (traj.truncated()) acc.fail(traj.truncation_reason());
  for (const auto& d : traj.diagnostics()) acc.add(d.midpoint_residual);
  if (dist(traj.segment_at(0.0), start) != 0.0) acc.fail("segment at t = 0 differs from the initial segment");
  return acc.result();
}

// Residual of x_t resampled onto the model grid, in units of 10x the local
// truncation estimate: step residual plus the defect |f(resampled) - f(x_t)|
// caused by interpolating a history with breaking points on the coarser grid.
CheckResult semiflow_segment(const CheckContext& ctx, Rng& rng) {
  Acc acc(1.0);
  const Model& m = *ctx.model;
  const Trajectory traj = semiflow_run(ctx, semiflow_start(ctx, rng));
  if (traj.truncated()) acc.fail(traj.truncation_reason());
  double step = 0.0;
  for (const auto& d : traj.diagnostics()) step = std::max(step, d.midpoint_residual);
  for (std::size_t j = static_cast<std::size_t>(traj.first_step_node()); j < traj.times().size(); ++j) {
    const double t = traj.times()[j];
    if (t < m.r()) continue;
    const SegmentC1 seg = traj.segment_at(t);
    const double defect = inf_norm(m.rhs_f(seg) - m.rhs_f_view(DenseSegment{traj, t}));
    acc.add(m.on_manifold_residual(seg) / (10.0 * std::max(step + defect, 1e-14)));
  }
  return acc.result();
}

CheckResult semiflow_order(const CheckContext& ctx, Rng& rng) {
  // step-halving ratio of the maximal midpoint residual; order 4 gives 16
  Acc acc(0.5);
  const SegmentC1 start = semiflow_start(ctx, rng);
  double prev = 0.0;
  for (double h : {0.1, 0.05, 0.025}) {
    IntegrateOptions opt;
    opt.h = h * ctx.model->r();
    opt.T = ctx.model->r();
    const Trajectory traj = integrate(ctx.model, start, opt);
    double worst = 0.0;
    for (const auto& d : traj.diagnostics()) worst = std::max(worst, d.midpoint_residual);
    if (prev > 0.0) acc.add(std::abs(prev / worst - 16.0) / 16.0);
    prev = worst;
  }
  return acc.result();
}

// Error against exp(A t) x(0) for a linear ODE; order 4 gives log2 ratio 4.
CheckResult semiflow_convergence(const CheckContext& ctx, Rng& rng) {
  Acc acc(0.3);
  const Model& m = *ctx.model;
  const int n = m.n();
  Mat A = Mat::Zero(n, n);
  const Mat dg = m.dg(Vec::Zero(n * m.k()));
  for (int k = 0; k < m.k(); ++k) A += dg.middleCols(k * n, n);
  const SegmentC1 start = semiflow_start(ctx, rng);
  const Vec x0 = start.value_at_zero();
  double prev = 0.0;
  for (double h : {0.1, 0.05, 0.025}) {
    IntegrateOptions opt;
    opt.h = h * m.r();
    opt.T = m.r();
    const Trajectory traj = integrate(ctx.model, start, opt);
    double err = 0.0;
    for (std::size_t j = static_cast<std::size_t>(traj.first_step_node()); j < traj.times().size(); ++j) {
      const Vec exact = (A * traj.times()[j]).exp() * x0;
      err = std::max(err, inf_norm(traj.values()[j] - exact));
    }
    if (prev > 0.0) acc.add(std::abs(std::log2(prev / err) - 4.0));
    prev = err;
  }
  return acc.result();
}

CheckResult semiflow_strata(const CheckContext& ctx, Rng& rng) {
  Acc acc(0.0);
  const Model& m = *ctx.model;
  IntegrateOptions opt;
  opt.h = m.r() / 40;
  opt.T = 2 * m.r();
  const DelaySet J = m.hypothesis().stratum;
  const Trajectory traj = integrate(ctx.model, samples::on_manifold(ctx, rng, J, 1).front(), opt);
  for (const auto& d : traj.diagnostics()) acc.add(d.stratum == J ? 0.0 : 1.0);
  return acc.result();
}

bool single_stratum_declared(const CheckContext& ctx) {
  return ctx.model->hypothesis().kind == Hypothesis::single_stratum && ctx.atlas &&
         ctx.atlas->stratum_info().count(ctx.model->hypothesis().stratum) > 0;
}

bool all_delays_vanish(const CheckContext& ctx) {
  const auto strata = all_strata(ctx);
  return strata.size() == 1 && strata.front().is_full();
}

// All delays vanish and g is linear, so x(t) = exp(A t) x(0) is available.
bool linear_ode(const CheckContext& ctx) {
  if (!all_delays_vanish(ctx)) return false;
  const Model& m = *ctx.model;
  const int dim = m.n() * m.k();
  const Vec a = Vec::Constant(dim, 0.3), b = Vec::Constant(dim, -0.2);
  return inf_norm(m.g(Vec::Zero(dim))) == 0.0 && (m.dg(a) - m.dg(b)).lpNorm<Eigen::Infinity>() == 0.0 &&
         inf_norm(m.g(a) - m.dg(a) * a) <= 1e-14;
}

auto always = [](const CheckContext&) { return true; };

}  // namespace

// ---------------------------------------------------------------------------

namespace samples {

std::vector<SegmentC1> in_stratum(const CheckContext& ctx, Rng& rng, const DelaySet& J, int count) {
  const Model& m = *ctx.model;
  return draw(ctx, J, count,
              [&] { return random_smooth_segment(rng, m.grid_ptr(), m.n(), ctx.config.amplitude); });
}

std::vector<SegmentC1> on_manifold(const CheckContext& ctx, Rng& rng, const DelaySet& J, int count) {
  std::vector<SegmentC1> out;
  for (const auto& phi : in_stratum(ctx, rng, J, count)) out.push_back(lift_to_manifold(*ctx.model, phi));
  return out;
}

std::vector<SegmentC1> in_X0(const CheckContext& ctx, Rng& rng, const DelaySet& J, int count) {
  const Model& m = *ctx.model;
  return draw(ctx, J, count,
              [&] { return random_x0_segment(rng, m.grid_ptr(), m.n(), ctx.config.amplitude); });
}

std::vector<SegmentC1> in_X0_and_Xf(const CheckContext& ctx, Rng& rng, const DelaySet& J, int count) {
  const Model& m = *ctx.model;
  const int n = m.n();
  auto gen = [&]() -> SegmentC1 {
    for (;;) {
      const SegmentC1 eta = random_x0_segment(rng, m.grid_ptr(), n, ctx.config.amplitude / 2);
      // Newton on c in R^n for f(eta + c) = 0; constants keep chi'(0) = 0.
      Vec c = Vec::Zero(n);
      bool ok = false;
      try {
        for (int it = 0; it < 50; ++it) {
          const SegmentC1 chi = eta + SegmentC1::constant(m.grid_ptr(), c);
          const Vec F = m.rhs_f(chi);
          if (inf_norm(F) <= 1e-15) {
            ok = true;
            break;
          }
          Mat Jc(n, n);
          for (int nu = 0; nu < n; ++nu) Jc.col(nu) = m.df(chi, SegmentC1::constant(m.grid_ptr(), Vec::Unit(n, nu)));
          const Vec step = solve_linear(Jc, F);
          if (!step.allFinite()) break;
          c -= step;
        }
      } catch (const Error&) {
        ok = false;
      }
      if (ok) return eta + SegmentC1::constant(m.grid_ptr(), c);
    }
  };
  return draw(ctx, J, count, gen);
}

}  // namespace samples

const std::vector<CheckSpec>& check_registry() {
  static const std::vector<CheckSpec> registry = {
      {"funcspace.linearity", "funcspace", "evaluation is linear in the segment", always, funcspace_linearity},
      {"funcspace.derivative_fd", "funcspace", "eval_deriv matches central differences of eval", always, funcspace_derivative},
      {"funcspace.mat_apply", "funcspace", "(A.q)(t) = A(t) q and A.e_mu = A_mu", always, funcspace_mat_apply},
      {"funcspace.cubic_reproduction", "funcspace", "cubic polynomials are represented exactly", always, funcspace_cubic},
      {"funcspace.norms", "funcspace", "|phi|_1 = |phi| + |phi'| >= |phi|", always, funcspace_norms},
      {"model.linearity", "model", "L, Df(phi) and its extension are linear", always, model_linearity},
      {"model.df_finite_difference", "model",
       "chain-rule derivative of f matches central differences (relative to max(|Df chi|, 1e-3))", always, model_df_fd},
      {"model.df_ext_restriction", "model", "the extension of Df(phi) to C agrees with Df(phi) on C^1", always, model_df_ext},
      {"model.membership", "model", "stratum J = {k : d_k(L phi) <= zero_tol}", always, model_membership},
      {"model.shift_invariance", "model", "f(phi + psi) = f(phi) when L psi = 0 and psi vanishes at the delays",
       always, model_shift_invariance},
      {"bump.certificates", "bump", "phi'(0) = 1, lambda phi = 0, phi = 0 on [-r,z] and at 0", always, bump_certificates},
      {"bump.determinism", "bump", "identical requests give identical bumps", always, bump_determinism},
      {"bump.vector_bump", "bump", "L(eta e_nu) = 0 with eta'(0) = 1", always, bump_vector},
      {"chart_k.frame_identities", "chart_k", "(Y_K x)(0) = 0, (Y_K x)'(0) = x, L(Y_K x) = 0", has_k, k_frame},
      {"chart_k.projection", "chart_k", "R^K is a linear projection onto X_0 with kernel Y_K R^n", has_k, k_projection},
      {"chart_k.invariance", "chart_k", "f(phi + Y_K x) = f(phi) on U_K", has_k, k_invariance},
      {"chart_k.round_trip", "chart_k", "inverse of R^K after R^K is the identity on X_fK", has_k, k_round_trip},
      {"chart_k.project_invert", "chart_k", "R^K after the inverse is the identity on X_0", has_k, k_project_invert},
      {"chart_k.injectivity", "chart_k", "distinct points of X_fK have distinct images", has_k, k_injectivity},
      {"chart_k.tangent_lift", "chart_k", "lifted tangent vectors satisfy chi'(0) = Df(phi) chi and R^K chi = eta",
       has_k, k_tangent},
      {"chart_k.almost_graph", "chart_k", "A_K and B_K are mutually inverse, fix X_0 on X_f, flatten X_f",
       has_k, k_almost_graph},
      {"chart_j.frame_identities", "chart_j",
       "(Y_J(w) x)(0) = 0, (Y_J(w) x)'(0) = x, L(Y_J(w) x) = 0, Y_J(w) x = 0 on [-r, -d_k(w)]", has_j, j_frame},
      {"chart_j.frame_derivative", "chart_j", "DY_J(w) w~ x vanishes at 0 with its derivative and under L",
       has_j, j_frame_derivative},
      {"chart_j.dy_finite_difference", "chart_j", "DY_J matches central differences in w", has_j, j_dy_fd},
      {"chart_j.invariance", "chart_j", "f(phi + Y_J(L phi) x) = f(phi) and the stratum is kept", has_j, j_invariance},
      {"chart_j.columns_independent", "chart_j", "columns of Y_J(w) are independent; only x = 0 lands in X_0",
       has_j, j_columns},
      {"chart_j.projection", "chart_j", "R^J fixes X_0 and removes Y_J(L chi) x", has_j, j_projection},
      {"chart_j.drj_finite_difference", "chart_j", "DR^J matches central differences of R^J", has_j, j_drj_fd},
      {"chart_j.round_trip", "chart_j", "inverse of R^J after R^J is the identity on X_fJ", has_j, j_round_trip},
      {"chart_j.project_invert", "chart_j", "R^J after the inverse is the identity on X_0", has_j, j_project_invert},
      {"chart_j.injectivity", "chart_j", "distinct points of X_fJ have distinct images", has_j, j_injectivity},
      {"chart_j.tangent_lift", "chart_j", "lifted tangent vectors satisfy chi'(0) = Df(phi) chi and DR^J chi = eta",
       has_j, j_tangent},
      {"chart_j.almost_graph", "chart_j", "A_J and B_J are mutually inverse, fix X_0 on X_f, flatten X_f",
       has_j, j_almost_graph},
      {"chart_j.graph_offset", "chart_j", "offset Y_J(L chi) f(R_J^-1 chi) vanishes on X_f and leaves X_0 elsewhere",
       has_j, j_graph_offset},
      {"atlas.partition", "atlas", "classify(w) satisfies the defining conditions of exactly one W_J", always,
       atlas_partition},
      {"atlas.lift", "atlas", "lifted segments lie on X_f with L, hat and stratum unchanged", always, atlas_lift},
      {"atlas.lift_idempotent", "atlas", "lifting a point of X_f changes nothing", always, atlas_lift_idempotent},
      {"atlas.witness_round_trip", "atlas", "every witness round-trips through its chart", always, atlas_witnesses},
      {"atlas.expected_strata", "atlas", "the atlas consists of the expected strata (at most 2^k)",
       [](const CheckContext& ctx) { return !ctx.builtin_id.empty(); }, atlas_expected},
      {"semiflow.history_continuity", "semiflow", "dense history is C^1 at step joints", always, semiflow_continuity},
      {"semiflow.manifold_residual", "semiflow", "x_t stays on X_f: midpoint residual |x'(s) - f(x_s)| per step",
       always, semiflow_residual},
      {"semiflow.segment_residual", "semiflow",
       "resampled x_t (t >= r) has residual <= 10x local truncation estimate (ratio reported)", always,
       semiflow_segment},
      {"semiflow.residual_order", "semiflow",
       "midpoint residual halving ratio is 16 +- 50% (relative deviation from 16 reported)", all_delays_vanish,
       semiflow_order},
      {"semiflow.convergence_order", "semiflow",
       "error against exp(A t) x(0) has log2 step-halving ratio 4 +- 0.3 (deviation reported)", linear_ode,
       semiflow_convergence},
      {"semiflow.stratum_trace", "semiflow", "x_t stays in the declared single stratum", single_stratum_declared,
       semiflow_strata},
  };
  return registry;
}

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* VerificationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

json VerificationReport::to_json() const {
  json doc;
  doc["model"] = model;
  doc["passed"] = passed();
  doc["environment"] = environment;
  json list = json::array();
  for (const auto& c : checks) {
    list.push_back({{"name", c.name},
                    {"module", c.module},
                    {"property", c.anchor},
                    {"samples", c.samples},
                    {"max_residual", std::isfinite(c.max_residual) ? json(c.max_residual) : json("inf")},
                    {"tolerance", c.tolerance},
                    {"passed", c.passed},
                    {"note", c.note}});
  }
  doc["checks"] = list;
  doc["not_scheduled"] = not_scheduled;
  return doc;
}

std::string VerificationReport::to_text() const {
  std::ostringstream out;
  out << "model " << model << ": " << (passed() ? "PASS" : "FAIL") << " (" << checks.size() << " checks)\n";
  for (const auto& c : checks) {
    out << (c.passed ? "  pass " : "  FAIL ") << std::left << std::setw(34) << c.name << std::right
        << " samples " << std::setw(4) << c.samples << "  max " << std::scientific << std::setprecision(3)
        << c.max_residual << "  tol " << c.tolerance << std::defaultfloat;
    if (!c.note.empty()) out << "  (" << c.note << ")";
    out << "\n";
  }
  if (!not_scheduled.empty()) {
    out << "  not applicable:";
    for (const auto& n : not_scheduled) out << ' ' << n;
    out << "\n";
  }
  return out.str();
}

VerificationReport run_suite(const std::string& builtin_id, const HarnessConfig& config) {
  ModelPtr model;
  try {
    model = make_builtin(builtin_id);
  } catch (const Error& e) {
    VerificationReport report;
    report.model = builtin_id;
    report.config = config;
    CheckResult r;
    r.name = "model.registration";
    r.module = "model";
    r.anchor = "model definition passes its self-checks";
    r.max_residual = kInf;
    r.note = e.what();
    report.checks.push_back(r);
    return report;
  }
  return run_suite(model, config, builtin_id);
}

VerificationReport run_suite(ModelPtr model, const HarnessConfig& config, const std::string& builtin_id) {
  VerificationReport report;
  report.model = model->name();
  report.config = config;

  CheckContext ctx;
  ctx.model = model;
  ctx.builtin_id = builtin_id;
  ctx.config = config;

  std::optional<Atlas> atlas;
  std::string atlas_error;
  try {
    Rng rng = make_rng(config.seed, "atlas.seeds");
    std::vector<SegmentC1> seeds;
    if (model->witness()) seeds.push_back(*model->witness());
    for (auto& s : sample_in_U(rng, *model, config.seeds, config.amplitude, model->W_box())) seeds.push_back(std::move(s));
    atlas = build_atlas(model, seeds);
    ctx.atlas = &*atlas;
  } catch (const Error& e) {
    atlas_error = e.what();
  }

  report.environment = {{"grid_nodes", model->grid_ptr()->size()},
                        {"r", model->r()},
                        {"zero_tol", model->zero_tol()},
                        {"seed", config.seed},
                        {"segments_per_check", config.segments},
                        {"pairs_per_check", config.pairs},
                        {"hypothesis", to_string(model->hypothesis().kind)}};
  if (atlas) {
    json strata = json::array();
    for (const auto& J : atlas->strata()) strata.push_back(J.to_string());
    report.environment["strata"] = strata;
    json boxes = json::object();
    for (const auto& J : atlas->strata()) {
      if (const ChartJ* c = atlas->chart_j(J)) boxes[J.to_string()] = box_to_json(c->frame().box());
    }
    report.environment["coverage_boxes"] = boxes;
  } else {
    report.environment["atlas_error"] = atlas_error;
  }

  std::vector<const CheckSpec*> scheduled;
  for (const auto& spec : check_registry()) {
    const bool needs_atlas = spec.module != "funcspace" && spec.module != "model" && spec.module != "bump";
    if (needs_atlas && !ctx.atlas) {
      scheduled.push_back(&spec);  // reported as failures below
      continue;
    }
    if (spec.applies(ctx)) {
      scheduled.push_back(&spec);
    } else {
      report.not_scheduled.push_back(spec.name);
    }
  }

  std::vector<CheckResult> results(scheduled.size());
  auto run_one = [&](std::size_t i) {
    const CheckSpec& spec = *scheduled[i];
    CheckResult r;
    const bool needs_atlas = spec.module != "funcspace" && spec.module != "model" && spec.module != "bump";
    if (needs_atlas && !ctx.atlas) {
      r.max_residual = kInf;
      r.note = "atlas could not be built: " + atlas_error;
    } else {
      Rng rng = make_rng(config.seed, spec.name);
      try {
        r = spec.run(ctx, rng);
      } catch (const std::exception& e) {
        r = CheckResult{};
        r.max_residual = kInf;
        r.passed = false;
        r.note = e.what();
      }
    }
    r.name = spec.name;
    r.module = spec.module;
    r.anchor = spec.anchor;
    results[i] = std::move(r);
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < scheduled.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < scheduled.size(); i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::sort(results.begin(), results.end(), [](const CheckResult& a, const CheckResult& b) { return a.name < b.name; });
  report.checks = std::move(results);
  std::sort(report.not_scheduled.begin(), report.not_scheduled.end());
  return report;
}

}  // namespace sdde
