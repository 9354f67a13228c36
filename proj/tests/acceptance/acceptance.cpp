// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sdde/atlas.hpp"
#include "sdde/builtin_models.hpp"
#include "sdde/bump.hpp"
#include "sdde/harness.hpp"
#include "sdde/semiflow.hpp"

using namespace sdde;

namespace {

constexpr std::uint64_t kSeed = 20240917;
const std::vector<std::string> kModels = {"ode", "eq1", "mvw", "twodelay"};

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

/// Worst value of a family of residuals against one tolerance.
struct Worst {
  explicit Worst(double tolerance) : tol(tolerance) {}

  double tol;
  double value = 0.0;
  int samples = 0;
  std::string where;

  void add(double r, const std::string& label) {
    ++samples;
    if (std::isnan(r)) r = INFINITY;
    if (r > value) {
      value = r;
      where = label;
    }
  }
  bool ok() const { return samples > 0 && value <= tol; }
  std::string describe(const std::string& what) const {
    std::ostringstream s;
    s.precision(3);
    s << what << " max " << std::scientific << value << " (tol " << tol << ", " << samples << " samples";
    if (!ok() && !where.empty()) s << ", worst at " << where;
    s << ")";
    return s.str();
  }
};

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void add(const Worst& w, const std::string& what) {
    pass = pass && w.ok();
    details.push_back(w.describe(what));
  }
  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(what + (ok ? "" : " [violated]"));
  }
};

/// Model with its atlas, built the way the verification suite builds it.
struct Fixture {
  std::string id;
  ModelPtr model;
  Atlas atlas;
};

Fixture make_fixture(const std::string& id, json params = json::object()) {
  ModelOptions options;
  options.params = std::move(params);
  ModelPtr m = make_builtin(id, options);
  std::vector<SegmentC1> seeds{*m->witness()};
  Rng rng = make_rng(kSeed, "atlas.seeds");
  for (auto& s : sample_in_U(rng, *m, 6, 0.8, m->W_box())) seeds.push_back(std::move(s));
  Fixture f{id, m, build_atlas(m, seeds)};
  return f;
}

CheckContext context(const Fixture& f) {
  CheckContext ctx;
  ctx.model = f.model;
  ctx.builtin_id = f.id;
  ctx.config.seed = kSeed;
  ctx.atlas = &f.atlas;
  return ctx;
}

std::string label(const std::string& model, int sample) { return model + " #" + std::to_string(sample); }

/// lambda(phi) with a 10-point Gauss rule per grid cell.
double apply_functional(const ScalarFunctional& f, const SegmentC1& phi) {
  double acc = 0.0;
  for (const auto& [c, t] : f.points) acc += c * phi.eval(t, 0);
  if (f.density.empty()) return acc;
  const auto [x, w] = oracle::gauss_legendre(10);
  const Grid& g = *f.grid;
  for (int i = 0; i + 1 < g.size(); ++i) {
    const double a = g.node(i), b = g.node(i + 1);
    for (std::size_t q = 0; q < x.size(); ++q) {
      const double s = 0.5 * (1.0 + x[q]);
      const double rho =
          (1 - s) * f.density[static_cast<std::size_t>(i)] + s * f.density[static_cast<std::size_t>(i + 1)];
      acc += 0.5 * (b - a) * w[q] * rho * phi.eval(a + s * (b - a), 0);
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------

Outcome derivative_formula() {
  Outcome out;
  Worst rel{1e-5};
  const auto start = std::chrono::steady_clock::now();
  for (const auto& id : kModels) {
    const ModelPtr m = make_builtin(id);
    Rng rng = make_rng(kSeed, "accept.df." + id);
    const auto phis = sample_in_U(rng, *m, 64, 0.8, m->W_box());
    if (phis.size() != 64) out.require(false, id + ": could not sample 64 segments of U");
    for (std::size_t s = 0; s < phis.size(); ++s) {
      const SegmentC1 chi = random_smooth_segment(rng, m->grid_ptr(), m->n());
      const double eps = 1e-5;
      const Vec fd = (m->rhs_f(phis[s] + eps * chi) - m->rhs_f(phis[s] - eps * chi)) / (2 * eps);
      const Vec d = m->df(phis[s], chi);
      rel.add(inf_norm(d - fd) / std::max({inf_norm(fd), inf_norm(d), 1e-3}), label(id, static_cast<int>(s)));
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.add(rel, "|Df chi - FD| / max(|FD|, 1e-3)");
  std::ostringstream t;
  t.precision(3);
  t << "runtime " << seconds << " s (limit 5 s)";
  out.require(seconds < 5.0, t.str());
  return out;
}

Outcome bump_certificates() {
  Outcome out;
  Worst reported{1e-10}, recomputed{1e-10};
  for (const auto& id : kModels) {
    const ModelPtr m = make_builtin(id);
    const GridPtr g = m->grid_ptr();
    Rng rng = make_rng(kSeed, "accept.bump." + id);
    for (int s = 0; s < 32; ++s) {
      BumpRequest req;
      req.grid = g;
      req.z = -uniform(rng, 0.15, 0.75) * m->r();
      // rows of L restricted to one component plus random functionals
      const auto rows = m->L().component_functional(static_cast<int>(uniform(rng, 0, m->n() - 1e-9)));
      req.lambda.insert(req.lambda.end(), rows.begin(), rows.end());
      const int extra = static_cast<int>(uniform(rng, 0, 3));
      for (int e = 0; e < extra; ++e) {
        ScalarFunctional f;
        f.grid = g;
        f.points.push_back({uniform(rng, -2, 2), uniform(rng, -m->r(), 0.0)});
        if (e % 2 == 1) {
          for (int i = 0; i < g->size(); ++i) f.density.push_back(uniform(rng, -1, 1));
        }
        req.lambda.push_back(f);
      }
      const Bump b = make_bump(req);
      reported.add(b.certificate.worst(), label(id, s));

      double worst = std::abs(b.phi.deriv_at_zero()(0) - 1.0);
      worst = std::max(worst, std::abs(b.phi.eval(0.0, 0)));
      for (const auto& f : req.lambda) worst = std::max(worst, std::abs(apply_functional(f, b.phi)));
      for (int i = 0; i <= 2000; ++i) {
        const double t = -m->r() + (req.z + m->r()) * i / 2000.0;
        worst = std::max({worst, std::abs(b.phi.eval(t, 0)), std::abs(b.phi.eval_deriv(t, 0))});
      }
      recomputed.add(worst, label(id, s));
    }
  }
  out.add(reported, "reported certificates");
  out.add(recomputed, "recomputed certificates");
  return out;
}

Outcome frame_identities() {
  Outcome out;
  Worst ident{1e-10}, fd{1e-4};
  for (const auto& id : kModels) {
    const Fixture f = make_fixture(id);
    const Model& m = *f.model;
    Rng rng = make_rng(kSeed, "accept.frame." + id);
    const auto check_values = [&](const SegmentC1& y, const Vec& x, double vanish_before, const std::string& where) {
      const double scale = std::max(1.0, inf_norm(x));
      ident.add(inf_norm(y.value_at_zero()) / scale, where + " value at 0");
      ident.add(inf_norm(y.deriv_at_zero() - x) / scale, where + " derivative at 0");
      ident.add(inf_norm(m.apply_L(y)) / scale, where + " L");
      for (double t : refinement_times(*m.grid_ptr())) {
        if (t > vanish_before) continue;
        ident.add(inf_norm(y.eval(t)) / scale, where + " support");
        ident.add(inf_norm(y.eval_deriv(t)) / scale, where + " support'");
      }
    };
    if (f.atlas.chart_k()) {
      const FrameK& frame = f.atlas.chart_k()->frame();
      for (int s = 0; s < 32; ++s) {
        const Vec x = random_vec(rng, m.n(), 2.0);
        check_values(frame.apply(x), x, frame.z, label(id, s));
      }
    }
    for (const auto& J : f.atlas.strata()) {
      if (J.is_full()) continue;
      const FrameJ& frame = f.atlas.chart_j(J)->frame();
      Box inner = frame.box();
      const Vec pad = 0.05 * (inner.upper - inner.lower);
      inner.lower += pad;
      inner.upper -= pad;
      for (int s = 0; s < 32; ++s) {
        const Vec w = random_in_box(rng, inner);
        const Vec x = random_vec(rng, m.n(), 2.0);
        const Vec wt = random_vec(rng, m.dim_f());
        const std::string where = label(id, s);
        check_values(frame.apply(w, x), x, -m.dmin(J, w), where);
        ident.add(std::abs(frame.weights(w).sum() - 1.0), where + " weights");
        const double eps = 1e-6;
        const SegmentC1 diff = (1.0 / (2 * eps)) * (frame.apply(w + eps * wt, x) - frame.apply(w - eps * wt, x));
        const SegmentC1 d = frame.dY_apply(w, wt, x);
        fd.add(norm_c1(d - diff) / std::max(1.0, norm_c1(d)), where + " DY");
      }
    }
  }
  out.add(ident, "frame identities");
  out.add(fd, "DY_J vs finite differences");
  return out;
}

/// Chart of stratum J of an atlas, whichever kind it is.
struct AnyChart {
  const ChartK* k = nullptr;
  const ChartJ* j = nullptr;

  SegmentC1 frame_apply(const Model& m, const SegmentC1& phi, const Vec& x) const {
    return k ? k->frame().apply(x) : j->frame().apply(m.apply_L(phi), x);
  }
  SegmentC1 project(const SegmentC1& phi) const { return k ? k->project(phi) : j->project(phi); }
  ChartSolve invert(const SegmentC1& chi) const { return k ? k->invert(chi) : j->invert(chi); }
  SegmentC1 A(const SegmentC1& phi) const { return k ? k->almost_graph(phi) : j->almost_graph(phi); }
  SegmentC1 B(const SegmentC1& psi) const { return k ? k->almost_graph_inverse(psi) : j->almost_graph_inverse(psi); }
  SegmentC1 lift(const SegmentC1& phi, const SegmentC1& eta) const {
    return k ? k->tangent_lift(phi, eta) : j->tangent_lift(phi, eta);
  }
  /// Derivative of the chart map at phi applied to chi (R^K is linear).
  SegmentC1 derivative(const SegmentC1& phi, const SegmentC1& chi) const {
    return k ? k->project(chi) : j->drj(phi, chi);
  }
};

AnyChart chart_of(const Atlas& atlas, const DelaySet& J) {
  if (J.is_full()) return {&*atlas.chart_k(), nullptr};
  return {nullptr, atlas.chart_j(J)};
}

/// Runs body(fixture, context, stratum, chart, rng) for every stratum of every built-in.
void for_each_stratum(const std::string& tag,
                      const std::function<void(const Fixture&, const CheckContext&, const DelaySet&, const AnyChart&,
                                               Rng&)>& body) {
  for (const auto& id : kModels) {
    const Fixture f = make_fixture(id);
    const CheckContext ctx = context(f);
    for (const auto& J : f.atlas.strata()) {
      Rng rng = make_rng(kSeed, "accept." + tag + "." + id + J.to_string());
      body(f, ctx, J, chart_of(f.atlas, J), rng);
    }
  }
}

Outcome invariance() {
  Outcome out;
  Worst w{1e-10};
  for_each_stratum("invariance", [&](const Fixture& f, const CheckContext& ctx, const DelaySet& J, const AnyChart& chart,
                                     Rng& rng) {
    const Model& m = *f.model;
    const auto phis = samples::in_stratum(ctx, rng, J, 32);
    for (std::size_t s = 0; s < phis.size(); ++s) {
      const Vec x = random_vec(rng, m.n(), 2.0);
      const Vec base = m.rhs_f(phis[s]);
      const Vec moved = m.rhs_f(phis[s] + chart.frame_apply(m, phis[s], x));
      w.add(inf_norm(moved - base) / std::max(1.0, inf_norm(base)), label(f.id, static_cast<int>(s)));
    }
  });
  out.add(w, "|f(phi + Y x) - f(phi)|");
  return out;
}

Outcome manifold_lift() {
  Outcome out;
  Worst residual{1e-10}, preserved{1e-12}, stratum{0.0};
  for (const auto& id : kModels) {
    const ModelPtr m = make_builtin(id);
    Rng rng = make_rng(kSeed, "accept.lift." + id);
    const auto phis = sample_in_U(rng, *m, 32, 0.8, m->W_box());
    if (phis.size() != 32) out.require(false, id + ": could not sample 32 segments of U");
    for (std::size_t s = 0; s < phis.size(); ++s) {
      const std::string where = label(id, static_cast<int>(s));
      const SegmentC1 lifted = lift_to_manifold(*m, phis[s]);
      residual.add(m->on_manifold_residual(lifted), where);
      preserved.add(inf_norm(m->apply_L(lifted) - m->apply_L(phis[s])), where + " L");
      preserved.add(inf_norm(m->hat(lifted) - m->hat(phis[s])), where + " hat");
      stratum.add(*m->membership(lifted) == *m->membership(phis[s]) ? 0.0 : 1.0, where);
    }
  }
  out.add(residual, "on-manifold residual");
  out.add(preserved, "change of L phi and hat phi");
  out.add(stratum, "stratum changes");
  return out;
}

Outcome round_trips() {
  Outcome out;
  Worst xf{1e-9}, x0{1e-9}, iterations{20};
  for_each_stratum("round", [&](const Fixture& f, const CheckContext& ctx, const DelaySet& J, const AnyChart& chart,
                                Rng& rng) {
    const auto on = samples::on_manifold(ctx, rng, J, 32);
    for (std::size_t s = 0; s < on.size(); ++s) {
      const ChartSolve back = chart.invert(chart.project(on[s]));
      xf.add(norm_c1(back.phi - on[s]), label(f.id, static_cast<int>(s)));
      iterations.add(back.iterations, label(f.id, static_cast<int>(s)));
    }
    const auto flat = samples::in_X0(ctx, rng, J, 32);
    for (std::size_t s = 0; s < flat.size(); ++s) {
      const ChartSolve sol = chart.invert(flat[s]);
      x0.add(norm_c1(chart.project(sol.phi) - flat[s]), label(f.id, static_cast<int>(s)));
      iterations.add(sol.iterations, label(f.id, static_cast<int>(s)));
    }
  });
  out.add(xf, "invert(project(phi)) - phi on X_f");
  out.add(x0, "project(invert(chi)) - chi on X_0");
  out.add(iterations, "solver iterations");
  return out;
}

Outcome almost_graph() {
  Outcome out;
  Worst inverse{1e-9}, fixes{1e-10}, image{1e-10};
  for_each_stratum("graph", [&](const Fixture& f, const CheckContext& ctx, const DelaySet& J, const AnyChart& chart,
                                Rng& rng) {
    const auto free = samples::in_stratum(ctx, rng, J, 32);
    for (std::size_t s = 0; s < free.size(); ++s) {
      inverse.add(norm_c1(chart.A(chart.B(free[s])) - free[s]), label(f.id, static_cast<int>(s)) + " AB");
      inverse.add(norm_c1(chart.B(chart.A(free[s])) - free[s]), label(f.id, static_cast<int>(s)) + " BA");
    }
    for (const auto& chi : samples::in_X0_and_Xf(ctx, rng, J, 32)) fixes.add(norm_c1(chart.A(chi) - chi), f.id);
    for (const auto& phi : samples::on_manifold(ctx, rng, J, 32)) image.add(inf_norm(chart.A(phi).deriv_at_zero()), f.id);
  });
  out.add(inverse, "A(B(psi)) - psi, B(A(psi)) - psi");
  out.add(fixes, "A(chi) - chi on X_0 and X_f");
  out.add(image, "derivative at 0 of A(X_f)");
  return out;
}

Outcome tangent_lifts() {
  Outcome out;
  Worst tangent{1e-9}, back{1e-9};
  for_each_stratum("tangent", [&](const Fixture& f, const CheckContext& ctx, const DelaySet& J, const AnyChart& chart,
                                  Rng& rng) {
    const Model& m = *f.model;
    const auto phis = samples::on_manifold(ctx, rng, J, 32);
    for (std::size_t s = 0; s < phis.size(); ++s) {
      const SegmentC1 eta = random_x0_segment(rng, m.grid_ptr(), m.n(), 0.5);
      const SegmentC1 chi = chart.lift(phis[s], eta);
      tangent.add(m.tangent_residual(phis[s], chi), label(f.id, static_cast<int>(s)));
      back.add(norm_c1(chart.derivative(phis[s], chi) - eta), label(f.id, static_cast<int>(s)));
    }
  });
  out.add(tangent, "tangent residual");
  out.add(back, "chart derivative of the lift - eta");
  return out;
}

Outcome integrator() {
  Outcome out;

  // x' = -x from the lifted constant 1: x(t) = exp(-t)
  const ModelPtr ode = make_builtin("ode");
  const SegmentC1 one = lift_to_manifold(*ode, SegmentC1::constant(ode->grid_ptr(), Vec::Ones(1)));
  IntegrateOptions opt;
  opt.h = 1e-3;
  opt.T = 1.0;
  const Trajectory tr = integrate(ode, one, opt);
  Worst ode_err{1e-6};
  for (std::size_t j = static_cast<std::size_t>(tr.first_step_node()); j < tr.times().size(); ++j) {
    ode_err.add(std::abs(tr.values()[j](0) - std::exp(-tr.times()[j])), "t = " + std::to_string(tr.times()[j]));
  }
  out.require(!tr.truncated() && std::abs(tr.t_end() - 1.0) < 1e-12, "ODE case reaches T = 1");
  out.add(ode_err, "ODE case error");

  // x'(t) = -tanh(gain x(t - 1)) against the method of steps
  const double gain = 1.5;
  ModelOptions constant;
  constant.params = {{"delta_amp", 0.0}, {"gain", gain}};
  const ModelPtr mvw = make_builtin("mvw", constant);
  Rng rng = make_rng(kSeed, "accept.integrator");
  const SegmentC1 phi0 = lift_to_manifold(*mvw, random_smooth_segment(rng, mvw->grid_ptr(), 1, 0.5, 2));
  IntegrateOptions dopt;
  dopt.h = mvw->r() / 640;  // history breakpoints shifted by the delay fall on step nodes
  dopt.T = 2.0;
  const Trajectory dtr = integrate(mvw, phi0, dopt);
  std::vector<double> breaks;
  for (int i = 0; i < mvw->grid_ptr()->size(); ++i) breaks.push_back(mvw->grid_ptr()->node(i));
  const oracle::ConstantDelayOracle exact([&](double t) { return phi0.eval(t, 0); },
                                          [&](double v) { return -std::tanh(gain * v); }, 1.0, breaks, 2);
  Worst delay_err{1e-8};
  for (std::size_t j = static_cast<std::size_t>(dtr.first_step_node()); j < dtr.times().size(); j += 8) {
    delay_err.add(std::abs(dtr.values()[j](0) - exact(dtr.times()[j])), "t = " + std::to_string(dtr.times()[j]));
  }
  out.require(!dtr.truncated(), "constant-delay case reaches T = 2");
  out.add(delay_err, "constant-delay case error");

  // step halving of the maximal midpoint residual on the ODE case
  std::vector<double> residuals;
  for (double h : {0.1, 0.05, 0.025}) {
    IntegrateOptions o;
    o.h = h;
    o.T = 1.0;
    const Trajectory t = integrate(ode, one, o);
    double worst = 0.0;
    for (const auto& d : t.diagnostics()) worst = std::max(worst, d.midpoint_residual);
    residuals.push_back(worst);
  }
  bool ratios_ok = true;
  std::ostringstream ratios;
  ratios.precision(4);
  ratios << "residual step-halving ratios";
  for (std::size_t i = 1; i < residuals.size(); ++i) {
    const double ratio = residuals[i - 1] / residuals[i];
    ratios << ' ' << ratio;
    ratios_ok = ratios_ok && ratio >= 8.0 && ratio <= 32.0;
  }
  ratios << " (required in [8, 32])";
  out.require(ratios_ok, ratios.str());
  return out;
}

Outcome atlas_size() {
  Outcome out;
  const std::vector<std::pair<std::string, std::string>> expected = {
      {"ode", "{1}"}, {"eq1", "{1}"}, {"mvw", "{}"}, {"twodelay", "{}"}};
  for (const auto& [id, strata] : expected) {
    const Fixture f = make_fixture(id);
    std::string found;
    for (const auto& J : f.atlas.strata()) found += (found.empty() ? "" : " ") + J.to_string();
    const bool ok = f.atlas.size() == 1 && found == strata && f.atlas.strata() == expected_strata(id, *f.model);
    out.require(ok, id + " strata: " + found + " (expected " + strata + ")");
  }
  return out;
}

struct Criterion {
  int number;
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "derivative formula", derivative_formula},
      {2, "bump certificates", bump_certificates},
      {3, "frame identities", frame_identities},
      {4, "invariance of f along the frame", invariance},
      {5, "manifold lift", manifold_lift},
      {6, "chart round trips", round_trips},
      {7, "almost-graph diffeomorphisms", almost_graph},
      {8, "tangent lifts", tangent_lifts},
      {9, "integrator", integrator},
      {10, "atlas size", atlas_size},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.details.push_back(std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << c.number << ": " << (o.pass ? "PASS" : "FAIL") << "  " << c.name;
    for (const auto& d : o.details) std::cout << "; " << d;
    std::cout << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
