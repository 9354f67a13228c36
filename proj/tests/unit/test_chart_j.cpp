#include <doctest.h>

#include <cmath>

#include "sdde/chart_j.hpp"
#include "test_util.hpp"

using namespace sdde;
using testutil::error_code;
using testutil::inf_norm;

namespace {

struct Case {
  const char* id;
  json params;
  DelaySet J;
};

std::vector<Case> cases() {
  return {{"eq1", json::object(), DelaySet::of(2, {0})},
          {"mvw", json::object(), DelaySet::none(1)},
          {"twodelay", json::object(), DelaySet::none(2)}};
}

}  // namespace

TEST_SUITE("chart_j") {

TEST_CASE("frame identities") {
  for (const auto& c : cases()) {
    CAPTURE(c.id);
    const ModelPtr m = testutil::builtin(c.id, c.params);
    const FrameJPtr frame = FrameJ::build(m, c.J, *m->W_box());
    CHECK_FALSE(frame->levels().empty());
    Rng rng = make_rng(51, c.id);
    for (int s = 0; s < 16; ++s) {
      const Vec w = random_in_box(rng, frame->box());
      REQUIRE(frame->covers(w));
      const Vec x = random_vec(rng, m->n(), 2.0);
      const SegmentC1 y = frame->apply(w, x);
      CHECK(inf_norm(y.value_at_zero()) <= 1e-12);
      CHECK(inf_norm(y.deriv_at_zero() - x) <= 1e-10 * std::max(1.0, inf_norm(x)));
      CHECK(inf_norm(m->apply_L(y)) <= 1e-10);
      const double dj = m->dmin(c.J, w);
      for (double t : refinement_times(*m->grid_ptr())) {
        if (t <= -dj) CHECK(inf_norm(y.eval(t)) <= 1e-10);
      }
      const Vec weights = frame->weights(w);
      CHECK(weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(weights.minCoeff() >= 0.0);
      CHECK(frame->proxy(w) <= dj + 1e-12);
    }
  }
}

TEST_CASE("frame derivative matches finite differences") {
  for (const auto& c : cases()) {
    CAPTURE(c.id);
    const ModelPtr m = testutil::builtin(c.id, c.params);
    const FrameJPtr frame = FrameJ::build(m, c.J, *m->W_box());
    Rng rng = make_rng(52, c.id);
    for (int s = 0; s < 16; ++s) {
      const Vec w = testutil::inner_point(rng, frame->box());
      const Vec wt = random_vec(rng, m->dim_f());
      const Vec x = random_vec(rng, m->n());
      const double eps = 1e-6;
      const SegmentC1 fd = (1.0 / (2 * eps)) * (frame->apply(w + eps * wt, x) - frame->apply(w - eps * wt, x));
      const SegmentC1 d = frame->dY_apply(w, wt, x);
      CHECK(norm_c1(d - fd) <= 1e-4 * std::max(1.0, norm_c1(d)));
      const Vec wfd = (frame->weights(w + eps * wt) - frame->weights(w - eps * wt)) / (2 * eps);
      CHECK(inf_norm(frame->weights_derivative(w, wt) - wfd) <= 1e-5 * std::max(1.0, inf_norm(wfd)));
    }
  }
}

TEST_CASE("coverage") {
  const ModelPtr m = testutil::builtin("mvw");
  const FrameJPtr frame = FrameJ::build(m, DelaySet::none(1), *m->W_box());
  const Vec outside = Vec::Constant(1, 10.0);
  CHECK_FALSE(frame->covers(outside));
  CHECK(error_code([&] { frame->Y(outside); }) == ErrorCode::outside_box);

  // rho = 0.5 (1 + sin w) vanishes at w = -pi/2 inside the box
  const ModelPtr touching = testutil::builtin("eq1", {{"rho_base", 0.5}, {"rho_amp", 0.5}});
  CHECK(error_code([&] { FrameJ::build(touching, DelaySet::of(2, {0}), *touching->W_box()); }) ==
        ErrorCode::box_not_in_WJ);
  const Box positive{Vec::Constant(1, 0.0), Vec::Constant(1, 2.0)};
  CHECK_NOTHROW(FrameJ::build(touching, DelaySet::of(2, {0}), positive));
}

TEST_CASE("projection, invariance and its derivative") {
  for (const auto& c : cases()) {
    CAPTURE(c.id);
    const ModelPtr m = testutil::builtin(c.id, c.params);
    const ChartJ chart = ChartJ::build(m, c.J, *m->W_box());
    Rng rng = make_rng(53, c.id);
    for (const auto& phi : sample_in_U(rng, *m, 8, 0.8, m->W_box())) {
      const SegmentC1 chi = chart.project(phi);
      CHECK(inf_norm(chi.deriv_at_zero()) <= 1e-12);
      CHECK(inf_norm(m->apply_L(chi) - m->apply_L(phi)) <= 1e-12);
      const Vec x = random_vec(rng, m->n(), 2.0);
      const SegmentC1 moved = phi + chart.frame().apply(m->apply_L(phi), x);
      CHECK(norm_c1(chart.project(moved) - chi) <= 1e-10);

      const SegmentC1 dir = random_smooth_segment(rng, m->grid_ptr(), m->n(), 0.3);
      const double eps = 1e-6;
      const SegmentC1 fd = (1.0 / (2 * eps)) * (chart.project(phi + eps * dir) - chart.project(phi - eps * dir));
      const SegmentC1 d = chart.drj(phi, dir);
      CHECK(norm_c1(d - fd) <= 1e-5 * std::max(1.0, norm_c1(d)));
    }
  }
}

TEST_CASE("round trip and injectivity") {
  for (const auto& c : cases()) {
    CAPTURE(c.id);
    const ModelPtr m = testutil::builtin(c.id, c.params);
    const ChartJ chart = ChartJ::build(m, c.J, *m->W_box());
    Rng rng = make_rng(54, c.id);
    const auto points = testutil::on_manifold(rng, *m, 8, m->W_box());
    REQUIRE(points.size() == 8);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const SegmentC1& phi = points[i];
      CHECK(m->on_manifold_residual(phi) <= 1e-10);
      CHECK(norm_c1(chart.graph_offset(chart.project(phi)) - chart.frame().apply(m->apply_L(phi), phi.deriv_at_zero())) <= 1e-9);
      const ChartSolve back = chart.invert(chart.project(phi));
      CHECK(norm_c1(back.phi - phi) <= 1e-9);
      CHECK(back.iterations <= 20);
      CHECK(m->on_manifold_residual(back.phi) <= 1e-10);
      if (i > 0) CHECK(norm_c1(chart.project(phi) - chart.project(points[i - 1])) > 1e-6);
    }
  }
}

TEST_CASE("inverse lands on the manifold") {
  for (const auto& c : cases()) {
    CAPTURE(c.id);
    const ModelPtr m = testutil::builtin(c.id, c.params);
    const ChartJ chart = ChartJ::build(m, c.J, *m->W_box());
    Rng rng = make_rng(55, c.id);
    for (const auto& phi : sample_in_U(rng, *m, 8, 0.8, m->W_box())) {
      const SegmentC1 chi = chart.project(phi);
      const ChartSolve sol = chart.invert(chi);
      CHECK(m->on_manifold_residual(sol.phi) <= 1e-10);
      CHECK(norm_c1(chart.project(sol.phi) - chi) <= 1e-10);
      CHECK(inf_norm(sol.x - sol.phi.deriv_at_zero()) <= 1e-10);
    }
  }
}

TEST_CASE("almost-graph maps and tangent lifts") {
  for (const auto& c : cases()) {
    CAPTURE(c.id);
    const ModelPtr m = testutil::builtin(c.id, c.params);
    const ChartJ chart = ChartJ::build(m, c.J, *m->W_box());
    Rng rng = make_rng(56, c.id);
    for (const auto& phi : testutil::on_manifold(rng, *m, 6, m->W_box())) {
      const SegmentC1 a = chart.almost_graph(phi);
      CHECK(inf_norm(a.deriv_at_zero()) <= 1e-10);
      CHECK(norm_c1(a - chart.project(phi)) <= 1e-10);
      CHECK(norm_c1(chart.almost_graph_inverse(a) - phi) <= 1e-9);

      const SegmentC1 eta = random_x0_segment(rng, m->grid_ptr(), m->n(), 0.5);
      const SegmentC1 chi = chart.tangent_lift(phi, eta);
      CHECK(m->tangent_residual(phi, chi) <= 1e-9);
      CHECK(norm_c1(chart.drj(phi, chi) - eta) <= 1e-9);
    }
  }
}

}  // TEST_SUITE
