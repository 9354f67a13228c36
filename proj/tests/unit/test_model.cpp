#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sdde/bump.hpp"
#include "test_util.hpp"

using namespace sdde;
using testutil::builtin;
using testutil::error_code;
using testutil::inf_norm;

namespace {

/// x'(t) = -x(t - d(x(t))), d(w) = 0.5 + 0.2 tanh(w), r = 1.
ModelSpec custom_spec(double gradient_scale = 1.0) {
  ModelSpec spec;
  spec.name = "custom";
  spec.grid = Grid::uniform(1.0, 33);
  spec.n = 1;
  spec.L = LinearMap(spec.grid, 1, 1);
  spec.L.add_point(Mat::Identity(1, 1), 0.0);
  spec.delays.push_back({"d", [](const Vec& w) { return 0.5 + 0.2 * std::tanh(w(0)); },
                         [gradient_scale](const Vec& w) {
                           const double c = std::cosh(w(0));
                           return RowVec(RowVec::Constant(1, gradient_scale * 0.2 / (c * c)));
                         }});
  spec.g = {[](const Vec& v) { return Vec(-v); }, [](const Vec&) { return Mat(-Mat::Identity(1, 1)); }};
  spec.W_box = Box{Vec::Constant(1, -2.0), Vec::Constant(1, 2.0)};
  spec.witness = SegmentC1::constant(spec.grid, Vec::Constant(1, 0.1));
  return spec;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("hat of a constant segment repeats the constant") {
  for (const char* id : {"ode", "eq1", "mvw", "twodelay"}) {
    const ModelPtr m = builtin(id);
    const Vec c = Vec::Constant(m->n(), 0.25);
    const Vec v = m->hat(SegmentC1::constant(m->grid_ptr(), c));
    for (int k = 0; k < m->k(); ++k) CHECK(inf_norm(v.segment(k * m->n(), m->n()) - c) == 0.0);
  }
}

TEST_CASE("hat of the identity segment for constant delays") {
  const ModelPtr eq1 = builtin("eq1", {{"rho_amp", 0.0}, {"rho_base", 1.0}});
  const SegmentC1 id = testutil::affine(eq1->grid_ptr(), 1, 1.0);
  const Vec v = eq1->hat(id);
  CHECK(v(0) == doctest::Approx(0.0));
  CHECK(v(1) == doctest::Approx(-1.0));

  const ModelPtr mvw = builtin("mvw", {{"delta_amp", 0.0}});
  const Vec u = mvw->hat(testutil::affine(mvw->grid_ptr(), 1, 1.0));
  CHECK(u.size() == 1);
  CHECK(u(0) == doctest::Approx(-1.0));
}

TEST_CASE("rhs f") {
  const ModelPtr zero_g = builtin("ode", {{"rate", 0.0}});
  CHECK(inf_norm(zero_g->rhs_f(SegmentC1::constant(zero_g->grid_ptr(), Vec::Constant(1, 0.7)))) == 0.0);

  const ModelPtr eq1 = builtin("eq1", {{"a", 0.0}, {"b", 1.0}, {"c", 0.0}, {"rho_amp", 0.0}, {"rho_base", 1.0}});
  CHECK(eq1->rhs_f(testutil::affine(eq1->grid_ptr(), 1, 1.0))(0) == doctest::Approx(-1.0));

  // f depends on phi only through (L phi, hat phi)
  const ModelPtr m = builtin("eq1", {{"rho_amp", 0.0}, {"rho_base", 1.0}});
  const GridPtr g = m->grid_ptr();
  const SegmentC1 a = testutil::affine(g, 1, 0.5, 0.2);
  const SegmentC1 b = a +
                      SegmentC1::sample(g, 1, [](double t) { return Vec(Vec::Constant(1, std::sin(3.14159265358979 * t) * t * (t + 1))); },
                                        [](double t) {
                                          const double pi = 3.14159265358979;
                                          return Vec(Vec::Constant(
                                              1, pi * std::cos(pi * t) * t * (t + 1) + std::sin(pi * t) * (2 * t + 1)));
                                        });
  REQUIRE(b.eval(0.0, 0) == doctest::Approx(a.eval(0.0, 0)));
  REQUIRE(b.eval(-1.0, 0) == doctest::Approx(a.eval(-1.0, 0)).epsilon(1e-12));
  CHECK(inf_norm(m->rhs_f(a) - m->rhs_f(b)) <= 1e-12);
}

TEST_CASE("rhs f outside the domain") {
  ModelSpec spec = custom_spec();
  spec.in_W = [](const Vec& w) { return std::abs(w(0)) < 2.0; };
  spec.in_V = [](const Vec& v) { return std::abs(v(0)) < 1.0; };
  const ModelPtr m = Model::create(spec);
  const GridPtr g = m->grid_ptr();
  const SegmentC1 far = SegmentC1::constant(g, Vec::Constant(1, 3.0));
  CHECK(error_code([&] { m->rhs_f(far); }) == ErrorCode::outside_W);
  CHECK_FALSE(m->membership(far).has_value());
  // L phi = phi(0) in W, but phi(-d) = 1.5 is outside V
  const SegmentC1 ramp = testutil::affine(g, 1, -3.0);
  CHECK(error_code([&] { m->rhs_f(ramp); }) == ErrorCode::outside_V);
  CHECK_FALSE(m->membership(ramp).has_value());
  CHECK(m->membership(*m->witness()).has_value());
}

TEST_CASE("df of the zero direction vanishes") {
  for (const char* id : {"ode", "eq1", "mvw", "twodelay"}) {
    const ModelPtr m = builtin(id);
    const SegmentC1 phi = *m->witness();
    CHECK(inf_norm(m->df(phi, SegmentC1::zero(m->grid_ptr(), m->n()))) == 0.0);
  }
}

TEST_CASE("df with constant delays reduces to point evaluations of chi") {
  const double a = -0.5, b = 0.3, c = -1.0;
  const ModelPtr m = builtin("eq1", {{"a", a}, {"b", b}, {"c", c}, {"rho_amp", 0.0}, {"rho_base", 1.0}});
  Rng rng = make_rng(21, "const-delay");
  for (int s = 0; s < 8; ++s) {
    const SegmentC1 phi = random_smooth_segment(rng, m->grid_ptr(), 1, 0.8);
    const SegmentC1 chi = random_smooth_segment(rng, m->grid_ptr(), 1);
    const double lag = phi.eval(-1.0, 0);
    const double sech2 = 1.0 / (std::cosh(lag) * std::cosh(lag));
    const double expected = a * chi.eval(0.0, 0) + (b + c * sech2) * chi.eval(-1.0, 0);
    CHECK(m->df(phi, chi)(0) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("df matches central differences of f") {
  for (const char* id : {"ode", "eq1", "mvw", "twodelay"}) {
    const ModelPtr m = builtin(id);
    Rng rng = make_rng(22, id);
    for (const auto& phi : sample_in_U(rng, *m, 16, 0.8, m->W_box())) {
      const SegmentC1 chi = random_smooth_segment(rng, m->grid_ptr(), m->n());
      const Vec fd = oracle::central_difference([&](double e) { return m->rhs_f(phi + e * chi); }, 1e-5);
      const Vec d = m->df(phi, chi);
      CHECK(inf_norm(d - fd) <= 1e-5 * std::max(inf_norm(fd), 1e-3));
    }
  }
}

TEST_CASE("df extension agrees with df on C1 and is linear on C0") {
  const ModelPtr m = builtin("twodelay");
  Rng rng = make_rng(23, "ext");
  const SegmentC1 phi = sample_in_U(rng, *m, 1, 0.8, m->W_box()).front();
  const SegmentC1 chi = random_smooth_segment(rng, m->grid_ptr(), 2);
  CHECK(inf_norm(m->df_ext_fn(phi, chi) - m->df(phi, chi)) == 0.0);
  const SegmentC0 u = SegmentC0::from_nodes(chi);
  const SegmentC0 v = SegmentC0::from_nodes(random_smooth_segment(rng, m->grid_ptr(), 2));
  const SegmentC0 sum(m->grid_ptr(), 2.0 * u.values() - 3.0 * v.values());
  CHECK(inf_norm(m->df_ext(phi, sum) - (2.0 * m->df_ext(phi, u) - 3.0 * m->df_ext(phi, v))) <= 1e-12);
}

TEST_CASE("membership of the built-in examples") {
  Rng rng = make_rng(24, "membership");
  const struct {
    const char* id;
    const char* stratum;
  } cases[] = {{"ode", "{1}"}, {"eq1", "{1}"}, {"mvw", "{}"}, {"twodelay", "{}"}};
  for (const auto& c : cases) {
    const ModelPtr m = builtin(c.id);
    for (const auto& phi : sample_in_U(rng, *m, 16, 0.8, m->W_box())) {
      const auto J = m->membership(phi);
      REQUIRE(J.has_value());
      CHECK(J->to_string() == c.stratum);
      const Vec w = m->apply_L(phi);
      for (int k = 0; k < m->k(); ++k) CHECK(J->contains(k) == (m->delay(k, w) <= m->zero_tol()));
    }
  }
}

TEST_CASE("on-manifold residual") {
  const ModelPtr zero_g = builtin("mvw", {{"gain", 0.0}});
  CHECK(zero_g->on_manifold_residual(SegmentC1::constant(zero_g->grid_ptr(), Vec::Constant(1, 0.3))) == 0.0);
  const ModelPtr m = builtin("mvw");
  CHECK(m->on_manifold_residual(SegmentC1::constant(m->grid_ptr(), Vec::Constant(1, 0.3))) > 0.0);
}

TEST_CASE("tangent residual") {
  const ModelPtr m = builtin("eq1");
  const SegmentC1 phi = *m->witness();
  CHECK(m->tangent_residual(phi, SegmentC1::zero(m->grid_ptr(), 1)) == 0.0);
  // a bump with slope 1 at 0 that vanishes at every delay: only chi'(0) moves
  const Vec w = m->apply_L(phi);
  const SegmentC1 eta = make_vector_bump(*m, 0, -m->dmin(DelaySet::of(2, {0}), w));
  CHECK(m->tangent_residual(phi, eta) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("d^J is the smallest positive delay") {
  const ModelPtr eq1 = builtin("eq1");
  const Vec w = Vec::Constant(1, 0.4);
  CHECK(eq1->dmin(DelaySet::of(2, {0}), w) == doctest::Approx(1.0 + 0.5 * std::sin(0.4)));
  const ModelPtr two = builtin("twodelay");
  const Vec u = (Vec(3) << 0.1, -0.3, 0.2).finished();
  const double d1 = 0.8 + 0.3 * std::tanh(0.3), d2 = 1.2 + 0.4 * std::tanh(-0.3);
  CHECK(two->dmin(DelaySet::none(2), u) == doctest::Approx(std::min(d1, d2)));
  CHECK(two->dmin(DelaySet::of(2, {0}), u) == doctest::Approx(d2));
  CHECK(error_code([&] { two->dmin(DelaySet::all(2), u); }) == ErrorCode::invalid_argument);
}

TEST_CASE("registration self-checks") {
  CHECK_NOTHROW(Model::create(custom_spec()));
  CHECK(error_code([] { Model::create(custom_spec(1.5)); }) == ErrorCode::gradient_check_failed);

  ModelSpec too_long = custom_spec();
  too_long.delays[0].value = [](const Vec& w) { return 1.5 + 0.2 * std::tanh(w(0)); };
  CHECK(error_code([&] { Model::create(too_long); }) == ErrorCode::config);

  ModelSpec bad_witness = custom_spec();
  bad_witness.witness = SegmentC1::constant(bad_witness.grid, Vec::Constant(1, 5.0));
  bad_witness.in_W = [](const Vec& w) { return std::abs(w(0)) < 2.0; };
  CHECK(error_code([&] { Model::create(bad_witness); }) == ErrorCode::config);

  ModelSpec bad_bound = custom_spec();
  bad_bound.hypothesis = {Hypothesis::bounded_g, DelaySet::none(1), 0.1};
  bad_bound.V_box = Box{Vec::Constant(1, -2.0), Vec::Constant(1, 2.0)};
  CHECK(error_code([&] { Model::create(bad_bound); }) == ErrorCode::config);
}

TEST_CASE("model definitions") {
  CHECK(model_from_json({{"builtin", "mvw"}, {"params", {{"gain", 2.0}}}, {"grid", 33}})->grid_ptr()->size() == 33);
  CHECK(error_code([] { model_from_json({{"builtin", "mvw"}, {"code", "rm -rf"}}); }) == ErrorCode::config);
  CHECK(error_code([] { model_from_json({{"builtin", "mvw"}, {"params", {{"nope", 1}}}}); }) == ErrorCode::config);
  CHECK(error_code([] { model_from_json({{"builtin", "unknown"}}); }) == ErrorCode::config);
  CHECK(error_code([] { builtin("eq1", {{"rho_base", 1.9}}); }) == ErrorCode::config);
  CHECK(builtin("ode", {{"n", 3}, {"coupling", 0.5}})->n() == 3);
}

}  // TEST_SUITE
