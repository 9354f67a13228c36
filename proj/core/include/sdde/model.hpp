#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdde/delay_set.hpp"
#include "sdde/error.hpp"
#include "sdde/linear_map.hpp"
#include "sdde/segment.hpp"

namespace sdde {

using RowVec = Eigen::RowVectorXd;

/// Axis-aligned box used for sampling-based checks and frame coverage.
struct Box {
  Vec lower;
  Vec upper;

  int dim() const noexcept { return static_cast<int>(lower.size()); }
  bool contains(const Vec& p) const;
  Vec center() const { return 0.5 * (lower + upper); }
  /// Point of the box for unit-cube coordinates u in [0,1]^dim.
  Vec at(const Vec& u) const { return lower + u.cwiseProduct(upper - lower); }
};

/// d_k : F > W -> [0, r] and its derivative Dd_k(w) in F*.
struct DelayFn {
  std::string name;
  std::function<double(const Vec&)> value;
  std::function<RowVec(const Vec&)> gradient;
};

/// g : (R^n)^k > V -> R^n with Jacobian n x nk; arguments flattened as
/// (v_1, ..., v_k), v_j in R^n.
struct RhsG {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
};

/// The additional hypothesis a model declares for chart injectivity.
enum class Hypothesis {
  none,
  bounded_g,       // g is bounded
  d1_bounded,      // d_1 = 0 on W and g bounded on bounded first arguments
  single_stratum,  // U_J = U for the declared J
};

struct HypothesisDecl {
  Hypothesis kind = Hypothesis::none;
  DelaySet stratum;            // meaningful for single_stratum
  std::optional<double> bound; // declared sup |g| for bounded_g
};

std::string to_string(Hypothesis h);

struct ModelSpec {
  std::string name;
  GridPtr grid;
  int n = 1;
  LinearMap L;
  std::vector<DelayFn> delays;
  std::function<bool(const Vec&)> in_W;  // null means W = F
  std::optional<Box> W_box;
  std::function<bool(const Vec&)> in_V;  // null means V = (R^n)^k
  std::optional<Box> V_box;
  RhsG g;
  HypothesisDecl hypothesis;
  double zero_tol = 1e-9;
  /// Element of U witnessing that U is nonempty.
  std::optional<SegmentC1> witness;
  int self_check_samples = 16;
  double gradient_rel_tol = 1e-5;
};

/// x'(t) = g(x(t - d_1(L x_t)), ..., x(t - d_k(L x_t))) and the derived
/// f(phi) = g(hat phi) on U = { phi : L phi in W, hat phi in V }.
/// Immutable once created; gradients are finite-difference checked at creation.
class Model {
 public:
  static std::shared_ptr<const Model> create(ModelSpec spec);

  const std::string& name() const noexcept { return spec_.name; }
  double r() const noexcept { return spec_.grid->r(); }
  int n() const noexcept { return spec_.n; }
  int k() const noexcept { return static_cast<int>(spec_.delays.size()); }
  int dim_f() const noexcept { return spec_.L.dim_f(); }
  const GridPtr& grid_ptr() const noexcept { return spec_.grid; }
  const LinearMap& L() const noexcept { return spec_.L; }
  double zero_tol() const noexcept { return spec_.zero_tol; }
  const HypothesisDecl& hypothesis() const noexcept { return spec_.hypothesis; }
  const std::optional<Box>& W_box() const noexcept { return spec_.W_box; }
  const std::optional<Box>& V_box() const noexcept { return spec_.V_box; }
  const std::optional<SegmentC1>& witness() const noexcept { return spec_.witness; }
  const DelayFn& delay_fn(int k) const { return spec_.delays.at(static_cast<std::size_t>(k)); }
  DelaySet all_delays() const { return DelaySet::all(k()); }

  bool in_W(const Vec& w) const;
  bool in_V(const Vec& v) const;

  double delay(int k, const Vec& w) const;
  RowVec delay_gradient(int k, const Vec& w) const;
  Vec g(const Vec& v) const { return spec_.g.value(v); }
  Mat dg(const Vec& v) const { return spec_.g.jacobian(v); }

  Vec apply_L(const SegmentC1& phi) const { return spec_.L.apply(phi); }

  /// J = { k : d_k(w) <= zero_tol }. Throws outside_W.
  DelaySet classify(const Vec& w) const;
  /// min over k not in J of d_k(w).
  double dmin(const DelaySet& J, const Vec& w) const;

  /// (phi(-d_1(L phi)), ..., phi(-d_k(L phi))) flattened. Throws outside_W.
  Vec hat(const SegmentC1& phi) const;
  /// f(phi) = g(hat phi). Throws outside_W / outside_V.
  Vec rhs_f(const SegmentC1& phi) const;
  /// Df(phi) chi, evaluated term by term from the chain-rule formula.
  Vec df(const SegmentC1& phi, const SegmentC1& chi) const;
  /// The same formula applied to a merely continuous chi.
  Vec df_ext(const SegmentC1& phi, const SegmentC0& chi) const;
  /// Extension evaluated on any continuous function exposing eval(t) -> Vec.
  template <class Continuous>
  Vec df_ext_fn(const SegmentC1& phi, const Continuous& chi) const;

  /// Stratum J with L phi in W_J, or nullopt when phi is outside U.
  std::optional<DelaySet> membership(const SegmentC1& phi) const;
  bool in_U(const SegmentC1& phi) const { return membership(phi).has_value(); }

  /// |phi'(0) - f(phi)|_inf. Throws outside_W / outside_V.
  double on_manifold_residual(const SegmentC1& phi) const;
  /// |chi'(0) - Df(phi) chi|_inf.
  double tangent_residual(const SegmentC1& phi, const SegmentC1& chi) const;

  /// Hat vector for any evaluator of x_t given the already computed w = L x_t.
  template <class Eval>
  Vec hat_fn(const Vec& w, Eval&& eval) const;
  /// f for a history view exposing eval(t) -> Vec on [-r, 0].
  template <class View>
  Vec rhs_f_view(const View& view) const;

 private:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  void self_check() const;
  void require_W(const Vec& w) const;
  void require_V(const Vec& v) const;
  /// Shared core of df / df_ext: chi_at(t) -> Vec, l_chi = L chi.
  template <class ChiEval>
  Vec df_core(const SegmentC1& phi, ChiEval&& chi_at, const Vec& l_chi) const;

  ModelSpec spec_;
};

using ModelPtr = std::shared_ptr<const Model>;

// ---------------------------------------------------------------------------
// template definitions

template <class Eval>
Vec Model::hat_fn(const Vec& w, Eval&& eval) const {
  require_W(w);
  Vec v(n() * k());
  for (int j = 0; j < k(); ++j) v.segment(j * n(), n()) = eval(-delay(j, w));
  return v;
}

template <class View>
Vec Model::rhs_f_view(const View& view) const {
  const Vec w = spec_.L.apply_fn([&](double t) { return view.eval(t); });
  const Vec v = hat_fn(w, [&](double t) { return view.eval(t); });
  require_V(v);
  return g(v);
}

template <class ChiEval>
Vec Model::df_core(const SegmentC1& phi, ChiEval&& chi_at, const Vec& l_chi) const {
  const Vec w = apply_L(phi);
  const Vec v = hat_fn(w, [&](double t) { return phi.eval(t); });
  require_V(v);
  Vec bracket(n() * k());
  for (int j = 0; j < k(); ++j) {
    const double t = -delay(j, w);
    const double dd_lchi = dim_f() > 0 ? (delay_gradient(j, w) * l_chi)(0) : 0.0;
    bracket.segment(j * n(), n()) = chi_at(t) - phi.eval_deriv(t) * dd_lchi;
  }
  return dg(v) * bracket;
}

template <class Continuous>
Vec Model::df_ext_fn(const SegmentC1& phi, const Continuous& chi) const {
  const Vec l_chi = spec_.L.apply_fn([&](double t) { return chi.eval(t); });
  return df_core(phi, [&](double t) { return chi.eval(t); }, l_chi);
}

}  // namespace sdde
