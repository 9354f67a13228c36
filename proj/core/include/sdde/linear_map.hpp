#pragma once

#include <array>
#include <utility>
#include <vector>

#include "sdde/segment.hpp"

namespace sdde {

/// Three-point Gauss-Legendre rule on [0,1]; exact for the degree-4 products
/// (piecewise-linear density times cubic Hermite piece) used below.
struct GaussRule {
  static constexpr std::array<double, 3> nodes = {0.11270166537925831, 0.5, 0.88729833462074169};
  static constexpr std::array<double, 3> weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
};

/// Scalar continuous linear functional
///   psi -> sum_i c_i psi(t_i) + int_{-r}^0 rho(t) psi(t) dt,
/// rho piecewise linear on the grid (empty density means rho = 0).
struct ScalarFunctional {
  std::vector<std::pair<double, double>> points;  // (weight, time)
  std::vector<double> density;
  GridPtr grid;

  bool is_zero() const;

  template <class Eval>
  double apply(Eval&& eval) const {
    double acc = 0.0;
    for (const auto& [c, t] : points) acc += c * eval(t);
    if (!density.empty()) {
      for (int i = 0; i + 1 < grid->size(); ++i) {
        const double h = grid->spacing(i);
        for (std::size_t g = 0; g < GaussRule::nodes.size(); ++g) {
          const double s = GaussRule::nodes[g];
          const double rho = (1.0 - s) * density[static_cast<std::size_t>(i)] +
                             s * density[static_cast<std::size_t>(i + 1)];
          acc += GaussRule::weights[g] * h * rho * eval(grid->node(i) + s * h);
        }
      }
    }
    return acc;
  }

  double operator()(const SegmentC1& psi) const {
    return apply([&](double t) { return psi.eval(t, 0); });
  }
};

/// L : C([-r,0],R^n) -> F = R^{dimF}, a finite sum of weighted point
/// evaluations plus an optional integral against a matrix density.
class LinearMap {
 public:
  LinearMap() = default;
  LinearMap(GridPtr grid, int n, int dim_f);

  /// Adds W * phi(t), W in R^{dimF x n}.
  LinearMap& add_point(Mat weight, double t);
  /// Adds int rho(t) phi(t) dt with rho given per grid node (dimF x n each).
  LinearMap& set_density(std::vector<Mat> density_per_node);

  int dim_f() const noexcept { return dim_f_; }
  int n() const noexcept { return n_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }

  template <class Eval>
  Vec apply_fn(Eval&& eval) const {
    Vec out = Vec::Zero(dim_f_);
    if (dim_f_ == 0) return out;
    for (const auto& [w, t] : points_) out.noalias() += w * eval(t);
    if (!density_.empty()) {
      for (int i = 0; i + 1 < grid_->size(); ++i) {
        const double h = grid_->spacing(i);
        for (std::size_t g = 0; g < GaussRule::nodes.size(); ++g) {
          const double s = GaussRule::nodes[g];
          const Mat rho = (1.0 - s) * density_[static_cast<std::size_t>(i)] +
                          s * density_[static_cast<std::size_t>(i + 1)];
          out.noalias() += (GaussRule::weights[g] * h) * (rho * eval(grid_->node(i) + s * h));
        }
      }
    }
    return out;
  }

  Vec apply(const SegmentC1& phi) const;
  Vec apply(const SegmentC0& phi) const;

  /// Rows of psi -> L(psi . e_nu) for scalar psi (one functional per F coordinate).
  std::vector<ScalarFunctional> component_functional(int nu) const;

  const std::vector<std::pair<Mat, double>>& point_terms() const noexcept { return points_; }
  bool has_density() const noexcept { return !density_.empty(); }

 private:
  GridPtr grid_;
  int n_ = 0;
  int dim_f_ = 0;
  std::vector<std::pair<Mat, double>> points_;
  std::vector<Mat> density_;
};

}  // namespace sdde
