#include "sdde/linear_map.hpp"

#include "sdde/error.hpp"

namespace sdde {

bool ScalarFunctional::is_zero() const {
  for (const auto& [c, t] : points) {
    if (c != 0.0) return false;
  }
  for (double d : density) {
    if (d != 0.0) return false;
  }
  return true;
}

LinearMap::LinearMap(GridPtr grid, int n, int dim_f) : grid_(std::move(grid)), n_(n), dim_f_(dim_f) {
  if (!grid_) throw Error(ErrorCode::invalid_argument, "linear map needs a grid");
  if (n < 1 || dim_f < 0) throw Error(ErrorCode::invalid_argument, "bad linear map dimensions");
}

LinearMap& LinearMap::add_point(Mat weight, double t) {
  if (weight.rows() != dim_f_ || weight.cols() != n_) {
    throw Error(ErrorCode::dimension_mismatch, "point weight must be dimF x n");
  }
  if (!grid_->contains(t)) throw Error(ErrorCode::domain, "evaluation time outside [-r,0]");
  points_.emplace_back(std::move(weight), t);
  return *this;
}

LinearMap& LinearMap::set_density(std::vector<Mat> density_per_node) {
  if (static_cast<int>(density_per_node.size()) != grid_->size()) {
    throw Error(ErrorCode::dimension_mismatch, "density needs one matrix per grid node");
  }
  for (const auto& m : density_per_node) {
    if (m.rows() != dim_f_ || m.cols() != n_) {
      throw Error(ErrorCode::dimension_mismatch, "density matrices must be dimF x n");
    }
  }
  density_ = std::move(density_per_node);
  return *this;
}

Vec LinearMap::apply(const SegmentC1& phi) const {
  if (phi.dim() != n_) throw Error(ErrorCode::dimension_mismatch, "L applied to wrong dimension");
  return apply_fn([&](double t) { return phi.eval(t); });
}

Vec LinearMap::apply(const SegmentC0& phi) const {
  if (phi.dim() != n_) throw Error(ErrorCode::dimension_mismatch, "L applied to wrong dimension");
  return apply_fn([&](double t) { return phi.eval(t); });
}

std::vector<ScalarFunctional> LinearMap::component_functional(int nu) const {
  if (nu < 0 || nu >= n_) throw Error(ErrorCode::domain, "component index out of range");
  std::vector<ScalarFunctional> rows(static_cast<std::size_t>(dim_f_));
  for (int i = 0; i < dim_f_; ++i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    row.grid = grid_;
    for (const auto& [w, t] : points_) {
      if (w(i, nu) != 0.0) row.points.emplace_back(w(i, nu), t);
    }
    if (!density_.empty()) {
      row.density.reserve(density_.size());
      for (const auto& m : density_) row.density.push_back(m(i, nu));
    }
  }
  return rows;
}

}  // namespace sdde
