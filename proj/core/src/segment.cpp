#include "sdde/segment.hpp"

#include <cmath>
#include <string>

#include "sdde/error.hpp"

namespace sdde {

namespace {

void require_grid(const GridPtr& grid) {
  if (!grid) throw Error(ErrorCode::invalid_argument, "segment without grid");
}

}  // namespace

// ---------------------------------------------------------------------------
// SegmentC1

SegmentC1::SegmentC1(GridPtr grid, Mat values, Mat derivs)
    : grid_(std::move(grid)), values_(std::move(values)), derivs_(std::move(derivs)) {
  require_grid(grid_);
  if (values_.rows() != grid_->size() || derivs_.rows() != grid_->size()) {
    throw Error(ErrorCode::dimension_mismatch, "segment data rows must equal grid size");
  }
  if (values_.cols() != derivs_.cols() || values_.cols() < 1) {
    throw Error(ErrorCode::dimension_mismatch, "values/derivs component count mismatch");
  }
}

SegmentC1 SegmentC1::zero(GridPtr grid, int n) {
  require_grid(grid);
  const int m = grid->size();
  return SegmentC1(std::move(grid), Mat::Zero(m, n), Mat::Zero(m, n));
}

SegmentC1 SegmentC1::constant(GridPtr grid, const Vec& c) {
  require_grid(grid);
  const int m = grid->size();
  Mat values = c.transpose().replicate(m, 1);
  return SegmentC1(std::move(grid), std::move(values), Mat::Zero(m, c.size()));
}

SegmentC1 SegmentC1::sample(GridPtr grid, int n, const std::function<Vec(double)>& value,
                            const std::function<Vec(double)>& deriv) {
  require_grid(grid);
  const int m = grid->size();
  Mat values(m, n), derivs(m, n);
  for (int i = 0; i < m; ++i) {
    const double t = grid->node(i);
    values.row(i) = value(t).transpose();
    derivs.row(i) = deriv(t).transpose();
  }
  return SegmentC1(std::move(grid), std::move(values), std::move(derivs));
}

Vec SegmentC1::eval(double t) const {
  const int node = grid_->exact_node(t);
  if (node >= 0) return values_.row(node).transpose();
  const int i = grid_->locate(t);
  const double h = grid_->spacing(i);
  const auto b = HermiteBasis::value((t - grid_->node(i)) / h);
  return (b.h00 * values_.row(i) + (b.h10 * h) * derivs_.row(i) + b.h01 * values_.row(i + 1) +
          (b.h11 * h) * derivs_.row(i + 1))
      .transpose();
}

Vec SegmentC1::eval_deriv(double t) const {
  const int node = grid_->exact_node(t);
  if (node >= 0) return derivs_.row(node).transpose();
  const int i = grid_->locate(t);
  const double h = grid_->spacing(i);
  const auto b = HermiteBasis::slope((t - grid_->node(i)) / h);
  return ((b.h00 / h) * values_.row(i) + b.h10 * derivs_.row(i) + (b.h01 / h) * values_.row(i + 1) +
          b.h11 * derivs_.row(i + 1))
      .transpose();
}

double SegmentC1::eval(double t, int c) const {
  const int node = grid_->exact_node(t);
  if (node >= 0) return values_(node, c);
  const int i = grid_->locate(t);
  const double h = grid_->spacing(i);
  const auto b = HermiteBasis::value((t - grid_->node(i)) / h);
  return b.h00 * values_(i, c) + b.h10 * h * derivs_(i, c) + b.h01 * values_(i + 1, c) +
         b.h11 * h * derivs_(i + 1, c);
}

double SegmentC1::eval_deriv(double t, int c) const {
  const int node = grid_->exact_node(t);
  if (node >= 0) return derivs_(node, c);
  const int i = grid_->locate(t);
  const double h = grid_->spacing(i);
  const auto b = HermiteBasis::slope((t - grid_->node(i)) / h);
  return b.h00 / h * values_(i, c) + b.h10 * derivs_(i, c) + b.h01 / h * values_(i + 1, c) +
         b.h11 * derivs_(i + 1, c);
}

SegmentC1 SegmentC1::component(int index) const {
  if (index < 0 || index >= dim()) {
    throw Error(ErrorCode::domain, "component index out of range");
  }
  return SegmentC1(grid_, values_.col(index), derivs_.col(index));
}

void SegmentC1::check_compatible(const SegmentC1& other) const {
  if (!same_grid(grid_, other.grid_)) {
    throw Error(ErrorCode::grid_mismatch, "segments live on different grids");
  }
  if (dim() != other.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "segments have different component counts");
  }
}

SegmentC1& SegmentC1::operator+=(const SegmentC1& other) {
  check_compatible(other);
  values_ += other.values_;
  derivs_ += other.derivs_;
  return *this;
}

SegmentC1& SegmentC1::operator-=(const SegmentC1& other) {
  check_compatible(other);
  values_ -= other.values_;
  derivs_ -= other.derivs_;
  return *this;
}

SegmentC1& SegmentC1::operator*=(double a) {
  values_ *= a;
  derivs_ *= a;
  return *this;
}

// ---------------------------------------------------------------------------
// SegmentC0

SegmentC0::SegmentC0(GridPtr grid, Mat values) : grid_(std::move(grid)), values_(std::move(values)) {
  require_grid(grid_);
  if (values_.rows() != grid_->size() || values_.cols() < 1) {
    throw Error(ErrorCode::dimension_mismatch, "SegmentC0 data rows must equal grid size");
  }
}

SegmentC0 SegmentC0::from_nodes(const SegmentC1& phi) { return SegmentC0(phi.grid_ptr(), phi.values()); }

Vec SegmentC0::eval(double t) const {
  const int node = grid_->exact_node(t);
  if (node >= 0) return values_.row(node).transpose();
  const int i = grid_->locate(t);
  const double s = (t - grid_->node(i)) / grid_->spacing(i);
  return ((1.0 - s) * values_.row(i) + s * values_.row(i + 1)).transpose();
}

double SegmentC0::eval(double t, int c) const {
  const int node = grid_->exact_node(t);
  if (node >= 0) return values_(node, c);
  const int i = grid_->locate(t);
  const double s = (t - grid_->node(i)) / grid_->spacing(i);
  return (1.0 - s) * values_(i, c) + s * values_(i + 1, c);
}

// ---------------------------------------------------------------------------
// MatSegmentC1

MatSegmentC1::MatSegmentC1(std::vector<SegmentC1> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw Error(ErrorCode::dimension_mismatch, "matrix segment needs columns");
  const int n = static_cast<int>(columns_.size());
  for (const auto& c : columns_) {
    if (c.dim() != n) throw Error(ErrorCode::dimension_mismatch, "matrix segment must be square");
    if (!same_grid(c.grid_ptr(), columns_.front().grid_ptr())) {
      throw Error(ErrorCode::grid_mismatch, "matrix segment columns on different grids");
    }
  }
}

MatSegmentC1 MatSegmentC1::diagonal(const std::vector<SegmentC1>& scalar_entries) {
  const int n = static_cast<int>(scalar_entries.size());
  std::vector<SegmentC1> cols;
  cols.reserve(scalar_entries.size());
  for (int nu = 0; nu < n; ++nu) {
    cols.push_back(scalar_times_basis(scalar_entries[static_cast<std::size_t>(nu)], nu, n));
  }
  return MatSegmentC1(std::move(cols));
}

Mat MatSegmentC1::eval(double t) const {
  Mat out(dim(), dim());
  for (int mu = 0; mu < dim(); ++mu) out.col(mu) = column(mu).eval(t);
  return out;
}

Mat MatSegmentC1::eval_deriv(double t) const {
  Mat out(dim(), dim());
  for (int mu = 0; mu < dim(); ++mu) out.col(mu) = column(mu).eval_deriv(t);
  return out;
}

SegmentC1 MatSegmentC1::apply(const Vec& q) const {
  if (q.size() != dim()) throw Error(ErrorCode::dimension_mismatch, "A.q: q has wrong length");
  const auto& first = columns_.front();
  Mat values = Mat::Zero(first.nodes(), dim());
  Mat derivs = Mat::Zero(first.nodes(), dim());
  for (int mu = 0; mu < dim(); ++mu) {
    if (q[mu] == 0.0) continue;
    values += q[mu] * column(mu).values();
    derivs += q[mu] * column(mu).derivs();
  }
  return SegmentC1(first.grid_ptr(), std::move(values), std::move(derivs));
}

// ---------------------------------------------------------------------------
// free functions

std::vector<double> refinement_times(const Grid& grid, int samples_per_interval) {
  const int per = std::max(1, samples_per_interval);
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>((grid.size() - 1) * per + 1));
  for (int i = 0; i + 1 < grid.size(); ++i) {
    times.push_back(grid.node(i));
    for (int j = 1; j < per; ++j) {
      times.push_back(grid.node(i) + grid.spacing(i) * static_cast<double>(j) / per);
    }
  }
  times.push_back(0.0);
  return times;
}

double norm_c0(const SegmentC1& phi, int samples_per_interval) {
  double sup = 0.0;
  for (double t : refinement_times(phi.grid(), samples_per_interval)) {
    sup = std::max(sup, phi.eval(t).lpNorm<Eigen::Infinity>());
  }
  return sup;
}

double norm_c0_deriv(const SegmentC1& phi, int samples_per_interval) {
  double sup = 0.0;
  for (double t : refinement_times(phi.grid(), samples_per_interval)) {
    sup = std::max(sup, phi.eval_deriv(t).lpNorm<Eigen::Infinity>());
  }
  return sup;
}

double norm_c1(const SegmentC1& phi, int samples_per_interval) {
  return norm_c0(phi, samples_per_interval) + norm_c0_deriv(phi, samples_per_interval);
}

SegmentC1 mat_apply(const MatSegmentC1& a, const Vec& q) { return a.apply(q); }

SegmentC1 scalar_times_basis(const SegmentC1& psi, int nu, int n) {
  if (psi.dim() != 1) throw Error(ErrorCode::dimension_mismatch, "psi must be scalar");
  if (nu < 0 || nu >= n) {
    throw Error(ErrorCode::domain, "basis index " + std::to_string(nu) + " out of range");
  }
  const int m = psi.nodes();
  Mat values = Mat::Zero(m, n), derivs = Mat::Zero(m, n);
  values.col(nu) = psi.values().col(0);
  derivs.col(nu) = psi.derivs().col(0);
  return SegmentC1(psi.grid_ptr(), std::move(values), std::move(derivs));
}

}  // namespace sdde
