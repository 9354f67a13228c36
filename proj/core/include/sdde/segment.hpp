#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "sdde/grid.hpp"

namespace sdde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Cubic Hermite basis on one subinterval, s in [0,1].
struct HermiteBasis {
  double h00, h10, h01, h11;
  static HermiteBasis value(double s) noexcept {
    const double s2 = s * s, s3 = s2 * s;
    return {2 * s3 - 3 * s2 + 1, s3 - 2 * s2 + s, -2 * s3 + 3 * s2, s3 - s2};
  }
  /// d/ds of the basis.
  static HermiteBasis slope(double s) noexcept {
    const double s2 = s * s;
    return {6 * s2 - 6 * s, 3 * s2 - 4 * s + 1, -6 * s2 + 6 * s, 3 * s2 - 2 * s};
  }
};

/// Element of C^1([-r,0], R^n): piecewise cubic Hermite interpolant of
/// per-node values and derivatives. Rows of values()/derivs() are nodes.
class SegmentC1 {
 public:
  SegmentC1() = default;
  SegmentC1(GridPtr grid, Mat values, Mat derivs);

  static SegmentC1 zero(GridPtr grid, int n);
  static SegmentC1 constant(GridPtr grid, const Vec& c);
  /// Samples value(t) and deriv(t) at the nodes.
  static SegmentC1 sample(GridPtr grid, int n, const std::function<Vec(double)>& value,
                          const std::function<Vec(double)>& deriv);

  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const Grid& grid() const noexcept { return *grid_; }
  int dim() const noexcept { return static_cast<int>(values_.cols()); }
  int nodes() const noexcept { return static_cast<int>(values_.rows()); }
  bool empty() const noexcept { return !grid_; }

  const Mat& values() const noexcept { return values_; }
  const Mat& derivs() const noexcept { return derivs_; }

  Vec eval(double t) const;
  Vec eval_deriv(double t) const;
  /// Scalar component access without building a vector.
  double eval(double t, int component) const;
  double eval_deriv(double t, int component) const;

  /// Stored node data at t = 0.
  Vec value_at_zero() const { return values_.row(values_.rows() - 1).transpose(); }
  Vec deriv_at_zero() const { return derivs_.row(derivs_.rows() - 1).transpose(); }

  SegmentC1 component(int index) const;

  SegmentC1& operator+=(const SegmentC1& other);
  SegmentC1& operator-=(const SegmentC1& other);
  SegmentC1& operator*=(double a);

  friend SegmentC1 operator+(SegmentC1 a, const SegmentC1& b) { return a += b; }
  friend SegmentC1 operator-(SegmentC1 a, const SegmentC1& b) { return a -= b; }
  friend SegmentC1 operator*(double s, SegmentC1 a) { return a *= s; }
  friend SegmentC1 operator*(SegmentC1 a, double s) { return a *= s; }

 private:
  void check_compatible(const SegmentC1& other) const;

  GridPtr grid_;
  Mat values_;
  Mat derivs_;
};

/// Element of C([-r,0], R^n) with piecewise-linear interpolation.
class SegmentC0 {
 public:
  SegmentC0() = default;
  SegmentC0(GridPtr grid, Mat values);

  /// Node values of a C^1 segment.
  static SegmentC0 from_nodes(const SegmentC1& phi);

  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const Grid& grid() const noexcept { return *grid_; }
  int dim() const noexcept { return static_cast<int>(values_.cols()); }
  const Mat& values() const noexcept { return values_; }

  Vec eval(double t) const;
  double eval(double t, int component) const;

 private:
  GridPtr grid_;
  Mat values_;
};

/// Element of C^1([-r,0], R^{n x n}), stored by columns A_mu in C^1_n.
class MatSegmentC1 {
 public:
  MatSegmentC1() = default;
  explicit MatSegmentC1(std::vector<SegmentC1> columns);

  static MatSegmentC1 diagonal(const std::vector<SegmentC1>& scalar_entries);

  int dim() const noexcept { return static_cast<int>(columns_.size()); }
  const GridPtr& grid_ptr() const { return columns_.front().grid_ptr(); }
  const SegmentC1& column(int mu) const { return columns_[static_cast<std::size_t>(mu)]; }

  Mat eval(double t) const;
  Mat eval_deriv(double t) const;

  /// A.q = sum_mu q_mu A_mu.
  SegmentC1 apply(const Vec& q) const;

 private:
  std::vector<SegmentC1> columns_;
};

/// Sup norms on the refinement sample (nodes plus equispaced interior points).
inline constexpr int kNormSamplesPerInterval = 8;

double norm_c0(const SegmentC1& phi, int samples_per_interval = kNormSamplesPerInterval);
double norm_c0_deriv(const SegmentC1& phi, int samples_per_interval = kNormSamplesPerInterval);
/// |phi|_1 = |phi| + |phi'|.
double norm_c1(const SegmentC1& phi, int samples_per_interval = kNormSamplesPerInterval);

/// Sample times: every node and (samples_per_interval - 1) interior points per subinterval.
std::vector<double> refinement_times(const Grid& grid,
                                     int samples_per_interval = kNormSamplesPerInterval);

SegmentC1 mat_apply(const MatSegmentC1& a, const Vec& q);

/// psi * e_nu in C^1_n for a scalar psi. nu is zero-based.
SegmentC1 scalar_times_basis(const SegmentC1& psi, int nu, int n);

}  // namespace sdde
