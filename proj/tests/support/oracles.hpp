#pragma once

// Reference computations that do not go through the library code under test.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

/// Cubic with the given Hermite data on [a, b], evaluated in the monomial basis
/// in u = t - a.
struct MonomialCubic {
  double c0, c1, c2, c3, a;

  MonomialCubic(double a_, double b, double ya, double da, double yb, double db) : a(a_) {
    const double h = b - a_;
    const double slope = (yb - ya) / h;
    c0 = ya;
    c1 = da;
    c2 = (3 * slope - 2 * da - db) / h;
    c3 = (da + db - 2 * slope) / (h * h);
  }
  double value(double t) const {
    const double u = t - a;
    return c0 + u * (c1 + u * (c2 + u * c3));
  }
  double slope(double t) const {
    const double u = t - a;
    return c1 + u * (2 * c2 + 3 * u * c3);
  }
};

/// (F(+eps) - F(-eps)) / (2 eps) for a vector-valued F of a scalar offset.
template <class F>
Eigen::VectorXd central_difference(F&& f, double eps) {
  return (f(eps) - f(-eps)) / (2 * eps);
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_m.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m) {
  std::vector<double> x(static_cast<std::size_t>(m)), w(static_cast<std::size_t>(m));
  const double pi = std::acos(-1.0);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2 / ((1 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Method of steps for the scalar constant-delay equation x'(t) = g(x(t - tau))
/// with history x = phi on [-tau, 0]:
///   x(t) = x(k tau) + int_{k tau}^t g(x(s - tau)) ds   on [k tau, (k+1) tau].
/// Integrals use composite Gauss-Legendre rules on panels whose ends map onto
/// the history's breakpoints, so every integrand is smooth on each panel.
class ConstantDelayOracle {
 public:
  ConstantDelayOracle(std::function<double(double)> history, std::function<double(double)> g, double tau,
                      std::vector<double> history_breaks, int intervals)
      : history_(std::move(history)), g_(std::move(g)), tau_(tau), intervals_(intervals) {
    // panel ends inside [0, tau]: breakpoints of the history shifted by tau
    ends_.push_back(0.0);
    for (double b : history_breaks) {
      const double s = b + tau_;
      if (s > 1e-14 && s < tau_ - 1e-14) ends_.push_back(s);
    }
    ends_.push_back(tau_);
    std::tie(gx_, gw_) = gauss_legendre(10);
    // cumulative values at interval and panel starts, interval by interval
    start_.assign(static_cast<std::size_t>(intervals_ + 1), 0.0);
    cum_.assign(static_cast<std::size_t>(intervals_), {});
    start_[0] = history_(0.0);
    for (int k = 0; k < intervals_; ++k) {
      auto& cum = cum_[static_cast<std::size_t>(k)];
      cum.push_back(start_[static_cast<std::size_t>(k)]);
      for (std::size_t p = 0; p + 1 < ends_.size(); ++p) cum.push_back(cum.back() + panel(k, ends_[p], ends_[p + 1]));
      start_[static_cast<std::size_t>(k + 1)] = cum.back();
    }
  }

  double operator()(double t) const {
    if (t <= 0.0) return history_(t);
    int k = static_cast<int>(std::floor(t / tau_));
    if (k >= intervals_) k = intervals_ - 1;
    const double s = t - k * tau_;
    const auto& cum = cum_[static_cast<std::size_t>(k)];
    std::size_t p = 0;
    while (p + 2 < ends_.size() && ends_[p + 1] <= s) ++p;
    return cum[p] + panel(k, ends_[p], s);
  }

 private:
  // int over [k tau + a, k tau + b] of g(x(s - tau))
  double panel(int k, double a, double b) const {
    if (b <= a) return 0.0;
    double acc = 0.0;
    const double half = (b - a) / 2, mid = (a + b) / 2;
    for (std::size_t i = 0; i < gx_.size(); ++i) {
      const double s = mid + half * gx_[i];  // offset inside interval k
      const double lagged = (k == 0) ? history_(s - tau_) : (*this)((k - 1) * tau_ + s);
      acc += gw_[i] * g_(lagged);
    }
    return half * acc;
  }

  std::function<double(double)> history_, g_;
  double tau_;
  int intervals_;
  std::vector<double> ends_;
  std::vector<double> gx_, gw_;
  std::vector<double> start_;
  std::vector<std::vector<double>> cum_;
};

}  // namespace oracle
