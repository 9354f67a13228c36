#include "sdde/fixed_point.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "sdde/error.hpp"

namespace sdde {

namespace {

bool domain_error(const Error& e) {
  return e.code() == ErrorCode::outside_W || e.code() == ErrorCode::outside_V ||
         e.code() == ErrorCode::domain;
}

}  // namespace

SolveResult solve_fixed_point(const std::function<Vec(const Vec&)>& F,
                              const std::function<Mat(const Vec&)>& dF, Vec x0,
                              const SolverSettings& settings) {
  const int n = static_cast<int>(x0.size());
  auto norm = [](const Vec& v) { return v.lpNorm<Eigen::Infinity>(); };
  auto try_residual = [&](const Vec& x) -> std::optional<Vec> {
    try {
      Vec g = x - F(x);
      if (!g.allFinite()) return std::nullopt;
      return g;
    } catch (const Error& e) {
      if (domain_error(e)) return std::nullopt;
      throw;
    }
  };

  SolveResult out;
  out.x = std::move(x0);
  Vec G = out.x - F(out.x);
  double theta = 1.0;  // damping of the fallback iteration

  for (int it = 0; it <= settings.max_iterations; ++it) {
    out.residual = norm(G);
    out.iterations = it;
    if (out.residual <= settings.tol * std::max(1.0, norm(out.x))) return out;
    if (it == settings.max_iterations) break;

    bool accepted = false;
    const Mat J = Mat::Identity(n, n) - dF(out.x);
    const Eigen::PartialPivLU<Mat> lu(J);
    if (std::abs(lu.determinant()) > 1e-14) {
      const Vec step = -lu.solve(G);
      double lambda = 1.0;
      for (int half = 0; half < 40 && step.allFinite(); ++half, lambda *= 0.5) {
        const Vec trial = out.x + lambda * step;
        if (auto g = try_residual(trial); g && norm(*g) < out.residual) {
          out.x = trial;
          G = *g;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      out.used_fallback = true;
      for (int half = 0; half < 40; ++half, theta *= 0.5) {
        const Vec trial = out.x - theta * G;
        if (auto g = try_residual(trial); g && norm(*g) < out.residual) {
          out.x = trial;
          G = *g;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
  }
  std::ostringstream msg;
  msg << "fixed point not reached after " << out.iterations << " iterations (residual " << out.residual << ")";
  throw Error(ErrorCode::no_convergence, msg.str());
}

}  // namespace sdde
