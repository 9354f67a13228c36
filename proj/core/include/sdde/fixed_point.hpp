#pragma once

#include <functional>

#include "sdde/segment.hpp"

namespace sdde {

struct SolverSettings {
  int max_iterations = 100;
  double tol = 1e-12;
};

struct SolveResult {
  Vec x;
  int iterations = 0;
  double residual = 0.0;  // |x - F(x)|_inf at the returned x
  bool used_fallback = false;
};

/// Solves x = F(x) in R^n by Newton's method on G(x) = x - F(x) with
/// backtracking; falls back to damped fixed-point steps when Newton stalls.
/// Converged when |G(x)|_inf <= tol * max(1, |x|_inf). Throws no_convergence.
/// Errors outside_W / outside_V raised at trial points shorten the step; at
/// the starting point they propagate.
SolveResult solve_fixed_point(const std::function<Vec(const Vec&)>& F,
                              const std::function<Mat(const Vec&)>& dF, Vec x0,
                              const SolverSettings& settings = {});

}  // namespace sdde
