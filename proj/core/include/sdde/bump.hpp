#pragma once

#include <vector>

#include "sdde/linear_map.hpp"
#include "sdde/model.hpp"

namespace sdde {

/// Scalar C^1 function phi on [-r,0] with phi'(0) = 1, lambda phi = 0 and
/// phi = 0 on [-r, z] and at 0.
struct BumpRequest {
  GridPtr grid;
  std::vector<ScalarFunctional> lambda;
  double z = 0.0;
  /// Maximum number of basis functions (0: all that fit).
  int budget = 0;
};

struct BumpCertificate {
  double deriv_at_zero = 0.0;   // |phi'(0) - 1|
  double functional = 0.0;      // max_i |lambda_i phi|
  double left_support = 0.0;    // max |phi|, |phi'| on sampled [-r, z]
  double value_at_zero = 0.0;   // |phi(0)|

  double worst() const;
  bool passes(double tol = 1e-10) const { return worst() <= tol; }
};

struct Bump {
  SegmentC1 phi;
  BumpCertificate certificate;
  double z_snapped = 0.0;  // smallest grid node >= z
  int basis_size = 0;
};

/// Minimum-norm combination of node-localized cubic tents on (z*, 0) and one
/// element carrying the derivative at 0. Throws grid_too_coarse or infeasible_rank.
Bump make_bump(const BumpRequest& request);

BumpCertificate certify_bump(const SegmentC1& phi, const std::vector<ScalarFunctional>& lambda, double z);

/// Scalar eta with L(eta e_nu) = 0, eta'(0) = 1, eta = 0 on [-r,z] and at 0.
Bump make_component_bump(const Model& model, int nu, double z, int budget = 0);

/// eta_nu e_nu as an element of C^1_n (nu zero-based).
SegmentC1 make_vector_bump(const Model& model, int nu, double z, int budget = 0);

}  // namespace sdde
