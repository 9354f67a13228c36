#include "sdde/bump.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdde {

namespace {

SegmentC1 tent(const GridPtr& grid, int node) {
  Mat values = Mat::Zero(grid->size(), 1);
  values(node, 0) = 1.0;
  return SegmentC1(grid, std::move(values), Mat::Zero(grid->size(), 1));
}

SegmentC1 slope_at_zero(const GridPtr& grid) {
  Mat derivs = Mat::Zero(grid->size(), 1);
  derivs(grid->size() - 1, 0) = 1.0;
  return SegmentC1(grid, Mat::Zero(grid->size(), 1), std::move(derivs));
}

}  // namespace

double BumpCertificate::worst() const {
  return std::max({deriv_at_zero, functional, left_support, value_at_zero});
}

BumpCertificate certify_bump(const SegmentC1& phi, const std::vector<ScalarFunctional>& lambda, double z) {
  BumpCertificate c;
  c.deriv_at_zero = std::abs(phi.deriv_at_zero()(0) - 1.0);
  c.value_at_zero = std::abs(phi.value_at_zero()(0));
  for (const auto& row : lambda) c.functional = std::max(c.functional, std::abs(row(phi)));
  std::vector<double> times;
  for (double t : refinement_times(phi.grid())) {
    if (t <= z) times.push_back(t);
  }
  times.push_back(z);
  for (double t : times) {
    c.left_support = std::max({c.left_support, std::abs(phi.eval(t, 0)), std::abs(phi.eval_deriv(t, 0))});
  }
  return c;
}

Bump make_bump(const BumpRequest& req) {
  if (!req.grid) throw Error(ErrorCode::invalid_argument, "bump request needs a grid");
  const Grid& grid = *req.grid;
  if (!(req.z >= -grid.r() && req.z < 0.0)) throw Error(ErrorCode::domain, "bump needs z in [-r, 0)");

  std::vector<const ScalarFunctional*> rows;
  for (const auto& row : req.lambda) {
    if (!row.is_zero()) rows.push_back(&row);
  }
  const int q = static_cast<int>(rows.size());

  const int first = grid.first_node_at_or_after(req.z);
  const double z_snapped = grid.node(first);
  const int last_interior = grid.size() - 2;
  std::vector<int> tent_nodes;
  for (int i = first + 1; i <= last_interior; ++i) tent_nodes.push_back(i);

  if (static_cast<int>(tent_nodes.size()) + 1 < q + 2) {
    std::ostringstream msg;
    msg << tent_nodes.size() + 1 << " basis functions fit into (" << req.z << ", 0) but " << q + 2
        << " are needed; refine the grid";
    throw Error(ErrorCode::grid_too_coarse, msg.str());
  }
  if (req.budget > 0) {
    const int keep = std::max(0, req.budget - 1);
    if (keep < static_cast<int>(tent_nodes.size())) {
      tent_nodes.erase(tent_nodes.begin(), tent_nodes.end() - keep);
    }
  }

  std::vector<SegmentC1> basis;
  for (int node : tent_nodes) basis.push_back(tent(req.grid, node));
  basis.push_back(slope_at_zero(req.grid));
  const int m = static_cast<int>(basis.size());

  // Rows: lambda_i(beta_j) = 0 for each functional, beta_j'(0) = 1 (only the last element).
  Mat A = Mat::Zero(q + 1, m);
  Vec b = Vec::Zero(q + 1);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < m; ++j) A(i, j) = (*rows[static_cast<std::size_t>(i)])(basis[static_cast<std::size_t>(j)]);
  }
  A(q, m - 1) = 1.0;
  b(q) = 1.0;

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
  Vec c = cod.solve(b);
  const double residual = (A * c - b).lpNorm<Eigen::Infinity>();
  const double scale = std::max(1.0, A.lpNorm<Eigen::Infinity>()) * std::max(1.0, c.lpNorm<Eigen::Infinity>());
  if (!c.allFinite() || residual > 1e-12 * scale || std::abs(c(m - 1)) < 1e-300) {
    std::ostringstream msg;
    msg << "bump system with " << q << " constraints and " << m << " basis functions is inconsistent"
        << " (residual " << residual << ")";
    throw Error(ErrorCode::infeasible_rank, msg.str());
  }
  c /= c(m - 1);  // derivative at 0 becomes exactly 1

  Mat values = Mat::Zero(grid.size(), 1);
  Mat derivs = Mat::Zero(grid.size(), 1);
  for (std::size_t j = 0; j < tent_nodes.size(); ++j) values(tent_nodes[j], 0) = c(static_cast<int>(j));
  derivs(grid.size() - 1, 0) = 1.0;

  Bump out;
  out.phi = SegmentC1(req.grid, std::move(values), std::move(derivs));
  out.certificate = certify_bump(out.phi, req.lambda, req.z);
  out.z_snapped = z_snapped;
  out.basis_size = m;
  return out;
}

Bump make_component_bump(const Model& model, int nu, double z, int budget) {
  if (nu < 0 || nu >= model.n()) throw Error(ErrorCode::domain, "component index out of range");
  BumpRequest req;
  req.grid = model.grid_ptr();
  req.lambda = model.L().component_functional(nu);
  req.z = z;
  req.budget = budget;
  return make_bump(req);
}

SegmentC1 make_vector_bump(const Model& model, int nu, double z, int budget) {
  return scalar_times_basis(make_component_bump(model, nu, z, budget).phi, nu, model.n());
}

}  // namespace sdde
