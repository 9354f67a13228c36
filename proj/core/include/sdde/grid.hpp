#pragma once

#include <memory>
#include <span>
#include <vector>

namespace sdde {

/// Node set t_0 = -r < t_1 < ... < t_{M-1} = 0 on which all segments of one
/// computation live. Grids are shared immutably through GridPtr.
class Grid {
 public:
  static constexpr int kDefaultNodes = 65;

  static std::shared_ptr<const Grid> uniform(double r, int nodes = kDefaultNodes);
  static std::shared_ptr<const Grid> from_nodes(std::vector<double> nodes);

  double r() const noexcept { return r_; }
  int size() const noexcept { return static_cast<int>(nodes_.size()); }
  bool is_uniform() const noexcept { return uniform_; }
  std::span<const double> nodes() const noexcept { return nodes_; }
  double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  double spacing(int i) const { return node(i + 1) - node(i); }

  /// Index i of the subinterval [t_i, t_{i+1}] containing t. Requires t in [-r, 0].
  int locate(double t) const;
  /// Index of the node equal to t, or -1.
  int exact_node(double t) const;
  /// Smallest node index whose node is >= t.
  int first_node_at_or_after(double t) const;

  bool contains(double t) const noexcept;

  bool operator==(const Grid& other) const noexcept {
    return r_ == other.r_ && nodes_ == other.nodes_;
  }

 private:
  Grid(double r, std::vector<double> nodes, bool uniform);

  double r_;
  std::vector<double> nodes_;
  bool uniform_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Same grid by identity or by value.
bool same_grid(const GridPtr& a, const GridPtr& b) noexcept;

}  // namespace sdde
