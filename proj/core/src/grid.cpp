#include "sdde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdde/error.hpp"

namespace sdde {

Grid::Grid(double r, std::vector<double> nodes, bool uniform)
    : r_(r), nodes_(std::move(nodes)), uniform_(uniform) {}

std::shared_ptr<const Grid> Grid::uniform(double r, int nodes) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::invalid_argument, "grid horizon r must be positive");
  }
  if (nodes < 3) {
    throw Error(ErrorCode::invalid_argument, "grid needs at least 3 nodes");
  }
  std::vector<double> t(static_cast<std::size_t>(nodes));
  const int last = nodes - 1;
  for (int i = 0; i <= last; ++i) {
    // -r + i*h, written so the endpoints are exact
    t[static_cast<std::size_t>(i)] = -r * static_cast<double>(last - i) / static_cast<double>(last);
  }
  t.front() = -r;
  t.back() = 0.0;
  return std::shared_ptr<const Grid>(new Grid(r, std::move(t), true));
}

std::shared_ptr<const Grid> Grid::from_nodes(std::vector<double> nodes) {
  if (nodes.size() < 3) {
    throw Error(ErrorCode::invalid_argument, "grid needs at least 3 nodes");
  }
  if (nodes.back() != 0.0) {
    throw Error(ErrorCode::invalid_argument, "last grid node must be exactly 0");
  }
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i] > nodes[i - 1])) {
      throw Error(ErrorCode::invalid_argument, "grid nodes must be strictly increasing");
    }
  }
  const double r = -nodes.front();
  return std::shared_ptr<const Grid>(new Grid(r, std::move(nodes), false));
}

bool Grid::contains(double t) const noexcept { return t >= -r_ && t <= 0.0; }

int Grid::locate(double t) const {
  if (!contains(t)) {
    throw Error(ErrorCode::domain, "t = " + std::to_string(t) + " outside [-r, 0]");
  }
  const int last_interval = size() - 2;
  int i = 0;
  if (uniform_) {
    const double h = r_ / static_cast<double>(size() - 1);
    i = static_cast<int>(std::floor((t + r_) / h));
    i = std::clamp(i, 0, last_interval);
    // floor can be off by one near nodes
    if (t < nodes_[static_cast<std::size_t>(i)] && i > 0) --i;
    if (i < last_interval && t >= nodes_[static_cast<std::size_t>(i + 1)]) ++i;
  } else {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    i = static_cast<int>(it - nodes_.begin()) - 1;
    i = std::clamp(i, 0, last_interval);
  }
  return i;
}

int Grid::exact_node(double t) const {
  if (!contains(t)) return -1;
  const int i = locate(t);
  if (nodes_[static_cast<std::size_t>(i)] == t) return i;
  if (nodes_[static_cast<std::size_t>(i + 1)] == t) return i + 1;
  return -1;
}

int Grid::first_node_at_or_after(double t) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
  return static_cast<int>(it - nodes_.begin());
}

bool same_grid(const GridPtr& a, const GridPtr& b) noexcept {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

}  // namespace sdde
