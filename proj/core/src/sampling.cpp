#include "sdde/sampling.hpp"

#include <cmath>

namespace sdde {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Rng make_rng(std::uint64_t seed, std::string_view stream) { return Rng(seed ^ fnv1a(stream)); }

Vec halton_point(int index, int dim) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  Vec u(dim);
  for (int d = 0; d < dim; ++d) {
    const int base = primes[d % 16];
    double f = 1.0, x = 0.0;
    for (int i = index + 1; i > 0; i /= base) {
      f /= base;
      x += f * (i % base);
    }
    u(d) = x;
  }
  return u;
}

double uniform(Rng& rng, double lo, double hi) {
  // Explicit mapping instead of std::uniform_real_distribution keeps streams
  // identical across standard libraries.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

Vec random_vec(Rng& rng, int n, double scale) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform(rng, -scale, scale);
  return v;
}

Vec random_in_box(Rng& rng, const Box& box) {
  Vec v(box.dim());
  for (int i = 0; i < box.dim(); ++i) v(i) = uniform(rng, box.lower(i), box.upper(i));
  return v;
}

SegmentC1 random_smooth_segment(Rng& rng, const GridPtr& grid, int n, double amplitude, int modes) {
  struct Mode {
    double a, omega, theta;
  };
  const double share = amplitude / (modes + 1);
  std::vector<double> offsets(static_cast<std::size_t>(n));
  std::vector<std::vector<Mode>> comps(static_cast<std::size_t>(n));
  for (int nu = 0; nu < n; ++nu) {
    offsets[static_cast<std::size_t>(nu)] = uniform(rng, -share, share);
    for (int j = 0; j < modes; ++j) {
      comps[static_cast<std::size_t>(nu)].push_back(
          {uniform(rng, -share, share), uniform(rng, 0.5, 3.0), uniform(rng, 0.0, 6.283185307179586)});
    }
  }
  auto value = [&](double t) {
    Vec v(n);
    for (int nu = 0; nu < n; ++nu) {
      double s = offsets[static_cast<std::size_t>(nu)];
      for (const Mode& m : comps[static_cast<std::size_t>(nu)]) s += m.a * std::sin(m.omega * t + m.theta);
      v(nu) = s;
    }
    return v;
  };
  auto deriv = [&](double t) {
    Vec v(n);
    for (int nu = 0; nu < n; ++nu) {
      double s = 0.0;
      for (const Mode& m : comps[static_cast<std::size_t>(nu)]) s += m.a * m.omega * std::cos(m.omega * t + m.theta);
      v(nu) = s;
    }
    return v;
  };
  return SegmentC1::sample(grid, n, value, deriv);
}

SegmentC1 random_x0_segment(Rng& rng, const GridPtr& grid, int n, double amplitude, int modes) {
  const SegmentC1 phi = random_smooth_segment(rng, grid, n, amplitude, modes);
  Mat derivs = phi.derivs();
  derivs.row(derivs.rows() - 1).setZero();
  return SegmentC1(grid, phi.values(), std::move(derivs));
}

std::vector<SegmentC1> sample_in_U(Rng& rng, const Model& model, int count, double amplitude,
                                   const std::optional<Box>& box, const std::optional<DelaySet>& stratum) {
  std::vector<SegmentC1> out;
  const int max_attempts = 200 * std::max(1, count);
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    SegmentC1 phi = random_smooth_segment(rng, model.grid_ptr(), model.n(), amplitude);
    const auto J = model.membership(phi);
    if (!J) continue;
    if (stratum && !(*J == *stratum)) continue;
    if (box && !box->contains(model.apply_L(phi))) continue;
    out.push_back(std::move(phi));
  }
  if (static_cast<int>(out.size()) < count) {
    throw Error(ErrorCode::invalid_argument, "could not sample enough segments in U");
  }
  return out;
}

}  // namespace sdde
