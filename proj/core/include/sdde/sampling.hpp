#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "sdde/model.hpp"

namespace sdde {

using Rng = std::mt19937_64;

/// Independent stream for a named consumer: seed ^ FNV-1a(name).
Rng make_rng(std::uint64_t seed, std::string_view stream);
std::uint64_t fnv1a(std::string_view text);

/// Deterministic point of the unit cube (Halton sequence).
Vec halton_point(int index, int dim);

double uniform(Rng& rng, double lo, double hi);
Vec random_vec(Rng& rng, int n, double scale = 1.0);
Vec random_in_box(Rng& rng, const Box& box);

/// Offset plus a few sinusoids per component, sampled with exact derivatives.
/// |phi| <= amplitude.
SegmentC1 random_smooth_segment(Rng& rng, const GridPtr& grid, int n, double amplitude = 1.0, int modes = 3);

/// Smooth segment with the derivative datum at 0 set to zero (an element of X_0).
SegmentC1 random_x0_segment(Rng& rng, const GridPtr& grid, int n, double amplitude = 1.0, int modes = 3);

/// Smooth segments in U whose L-image lies in `box` (when given) and whose
/// stratum is `stratum` (when given). Gives up after 200 * count attempts.
std::vector<SegmentC1> sample_in_U(Rng& rng, const Model& model, int count, double amplitude,
                                   const std::optional<Box>& box = std::nullopt,
                                   const std::optional<DelaySet>& stratum = std::nullopt);

}  // namespace sdde
