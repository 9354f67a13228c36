#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdde {

enum class ErrorCode {
  domain,                 // argument outside its admissible range (e.g. t not in [-r,0])
  dimension_mismatch,
  grid_mismatch,          // segments built on different grids
  invalid_argument,
  outside_W,              // L(phi) not in the domain W of the delay functions
  outside_V,              // hat(phi) not in the domain V of g
  outside_box,            // w outside the coverage box of a frame
  box_not_in_WJ,          // some delay in K\J vanishes on the requested box
  infeasible_rank,        // bump linear system has no solution
  grid_too_coarse,        // not enough candidate bump functions fit into (z,0)
  no_convergence,         // chart inverse fixed point did not converge
  overlap_no_convergence, // integrator: within-step iteration did not converge
  no_chart_for_stratum,
  gradient_check_failed,  // user-supplied derivative disagrees with finite differences
  config,                 // malformed model definition or CLI configuration
  io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::grid_mismatch: return "grid_mismatch";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::outside_W: return "outside_W";
    case ErrorCode::outside_V: return "outside_V";
    case ErrorCode::outside_box: return "outside_box";
    case ErrorCode::box_not_in_WJ: return "box_not_in_WJ";
    case ErrorCode::infeasible_rank: return "infeasible_rank";
    case ErrorCode::grid_too_coarse: return "grid_too_coarse";
    case ErrorCode::no_convergence: return "no_convergence";
    case ErrorCode::overlap_no_convergence: return "overlap_no_convergence";
    case ErrorCode::no_chart_for_stratum: return "no_chart_for_stratum";
    case ErrorCode::gradient_check_failed: return "gradient_check_failed";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace sdde
