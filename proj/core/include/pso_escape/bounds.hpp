#pragma once

#include <cstdint>

#include "pso_escape/model.hpp"

namespace pso_escape {

/// Target band for the reversal leg: velocities in (-max_fraction d, -min_fraction d)
/// right after leaving the upper bound, d = min_support_width.
struct OscillationWindow {
  double min_fraction = 1.0 / 40.0;
  double max_fraction = 1.0 / 20.0;

  /// Throws ValidationError unless 0 < min_fraction < max_fraction <= 1/2.
  void validate() const;
};

struct LegBound {
  std::int64_t steps = 0;
  double log_prob = 0.0;  // natural log
};

struct EscapeBounds {
  LegBound inertia;     // from an adequate initial velocity to the upper bound
  LegBound turnaround;  // from the upper bound to the reversal window
  LegBound descent;     // from the reversal window into the goal
  LegBound total;
};

LegBound inertia_bound(const SwarmParams& params);
/// Accepts min_fraction == max_fraction, which yields log_prob = -inf.
LegBound turnaround_bound(const SwarmParams& params, const OscillationWindow& window);
LegBound descent_bound(const SwarmParams& params, const GoalRegion& goal);

/// Throws NotApplicableError unless omega == 1, DegenerateError when pb == gb.
EscapeBounds escape_bounds(const SwarmParams& params, const GoalRegion& goal);

/// log(1 - (1 - p)^n) for p = exp(log_p), evaluated without leaving the log domain.
double repeated_escape_log_prob(double log_p, std::uint64_t n);
double repeated_escape_log_prob(const EscapeBounds& bounds, std::uint64_t n);

/// True when the agent just left x = ub with a velocity inside the window.
bool in_turnaround_window(double prev_x, const AgentState& state, const SwarmParams& params,
                          const OscillationWindow& window);

}  // namespace pso_escape
