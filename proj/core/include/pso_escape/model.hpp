#pragma once

#include <concepts>
#include <cstddef>
#include <optional>
#include <vector>

namespace pso_escape {

/// Frozen constants of a stagnated one-dimensional agent.
struct SwarmParams {
  double omega = 1.0;
  double c1 = 2.0;
  double c2 = 2.0;
  double lb = 0.0;
  double ub = 1.0;
  double pb = 0.0;  // personal best
  double gb = 0.0;  // global best, pb <= gb by convention

  /// Throws ValidationError unless 0 < omega <= 1, c1, c2 > 0, lb < ub and lb <= pb <= gb <= ub.
  void validate() const;
  double width() const noexcept { return ub - lb; }
};

struct AgentState {
  double x = 0.0;
  double v = 0.0;
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct GoalRegion {
  double lower = 0.0;
  double upper = 0.0;

  /// Throws ValidationError unless lb <= lower < upper <= ub.
  void validate(const SwarmParams& params) const;
  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
  double width() const noexcept { return upper - lower; }
};

struct Trajectory {
  std::vector<AgentState> states;
  std::optional<std::size_t> hit_time;
};

double clamp_position(double x_raw, double lb, double ub) noexcept;

/// One update with explicit draws. The stored velocity is the pre-clamp value.
AgentState step(const AgentState& state, const SwarmParams& params, double r1, double r2) noexcept;

template <class Source>
concept UniformSource = requires(Source& s) {
  { s() } -> std::convertible_to<double>;
};

template <UniformSource Source>
AgentState sample_step(const AgentState& state, const SwarmParams& params, Source& rng) {
  const double r1 = rng();
  const double r2 = rng();
  return step(state, params, r1, r2);
}

void check_state(const AgentState& state, const SwarmParams& params);

/// Rolls the agent forward until it enters the goal (t = 0 counts) or max_iters steps are taken.
template <UniformSource Source>
Trajectory run_trajectory(const AgentState& initial, const SwarmParams& params,
                          const GoalRegion& goal, std::size_t max_iters, Source& rng) {
  check_state(initial, params);
  Trajectory traj;
  traj.states.push_back(initial);
  AgentState s = initial;
  for (std::size_t t = 0;; ++t) {
    if (goal.contains(s.x)) {
      traj.hit_time = t;
      break;
    }
    if (t == max_iters) break;
    s = sample_step(s, params, rng);
    traj.states.push_back(s);
  }
  return traj;
}

/// Same stopping rule as run_trajectory without recording states.
template <UniformSource Source>
std::optional<std::size_t> first_hit_time(AgentState s, const SwarmParams& params,
                                          const GoalRegion& goal, std::size_t max_iters,
                                          Source& rng) {
  for (std::size_t t = 0;; ++t) {
    if (goal.contains(s.x)) return t;
    if (t == max_iters) return std::nullopt;
    s = sample_step(s, params, rng);
  }
}

}  // namespace pso_escape
