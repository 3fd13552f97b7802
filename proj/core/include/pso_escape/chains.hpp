#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "pso_escape/bounds.hpp"
#include "pso_escape/model.hpp"

namespace pso_escape {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const noexcept { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class ChainKind { position, velocity };

enum class Motion { rightward, leftward };

enum class ChainTerminal {
  upper_bound,        // x == ub with v > 0
  midpoint,           // x >= (pb + gb)/2 with v >= d/4
  turnaround_window,  // just left ub with v in the oscillation window
  goal,               // x in the goal region
  descent_handoff,    // x <= pb/4 + 3gb/4, moving left
};

/// A run of intervals reached one step after another from a single point state.
/// Position segments name the covering-set split fraction they rely on.
struct ChainSegment {
  ChainKind kind = ChainKind::position;
  Motion motion = Motion::rightward;
  double split = 0.25;
  double prev_x = 0.0;  // position one step before `origin`
  AgentState origin;
  std::size_t begin = 0;  // [begin, end) into ChainSpec::intervals
  std::size_t end = 0;
  ChainTerminal terminal = ChainTerminal::upper_bound;
  Interval target;  // region the last interval must fall in
};

struct ChainSpec {
  ChainKind kind = ChainKind::position;
  std::vector<Interval> intervals;
  AgentState origin;
  ChainTerminal terminal = ChainTerminal::upper_bound;
  std::string tag;
  std::vector<ChainSegment> segments;
};

struct ChainFailure {
  std::string condition;
  std::size_t index = 0;  // interval index within the chain
  double slack = 0.0;     // negative beyond tolerance
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<ChainFailure> failures;
  double log_prob_lower_bound = 0.0;
  double worst_slack = std::numeric_limits<double>::infinity();  // smallest signed slack seen
};

/// Where x(t+1) can land from (x(t-1), x(t)) with omega = 1, ignoring clamping.
Interval position_cover(double x_prev, double x_curr, const SwarmParams& params, double split);

/// Where v(t+1) can land from v(t) for an agent sitting at ub.
Interval velocity_cover(double v_curr, const SwarmParams& params);

/// Rightward inertia from a state with v >= d/4 up to the upper bound.
ChainSpec build_inertia_chain(const AgentState& origin, const SwarmParams& params);

/// Velocity decay at ub from v > 0 into the oscillation window.
ChainSpec build_turnaround_chain(const AgentState& origin, const SwarmParams& params,
                                 const OscillationWindow& window = {});

/// Leftward motion from the oscillation window into the goal.
ChainSpec build_descent_chain(double prev_x, const AgentState& origin, const SwarmParams& params,
                              const GoalRegion& goal, const OscillationWindow& window = {});

/// The window from which the first leftward step lands in a goal hugging ub.
OscillationWindow goal_entry_window(const SwarmParams& params, const GoalRegion& goal);

FeasibilityReport verify_chain(const ChainSpec& chain, const SwarmParams& params);

double chain_log_prob(const ChainSpec& chain, const SwarmParams& params);

/// Copy of `chain` with each interval's width scaled by `factor`, keeping the
/// end nearest to where the motion is heading fixed.
ChainSpec widen_intervals(const ChainSpec& chain, double factor);

std::string_view to_string(ChainKind kind) noexcept;
std::string_view to_string(ChainTerminal terminal) noexcept;

std::string chain_to_json(const ChainSpec& chain);
ChainSpec chain_from_json(std::string_view text);

}  // namespace pso_escape
