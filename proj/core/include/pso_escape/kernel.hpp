#pragma once

#include <array>
#include <optional>

#include "pso_escape/model.hpp"

namespace pso_escape {

/// Distribution of the next velocity given the current state: a trapezoid
/// with knots k[0] <= k[1] <= k[2] <= k[3] and plateau height `height`, or a
/// point mass when both attraction terms vanish.
struct TrapezoidDensity {
  std::array<double, 4> knots{};
  double height = 0.0;
  std::optional<double> point_mass;

  bool degenerate() const noexcept { return point_mass.has_value(); }
  double lower() const noexcept { return degenerate() ? *point_mass : knots[0]; }
  double upper() const noexcept { return degenerate() ? *point_mass : knots[3]; }

  /// Left-continuous at the knots. Throws DegenerateError for a point mass.
  double pdf(double v) const;
  double cdf(double v) const noexcept;
  /// Mass of [a, b]; throws std::invalid_argument when a > b. Infinite ends are allowed.
  double probability(double a, double b) const;
  /// Smallest v with cdf(v) >= p.
  double quantile(double p) const;
};

TrapezoidDensity velocity_support(const AgentState& state, const SwarmParams& params);

double density(const AgentState& state, const SwarmParams& params, double v);
double cdf(const AgentState& state, const SwarmParams& params, double v);
double interval_prob(const AgentState& state, const SwarmParams& params, double a, double b);

/// min{c1, c2, 1} (gb - pb): the velocity support is never narrower than this.
double min_support_width(const SwarmParams& params) noexcept;

/// Lower bound on the mass any width-x subinterval of the velocity support carries.
double mass_floor(const SwarmParams& params, double x);

/// (c1 + c2 + 1)(ub - lb): cap on the velocity of an agent started with |v| <= ub - lb.
double velocity_cap(const SwarmParams& params) noexcept;

/// Lower bound on P{|v'| >= d/4} for d = min_support_width; throws DegenerateError when pb == gb.
double kick_probability_floor(const SwarmParams& params);

}  // namespace pso_escape
