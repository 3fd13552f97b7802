#include "pso_escape/chains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pso_escape/error.hpp"
#include "pso_escape/kernel.hpp"

namespace pso_escape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double require_chain_regime(const SwarmParams& p) {
  p.validate();
  if (p.omega != 1.0) throw NotApplicableError("bound not applicable: chains require omega == 1");
  const double d = min_support_width(p);
  if (!(d > 1e-12 * p.width())) throw DegenerateError("pb == gb: minimum support width is zero");
  return d;
}

double midpoint(const Interval& i) { return 0.5 * (i.lo + i.hi); }

// Upper-side branch: x_curr above the split threshold, so the pb pull dominates.
Interval cover_branch(double x_prev, double x_curr, const SwarmParams& p, double split,
                      bool upper_side) {
  const double base = 2.0 * x_curr - x_prev;
  const double gap = p.gb - p.pb;
  if (upper_side) return {base - p.c1 * (1.0 - split) * gap, base};
  return {base, base + p.c2 * split * gap};
}

// Cap on builder loops; far above any count the inertia and descent legs can need.
std::size_t loop_cap(const SwarmParams& p, double d) {
  return static_cast<std::size_t>(std::ceil(200.0 * p.width() / d)) + 100;
}

void append_rightward_run(ChainSpec& chain, double prev_x, const AgentState& from, double split,
                          const SwarmParams& p, double d) {
  const double w = p.width();
  const double delta = std::min((1.0 - split) * d / 4.0, d * d / (128.0 * w));
  ChainSegment seg;
  seg.kind = ChainKind::position;
  seg.motion = Motion::rightward;
  seg.split = split;
  seg.prev_x = prev_x;
  seg.origin = from;
  seg.begin = chain.intervals.size();
  seg.terminal = ChainTerminal::upper_bound;
  seg.target = {p.ub, kInf};
  const std::size_t cap = loop_cap(p, d);
  for (std::size_t t = 1;; ++t) {
    const double tt = static_cast<double>(t);
    const double a = from.x + tt * from.v - tt * (tt - 1.0) * delta;
    chain.intervals.push_back({a - delta, a});
    if (a - delta >= p.ub) break;
    if (t > cap) throw std::logic_error("inertia run does not reach the upper bound");
  }
  seg.end = chain.intervals.size();
  chain.segments.push_back(seg);
}

void finish(ChainSpec& chain) {
  chain.kind = chain.segments.front().kind;
  chain.terminal = chain.segments.back().terminal;
}

}  // namespace

Interval position_cover(double x_prev, double x_curr, const SwarmParams& p, double split) {
  const double threshold = split * p.pb + (1.0 - split) * p.gb;
  return cover_branch(x_prev, x_curr, p, split, x_curr > threshold);
}

Interval velocity_cover(double v_curr, const SwarmParams& p) {
  return {v_curr - min_support_width(p), v_curr};
}

OscillationWindow goal_entry_window(const SwarmParams& p, const GoalRegion& goal) {
  const double d = min_support_width(p);
  return {(p.ub - goal.upper) / d, std::min((p.ub - goal.lower) / d, 0.5)};
}

ChainSpec build_inertia_chain(const AgentState& origin, const SwarmParams& p) {
  const double d = require_chain_regime(p);
  check_state(origin, p);
  if (!(origin.v >= d / 4.0))
    throw PreconditionError("inertia chain needs an initial velocity of at least d/4");

  ChainSpec chain;
  chain.origin = origin;
  chain.tag = "inertia";
  const double threshold = 0.25 * p.pb + 0.75 * p.gb;
  if (origin.x >= threshold) {
    append_rightward_run(chain, origin.x - origin.v, origin, 0.25, p, d);
    finish(chain);
    return chain;
  }

  // Accelerate past the pb/gb midpoint first, then coast to ub.
  const double delta = d / 16.0;
  ChainSegment seg;
  seg.kind = ChainKind::position;
  seg.motion = Motion::rightward;
  seg.split = 0.25;
  seg.prev_x = origin.x - origin.v;
  seg.origin = origin;
  seg.begin = 0;
  seg.terminal = ChainTerminal::midpoint;
  seg.target = {0.5 * (p.pb + p.gb), kInf};
  const std::size_t cap = loop_cap(p, d);
  for (std::size_t t = 1;; ++t) {
    const double tt = static_cast<double>(t);
    const double b = origin.x + tt * origin.v + tt * (tt - 1.0) * delta;
    chain.intervals.push_back({b, b + delta});
    if (b + delta >= threshold) break;
    if (t > cap) throw std::logic_error("inertia chain does not reach the midpoint");
  }
  seg.end = chain.intervals.size();
  chain.segments.push_back(seg);

  const Interval last = chain.intervals.back();
  const Interval before =
      seg.end >= 2 ? chain.intervals[seg.end - 2] : Interval{origin.x, origin.x};
  const double x_h = midpoint(last);
  const double prev_h = midpoint(before);
  const double v_h = x_h - prev_h;
  if (x_h >= p.ub) {
    ChainSegment at_bound;
    at_bound.kind = ChainKind::position;
    at_bound.motion = Motion::rightward;
    at_bound.split = 0.5;
    at_bound.prev_x = prev_h;
    at_bound.origin = {p.ub, v_h};
    at_bound.begin = at_bound.end = chain.intervals.size();
    at_bound.terminal = ChainTerminal::upper_bound;
    at_bound.target = {p.ub, kInf};
    chain.segments.push_back(at_bound);
  } else {
    append_rightward_run(chain, prev_h, {x_h, v_h}, 0.5, p, d);
  }
  finish(chain);
  return chain;
}

ChainSpec build_turnaround_chain(const AgentState& origin, const SwarmParams& p,
                                 const OscillationWindow& window) {
  const double d = require_chain_regime(p);
  window.validate();
  if (std::abs(origin.x - p.ub) > 1e-12 || !(origin.v > 0.0))
    throw PreconditionError("turnaround chain needs x == ub and v > 0");

  ChainSpec chain;
  chain.origin = origin;
  chain.tag = "turnaround";
  ChainSegment seg;
  seg.kind = ChainKind::velocity;
  seg.motion = Motion::leftward;
  seg.split = 0.0;
  seg.prev_x = p.ub;
  seg.origin = origin;
  seg.begin = 0;
  seg.terminal = ChainTerminal::turnaround_window;
  seg.target = {-window.max_fraction * d, -window.min_fraction * d};

  const double v0 = origin.v;
  // With K = ceil(3v/2d) each shrink is at most 2d/3, so consecutive bands
  // stay within the d-wide cover; below (1 - max_fraction) d the window is hit directly.
  std::int64_t steps = 0;
  if (v0 > (1.0 - window.max_fraction) * d) steps = static_cast<std::int64_t>(std::ceil(1.5 * v0 / d));
  const double shrink = steps > 0 ? v0 / static_cast<double>(steps) : 0.0;
  for (std::int64_t t = 1; t <= steps; ++t) {
    const double tt = static_cast<double>(t);
    chain.intervals.push_back({v0 - tt * shrink, v0 - (tt - 0.5) * shrink});
  }
  chain.intervals.push_back(seg.target);
  seg.end = chain.intervals.size();
  chain.segments.push_back(seg);
  finish(chain);
  return chain;
}

ChainSpec build_descent_chain(double prev_x, const AgentState& origin, const SwarmParams& p,
                              const GoalRegion& goal, const OscillationWindow& window) {
  const double d = require_chain_regime(p);
  goal.validate(p);
  window.validate();
  check_state(origin, p);

  ChainSpec chain;
  chain.origin = origin;
  chain.tag = "descent";
  const double gap = p.ub - goal.upper;
  const Interval goal_span{goal.lower, goal.upper};

  if (gap <= d / 3.0) {
    if (!in_turnaround_window(prev_x, origin, p, goal_entry_window(p, goal)))
      throw PreconditionError("goal near ub: origin must lie in the goal entry window");
    ChainSegment seg;
    seg.kind = ChainKind::position;
    seg.motion = Motion::leftward;
    seg.split = 0.75;
    seg.prev_x = prev_x;
    seg.origin = origin;
    seg.terminal = ChainTerminal::goal;
    seg.target = goal_span;
    chain.segments.push_back(seg);
    chain.tag = "descent-direct";
    finish(chain);
    return chain;
  }

  if (!in_turnaround_window(prev_x, origin, p, window))
    throw PreconditionError("descent chain needs an origin in the oscillation window");
  if (std::abs(origin.x - clamp_position(prev_x + origin.v, p.lb, p.ub)) > 1e-9 * p.width())
    throw PreconditionError("origin position does not follow from prev_x and v");

  const double speed = -origin.v;
  ChainSegment seg;
  seg.kind = ChainKind::position;
  seg.motion = Motion::leftward;
  seg.split = 0.75;
  seg.prev_x = prev_x;
  seg.origin = origin;
  seg.begin = 0;

  if (goal.upper >= 0.75 * p.pb + 0.25 * p.gb) {
    // Accelerate leftwards so the run ends exactly at the goal's upper edge.
    const std::int64_t steps = static_cast<std::int64_t>(std::floor(gap / speed)) - 2;
    if (steps < 2) throw PreconditionError("velocity too large for this goal geometry");
    const double n = static_cast<double>(steps);
    const double delta = (gap - (n + 1.0) * speed) / (n * (n - 1.0));
    for (std::int64_t t = 1; t <= steps; ++t) {
      const double tt = static_cast<double>(t);
      const double a = t == steps ? goal.upper : p.ub - (tt + 1.0) * speed - tt * (tt - 1.0) * delta;
      chain.intervals.push_back({t == steps ? std::max(a - delta, goal.lower) : a - delta, a});
    }
    seg.end = chain.intervals.size();
    seg.terminal = ChainTerminal::goal;
    seg.target = goal_span;
    chain.segments.push_back(seg);
    chain.tag = "descent-near";
    finish(chain);
    return chain;
  }

  // Goal below the pb side: run down to pb/4 + 3gb/4, then brake into the goal.
  const double handoff = 0.25 * p.pb + 0.75 * p.gb;
  const double span = p.ub - handoff;
  const std::int64_t steps = static_cast<std::int64_t>(std::floor(span / speed)) - 2;
  if (steps < 2) throw PreconditionError("velocity too large for this goal geometry");
  const double n = static_cast<double>(steps);
  const double delta = (span - (n + 1.0) * speed) / (n * (n - 1.0));
  for (std::int64_t t = 1; t <= steps; ++t) {
    const double tt = static_cast<double>(t);
    const double b = t == steps ? handoff : p.ub - (tt + 1.0) * speed - tt * (tt - 1.0) * delta;
    chain.intervals.push_back({b - delta, b});
  }
  seg.end = chain.intervals.size();
  seg.terminal = ChainTerminal::descent_handoff;
  seg.target = {-kInf, handoff};
  chain.segments.push_back(seg);

  const double x_h = midpoint(chain.intervals[seg.end - 1]);
  const double prev_h = midpoint(chain.intervals[seg.end - 2]);
  const double v_h = x_h - prev_h;
  const double speed_h = -v_h;
  const std::int64_t brake_steps =
      static_cast<std::int64_t>(std::floor((x_h - goal.upper) / speed_h)) + 1;
  if (brake_steps < 2) throw PreconditionError("velocity too large for this goal geometry");
  const double m = static_cast<double>(brake_steps);
  // Chosen so the last band's upper end is exactly the goal's upper edge.
  const double brake = (goal.upper - x_h + m * speed_h) / (m * (m - 1.0) + 1.0);

  ChainSegment tail;
  tail.kind = ChainKind::position;
  tail.motion = Motion::leftward;
  tail.split = 0.25;
  tail.prev_x = prev_h;
  tail.origin = {x_h, v_h};
  tail.begin = chain.intervals.size();
  for (std::int64_t t = 1; t <= brake_steps; ++t) {
    const double tt = static_cast<double>(t);
    const double c = x_h - tt * speed_h + tt * (tt - 1.0) * brake;
    if (t == brake_steps)
      chain.intervals.push_back({std::max(c, goal.lower), goal.upper});
    else
      chain.intervals.push_back({c, c + brake});
  }
  tail.end = chain.intervals.size();
  tail.terminal = ChainTerminal::goal;
  tail.target = goal_span;
  chain.segments.push_back(tail);
  chain.tag = "descent-far";
  finish(chain);
  return chain;
}

namespace {

class Verifier {
 public:
  Verifier(const SwarmParams& p, FeasibilityReport& report)
      : p_(p), report_(report), tol_(1e-9 * p.width()), d_(min_support_width(p)) {}

  void check(double slack, const char* condition, std::size_t index) {
    if (std::isnan(slack)) slack = -kInf;
    report_.worst_slack = std::min(report_.worst_slack, slack);
    if (slack < -tol_) report_.failures.push_back({condition, index, slack});
  }

  void contains(const Interval& outer, const Interval& inner, const char* condition,
                std::size_t index) {
    check(inner.lo - outer.lo, condition, index);
    check(outer.hi - inner.hi, condition, index);
  }

  void position_segment(const ChainSpec& chain, const ChainSegment& seg) {
    const auto& iv = chain.intervals;
    const double landed = clamp_position(seg.prev_x + seg.origin.v, p_.lb, p_.ub);
    check(-std::abs(landed - seg.origin.x), "origin", seg.begin);
    if (seg.begin == seg.end) {
      contains(seg.target, {seg.origin.x, seg.origin.x}, "terminal", seg.begin);
      if (seg.terminal == ChainTerminal::upper_bound) check(seg.origin.v, "terminal", seg.begin);
      return;
    }
    const double threshold = seg.split * p_.pb + (1.0 - seg.split) * p_.gb;
    Interval prev{seg.prev_x, seg.prev_x};
    Interval curr{seg.origin.x, seg.origin.x};
    for (std::size_t i = seg.begin; i < seg.end; ++i) {
      const Interval& next = iv[i];
      if (seg.motion == Motion::rightward)
        check(next.lo - curr.hi, "monotonic-ordering", i);
      else
        check(curr.lo - next.hi, "monotonic-ordering", i);
      reach(prev, curr, next, seg.split, threshold, i);
      const bool terminal = i + 1 == seg.end;
      if (!terminal) {
        check(next.lo - p_.lb, "domain", i);
        const bool may_overshoot =
            seg.terminal == ChainTerminal::upper_bound && i + 2 == seg.end;
        if (!may_overshoot) check(p_.ub - next.hi, "domain", i);
      }
      prev = curr;
      curr = next;
    }
    contains(seg.target, curr, "terminal", seg.end - 1);
    if (seg.terminal == ChainTerminal::midpoint) check(curr.lo - prev.hi - d_ / 4.0, "handoff", seg.end - 1);
  }

  void velocity_segment(const ChainSpec& chain, const ChainSegment& seg) {
    check(-std::abs(seg.origin.x - p_.ub), "origin", seg.begin);
    Interval curr{seg.origin.v, seg.origin.v};
    for (std::size_t i = seg.begin; i < seg.end; ++i) {
      const Interval& next = chain.intervals[i];
      check(curr.lo - next.hi, "monotonic-ordering", i);
      for (double v : {curr.lo, curr.hi}) contains(velocity_cover(v, p_), next, "reachability", i);
      if (i + 1 != seg.end) check(next.lo, "domain", i);
      curr = next;
    }
    if (seg.begin == seg.end) curr = {seg.origin.v, seg.origin.v};
    contains(seg.target, curr, "terminal", seg.end == 0 ? 0 : seg.end - 1);
  }

 private:
  // The cover is affine in (x_prev, x_curr) on each side of the split
  // threshold, so containment at the corners of each side suffices.
  void reach(const Interval& prev, const Interval& curr, const Interval& next, double split,
             double threshold, std::size_t index) {
    auto corners = [&](double c_lo, double c_hi, bool upper_side) {
      for (double xp : {prev.lo, prev.hi})
        for (double xc : {c_lo, c_hi})
          contains(cover_branch(xp, xc, p_, split, upper_side), next, "reachability", index);
    };
    if (curr.lo > threshold) {
      corners(curr.lo, curr.hi, true);
    } else if (curr.hi <= threshold) {
      corners(curr.lo, curr.hi, false);
    } else {
      corners(curr.lo, threshold, false);
      corners(threshold, curr.hi, true);
    }
  }

  const SwarmParams& p_;
  FeasibilityReport& report_;
  double tol_;
  double d_;
};

}  // namespace

FeasibilityReport verify_chain(const ChainSpec& chain, const SwarmParams& p) {
  FeasibilityReport report;
  Verifier verifier(p, report);
  for (std::size_t i = 0; i < chain.intervals.size(); ++i)
    verifier.check(chain.intervals[i].hi - chain.intervals[i].lo, "well-formed", i);

  std::size_t expected = 0;
  for (std::size_t k = 0; k < chain.segments.size(); ++k) {
    const ChainSegment& seg = chain.segments[k];
    if (seg.begin != expected || seg.end < seg.begin || seg.end > chain.intervals.size()) {
      report.failures.push_back({"structure", seg.begin, -kInf});
      report.worst_slack = -kInf;
      break;
    }
    expected = seg.end;
    if (k > 0) {
      // The new segment starts from a point inside the previous segment's last band.
      const ChainSegment& before = chain.segments[k - 1];
      const Interval last = before.end > before.begin ? chain.intervals[before.end - 1]
                                                      : Interval{before.origin.x, before.origin.x};
      const Interval second = before.end - before.begin >= 2 ? chain.intervals[before.end - 2]
                              : before.end > before.begin ? Interval{before.origin.x, before.origin.x}
                                                          : Interval{before.prev_x, before.prev_x};
      const double landed = seg.prev_x + seg.origin.v;
      verifier.contains(last, {landed, landed}, "handoff", seg.begin);
      verifier.contains(second, {seg.prev_x, seg.prev_x}, "handoff", seg.begin);
      verifier.check(-std::abs(clamp_position(landed, p.lb, p.ub) - seg.origin.x), "handoff", seg.begin);
    }
    if (seg.kind == ChainKind::position)
      verifier.position_segment(chain, seg);
    else
      verifier.velocity_segment(chain, seg);
  }
  if (chain.segments.empty() || expected != chain.intervals.size()) {
    report.failures.push_back({"structure", expected, -kInf});
    report.worst_slack = -kInf;
  }
  report.feasible = report.failures.empty();
  report.log_prob_lower_bound = chain_log_prob(chain, p);
  return report;
}

double chain_log_prob(const ChainSpec& chain, const SwarmParams& p) {
  double total = 0.0;
  for (const Interval& i : chain.intervals) {
    const double w = i.width();
    total += w > 0.0 ? std::log(mass_floor(p, w)) : -kInf;
  }
  return total;
}

ChainSpec widen_intervals(const ChainSpec& chain, double factor) {
  ChainSpec out = chain;
  for (const ChainSegment& seg : out.segments) {
    for (std::size_t i = seg.begin; i < seg.end; ++i) {
      Interval& iv = out.intervals[i];
      const double w = iv.width() * factor;
      if (seg.motion == Motion::rightward)
        iv.lo = iv.hi - w;
      else
        iv.hi = iv.lo + w;
    }
  }
  return out;
}

std::string_view to_string(ChainKind kind) noexcept {
  return kind == ChainKind::position ? "position-chain" : "velocity-chain";
}

std::string_view to_string(ChainTerminal terminal) noexcept {
  switch (terminal) {
    case ChainTerminal::upper_bound: return "upper-bound";
    case ChainTerminal::midpoint: return "midpoint";
    case ChainTerminal::turnaround_window: return "turnaround-window";
    case ChainTerminal::goal: return "goal";
    case ChainTerminal::descent_handoff: return "descent-handoff";
  }
  return "unknown";
}

}  // namespace pso_escape
