#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "pso_escape/bounds.hpp"
#include "pso_escape/chains.hpp"
#include "pso_escape/checks.hpp"
#include "pso_escape/error.hpp"
#include "pso_escape/kernel.hpp"

using namespace pso_escape;

namespace {

const SwarmParams kExample{1.0, 2.0, 2.0, 0.0, 20.0, 3.0, 4.0};
const SwarmParams kWide{1.0, 2.0, 2.0, 0.0, 9.0, 0.5, 2.0};  // d = 1.5

bool has_condition(const FeasibilityReport& r, const std::string& name) {
  for (const auto& f : r.failures)
    if (f.condition == name) return true;
  return false;
}

}  // namespace

TEST(PositionCover, Examples) {
  const auto upper = position_cover(5, 6, kExample, 0.25);
  EXPECT_DOUBLE_EQ(upper.lo, 5.5);
  EXPECT_DOUBLE_EQ(upper.hi, 7.0);
  const auto lower = position_cover(5, 3, kExample, 0.25);
  EXPECT_DOUBLE_EQ(lower.lo, 1.0);
  EXPECT_DOUBLE_EQ(lower.hi, 1.5);
  const auto still = position_cover(6, 6, kExample, 0.25);
  EXPECT_DOUBLE_EQ(still.hi, 6.0);
  EXPECT_DOUBLE_EQ(still.lo, 6.0 - 2.0 * 0.75);
}

TEST(VelocityCover, Examples) {
  EXPECT_EQ(velocity_cover(1.0, kExample), (Interval{0.0, 1.0}));
  SwarmParams same = kExample;
  same.gb = same.pb;
  EXPECT_EQ(velocity_cover(1.0, same), (Interval{1.0, 1.0}));
}

TEST(VelocityCover, CarriesMassAtUpperBound) {
  RandomStream rng(21, 0);
  for (int i = 0; i < 1000; ++i) {
    const SwarmParams p = random_params(rng);
    const double v = rng.uniform(-p.width(), p.width());
    const auto c = velocity_cover(v, p);
    EXPECT_GT(interval_prob({p.ub, v}, p, c.lo, c.hi), 0.0);
  }
}

TEST(InertiaChain, DirectRunFirstBand) {
  const auto c = build_inertia_chain({1.7, 0.5}, kWide);
  EXPECT_EQ(c.tag, "inertia");
  ASSERT_EQ(c.segments.size(), 1u);
  const double delta = 1.953125e-3;  // min{0.75*1.5/4, 1.5^2/(128*9)}
  EXPECT_DOUBLE_EQ(c.intervals[0].hi, 2.2);
  EXPECT_NEAR(c.intervals[0].width(), delta, 1e-15);
  EXPECT_EQ(c.terminal, ChainTerminal::upper_bound);
  EXPECT_GE(c.intervals.back().lo, kWide.ub);
  EXPECT_TRUE(verify_chain(c, kWide).feasible);
}

TEST(InertiaChain, AcceleratingRunFirstBand) {
  const auto c = build_inertia_chain({1.0, 0.5}, kWide);
  ASSERT_GE(c.segments.size(), 2u);
  EXPECT_EQ(c.segments[0].terminal, ChainTerminal::midpoint);
  EXPECT_DOUBLE_EQ(c.intervals[0].lo, 1.5);
  EXPECT_DOUBLE_EQ(c.intervals[0].width(), 0.09375);
  EXPECT_TRUE(verify_chain(c, kWide).feasible);
}

TEST(InertiaChain, Preconditions) {
  EXPECT_THROW(build_inertia_chain({1.0, 0.3}, kWide), PreconditionError);  // below d/4
  SwarmParams p = kWide;
  p.omega = 0.9;
  EXPECT_THROW(build_inertia_chain({1.0, 0.5}, p), NotApplicableError);
  p = kWide;
  p.gb = p.pb;
  EXPECT_THROW(build_inertia_chain({1.0, 0.5}, p), DegenerateError);
}

TEST(InertiaChain, BandGapsExceedEighthOfWidth) {
  RandomStream rng(31, 0);
  for (std::size_t i = 0; i < 2000; ++i) {
    SwarmParams p;
    std::int64_t cap = 0;
    const auto c = random_chain(ChainStep::inertia, 31, i, p, cap);
    const double d = min_support_width(p);
    for (const auto& s : c.segments) {
      if (s.terminal != ChainTerminal::upper_bound) continue;
      for (std::size_t k = s.begin; k + 1 < s.end; ++k)
        ASSERT_GT(c.intervals[k + 1].lo - c.intervals[k].hi, d / 8.0);
    }
  }
}

TEST(TurnaroundChain, ShortVelocityNeedsTwoBands) {
  const auto c = build_turnaround_chain({20.0, 1.0}, kExample);
  ASSERT_EQ(c.intervals.size(), 3u);
  EXPECT_EQ(c.intervals[0], (Interval{0.5, 0.75}));
  EXPECT_EQ(c.intervals[1], (Interval{0.0, 0.25}));
  EXPECT_EQ(c.intervals[2], (Interval{-0.05, -0.025}));
  EXPECT_TRUE(verify_chain(c, kExample).feasible);
}

TEST(TurnaroundChain, SmallVelocityGoesStraightToWindow) {
  const auto c = build_turnaround_chain({20.0, 0.9}, kExample);
  ASSERT_EQ(c.intervals.size(), 1u);
  EXPECT_TRUE(verify_chain(c, kExample).feasible);
}

TEST(TurnaroundChain, LargerVelocity) {
  const auto c = build_turnaround_chain({20.0, 3.0}, kExample);
  ASSERT_EQ(c.intervals.size(), 6u);  // five shrinking bands and the window
  EXPECT_NEAR(c.intervals[0].lo, 2.4, 1e-15);
  EXPECT_NEAR(c.intervals[0].hi, 2.7, 1e-15);
  for (std::size_t t = 0; t + 2 < c.intervals.size(); ++t)
    EXPECT_LE(c.intervals[t].hi - c.intervals[t + 1].lo, 1.0);
  EXPECT_TRUE(verify_chain(c, kExample).feasible);
}

TEST(TurnaroundChain, Preconditions) {
  EXPECT_THROW(build_turnaround_chain({19.0, 1.0}, kExample), PreconditionError);
  EXPECT_THROW(build_turnaround_chain({20.0, -1.0}, kExample), PreconditionError);
}

TEST(TurnaroundChain, DominatesClosedForm) {
  for (std::size_t i = 0; i < 2000; ++i) {
    SwarmParams p;
    std::int64_t cap = 0;
    const auto c = random_chain(ChainStep::turnaround, 41, i, p, cap);
    ASSERT_GE(chain_log_prob(c, p), turnaround_bound(p, {}).log_prob);
  }
}

TEST(DescentChain, DirectEntryNearUpperBound) {
  const GoalRegion goal{19.0, 19.8};
  const auto w = goal_entry_window(kExample, goal);
  EXPECT_NEAR(w.min_fraction, 0.2, 1e-12);
  EXPECT_EQ(w.max_fraction, 0.5);
  const double v = -0.3;
  const auto c = build_descent_chain(20.0, {20.0 + v, v}, kExample, goal);
  EXPECT_EQ(c.tag, "descent-direct");
  EXPECT_TRUE(c.intervals.empty());
  EXPECT_EQ(c.terminal, ChainTerminal::goal);
  EXPECT_TRUE(verify_chain(c, kExample).feasible);
  // Inside the default window but short of the goal.
  EXPECT_THROW(build_descent_chain(20.0, {19.97, -0.03}, kExample, goal), PreconditionError);
}

TEST(DescentChain, NearGoalStepCount) {
  const GoalRegion goal{10.0, 10.5};
  const auto c = build_descent_chain(20.0, {19.97, -0.03}, kExample, goal);
  EXPECT_EQ(c.tag, "descent-near");
  EXPECT_EQ(c.intervals.size(), 314u);  // floor(9.5 / 0.03) - 2
  EXPECT_EQ(c.intervals.back().hi, 10.5);
  EXPECT_TRUE(verify_chain(c, kExample).feasible);
}

TEST(DescentChain, FarGoalBrakes) {
  const GoalRegion goal{1.0, 2.0};
  const auto c = build_descent_chain(20.0, {19.96, -0.04}, kExample, goal);
  EXPECT_EQ(c.tag, "descent-far");
  ASSERT_EQ(c.segments.size(), 2u);
  EXPECT_EQ(c.segments[0].terminal, ChainTerminal::descent_handoff);
  EXPECT_TRUE(goal.contains(c.intervals.back().lo));
  EXPECT_TRUE(goal.contains(c.intervals.back().hi));
  EXPECT_TRUE(verify_chain(c, kExample).feasible);
}

TEST(DescentChain, Preconditions) {
  const GoalRegion goal{1.0, 2.0};
  EXPECT_THROW(build_descent_chain(20.0, {19.9, -0.1}, kExample, goal), PreconditionError);
  EXPECT_THROW(build_descent_chain(19.0, {18.97, -0.03}, kExample, goal), PreconditionError);
  EXPECT_THROW(build_descent_chain(20.0, {19.0, -0.03}, kExample, goal), PreconditionError);
}

TEST(DescentChain, FarCaseConstants) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < 5000; ++i) {
    SwarmParams p;
    std::int64_t cap = 0;
    const auto c = random_chain(ChainStep::descent, 51, i, p, cap);
    if (c.tag != "descent-far") continue;
    ++seen;
    const double d = min_support_width(p);
    const auto& run = c.segments[0];
    ASSERT_GE(run.end - run.begin, 3u);
    ASSERT_LE(c.intervals[0].width(), d / 60.0);
    ASSERT_LE(-c.segments[1].origin.v, 8.0 / 3.0 * -c.origin.v);
  }
  EXPECT_GT(seen, 100u);
}

TEST(Verify, OverlappingBandsFailOrdering) {
  auto c = build_inertia_chain({1.7, 0.5}, kWide);
  c.intervals[2] = c.intervals[1];
  const auto r = verify_chain(c, kWide);
  EXPECT_FALSE(r.feasible);
  EXPECT_TRUE(has_condition(r, "monotonic-ordering"));
}

TEST(Verify, DoubledBandsFailReachability) {
  const auto c = build_inertia_chain({1.7, 0.5}, kWide);
  const auto r = verify_chain(widen_intervals(c, 2.0), kWide);
  EXPECT_FALSE(r.feasible);
  ASSERT_TRUE(has_condition(r, "reachability"));
  EXPECT_LT(r.worst_slack, 0.0);
}

TEST(Verify, MissingSegmentsIsStructural) {
  ChainSpec c;
  c.intervals = {{0, 1}};
  const auto r = verify_chain(c, kExample);
  EXPECT_FALSE(r.feasible);
  EXPECT_TRUE(has_condition(r, "structure"));
}

TEST(Verify, FeasibleIffNoFailures) {
  const auto a = verify_chain(build_inertia_chain({1.7, 0.5}, kWide), kWide);
  EXPECT_TRUE(a.feasible);
  EXPECT_TRUE(a.failures.empty());
  EXPECT_GE(a.worst_slack, -1e-9 * kWide.width());
}

TEST(ChainLogProb, ProductOfFloors) {
  ChainSpec one;
  one.intervals = {{0.0, 0.5}};
  EXPECT_DOUBLE_EQ(chain_log_prob(one, kExample), std::log(oracle::mass_floor(kExample, 0.5)));
  ChainSpec three;
  three.intervals = {{0.0, 0.5}, {1.0, 1.5}, {2.0, 2.5}};
  EXPECT_NEAR(chain_log_prob(three, kExample), 3.0 * std::log(oracle::mass_floor(kExample, 0.5)), 1e-12);
  ChainSpec flat;
  flat.intervals = {{1.0, 1.0}};
  EXPECT_EQ(chain_log_prob(flat, kExample), -std::numeric_limits<double>::infinity());
}

TEST(ChainFuzz, AllStepsFeasibleWithinCaps) {
  const auto stats = fuzz_chains({2000, 99, 1.0});
  for (const auto& s : stats) {
    EXPECT_EQ(s.feasible, s.cases) << to_string(s.step);
    EXPECT_EQ(s.over_cap, 0u) << to_string(s.step);
    EXPECT_EQ(s.errors, 0u) << to_string(s.step);
    EXPECT_LE(s.max_length_ratio, 1.0);
  }
}

TEST(ChainFuzz, WideningIsDetected) {
  const auto stats = fuzz_chains({500, 99, 2.0});
  for (const auto& s : stats) EXPECT_LT(s.feasible, s.cases) << to_string(s.step);
}

TEST(ChainFuzz, DeterministicPerSeed) {
  const auto a = fuzz_chains({300, 5, 1.0});
  const auto b = fuzz_chains({300, 5, 1.0}, {3});
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].worst_slack, b[i].worst_slack);
    EXPECT_EQ(a[i].max_length_ratio, b[i].max_length_ratio);
  }
}

TEST(ChainJson, RoundTrip) {
  const auto c = build_descent_chain(20.0, {19.96, -0.04}, kExample, {1.0, 2.0});
  const auto back = chain_from_json(chain_to_json(c));
  EXPECT_EQ(back.intervals, c.intervals);
  EXPECT_EQ(back.tag, c.tag);
  EXPECT_EQ(back.terminal, c.terminal);
  ASSERT_EQ(back.segments.size(), c.segments.size());
  for (std::size_t i = 0; i < c.segments.size(); ++i) {
    EXPECT_EQ(back.segments[i].begin, c.segments[i].begin);
    EXPECT_EQ(back.segments[i].origin, c.segments[i].origin);
    EXPECT_EQ(back.segments[i].target.lo, c.segments[i].target.lo);
  }
  EXPECT_TRUE(verify_chain(back, kExample).feasible);
  EXPECT_THROW(chain_from_json("{not json"), ValidationError);
}

// Sample one step from a state inside band t and count landings in band t + 1.
// The exact mass must clear the floor, and the sampled frequency must agree with it.
TEST(ChainMonteCarlo, StepFrequenciesClearFloor) {
  const int draws = 1000;
  int checked = 0;
  for (std::size_t k = 0; k < 100; ++k) {
    SwarmParams p;
    std::int64_t cap = 0;
    const auto step = static_cast<ChainStep>(k % 3);
    const auto c = random_chain(step, 61, k, p, cap);
    RandomStream rng(61, 1000 + k);
    for (const auto& seg : c.segments) {
      const std::size_t clamped = seg.terminal == ChainTerminal::upper_bound ? 1 : 0;
      if (seg.end - seg.begin <= clamped) continue;
      const std::size_t span = seg.end - seg.begin - clamped;
      const std::size_t i = seg.begin + std::min(span - 1, static_cast<std::size_t>(rng() * span));
      auto inside = [&](std::size_t j) { return rng.uniform(c.intervals[j].lo, c.intervals[j].hi); };
      AgentState s;
      if (seg.kind == ChainKind::velocity) {
        s = {p.ub, i == seg.begin ? seg.origin.v : inside(i - 1)};
      } else if (i == seg.begin) {
        s = seg.origin;
      } else {
        const double x_prev = i == seg.begin + 1 ? seg.origin.x : inside(i - 2);
        const double x = inside(i - 1);
        s = {x, x - x_prev};
      }
      const Interval next = c.intervals[i];
      const double shift = seg.kind == ChainKind::velocity ? 0.0 : s.x;
      const double lo = next.lo - shift, hi = next.hi - shift;
      const double exact = interval_prob(s, p, lo, hi);
      const double floor = oracle::mass_floor(p, next.width());
      ASSERT_GE(exact, floor * (1.0 - 1e-9)) << to_string(step) << " band " << i;
      int hits = 0;
      for (int n = 0; n < draws; ++n) {
        const double v = sample_step(s, p, rng).v;
        hits += v >= lo && v <= hi;
      }
      const double freq = double(hits) / draws;
      const double sigma = std::sqrt(exact * (1.0 - exact) / draws);
      ASSERT_NEAR(freq, exact, 6.0 * sigma + 2.0 / draws);
      ++checked;
    }
  }
  EXPECT_GE(checked, 80);
}
