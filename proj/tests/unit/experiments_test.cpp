#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pso_escape/csv.hpp"
#include "pso_escape/error.hpp"
#include "pso_escape/experiments.hpp"

using namespace pso_escape;

namespace {

const SwarmParams kBox{1.0, 2.0, 2.0, 0.0, 20.0, 3.0, 4.0};
const InitialDistribution kInit{{0.0, 2.0}, {-1.0, 1.0}};

struct Scripted {
  std::vector<double> values;
  std::size_t i = 0;
  double operator()() { return values[i++ % values.size()]; }
};

}  // namespace

TEST(InitialDistribution, ValidatesAgainstBox) {
  EXPECT_NO_THROW(kInit.validate(kBox));
  EXPECT_THROW((InitialDistribution{{-1.0, 2.0}, {0.0, 0.0}}.validate(kBox)), ValidationError);
  EXPECT_THROW((InitialDistribution{{2.0, 1.0}, {0.0, 0.0}}.validate(kBox)), ValidationError);
  RandomStream rng(1, 0);
  const InitialDistribution point{{1.0, 1.0}, {0.5, 0.5}};
  EXPECT_EQ(point.sample(rng), (AgentState{1.0, 0.5}));
}

TEST(EscapeCurve, WholeBoxHitsImmediately) {
  const auto c = estimate_escape_curve(kBox, {0.0, 20.0}, kInit, 100, 10, 1);
  EXPECT_EQ(c.probs[0], 1.0);
  EXPECT_EQ(c.std_errors[0], 0.0);
}

TEST(EscapeCurve, MonotoneWithBinomialErrors) {
  const auto c = estimate_escape_curve(kBox, {19.0, 20.0}, kInit, 2000, 300, 3);
  ASSERT_EQ(c.t_values.size(), 301u);
  for (std::size_t t = 0; t < c.probs.size(); ++t) {
    EXPECT_EQ(c.t_values[t], t);
    EXPECT_GE(c.probs[t], 0.0);
    EXPECT_LE(c.probs[t], 1.0);
    if (t > 0) {
      EXPECT_GE(c.probs[t], c.probs[t - 1]);
    }
    EXPECT_DOUBLE_EQ(c.std_errors[t], std::sqrt(c.probs[t] * (1.0 - c.probs[t]) / 2000.0));
  }
  EXPECT_GT(c.probs.back(), 0.0);
}

TEST(EscapeCurve, ReproducibleAndThreadIndependent) {
  const auto a = estimate_escape_curve(kBox, {19.0, 20.0}, kInit, 500, 200, 9);
  const auto b = estimate_escape_curve(kBox, {19.0, 20.0}, kInit, 500, 200, 9, {4});
  EXPECT_EQ(a.probs, b.probs);
  const auto c = estimate_escape_curve(kBox, {19.0, 20.0}, kInit, 500, 200, 10);
  EXPECT_NE(a.probs, c.probs);
}

TEST(EscapeCurve, CoincidentBestsStayBelowOne) {
  SwarmParams p = kBox;
  p.gb = 3.0;
  const auto c = estimate_escape_curve(p, {19.0, 20.0}, kInit, 2000, 1000, 4);
  EXPECT_LT(c.probs.back(), 0.2);
}

TEST(EstimatePe, MonotoneInCap) {
  SwarmParams p = kBox;
  p.omega = 0.9;
  double prev = 0.0;
  for (std::size_t cap : {10u, 100u, 1000u, 5000u}) {
    const auto e = estimate_pe(p, {19.0, 20.0}, kInit, 400, cap, 5);
    EXPECT_GE(e.pe_hat, prev);
    EXPECT_EQ(e.iter_cap, cap);
    EXPECT_EQ(e.n_runs, 400u);
    EXPECT_DOUBLE_EQ(e.std_error, binomial_stderr(e.pe_hat, 400));
    prev = e.pe_hat;
  }
}

TEST(EstimatePe, MatchesCurveEndpoint) {
  const auto e = estimate_pe(kBox, {19.0, 20.0}, kInit, 300, 400, 6);
  const auto c = estimate_escape_curve(kBox, {19.0, 20.0}, kInit, 300, 400, 6);
  EXPECT_EQ(e.pe_hat, c.probs.back());
}

// Escape gets easier with larger omega and C and harder with a farther goal.
// Sweeps share a seed so neighbouring cells see the same random numbers.
TEST(EstimatePe, DirectionalTrends) {
  auto pe = [](double omega, double c, double ub) {
    const SwarmParams p{omega, c, c, 0.0, ub, 3.0, 4.0};
    return estimate_pe(p, {ub - 1.0, ub}, kInit, 300, 5000, 17).pe_hat;
  };
  auto holds = [](const std::vector<double>& v, bool increasing) {
    int ok = 0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) ok += increasing ? v[i + 1] >= v[i] : v[i + 1] <= v[i];
    return ok;
  };
  std::vector<double> by_omega, by_c, by_ub;
  for (int i = 0; i < 7; ++i) {
    by_omega.push_back(pe(0.6 + 0.05 * i, 2.0, 22.0));
    by_c.push_back(pe(0.9, 1.6 + 0.8 * i / 6.0, 22.0));
    by_ub.push_back(pe(0.9, 2.0, 20.0 + 2.0 * i));
  }
  EXPECT_GE(holds(by_omega, true), 5);
  EXPECT_GE(holds(by_c, true), 5);
  EXPECT_GE(holds(by_ub, false), 5);
  EXPECT_GT(by_omega.back(), by_omega.front());
  EXPECT_GT(by_c.back(), by_c.front());
  EXPECT_LT(by_ub.back(), by_ub.front());
}

TEST(PositionDistribution, StartsAsPointAndSumsToOne) {
  const SwarmParams p{1.0, 2.0, 2.0, 0.0, 9.0, 0.5, 2.0};
  const auto hs = position_distribution(p, {1.0, 0.5}, {8.5, 9.0}, 10, 20000, 90, 2);
  ASSERT_EQ(hs.size(), 11u);
  EXPECT_DOUBLE_EQ(hs[0].masses[10], 1.0);  // x = 1 sits in bin [1, 1.1)
  EXPECT_EQ(hs[0].atom_lb, 0.0);
  EXPECT_EQ(hs[0].atom_ub, 0.0);
  for (const auto& h : hs) {
    ASSERT_EQ(h.bin_edges.size(), 91u);
    const double total = std::accumulate(h.masses.begin(), h.masses.end(), 0.0) + h.atom_lb + h.atom_ub;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_GE(h.goal_mass, h.atom_ub);  // the goal touches ub, so its atom counts
  }
  EXPECT_GT(hs[3].atom_lb, 0.0);
}

TEST(PositionDistribution, ThreadIndependent) {
  const SwarmParams p{1.0, 2.0, 2.0, 0.0, 9.0, 0.5, 2.0};
  const auto a = position_distribution(p, {1.0, 0.5}, {8.5, 9.0}, 5, 3000, 9, 8);
  const auto b = position_distribution(p, {1.0, 0.5}, {8.5, 9.0}, 5, 3000, 9, 8, {3});
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].masses, b[t].masses);
    EXPECT_EQ(a[t].atom_lb, b[t].atom_lb);
  }
  EXPECT_THROW(position_distribution(p, {1.0, 0.5}, {8.5, 9.0}, 5, 10, 1, 8), ValidationError);
}

TEST(SegmentBehavior, ConstantRightwardRun) {
  Scripted zero{{0.0}};
  const SwarmParams p{1.0, 2.0, 2.0, 0.0, 10.0, 3.0, 4.0};
  const auto t = run_trajectory({1, 1}, p, {5.8, 6.2}, 100, zero);
  const auto segs = segment_behavior(t);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0], (BehaviorSegment{BehaviorKind::inertial_right, 0, 5}));
}

TEST(SegmentBehavior, RightTurnLeft) {
  // Coast to ub with zero draws, one full pull back, then coast again.
  Scripted draws{{0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0}};
  const SwarmParams p{1.0, 2.0, 2.0, 0.0, 10.0, 3.0, 4.0};
  Trajectory t;
  t.states.push_back({8, 1});
  for (int i = 0; i < 6; ++i) t.states.push_back(sample_step(t.states.back(), p, draws));
  const auto segs = segment_behavior(t);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0], (BehaviorSegment{BehaviorKind::inertial_right, 0, 3}));
  EXPECT_EQ(segs[1], (BehaviorSegment{BehaviorKind::turn_left, 4, 4}));
  EXPECT_EQ(segs[2], (BehaviorSegment{BehaviorKind::inertial_left, 5, 6}));
}

TEST(SegmentBehavior, AllZeroIsStationary) {
  Trajectory t;
  t.states = {{1, 0}, {1, 0}, {1, 0}};
  const auto segs = segment_behavior(t);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0], (BehaviorSegment{BehaviorKind::stationary, 0, 2}));
  t.states.resize(1);
  EXPECT_THROW(segment_behavior(t), ValidationError);
}

TEST(SegmentBehavior, ZerosJoinFollowingRun) {
  Trajectory t;
  t.states = {{1, 0}, {1, 0}, {2, 1}, {3, 1}, {2, -1}, {2, 0}};
  const auto segs = segment_behavior(t);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0], (BehaviorSegment{BehaviorKind::inertial_right, 0, 3}));
  EXPECT_EQ(segs[1], (BehaviorSegment{BehaviorKind::turn_left, 4, 4}));
  EXPECT_EQ(segs[2], (BehaviorSegment{BehaviorKind::inertial_left, 5, 5}));
}

TEST(SegmentBehavior, TilesRandomTrajectories) {
  for (std::uint64_t k = 0; k < 200; ++k) {
    RandomStream rng(23, k);
    const auto t = run_trajectory({rng.uniform(0, 20), rng.uniform(-1, 1)}, kBox, {19.9, 20.0}, 200, rng);
    if (t.states.size() < 2) continue;
    const auto segs = segment_behavior(t);
    std::size_t next = 0;
    for (const auto& s : segs) {
      ASSERT_EQ(s.start_iter, next);
      ASSERT_LE(s.start_iter, s.end_iter);
      for (std::size_t i = s.start_iter; i <= s.end_iter; ++i) {
        if (s.kind == BehaviorKind::inertial_right) {
          ASSERT_GE(t.states[i].v, 0.0);
        }
        if (s.kind == BehaviorKind::inertial_left) {
          ASSERT_LE(t.states[i].v, 0.0);
        }
      }
      next = s.end_iter + 1;
    }
    ASSERT_EQ(next, t.states.size());
  }
}

TEST(Csv, Headers) {
  std::ostringstream a, b, c;
  const auto curve = estimate_escape_curve(kBox, {19.0, 20.0}, kInit, 10, 2, 1);
  write_curves_csv(a, std::span(&curve, 1));
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "omega,c1,c2,pb,gb,t,prob,stderr");
  EXPECT_NE(a.str().find("\n1,2,2,3,4,2,"), std::string::npos);
  const SwarmParams p{1.0, 2.0, 2.0, 0.0, 9.0, 0.5, 2.0};
  const auto hs = position_distribution(p, {1.0, 0.5}, {8.5, 9.0}, 1, 10, 3, 1);
  write_histogram_csv(b, hs);
  write_atoms_csv(c, hs);
  EXPECT_EQ(b.str().substr(0, b.str().find('\n')), "t,bin_lo,bin_hi,mass");
  EXPECT_EQ(c.str().substr(0, c.str().find('\n')), "t,atom_lb,atom_ub,goal_mass");
  const std::string hist = b.str();
  EXPECT_EQ(std::count(hist.begin(), hist.end(), '\n'), 1 + 2 * 3);
  EXPECT_EQ(hist.back(), '\n');
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(-1.5e-7), "-1.5e-07");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(std::stod(format_number(0.1 + 0.2)), 0.1 + 0.2);
}
