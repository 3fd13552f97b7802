#include "pso_escape/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "pso_escape/csv.hpp"
#include "pso_escape/error.hpp"
#include "parallel.hpp"

namespace pso_escape {

namespace {

using detail::chunk_count;
using detail::for_each_chunk;

void check_interval(const Interval& i, const char* what) {
  if (!std::isfinite(i.lo) || !std::isfinite(i.hi) || i.lo > i.hi)
    throw ValidationError(std::string(what) + ": need finite lo <= hi");
}

}  // namespace

void InitialDistribution::validate(const SwarmParams& params) const {
  check_interval(x, "initial position range");
  check_interval(v, "initial velocity range");
  if (x.lo < params.lb || x.hi > params.ub)
    throw ValidationError("initial position range must lie inside [lb, ub]");
}

AgentState InitialDistribution::sample(RandomStream& rng) const noexcept {
  const double x0 = rng.uniform(x.lo, x.hi);
  const double v0 = rng.uniform(v.lo, v.hi);
  return {x0, v0};
}

double binomial_stderr(double p, std::size_t n) noexcept {
  return n == 0 ? 0.0 : std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

EscapeCurve estimate_escape_curve(const SwarmParams& params, const GoalRegion& goal,
                                  const InitialDistribution& init, std::size_t n_runs,
                                  std::size_t max_iters, std::uint64_t seed, RunOptions opts) {
  params.validate();
  goal.validate(params);
  init.validate(params);
  if (n_runs == 0) throw ValidationError("n_runs must be at least 1");

  const std::size_t chunks = chunk_count(n_runs, opts.jobs);
  std::vector<std::vector<std::uint64_t>> hits(chunks, std::vector<std::uint64_t>(max_iters + 1, 0));
  for_each_chunk(n_runs, opts.jobs, [&](std::size_t begin, std::size_t end, std::size_t c) {
    auto& local = hits[c];
    for (std::size_t r = begin; r < end; ++r) {
      RandomStream rng(seed, r);
      const AgentState s0 = init.sample(rng);
      if (auto t = first_hit_time(s0, params, goal, max_iters, rng)) ++local[*t];
    }
  });

  EscapeCurve curve;
  curve.n_runs = n_runs;
  curve.params = params;
  curve.goal = goal;
  curve.init = init;
  std::uint64_t cumulative = 0;
  for (std::size_t t = 0; t <= max_iters; ++t) {
    for (const auto& local : hits) cumulative += local[t];
    const double p = static_cast<double>(cumulative) / static_cast<double>(n_runs);
    curve.t_values.push_back(t);
    curve.probs.push_back(p);
    curve.std_errors.push_back(binomial_stderr(p, n_runs));
  }
  return curve;
}

PeEstimate estimate_pe(const SwarmParams& params, const GoalRegion& goal,
                       const InitialDistribution& init, std::size_t n_runs,
                       std::size_t iter_cap, std::uint64_t seed, RunOptions opts) {
  params.validate();
  goal.validate(params);
  init.validate(params);
  if (n_runs == 0) throw ValidationError("n_runs must be at least 1");
  if (iter_cap == 0) throw ValidationError("iter_cap must be at least 1");

  std::vector<std::uint64_t> hits(chunk_count(n_runs, opts.jobs), 0);
  for_each_chunk(n_runs, opts.jobs, [&](std::size_t begin, std::size_t end, std::size_t c) {
    std::uint64_t local = 0;
    for (std::size_t r = begin; r < end; ++r) {
      RandomStream rng(seed, r);
      const AgentState s0 = init.sample(rng);
      if (first_hit_time(s0, params, goal, iter_cap, rng)) ++local;
    }
    hits[c] = local;
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  PeEstimate out;
  out.pe_hat = static_cast<double>(total) / static_cast<double>(n_runs);
  out.std_error = binomial_stderr(out.pe_hat, n_runs);
  out.n_runs = n_runs;
  out.iter_cap = iter_cap;
  return out;
}

std::vector<PositionHistogram> position_distribution(const SwarmParams& params,
                                                     const AgentState& initial,
                                                     const GoalRegion& goal, std::size_t t_max,
                                                     std::size_t n_runs, std::size_t n_bins,
                                                     std::uint64_t seed, RunOptions opts) {
  params.validate();
  goal.validate(params);
  check_state(initial, params);
  if (n_bins < 2) throw ValidationError("n_bins must be at least 2");
  if (n_runs == 0) throw ValidationError("n_runs must be at least 1");

  // Per t: n_bins bin counts, then lb atom, ub atom, goal count.
  const std::size_t stride = n_bins + 3;
  const std::size_t chunks = chunk_count(n_runs, opts.jobs);
  std::vector<std::vector<std::uint64_t>> counts(
      chunks, std::vector<std::uint64_t>(stride * (t_max + 1), 0));
  const double lb = params.lb;
  const double ub = params.ub;
  const double scale = static_cast<double>(n_bins) / params.width();

  auto record = [&](std::vector<std::uint64_t>& local, std::size_t t, double x) {
    std::uint64_t* row = local.data() + t * stride;
    if (std::abs(x - lb) <= 1e-12) {
      ++row[n_bins];
    } else if (std::abs(x - ub) <= 1e-12) {
      ++row[n_bins + 1];
    } else {
      auto bin = static_cast<std::size_t>((x - lb) * scale);
      ++row[std::min(bin, n_bins - 1)];
    }
    if (goal.contains(x)) ++row[n_bins + 2];
  };

  for_each_chunk(n_runs, opts.jobs, [&](std::size_t begin, std::size_t end, std::size_t c) {
    auto& local = counts[c];
    for (std::size_t r = begin; r < end; ++r) {
      RandomStream rng(seed, r);
      AgentState s = initial;
      record(local, 0, s.x);
      for (std::size_t t = 1; t <= t_max; ++t) {
        s = sample_step(s, params, rng);
        record(local, t, s.x);
      }
    }
  });

  const double n = static_cast<double>(n_runs);
  std::vector<PositionHistogram> out(t_max + 1);
  for (std::size_t t = 0; t <= t_max; ++t) {
    PositionHistogram& h = out[t];
    h.t = t;
    h.bin_edges.resize(n_bins + 1);
    for (std::size_t b = 0; b <= n_bins; ++b)
      h.bin_edges[b] = lb + params.width() * static_cast<double>(b) / static_cast<double>(n_bins);
    std::vector<std::uint64_t> row(stride, 0);
    for (const auto& local : counts)
      for (std::size_t k = 0; k < stride; ++k) row[k] += local[t * stride + k];
    h.masses.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) h.masses[b] = static_cast<double>(row[b]) / n;
    h.atom_lb = static_cast<double>(row[n_bins]) / n;
    h.atom_ub = static_cast<double>(row[n_bins + 1]) / n;
    h.goal_mass = static_cast<double>(row[n_bins + 2]) / n;
  }
  return out;
}

std::vector<BehaviorSegment> segment_behavior(const Trajectory& traj) {
  const std::size_t n = traj.states.size();
  if (n < 2) throw ValidationError("segment_behavior needs at least two states");

  auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
  std::vector<int> s(n);
  int carry = 0;
  for (std::size_t i = n; i-- > 0;) {
    const int own = sign(traj.states[i].v);
    if (own != 0) carry = own;
    s[i] = carry;  // zeros take the sign of the next moving step
  }
  if (carry == 0) return {{BehaviorKind::stationary, 0, n - 1}};
  for (std::size_t i = 1; i < n; ++i)
    if (s[i] == 0) s[i] = s[i - 1];  // trailing zeros join the last run

  auto inertial = [](int sg) {
    return sg > 0 ? BehaviorKind::inertial_right : BehaviorKind::inertial_left;
  };
  std::vector<BehaviorSegment> out;
  std::size_t start = 0;
  for (std::size_t t = 1; t < n; ++t) {
    if (s[t] == s[t - 1]) continue;
    if (start + 1 <= t) out.push_back({inertial(s[start]), start, t - 1});
    out.push_back({s[t - 1] > 0 ? BehaviorKind::turn_left : BehaviorKind::turn_right, t, t});
    start = t + 1;
  }
  if (start < n) out.push_back({inertial(s[start]), start, n - 1});
  return out;
}

const char* to_string(BehaviorKind kind) noexcept {
  switch (kind) {
    case BehaviorKind::inertial_right: return "inertial-right";
    case BehaviorKind::inertial_left: return "inertial-left";
    case BehaviorKind::turn_left: return "oscillation-turn-left";
    case BehaviorKind::turn_right: return "oscillation-turn-right";
    case BehaviorKind::stationary: return "stationary";
  }
  return "unknown";
}

void write_curves_csv(std::ostream& out, std::span<const EscapeCurve> curves) {
  out << "omega,c1,c2,pb,gb,t,prob,stderr\n";
  for (const auto& c : curves) {
    const std::string prefix = format_number(c.params.omega) + ',' + format_number(c.params.c1) +
                               ',' + format_number(c.params.c2) + ',' +
                               format_number(c.params.pb) + ',' + format_number(c.params.gb) + ',';
    for (std::size_t i = 0; i < c.t_values.size(); ++i)
      out << prefix << c.t_values[i] << ',' << format_number(c.probs[i]) << ','
          << format_number(c.std_errors[i]) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, std::span<const PositionHistogram> hists) {
  out << "t,bin_lo,bin_hi,mass\n";
  for (const auto& h : hists)
    for (std::size_t b = 0; b < h.masses.size(); ++b)
      out << h.t << ',' << format_number(h.bin_edges[b]) << ',' << format_number(h.bin_edges[b + 1])
          << ',' << format_number(h.masses[b]) << '\n';
}

void write_atoms_csv(std::ostream& out, std::span<const PositionHistogram> hists) {
  out << "t,atom_lb,atom_ub,goal_mass\n";
  for (const auto& h : hists)
    out << h.t << ',' << format_number(h.atom_lb) << ',' << format_number(h.atom_ub) << ','
        << format_number(h.goal_mass) << '\n';
}

double rastrigin(std::span<const double> x) noexcept {
  double sum = 0.0;
  for (double xi : x) sum += xi * xi - 10.0 * std::cos(2.0 * std::numbers::pi * xi) + 10.0;
  return sum;
}

}  // namespace pso_escape
