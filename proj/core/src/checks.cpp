#include "pso_escape/checks.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "pso_escape/bounds.hpp"
#include "pso_escape/error.hpp"
#include "parallel.hpp"

namespace pso_escape {

SwarmParams random_params(RandomStream& rng, double omega) {
  SwarmParams p;
  p.omega = omega;
  p.c1 = rng.uniform(0.3, 3.0);
  p.c2 = rng.uniform(0.3, 3.0);
  p.lb = rng.uniform(-10.0, 10.0);
  const double width = rng.uniform(1.0, 50.0);
  p.ub = p.lb + width;
  const double gap = width * rng.uniform(0.02, 1.0);
  p.pb = rng.uniform(p.lb, p.ub - gap);
  p.gb = std::min(p.pb + gap, p.ub);
  return p;
}

AgentState random_state(RandomStream& rng, const SwarmParams& p) {
  const double x = rng.uniform(p.lb, p.ub);
  const double v = rng.uniform(-p.width(), p.width());
  return {x, v};
}

double density_mass(const TrapezoidDensity& density) {
  if (density.degenerate()) return 1.0;
  static constexpr std::array<double, 5> node{0.0, -0.5384693101056831, 0.5384693101056831,
                                              -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> weight{0.5688888888888889, 0.4786286704993665,
                                                0.4786286704993665, 0.2369268850561891,
                                                0.2369268850561891};
  double total = 0.0;
  for (int piece = 0; piece < 3; ++piece) {
    const double a = density.knots[piece];
    const double b = density.knots[piece + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < node.size(); ++i) sum += weight[i] * density.pdf(mid + half * node[i]);
    total += half * sum;
  }
  return total;
}

double ks_statistic(std::vector<double>& samples, const TrapezoidDensity& density) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = density.cdf(samples[i]);
    worst = std::max({worst, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return worst;
}

std::vector<KernelCheckRow> kernel_check(const KernelCheckConfig& config, RunOptions opts) {
  if (!(config.omega > 0.0 && config.omega <= 1.0))
    throw ValidationError("kernel check: omega must be in (0, 1]");
  std::vector<KernelCheckRow> rows(config.cases);
  detail::for_each_chunk(config.cases, opts.jobs, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream rng(config.seed, i);
      auto& row = rows[i];
      row.index = i;
      row.params = random_params(rng, config.omega);
      row.state = random_state(rng, row.params);
      const auto dens = velocity_support(row.state, row.params);
      row.mass_error = std::abs(density_mass(dens) - 1.0);
      row.width_margin = (dens.upper() - dens.lower()) - min_support_width(row.params);
      row.containment_margin =
          std::min(row.state.v - dens.lower(), dens.upper() - row.state.v);
      double a = rng.uniform(dens.lower(), dens.upper());
      double b = rng.uniform(dens.lower(), dens.upper());
      if (a > b) std::swap(a, b);
      row.floor_margin = dens.probability(a, b) - mass_floor(row.params, b - a);

      if (i < config.ks_cases) {
        RandomStream draws(config.seed, config.cases + i);
        std::vector<double> v(config.ks_samples);
        for (auto& s : v) s = sample_step(row.state, row.params, draws).v;
        row.ks = ks_statistic(v, dens);
      }
    }
  });
  return rows;
}

std::size_t kernel_check_failures(const std::vector<KernelCheckRow>& rows,
                                  const KernelThresholds& limits) {
  std::size_t bad = 0;
  for (const auto& r : rows) {
    const bool contain = r.params.omega != 1.0 || r.containment_margin >= 0.0;
    const bool ok = r.mass_error <= limits.mass_error && r.width_margin >= 0.0 && contain &&
                    r.floor_margin >= 0.0 && r.ks <= limits.ks;
    bad += !ok;
  }
  return bad;
}

const char* to_string(ChainStep step) noexcept {
  switch (step) {
    case ChainStep::inertia: return "inertia";
    case ChainStep::turnaround: return "turnaround";
    case ChainStep::descent: return "descent";
  }
  return "?";
}

ChainSpec random_chain(ChainStep step, std::uint64_t seed, std::size_t index, SwarmParams& p,
                       std::int64_t& cap) {
  RandomStream rng(seed, index * 3 + static_cast<std::uint64_t>(step));
  p = random_params(rng);
  const double d = min_support_width(p);
  switch (step) {
    case ChainStep::inertia: {
      const AgentState origin{rng.uniform(p.lb, p.ub), d / 4.0 + rng() * rng() * 3.0 * d};
      cap = inertia_bound(p).steps;
      return build_inertia_chain(origin, p);
    }
    case ChainStep::turnaround: {
      const AgentState origin{p.ub, rng() * rng() * velocity_cap(p) + 1e-9};
      cap = turnaround_bound(p, {}).steps;
      return build_turnaround_chain(origin, p);
    }
    case ChainStep::descent: break;
  }
  double a = rng.uniform(p.lb, p.ub);
  double b = rng.uniform(p.lb, p.ub);
  if (a > b) std::swap(a, b);
  b = std::max(b, a + 1e-6);
  const GoalRegion goal{a, std::min(b, p.ub)};
  OscillationWindow w;
  if (p.ub - goal.upper <= d / 3.0) w = goal_entry_window(p, goal);
  const double v = -(w.min_fraction + (w.max_fraction - w.min_fraction) * rng.uniform(0.001, 0.999)) * d;
  cap = descent_bound(p, goal).steps;
  return build_descent_chain(p.ub, {p.ub + v, v}, p, goal);
}

std::array<ChainFuzzStats, 3> fuzz_chains(const ChainFuzzConfig& config, RunOptions opts) {
  std::array<ChainFuzzStats, 3> out;
  const std::size_t chunks = detail::chunk_count(config.cases, opts.jobs);
  for (int s = 0; s < 3; ++s) {
    const auto step = static_cast<ChainStep>(s);
    std::vector<ChainFuzzStats> partial(chunks);
    detail::for_each_chunk(config.cases, opts.jobs, [&](std::size_t begin, std::size_t end, std::size_t c) {
      auto& acc = partial[c];
      acc.worst_slack = std::numeric_limits<double>::infinity();
      for (std::size_t i = begin; i < end; ++i) {
        ++acc.cases;
        try {
          SwarmParams p;
          std::int64_t cap = 0;
          auto chain = random_chain(step, config.seed, i, p, cap);
          if (config.widen != 1.0) chain = widen_intervals(chain, config.widen);
          const auto rep = verify_chain(chain, p);
          if (rep.feasible) {
            ++acc.feasible;
          } else {
            ++acc.failures[rep.failures.front().condition];
          }
          acc.worst_slack = std::min(acc.worst_slack, rep.worst_slack);
          const auto len = static_cast<std::int64_t>(chain.intervals.size());
          if (len > cap) ++acc.over_cap;
          acc.max_length_ratio = std::max(acc.max_length_ratio, static_cast<double>(len) / cap);
        } catch (const std::exception& e) {
          ++acc.errors;
          ++acc.failures[std::string("error: ") + e.what()];
        }
      }
    });
    auto& total = out[s];
    total.step = step;
    total.worst_slack = std::numeric_limits<double>::infinity();
    for (const auto& acc : partial) {
      total.cases += acc.cases;
      total.feasible += acc.feasible;
      total.over_cap += acc.over_cap;
      total.errors += acc.errors;
      total.worst_slack = std::min(total.worst_slack, acc.worst_slack);
      total.max_length_ratio = std::max(total.max_length_ratio, acc.max_length_ratio);
      for (const auto& [k, n] : acc.failures) total.failures[k] += n;
    }
  }
  return out;
}

}  // namespace pso_escape
