#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "pso_escape/bounds.hpp"
#include "pso_escape/chains.hpp"
#include "pso_escape/checks.hpp"
#include "pso_escape/csv.hpp"
#include "pso_escape/error.hpp"
#include "pso_escape/experiments.hpp"
#include "pso_escape/kernel.hpp"

namespace pso_escape::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool full = false;
  std::optional<unsigned> jobs;
};

// ---- config reading --------------------------------------------------------

// Wraps one JSON object and rejects keys nobody asked for, so typos in a
// config fail loudly instead of silently falling back to defaults.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ValidationError(where_ + "." + key + ": expected a number");
    return v.get<double>();
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned())
      throw ValidationError(where_ + "." + key + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ValidationError(where_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ValidationError(where_ + "." + key + ": expected an array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ValidationError(where_ + "." + key + ": expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Interval range(const std::string& key, Interval fallback) {
    if (!j_.contains(key)) {
      seen_.insert(key);
      return fallback;
    }
    const auto v = numbers(key, {});
    if (v.size() != 2) throw ValidationError(where_ + "." + key + ": expected [lo, hi]");
    return {v[0], v[1]};
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, where_ + "." + key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw ValidationError(where_ + ": unknown key '" + k + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json load_config(const Flags& flags) {
  if (flags.config.empty()) return json::object();
  std::ifstream in(flags.config);
  if (!in) throw IoError("cannot open config " + flags.config);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + flags.config + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config " + flags.config + ": expected an object");
  // --full swaps in the "full" block over the top-level values.
  if (j.contains("full")) {
    const json over = j.at("full");
    j.erase("full");
    if (!over.is_object()) throw ValidationError("config.full: expected an object");
    if (flags.full) j.update(over);
  }
  return j;
}

SwarmParams read_params(Section s, SwarmParams p = {}) {
  p.omega = s.number("omega", p.omega);
  if (s.has("c")) p.c1 = p.c2 = s.number("c", p.c1);
  p.c1 = s.number("c1", p.c1);
  p.c2 = s.number("c2", p.c2);
  p.lb = s.number("lb", p.lb);
  p.ub = s.number("ub", p.ub);
  p.pb = s.number("pb", p.pb);
  p.gb = s.number("gb", p.gb);
  s.finish();
  return p;
}

GoalRegion read_goal(Section s, GoalRegion g = {}) {
  g.lower = s.number("lower", g.lower);
  g.upper = s.number("upper", g.upper);
  s.finish();
  return g;
}

InitialDistribution read_init(Section s, InitialDistribution init) {
  init.x = s.range("x", init.x);
  init.v = s.range("v", init.v);
  s.finish();
  return init;
}

std::uint64_t seed_of(Section& root, const Flags& flags) {
  const auto from_file = root.count("seed", 1);
  return flags.seed.value_or(from_file);
}

RunOptions jobs_of(Section& root, const Flags& flags) {
  auto jobs = static_cast<unsigned>(root.count("jobs", 1));
  if (flags.jobs) jobs = *flags.jobs;
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  return {jobs};
}

std::size_t positive(std::uint64_t n, const char* what) {
  if (n == 0) throw ValidationError(std::string(what) + " must be at least 1");
  return static_cast<std::size_t>(n);
}

// ---- output ----------------------------------------------------------------

class Output {
 public:
  Output(Section& root, const Flags& flags, std::ostream& fallback) : fallback_(fallback) {
    std::string path = root.text("out", "");
    if (!flags.out.empty()) path = flags.out;
    if (path.empty() || path == "-") return;
    fs::path p(path);
    if (const char* dir = std::getenv("PSO_ESCAPE_OUT_DIR"); dir && *dir && p.is_relative())
      p = fs::path(dir) / p;
    path_ = p;
  }

  bool to_file() const { return path_.has_value(); }

  /// Writes the primary result, or a sibling file whose extension is replaced
  /// by `suffix`. Without a path both go to the fallback stream, separated by
  /// a blank line.
  void write(const std::function<void(std::ostream&)>& body, const std::string& suffix = {}) {
    if (!path_) {
      if (!suffix.empty()) fallback_ << '\n';
      body(fallback_);
      return;
    }
    fs::path target = *path_;
    if (!suffix.empty()) target.replace_extension(suffix);
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create " + target.parent_path().string() + ": " + ec.message());
    std::ofstream f(target, std::ios::binary);
    if (!f) throw IoError("cannot write " + target.string());
    body(f);
    f.flush();
    if (!f) throw IoError("write failed for " + target.string());
  }

 private:
  std::ostream& fallback_;
  std::optional<fs::path> path_;
};

std::string fmt(double x) { return format_number(x); }

// ---- subcommands -----------------------------------------------------------

int cmd_kernel_check(const Flags& flags, std::ostream& out, std::ostream& err) {
  const json j = load_config(flags);
  Section root(j, "config");
  KernelCheckConfig cfg;
  cfg.seed = seed_of(root, flags);
  cfg.cases = positive(root.count("cases", cfg.cases), "cases");
  cfg.ks_cases = root.count("ks_cases", cfg.ks_cases);
  cfg.ks_samples = root.count("ks_samples", cfg.ks_samples);
  cfg.omega = root.number("omega", cfg.omega);
  KernelThresholds limits;
  {
    auto t = root.child("thresholds");
    limits.mass_error = t.number("mass_error", limits.mass_error);
    limits.ks = t.number("ks", limits.ks);
    t.finish();
  }
  const auto opts = jobs_of(root, flags);
  Output sink(root, flags, out);
  root.finish();
  if (!(cfg.omega > 0.0 && cfg.omega <= 1.0)) throw ValidationError("omega must be in (0, 1]");
  if (cfg.ks_cases > cfg.cases) throw ValidationError("ks_cases cannot exceed cases");
  if (cfg.ks_cases > 0 && cfg.ks_samples == 0) throw ValidationError("ks_samples must be at least 1");

  const auto rows = kernel_check(cfg, opts);
  sink.write([&](std::ostream& o) {
    o << "index,omega,c1,c2,lb,ub,pb,gb,x,v,mass_error,width_margin,containment_margin,"
         "floor_margin,ks\n";
    for (const auto& r : rows) {
      const auto& p = r.params;
      o << r.index << ',' << fmt(p.omega) << ',' << fmt(p.c1) << ',' << fmt(p.c2) << ','
        << fmt(p.lb) << ',' << fmt(p.ub) << ',' << fmt(p.pb) << ',' << fmt(p.gb) << ','
        << fmt(r.state.x) << ',' << fmt(r.state.v) << ',' << fmt(r.mass_error) << ','
        << fmt(r.width_margin) << ',' << fmt(r.containment_margin) << ',' << fmt(r.floor_margin)
        << ',';
      if (r.ks >= 0.0) o << fmt(r.ks);
      o << '\n';
    }
  });

  double worst_mass = 0.0, worst_ks = 0.0;
  double min_width = rows.front().width_margin, min_floor = rows.front().floor_margin;
  for (const auto& r : rows) {
    worst_mass = std::max(worst_mass, r.mass_error);
    worst_ks = std::max(worst_ks, r.ks);
    min_width = std::min(min_width, r.width_margin);
    min_floor = std::min(min_floor, r.floor_margin);
  }
  const auto bad = kernel_check_failures(rows, limits);
  err << "kernel-check: " << rows.size() << " cases, " << bad << " failing; max mass error "
      << fmt(worst_mass) << ", min width margin " << fmt(min_width) << ", min floor margin "
      << fmt(min_floor) << ", max KS " << fmt(worst_ks) << '\n';
  return bad == 0 ? kOk : kThreshold;
}

int cmd_bounds(const Flags& flags, std::ostream& out, std::ostream& err) {
  const json j = load_config(flags);
  Section root(j, "config");
  SwarmParams p{1.0, 2.0, 2.0, 0.0, 20.0, 3.0, 4.0};
  GoalRegion goal{19.0, 20.0};
  p = read_params(root.child("params"), p);
  goal = read_goal(root.child("goal"), goal);
  const auto repeats = root.count("repeats", 0);
  Output sink(root, flags, out);
  root.finish();

  json result;
  int code = kOk;
  try {
    p.validate();
    goal.validate(p);
    const auto b = escape_bounds(p, goal);
    result = {
        {"d0", min_support_width(p)},
        {"t_0a", b.inertia.steps},    {"log_p_0a", b.inertia.log_prob},
        {"t_ab", b.turnaround.steps}, {"log_p_ab", b.turnaround.log_prob},
        {"t_bg", b.descent.steps},    {"log_p_bg", b.descent.log_prob},
        {"t_e0", b.total.steps},      {"log_p_e0", b.total.log_prob},
        {"leg_sum", 1 + b.inertia.steps + b.turnaround.steps + b.descent.steps},
    };
    if (repeats > 0)
      result["repeated"] = {{"n", repeats}, {"log_prob", repeated_escape_log_prob(b, repeats)}};
  } catch (const NotApplicableError& e) {
    result = {{"error", "not_applicable"}, {"message", e.what()}};
    code = kValidation;
  } catch (const DegenerateError& e) {
    result = {{"error", "degenerate"}, {"message", e.what()}};
    code = kValidation;
  } catch (const ValidationError& e) {
    result = {{"error", "invalid"}, {"message", e.what()}};
    code = kValidation;
  }
  sink.write([&](std::ostream& o) { o << result.dump(2) << '\n'; });
  if (code != kOk) err << "bounds: " << result["message"].get<std::string>() << '\n';
  return code;
}

json report_json(const FeasibilityReport& rep) {
  json f = json::array();
  for (const auto& x : rep.failures)
    f.push_back({{"condition", x.condition}, {"index", x.index}, {"slack", x.slack}});
  return {{"feasible", rep.feasible},
          {"log_prob_lower_bound", rep.log_prob_lower_bound},
          {"worst_slack", rep.worst_slack},
          {"failures", f}};
}

int cmd_chain_verify(const Flags& flags, std::ostream& out, std::ostream& err) {
  const json j = load_config(flags);
  Section root(j, "config");

  // A single serialized chain instead of the fuzz run.
  if (root.has("chain")) {
    const SwarmParams p = read_params(root.child("params"));
    const std::string text = root.raw("chain").dump();
    Output sink(root, flags, out);
    root.finish();
    p.validate();
    const auto chain = chain_from_json(text);
    const auto rep = verify_chain(chain, p);
    sink.write([&](std::ostream& o) { o << report_json(rep).dump(2) << '\n'; });
    err << "chain-verify: " << (rep.feasible ? "feasible" : "infeasible") << ", "
        << rep.failures.size() << " failed conditions\n";
    return rep.feasible ? kOk : kThreshold;
  }

  ChainFuzzConfig cfg;
  cfg.seed = seed_of(root, flags);
  cfg.cases = positive(root.count("cases", cfg.cases), "cases");
  cfg.widen = root.number("widen", cfg.widen);
  const auto opts = jobs_of(root, flags);
  Output sink(root, flags, out);
  root.finish();
  if (!(cfg.widen >= 1.0)) throw ValidationError("widen must be at least 1");

  const auto stats = fuzz_chains(cfg, opts);
  json steps = json::array();
  bool all = true;
  for (const auto& s : stats) {
    all = all && s.all_pass();
    steps.push_back({{"step", to_string(s.step)},
                     {"cases", s.cases},
                     {"feasible", s.feasible},
                     {"over_cap", s.over_cap},
                     {"errors", s.errors},
                     {"worst_slack", s.worst_slack},
                     {"max_length_ratio", s.max_length_ratio},
                     {"failures", s.failures}});
    err << "chain-verify: " << to_string(s.step) << ' ' << s.feasible << '/' << s.cases
        << " feasible, worst slack " << fmt(s.worst_slack) << '\n';
  }
  const json report = {{"seed", cfg.seed}, {"widen", cfg.widen}, {"all_feasible", all}, {"steps", steps}};
  sink.write([&](std::ostream& o) { o << report.dump(2) << '\n'; });
  return all ? kOk : kThreshold;
}

int cmd_escape_curve(const Flags& flags, std::ostream& out, std::ostream& err) {
  const json j = load_config(flags);
  Section root(j, "config");
  const auto seed = seed_of(root, flags);
  const auto n_runs = positive(root.count("n_runs", 10000), "n_runs");
  const auto max_iters = static_cast<std::size_t>(root.count("max_iters", 1000));
  const SwarmParams base = read_params(root.child("params"), {1.0, 2.0, 2.0, 0.0, 20.0, 3.0, 4.0});
  const GoalRegion goal = read_goal(root.child("goal"), {19.0, 20.0});
  const InitialDistribution init = read_init(root.child("init"), {{0.0, 2.0}, {-1.0, 1.0}});
  std::vector<SwarmParams> configs;
  if (root.has("curves")) {
    const auto& list = root.raw("curves");
    if (!list.is_array()) throw ValidationError("config.curves: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i)
      configs.push_back(read_params(Section(list[i], "config.curves[" + std::to_string(i) + "]"), base));
  } else {
    configs.push_back(base);
  }
  double final_min = -1.0;
  {
    auto req = root.child("require");
    final_min = req.number("final_prob_min", final_min);
    req.finish();
  }
  const auto opts = jobs_of(root, flags);
  Output sink(root, flags, out);
  root.finish();
  for (const auto& p : configs) {
    p.validate();
    goal.validate(p);
    init.validate(p);
  }

  std::vector<EscapeCurve> curves;
  for (const auto& p : configs)
    curves.push_back(estimate_escape_curve(p, goal, init, n_runs, max_iters, seed, opts));
  sink.write([&](std::ostream& o) { write_curves_csv(o, curves); });

  int code = kOk;
  for (const auto& c : curves) {
    const double last = c.probs.back();
    err << "escape-curve: omega=" << fmt(c.params.omega) << " c1=" << fmt(c.params.c1)
        << " c2=" << fmt(c.params.c2) << " pb=" << fmt(c.params.pb) << " gb=" << fmt(c.params.gb)
        << " P(T<=" << max_iters << ")=" << fmt(last) << " +- " << fmt(c.std_errors.back()) << '\n';
    if (final_min >= 0.0 && c.params.pb != c.params.gb && last < final_min) {
      err << "escape-curve: final probability " << fmt(last) << " below required " << fmt(final_min)
          << '\n';
      code = kThreshold;
    }
  }
  return code;
}

int cmd_pe_table(const Flags& flags, std::ostream& out, std::ostream& err) {
  const json j = load_config(flags);
  Section root(j, "config");
  const auto seed = seed_of(root, flags);
  const auto n_runs = positive(root.count("n_runs", 1000), "n_runs");
  const auto iter_cap = positive(root.count("iter_cap", 100000), "iter_cap");
  const auto omegas = root.numbers("omegas", {0.9, 0.8, 0.7});
  const auto cs = root.numbers("cs", {2.4, 2.0, 1.6});
  const auto ubs = root.numbers("ubs", {20, 22, 24, 26, 28, 30});
  const double lb = root.number("lb", 0.0);
  const double pb = root.number("pb", 3.0);
  const double gb = root.number("gb", 4.0);
  const double goal_width = root.number("goal_width", 1.0);
  const InitialDistribution init = read_init(root.child("init"), {{0.0, 2.0}, {-1.0, 1.0}});
  const auto opts = jobs_of(root, flags);
  Output sink(root, flags, out);
  root.finish();
  if (omegas.empty() || cs.empty() || ubs.empty())
    throw ValidationError("omegas, cs and ubs must be non-empty");

  struct Cell {
    SwarmParams p;
    GoalRegion goal;
  };
  std::vector<Cell> cells;
  for (double w : omegas)
    for (double c : cs)
      for (double ub : ubs) {
        Cell cell{{w, c, c, lb, ub, pb, gb}, {ub - goal_width, ub}};
        cell.p.validate();
        cell.goal.validate(cell.p);
        init.validate(cell.p);
        cells.push_back(cell);
      }

  std::vector<PeEstimate> est;
  for (const auto& cell : cells) {
    est.push_back(estimate_pe(cell.p, cell.goal, init, n_runs, iter_cap, seed, opts));
    err << "pe-table: omega=" << fmt(cell.p.omega) << " c=" << fmt(cell.p.c1) << " ub="
        << fmt(cell.p.ub) << " pe=" << fmt(est.back().pe_hat) << '\n';
  }

  sink.write([&](std::ostream& o) {
    o << "omega,c,ub,pe_hat,stderr,n_runs,iter_cap\n";
    for (std::size_t i = 0; i < cells.size(); ++i)
      o << fmt(cells[i].p.omega) << ',' << fmt(cells[i].p.c1) << ',' << fmt(cells[i].p.ub) << ','
        << fmt(est[i].pe_hat) << ',' << fmt(est[i].std_error) << ',' << est[i].n_runs << ','
        << est[i].iter_cap << '\n';
  });
  sink.write(
      [&](std::ostream& o) {
        o << "omega,c";
        for (double ub : ubs) o << ",rg_" << fmt(ub - goal_width) << '_' << fmt(ub);
        o << '\n';
        std::size_t i = 0;
        for (double w : omegas)
          for (double c : cs) {
            o << fmt(w) << ',' << fmt(c);
            for (std::size_t k = 0; k < ubs.size(); ++k) o << ',' << fmt(est[i++].pe_hat);
            o << '\n';
          }
      },
      ".grid.csv");
  return kOk;
}

int cmd_distribution(const Flags& flags, std::ostream& out, std::ostream& err) {
  const json j = load_config(flags);
  Section root(j, "config");
  const auto seed = seed_of(root, flags);
  const auto n_runs = positive(root.count("n_runs", 1000000), "n_runs");
  const auto t_max = static_cast<std::size_t>(root.count("t_max", 20));
  const auto n_bins = static_cast<std::size_t>(root.count("n_bins", 90));
  const SwarmParams p = read_params(root.child("params"), {1.0, 2.0, 2.0, 0.0, 9.0, 0.5, 2.0});
  const GoalRegion goal = read_goal(root.child("goal"), {8.5, 9.0});
  AgentState initial{1.0, 0.5};
  {
    auto s = root.child("initial");
    initial.x = s.number("x", initial.x);
    initial.v = s.number("v", initial.v);
    s.finish();
  }
  std::optional<std::size_t> positive_from;
  {
    auto req = root.child("require");
    if (req.has("goal_mass_positive_from"))
      positive_from = static_cast<std::size_t>(req.count("goal_mass_positive_from", 0));
    req.finish();
  }
  const auto opts = jobs_of(root, flags);
  Output sink(root, flags, out);
  root.finish();
  if (n_bins < 2) throw ValidationError("n_bins must be at least 2");
  p.validate();
  goal.validate(p);
  check_state(initial, p);

  const auto hists = position_distribution(p, initial, goal, t_max, n_runs, n_bins, seed, opts);
  sink.write([&](std::ostream& o) { write_histogram_csv(o, hists); });
  sink.write([&](std::ostream& o) { write_atoms_csv(o, hists); }, ".atoms.csv");

  int code = kOk;
  if (positive_from) {
    for (const auto& h : hists) {
      if (h.t >= *positive_from && !(h.goal_mass > 0.0)) {
        err << "distribution: goal mass is zero at t=" << h.t << '\n';
        code = kThreshold;
      }
    }
  }
  err << "distribution: " << hists.size() << " iterations, final goal mass "
      << fmt(hists.back().goal_mass) << '\n';
  return code;
}

int cmd_rastrigin(const Flags& flags, std::ostream& out, std::ostream& err) {
  const json j = load_config(flags);
  Section root(j, "config");
  RastriginDemoConfig cfg;
  cfg.seed = seed_of(root, flags);
  cfg.dims = positive(root.count("dims", cfg.dims), "dims");
  cfg.agents = positive(root.count("agents", cfg.agents), "agents");
  cfg.iters = static_cast<std::size_t>(root.count("iters", cfg.iters));
  cfg.runs = positive(root.count("runs", cfg.runs), "runs");
  {
    const auto b = root.range("bounds", {cfg.lower, cfg.upper});
    cfg.lower = b.lo;
    cfg.upper = b.hi;
  }
  {
    auto s = root.child("settings");
    cfg.settings.omega = s.number("omega", cfg.settings.omega);
    cfg.settings.c1 = s.number("c1", cfg.settings.c1);
    cfg.settings.c2 = s.number("c2", cfg.settings.c2);
    s.finish();
  }
  cfg.tolerance = root.number("tolerance", cfg.tolerance);
  cfg.min_plateau = static_cast<std::size_t>(root.count("min_plateau", cfg.min_plateau));
  cfg.success_below = root.number("success_below", cfg.success_below);
  double success_min = -1.0, plateau_min = -1.0;
  {
    auto req = root.child("require");
    success_min = req.number("success_rate_min", success_min);
    plateau_min = req.number("plateau_rate_min", plateau_min);
    req.finish();
  }
  const auto opts = jobs_of(root, flags);
  Output sink(root, flags, out);
  root.finish();

  const auto runs = rastrigin_demo(cfg, opts);
  std::size_t ok = 0, plateau = 0;
  for (const auto& r : runs) {
    ok += r.success;
    plateau += r.all_plateau();
  }
  sink.write([&](std::ostream& o) {
    o << "run,seed,gbest,plateau_pairs,pairs,success\n";
    for (std::size_t i = 0; i < runs.size(); ++i)
      o << i << ',' << runs[i].seed << ',' << fmt(runs[i].gbest) << ',' << runs[i].plateau_pairs
        << ',' << runs[i].pairs << ',' << (runs[i].success ? 1 : 0) << '\n';
  });
  const double n = static_cast<double>(runs.size());
  const double success_rate = ok / n, plateau_rate = plateau / n;
  err << "rastrigin-demo: " << runs.size() << " runs, success rate " << fmt(success_rate)
      << ", plateau rate " << fmt(plateau_rate) << '\n';
  return (success_rate >= success_min && plateau_rate >= plateau_min) ? kOk : kThreshold;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stagnated-PSO escape analysis: kernels, bounds, chains and Monte Carlo experiments",
               "pso-escape"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "master seed (overrides the config)");
    sub->add_option("--out", flags.out, "output path; '-' or empty writes to stdout");
    sub->add_flag("--full", flags.full, "apply the config's \"full\" block (long runs)");
    sub->add_option("--jobs", flags.jobs, "worker threads, 0 = all cores");
    return sub;
  };
  const std::vector<std::pair<std::string, std::function<int(const Flags&, std::ostream&, std::ostream&)>>>
      commands = {
          {"kernel-check", cmd_kernel_check},
          {"bounds", cmd_bounds},
          {"chain-verify", cmd_chain_verify},
          {"escape-curve", cmd_escape_curve},
          {"pe-table", cmd_pe_table},
          {"distribution", cmd_distribution},
          {"rastrigin-demo", cmd_rastrigin},
      };
  const std::map<std::string, std::string> help = {
      {"kernel-check", "fuzz the one-step velocity density"},
      {"bounds", "closed-form escape time and probability bounds"},
      {"chain-verify", "build and verify random transition chains"},
      {"escape-curve", "Monte Carlo P{T <= t} curves"},
      {"pe-table", "escape probability sweep over omega, C and ub"},
      {"distribution", "position histograms over the first iterations"},
      {"rastrigin-demo", "full swarm on Rastrigin with a stagnation report"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, _] : commands) subs.push_back(add_common(app.add_subcommand(name, help.at(name))));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help arrives as CallForHelp from the subcommand itself.
    if (e.get_exit_code() == 0) {
      for (auto* s : subs)
        if (s->parsed()) {
          out << s->help();
          return kOk;
        }
      out << app.help();
      return kOk;
    }
    err << "pso-escape: " << e.what() << '\n';
    return kValidation;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return commands[i].second(flags, out, err);
  } catch (const IoError& e) {
    err << "pso-escape: " << e.what() << '\n';
    return kIo;
  } catch (const std::invalid_argument& e) {  // ValidationError, PreconditionError
    err << "pso-escape: invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const std::domain_error& e) {
    err << "pso-escape: " << e.what() << '\n';
    return kValidation;
  } catch (const json::exception& e) {
    err << "pso-escape: config: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}

}  // namespace pso_escape::cli
