#include <cmath>
#include <limits>
#include <string>

#include "json.hpp"
#include "pso_escape/chains.hpp"
#include "pso_escape/error.hpp"

namespace pso_escape {

namespace {

using nlohmann::json;

// JSON has no infinities; unbounded interval ends are written as null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double read_number(const json& j, double if_null) {
  if (j.is_null()) return if_null;
  if (!j.is_number()) throw ValidationError("chain json: expected a number");
  return j.get<double>();
}

json interval(const Interval& i) { return json::array({number(i.lo), number(i.hi)}); }

Interval read_interval(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("chain json: interval must be [lo, hi]");
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {read_number(j[0], -inf), read_number(j[1], inf)};
}

ChainKind read_kind(const std::string& s) {
  if (s == "position-chain") return ChainKind::position;
  if (s == "velocity-chain") return ChainKind::velocity;
  throw ValidationError("chain json: unknown kind '" + s + "'");
}

ChainTerminal read_terminal(const std::string& s) {
  for (auto t : {ChainTerminal::upper_bound, ChainTerminal::midpoint,
                 ChainTerminal::turnaround_window, ChainTerminal::goal,
                 ChainTerminal::descent_handoff})
    if (to_string(t) == s) return t;
  throw ValidationError("chain json: unknown terminal '" + s + "'");
}

}  // namespace

std::string chain_to_json(const ChainSpec& chain) {
  json j;
  j["kind"] = std::string(to_string(chain.kind));
  j["tag"] = chain.tag;
  j["terminal"] = std::string(to_string(chain.terminal));
  j["origin"] = {{"x", chain.origin.x}, {"v", chain.origin.v}};
  j["intervals"] = json::array();
  for (const auto& i : chain.intervals) j["intervals"].push_back(interval(i));
  j["segments"] = json::array();
  for (const auto& s : chain.segments) {
    j["segments"].push_back({
        {"kind", std::string(to_string(s.kind))},
        {"motion", s.motion == Motion::rightward ? "rightward" : "leftward"},
        {"split", s.split},
        {"prev_x", s.prev_x},
        {"origin", {{"x", s.origin.x}, {"v", s.origin.v}}},
        {"range", {s.begin, s.end}},
        {"terminal", std::string(to_string(s.terminal))},
        {"target", interval(s.target)},
    });
  }
  return j.dump(2);
}

ChainSpec chain_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("chain json: ") + e.what());
  }
  try {
    ChainSpec chain;
    chain.kind = read_kind(j.at("kind").get<std::string>());
    chain.tag = j.value("tag", "");
    chain.terminal = read_terminal(j.at("terminal").get<std::string>());
    chain.origin = {j.at("origin").at("x").get<double>(), j.at("origin").at("v").get<double>()};
    for (const auto& i : j.at("intervals")) chain.intervals.push_back(read_interval(i));
    for (const auto& s : j.at("segments")) {
      ChainSegment seg;
      seg.kind = read_kind(s.at("kind").get<std::string>());
      const auto motion = s.at("motion").get<std::string>();
      if (motion != "rightward" && motion != "leftward")
        throw ValidationError("chain json: unknown motion '" + motion + "'");
      seg.motion = motion == "rightward" ? Motion::rightward : Motion::leftward;
      seg.split = s.at("split").get<double>();
      seg.prev_x = s.at("prev_x").get<double>();
      seg.origin = {s.at("origin").at("x").get<double>(), s.at("origin").at("v").get<double>()};
      seg.begin = s.at("range").at(0).get<std::size_t>();
      seg.end = s.at("range").at(1).get<std::size_t>();
      seg.terminal = read_terminal(s.at("terminal").get<std::string>());
      seg.target = read_interval(s.at("target"));
      chain.segments.push_back(seg);
    }
    return chain;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("chain json: ") + e.what());
  }
}

}  // namespace pso_escape
