#pragma once

// Test-side oracles and helpers. The oracles re-derive kinematics, energy and
// torques from first principles and must not call into the library's own
// implementations of the same quantities.

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>

#include "ergo_assist/engine.hpp"

namespace oracle {

namespace ea = ergo_assist;

struct P {
  double r = 0.0;
  double z = 0.0;
};

/// Joint and link-center positions of the seated chain. The torso angle is
/// measured from vertical at the hip, the shoulder angle from the downward
/// vertical (absolute), the elbow angle relative to the upper arm.
struct Chain {
  P shoulder, elbow, hand;
  P torso_c, upper_c, fore_c;
};

inline P polar_up(double len, double a) { return {len * std::sin(a), len * std::cos(a)}; }
inline P polar_down(double len, double a) { return {len * std::sin(a), -len * std::cos(a)}; }
inline P add(P a, P b) { return {a.r + b.r, a.z + b.z}; }
inline P mid(P a, P b) { return {(a.r + b.r) / 2, (a.z + b.z) / 2}; }

inline Chain chain(const ea::HumanModel& m, double t0, double t1, double t2) {
  Chain c;
  c.shoulder = polar_up(m.torso_length, t0);
  c.elbow = add(c.shoulder, polar_down(m.upper_arm_length, t1));
  c.hand = add(c.elbow, polar_down(m.forearm_length, t1 + t2));
  c.torso_c = mid({0, 0}, c.shoulder);
  c.upper_c = mid(c.shoulder, c.elbow);
  c.fore_c = mid(c.elbow, c.hand);
  return c;
}

/// Gravitational potential energy, hand load as a point mass.
inline double energy(const ea::HumanModel& m, double t0, double t1, double t2, double load) {
  const Chain c = chain(m, t0, t1, t2);
  return ea::kGravity * (m.torso_mass * c.torso_c.z + m.upper_arm_mass * c.upper_c.z +
                         m.forearm_mass * c.fore_c.z + load * c.hand.z);
}

/// Central finite-difference gradient of the potential energy.
inline std::array<double, 3> energy_gradient(const ea::HumanModel& m, std::array<double, 3> q, double load,
                                             double h = 1e-6) {
  std::array<double, 3> g{};
  for (int i = 0; i < 3; ++i) {
    auto qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    g[i] = (energy(m, qp[0], qp[1], qp[2], load) - energy(m, qm[0], qm[1], qm[2], load)) / (2 * h);
  }
  return g;
}

/// Static torques from lever arms: every mass distal to a joint contributes
/// weight times its horizontal offset from the point that joint moves it about.
/// Raising the torso translates the arm, so the arm contributes through the
/// shoulder's height change rather than a lever arm.
inline std::array<double, 3> lever_torques(const ea::HumanModel& m, double t0, double t1, double t2,
                                           double load) {
  const Chain c = chain(m, t0, t1, t2);
  const double g = ea::kGravity;
  const double arm = m.upper_arm_mass + m.forearm_mass + load;
  std::array<double, 3> tau{};
  tau[0] = g * (m.torso_mass * (-m.torso_length / 2 * std::sin(t0)) + arm * (-m.torso_length * std::sin(t0)));
  tau[1] = g * (m.upper_arm_mass * (c.upper_c.r - c.shoulder.r) + m.forearm_mass * (c.fore_c.r - c.shoulder.r) +
                load * (c.hand.r - c.shoulder.r));
  tau[2] = g * (m.forearm_mass * (c.fore_c.r - c.elbow.r) + load * (c.hand.r - c.elbow.r));
  return tau;
}

inline double cost(const ea::HumanModel& m, const std::array<double, 3>& tau) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (tau[i] / m.torque_limits[i]) * (tau[i] / m.torque_limits[i]);
  return s;
}

struct Solution {
  double lean, shoulder, elbow, cost;
};

/// Two-link IK by circle intersection; returns every in-limit branch.
inline std::vector<std::pair<double, double>> arm_branches(const ea::HumanModel& m, double reach_scale, P s,
                                                           P t) {
  std::vector<std::pair<double, double>> out;
  const double l1 = m.upper_arm_length, l2 = m.forearm_length;
  const double dx = t.r - s.r, dz = t.z - s.z;
  const double d = std::sqrt(dx * dx + dz * dz);
  if (d > reach_scale * (l1 + l2) * (1 + 1e-12) || d < std::abs(l1 - l2) || d == 0) return out;
  const double a = (l1 * l1 - l2 * l2 + d * d) / (2 * d);  // along the shoulder-target line
  const double h = std::sqrt(std::max(0.0, l1 * l1 - a * a));
  const P base{s.r + a * dx / d, s.z + a * dz / d};
  for (int sign : {-1, 1}) {
    const P e{base.r + sign * h * (-dz) / d, base.z + sign * h * dx / d};
    const double t1 = std::atan2(e.r - s.r, -(e.z - s.z));
    const double abs2 = std::atan2(t.r - e.r, -(t.z - e.z));
    const double t2 = ea::normalize_angle(abs2 - t1);
    if (m.joint_limits[1].contains(t1) && m.joint_limits[2].contains(t2)) out.push_back({t1, t2});
  }
  return out;
}

/// Dense scan over the torso lean on a 0.5 degree grid (plus the range end).
inline std::optional<Solution> dense_scan_ik(const ea::HumanModel& m, const ea::ImpairmentSpec& imp,
                                             ea::ReachTarget target, ea::Side side, double load) {
  if (!imp.usable(side)) return std::nullopt;
  const double lo = m.joint_limits[0].lo;
  const double hi = std::min(m.joint_limits[0].hi, imp.max_torso_lean);
  std::optional<Solution> best;
  auto at = [&](double lean) {
    for (auto [t1, t2] : arm_branches(m, imp.reach_scale, polar_up(m.torso_length, lean), {target.r, target.z})) {
      const double c = cost(m, lever_torques(m, lean, t1, t2, load));
      if (!best || c < best->cost) best = Solution{lean, t1, t2, c};
    }
  };
  const double step = 0.5 * std::numbers::pi / 180.0;
  for (int k = 0; lo + k * step <= hi; ++k) at(lo + k * step);
  at(hi);
  return best;
}

}  // namespace oracle

namespace testing_support {

namespace ea = ergo_assist;

inline std::string fixture(const std::string& name) { return std::string(ERGO_ASSIST_FIXTURES) + "/" + name; }

inline ea::Scene paper_scene() { return ea::load_scene_file(fixture("paper_scenario.json")); }
inline ea::Scene unimpaired_scene() { return ea::load_scene_file(fixture("unimpaired.json")); }

/// Planner memoized on the serialized scene; coarse grid keeps fuzzing fast.
inline ea::PlanFn memo_planner(double grid = 0.05) {
  auto cache = std::make_shared<std::map<std::string, ea::Plan>>();
  auto mutex = std::make_shared<std::mutex>();
  return [cache, mutex, grid](const ea::Scene& s, const ea::TaskTemplate& t) {
    const std::string key = ea::serialize(s).dump();
    {
      std::lock_guard lk(*mutex);
      if (auto it = cache->find(key); it != cache->end()) return it->second;
    }
    ea::PlannerConfig cfg;
    cfg.arrangement.grid_step = grid;
    ea::Plan p = ea::plan_task(s, t, cfg);
    std::lock_guard lk(*mutex);
    cache->emplace(key, p);
    return p;
  };
}

/// Random pouring scene: bottle, cap and glass placed on the table, random
/// impairment. The scene is valid but not necessarily plannable.
inline ea::Scene random_scene(std::mt19937_64& rng) {
  ea::Scene s = paper_scene();
  std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(-0.35, 0.35), scale(0.8, 1.0), lean(0.1, 0.35);
  auto& bottle = s.objects[0];
  auto& glass = s.objects[2];
  bottle.pose = {std::round(ux(rng) * 100) / 100, std::round(uy(rng) * 100) / 100, 0.0};
  s.objects[1].pose = bottle.pose;
  do glass.pose = {std::round(ux(rng) * 100) / 100, std::round(uy(rng) * 100) / 100, 0.0};
  while (ea::distance(glass.pose.position(), bottle.pose.position()) < 0.1);
  const int side = std::uniform_int_distribution<int>(0, 2)(rng);
  s.impairment.disabled_side = side == 0 ? ea::DisabledSide::left : side == 1 ? ea::DisabledSide::right
                                                                               : ea::DisabledSide::none;
  s.impairment.reach_scale = std::round(scale(rng) * 100) / 100;
  s.impairment.max_torso_lean = std::round(lean(rng) * 100) / 100;
  ea::validate_scene(s);
  return s;
}

/// Random event drawn from the whole event alphabet, biased toward the
/// completions the session might be waiting for.
inline ea::Event random_event(std::mt19937_64& rng, const ea::EngineState& s) {
  std::uniform_int_distribution<int> pick(0, 9), step(0, 6);
  std::uniform_real_distribution<double> ux(-0.7, 0.7), uy(-0.5, 0.5), dt(0.01, 1.5);
  static const char* ids[] = {"bottle", "cap", "glass", "spoon"};
  switch (pick(rng)) {
    case 0: return ea::TriggerPhrase{std::uniform_int_distribution<int>(0, 3)(rng) ? s.task.trigger_phrase : "hello"};
    case 1: return ea::RobotActionDone{step(rng)};
    case 2: return ea::UserStepDone{step(rng)};
    case 3:
    case 4: return ea::ObjectMoved{ids[std::uniform_int_distribution<int>(0, 3)(rng)], {ux(rng), uy(rng), 0.0}};
    case 5: return std::uniform_int_distribution<int>(0, 9)(rng) == 0 ? ea::Event{ea::Abort{}} : ea::Event{ea::Tick{dt(rng)}};
    case 6:
    case 7: return ea::Tick{std::uniform_int_distribution<int>(0, 12)(rng) == 0 ? -0.1 : dt(rng)};
    default:
      if (const ea::ScriptItem* it = s.current()) return it->completion;
      return ea::TriggerPhrase{s.task.trigger_phrase};
  }
}

}  // namespace testing_support
