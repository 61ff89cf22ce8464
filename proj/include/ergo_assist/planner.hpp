#pragma once

// Planning: predict the human's unaided execution, decide which robot
// interventions to make, and compile the result into an interaction script of
// speech lines, AR cues and robot actions.

#include <algorithm>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ergo_assist/arrangement.hpp"
#include "ergo_assist/events.hpp"
#include "ergo_assist/task.hpp"

namespace ergo_assist {

namespace speech {
inline constexpr std::string_view kHoldBottle = "I will hold the bottle";
inline constexpr std::string_view kRemoveCap = "Please remove the cap";
inline constexpr std::string_view kPutCap = "Please put the cap on the table";
inline constexpr std::string_view kPushGlass = "I will push the glass.";
inline constexpr std::string_view kPour = "You can pour into the glass.";
}  // namespace speech

inline constexpr double kCometLoopPeriod = 0.7;  // seconds
inline constexpr int kSpinningArrowCount = 2;

enum class Verb { grasp, hold, pour, put_down, push };

inline std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::grasp: return "grasp";
    case Verb::hold: return "hold";
    case Verb::pour: return "pour";
    case Verb::put_down: return "put_down";
    case Verb::push: return "push";
  }
  return "?";
}

struct AtomicAction {
  Verb verb = Verb::grasp;
  std::string object;
  std::optional<Pose2D> target_pose;
  std::optional<ReachTarget> target_reach;

  static AtomicAction make(Verb verb, std::string object, std::optional<Pose2D> pose = {},
                           std::optional<ReachTarget> reach = {}) {
    if (verb == Verb::push && !pose) throw std::invalid_argument("push requires a target");
    return {verb, std::move(object), pose, reach};
  }
  friend bool operator==(const AtomicAction&, const AtomicAction&) = default;
};

enum class CueKind { spinning_arrows, target_disc, comet_trail };

inline std::string_view to_string(CueKind k) {
  switch (k) {
    case CueKind::spinning_arrows: return "spinning_arrows";
    case CueKind::target_disc: return "target_disc";
    case CueKind::comet_trail: return "comet_trail";
  }
  return "?";
}

struct CueSpec {
  CueKind kind = CueKind::spinning_arrows;
  std::optional<std::string> anchor_object;
  std::optional<Pose2D> anchor_pose;
  std::optional<Pose2D> end;  // comet only
  double loop_period = 0.0;   // comet only
  int arrow_count = 0;        // spinning arrows only

  static CueSpec spinning_arrows(std::string object) {
    return {CueKind::spinning_arrows, std::move(object), std::nullopt, std::nullopt, 0.0,
            kSpinningArrowCount};
  }
  static CueSpec target_disc(Pose2D at) { return {CueKind::target_disc, std::nullopt, at, std::nullopt, 0.0, 0}; }
  static CueSpec comet_trail(Pose2D from, Pose2D to, double period = kCometLoopPeriod) {
    return {CueKind::comet_trail, std::nullopt, from, to, period, 0};
  }
  friend bool operator==(const CueSpec&, const CueSpec&) = default;
};

struct ScriptItem {
  int step_id = 0;
  Actor actor = Actor::human;
  std::vector<AtomicAction> actions;  // robot actions started with this item
  std::string instruction;            // what the human does (human items)
  std::optional<std::string> speech;
  std::vector<CueSpec> cues;
  Event completion;                   // RobotActionDone or UserStepDone
  friend bool operator==(const ScriptItem&, const ScriptItem&) = default;
};

struct StepAssignment {
  int step_id = 0;
  std::string name;
  Actor actor = Actor::human;
  StepCost baseline;
  StepCost assisted;  // 0 for robot-executed steps
  friend bool operator==(const StepAssignment&, const StepAssignment&) = default;
};

struct PlannerConfig {
  ArrangementConfig arrangement;
  PouringGeometry geometry;
  double comfort_threshold = 0.5;  // C_max
  double comet_loop_period = kCometLoopPeriod;
};

struct Plan {
  Arrangement arrangement;
  std::vector<Intervention> interventions;
  std::vector<StepAssignment> steps;
  std::vector<ScriptItem> items;

  // Resolved placements the script refers to.
  std::string bottle_id, cap_id, glass_id;
  Pose2D glass_start;
  Pose2D cap_target;   // drop zone the human is expected to use
  Point2 bottle_rest;  // where the robot sets the bottle down

  bool uses(Intervention i) const {
    return std::find(interventions.begin(), interventions.end(), i) != interventions.end();
  }
  double baseline_total() const;
  double assisted_total() const {
    double t = 0.0;
    for (const auto& s : steps)
      if (s.actor == Actor::human) t += s.assisted.cost;
    return t;
  }
  friend bool operator==(const Plan&, const Plan&) = default;
};

inline double Plan::baseline_total() const {
  double t = 0.0;
  for (const auto& s : steps) t += s.baseline.cost;
  return t;
}

/// Per key-frame cost of the human doing the step alone with objects where they are.
inline std::vector<StepCost> predict_human_baseline(const Scene& scene, const TaskTemplate& task,
                                                    const PlannerConfig& cfg = {}) {
  const Arrangement identity = identity_arrangement(scene, cfg.geometry);
  std::vector<StepCost> out;
  PostureCache cache;
  for (const auto& kf : task.key_frames)
    out.push_back(keyframe_cost(scene, identity, unaided(kf), cfg.arrangement.ik, &cache));
  return out;
}

/// Lexicographic allocation over subsets of the needed interventions:
///   1. every step feasible for its actor,
///   2. no human step worse than its baseline,
///   3. least summed human posture cost,
///   4. fewest robot interventions.
/// An intervention is needed only when a step it supports is infeasible or
/// above the comfort threshold without it; otherwise the human keeps the step.
inline Plan allocate_steps(const Scene& scene, const TaskTemplate& task, const Arrangement& arrangement,
                           const std::vector<StepCost>& baseline, const PlannerConfig& cfg = {}) {
  const std::size_t n = task.key_frames.size();
  if (baseline.size() != n) throw std::invalid_argument("baseline does not match the task");

  std::vector<Intervention> needed;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& kf = task.key_frames[k];
    if (kf.support == Intervention::none) continue;
    const bool uncomfortable = !baseline[k].feasible || baseline[k].cost > cfg.comfort_threshold;
    if (uncomfortable && std::find(needed.begin(), needed.end(), kf.support) == needed.end())
      needed.push_back(kf.support);
  }

  PostureCache cache;
  std::vector<StepCost> arranged(n);
  for (std::size_t k = 0; k < n; ++k)
    arranged[k] = keyframe_cost(scene, arrangement, task.key_frames[k], cfg.arrangement.ik, &cache);

  struct Option {
    std::vector<Intervention> chosen;
    std::vector<StepAssignment> steps;
    bool cap_from_arrangement = true;
    int infeasible = 0;
    int regressions = 0;
    double human_cost = 0.0;
  };

  auto evaluate = [&](std::uint32_t mask) {
    Option o;
    for (std::size_t i = 0; i < needed.size(); ++i)
      if (mask & (1u << i)) o.chosen.push_back(needed[i]);
    auto chosen = [&](Intervention i) {
      return std::find(o.chosen.begin(), o.chosen.end(), i) != o.chosen.end();
    };
    for (std::size_t k = 0; k < n; ++k) {
      const auto& kf = task.key_frames[k];
      StepAssignment s{kf.step_id, kf.name, Actor::human, baseline[k], baseline[k]};
      if (kf.support != Intervention::none && chosen(kf.support)) {
        if (kf.hands.targets.empty()) {
          s.actor = Actor::robot;
          s.assisted = StepCost::ok(0.0);
        } else {
          s.assisted = arranged[k];
        }
      } else if (kf.support == Intervention::none && kf.arrangement_slot()) {
        // Placement the human chooses freely: take the cheaper of the two.
        const bool better = arranged[k].feasible &&
                            (!baseline[k].feasible || arranged[k].cost <= baseline[k].cost);
        s.assisted = better ? arranged[k] : baseline[k];
        if (kf.arrangement_slot() == Slot::cap_drop_zone) o.cap_from_arrangement = better;
      }
      if (s.actor == Actor::human) {
        if (!s.assisted.feasible) ++o.infeasible;
        else o.human_cost += cfg.arrangement.weight(k) * s.assisted.cost;
        if (baseline[k].feasible && s.assisted.cost > baseline[k].cost) ++o.regressions;
      }
      o.steps.push_back(std::move(s));
    }
    return o;
  };

  std::optional<Option> best;
  for (std::uint32_t mask = 0; mask < (1u << needed.size()); ++mask) {
    Option o = evaluate(mask);
    auto key = [](const Option& x) {
      return std::make_tuple(x.infeasible, x.regressions, x.human_cost, x.chosen.size());
    };
    if (!best || key(o) < key(*best)) best = std::move(o);
  }

  if (best->infeasible > 0) {
    for (const auto& s : best->steps)
      if (s.actor == Actor::human && !s.assisted.feasible)
        throw PlanningFailed("key-frame " + std::to_string(s.step_id) + " (" + s.name +
                             ") cannot be satisfied: " + s.assisted.reason);
  }

  Plan plan;
  plan.arrangement = arrangement;
  // Keep interventions in key-frame order.
  for (const auto& kf : task.key_frames)
    if (kf.support != Intervention::none &&
        std::find(best->chosen.begin(), best->chosen.end(), kf.support) != best->chosen.end() &&
        std::find(plan.interventions.begin(), plan.interventions.end(), kf.support) ==
            plan.interventions.end())
      plan.interventions.push_back(kf.support);
  plan.steps = std::move(best->steps);

  const auto& bottle = scene.of_kind(ObjectKind::bottle);
  const auto& glass = scene.of_kind(ObjectKind::glass);
  plan.bottle_id = bottle.id;
  plan.cap_id = scene.of_kind(ObjectKind::cap).id;
  plan.glass_id = glass.id;
  plan.glass_start = glass.pose;
  plan.cap_target = best->cap_from_arrangement ? arrangement.cap_drop_zone
                                               : identity_arrangement(scene, cfg.geometry).cap_drop_zone;
  plan.bottle_rest = bottle_rest_point(scene, arrangement.bottle_hold);
  return plan;
}

/// Interaction script for the pouring task: speech lines, cues and robot
/// actions bound to each step of the plan.
inline std::vector<ScriptItem> compile_script(const Plan& plan, const TaskTemplate& task,
                                              const PlannerConfig& cfg = {}) {
  std::vector<ScriptItem> items;
  const bool hold = plan.uses(Intervention::hold_bottle);
  const bool push = plan.uses(Intervention::push_glass);
  auto human = [](int step, std::string instruction) {
    ScriptItem it;
    it.step_id = step;
    it.actor = Actor::human;
    it.instruction = std::move(instruction);
    it.completion = UserStepDone{step};
    return it;
  };
  auto robot = [](int step) {
    ScriptItem it;
    it.step_id = step;
    it.actor = Actor::robot;
    it.completion = RobotActionDone{step};
    return it;
  };

  for (const auto& kf : task.key_frames) {
    switch (kf.step_id) {
      case 1: {
        if (hold) {
          ScriptItem it = robot(1);
          it.actions = {AtomicAction::make(Verb::grasp, plan.bottle_id),
                        AtomicAction::make(Verb::hold, plan.bottle_id, std::nullopt,
                                           plan.arrangement.bottle_hold)};
          it.speech = std::string(speech::kHoldBottle);
          items.push_back(std::move(it));
        } else {
          items.push_back(human(1, kf.name));
        }
        break;
      }
      case 2: {
        ScriptItem it = human(2, kf.name);
        it.speech = std::string(speech::kRemoveCap);
        it.cues = {CueSpec::spinning_arrows(plan.cap_id)};
        items.push_back(std::move(it));
        break;
      }
      case 3: {
        ScriptItem it = human(3, kf.name);
        it.speech = std::string(speech::kPutCap);
        if (hold) {
          it.actions = {AtomicAction::make(Verb::put_down, plan.bottle_id,
                                           Pose2D{plan.bottle_rest.x, plan.bottle_rest.y, 0.0})};
        }
        items.push_back(std::move(it));
        break;
      }
      case 4: {
        if (push) {
          ScriptItem it = robot(4);
          const Pose2D target = plan.arrangement.glass_target;
          it.actions = {AtomicAction::make(Verb::push, plan.glass_id, target)};
          it.speech = std::string(speech::kPushGlass);
          it.cues = {CueSpec::target_disc(target),
                     CueSpec::comet_trail(plan.glass_start, target, cfg.comet_loop_period)};
          items.push_back(std::move(it));
        }
        ScriptItem pour = human(4, kf.name);
        pour.speech = std::string(speech::kPour);
        items.push_back(std::move(pour));
        break;
      }
      default:
        items.push_back(human(kf.step_id, kf.name));
        break;
    }
  }
  return items;
}

/// Baseline prediction, arrangement optimization, allocation and script.
inline Plan plan_task(const Scene& scene, const TaskTemplate& task, const PlannerConfig& cfg = {}) {
  const auto baseline = predict_human_baseline(scene, task, cfg);
  const auto arranged = optimize_arrangement(scene, task, cfg.arrangement);
  Plan plan = allocate_steps(scene, task, arranged.arrangement, baseline, cfg);
  plan.items = compile_script(plan, task, cfg);
  return plan;
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const ReachTarget& t) { return {{"r", t.r}, {"z", t.z}}; }

inline json to_json(const StepCost& c) {
  if (!c.feasible) return {{"feasible", false}, {"reason", c.reason}};
  return {{"feasible", true}, {"cost", c.cost}};
}

inline json to_json(const Arrangement& a) {
  return {{"glass_target", to_json(a.glass_target)},
          {"bottle_hold", to_json(a.bottle_hold)},
          {"cap_drop_zone", to_json(a.cap_drop_zone)}};
}

inline json to_json(const AtomicAction& a) {
  json j = {{"verb", std::string(to_string(a.verb))}, {"object", a.object}};
  if (a.target_pose) j["target"] = to_json(*a.target_pose);
  if (a.target_reach) j["reach"] = to_json(*a.target_reach);
  return j;
}

inline json to_json(const CueSpec& c) {
  json j = {{"kind", std::string(to_string(c.kind))}};
  if (c.anchor_object) j["anchor"] = *c.anchor_object;
  if (c.anchor_pose) j["anchor"] = to_json(*c.anchor_pose);
  if (c.end) j["end"] = to_json(*c.end);
  if (c.kind == CueKind::comet_trail) j["loop_period"] = c.loop_period;
  if (c.kind == CueKind::spinning_arrows) j["arrow_count"] = c.arrow_count;
  return j;
}

inline json to_json(const ScriptItem& it) {
  json actions = json::array();
  for (const auto& a : it.actions) actions.push_back(to_json(a));
  json cues = json::array();
  for (const auto& c : it.cues) cues.push_back(to_json(c));
  json j = {{"step", it.step_id},
            {"actor", std::string(to_string(it.actor))},
            {"actions", actions},
            {"cues", cues},
            {"completion", to_json(it.completion)}};
  if (!it.instruction.empty()) j["instruction"] = it.instruction;
  j["speech"] = it.speech ? json(*it.speech) : json(nullptr);
  return j;
}

inline json to_json(const Plan& p) {
  json steps = json::array();
  for (const auto& s : p.steps)
    steps.push_back({{"step", s.step_id},
                     {"name", s.name},
                     {"actor", std::string(to_string(s.actor))},
                     {"baseline", to_json(s.baseline)},
                     {"assisted", to_json(s.assisted)}});
  json interventions = json::array();
  for (auto i : p.interventions) interventions.push_back(std::string(to_string(i)));
  json items = json::array();
  for (const auto& it : p.items) items.push_back(to_json(it));
  return {{"arrangement", to_json(p.arrangement)},
          {"interventions", interventions},
          {"steps", steps},
          {"script", items},
          {"cap_target", to_json(p.cap_target)},
          {"bottle_rest", {{"x", p.bottle_rest.x}, {"y", p.bottle_rest.y}}}};
}

}  // namespace ergo_assist
