#pragma once

// Key-frame task templates. A key-frame constrains where objects are and
// where the human's hands must be at one semantic step of a task.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergo_assist/scene.hpp"

namespace ergo_assist {

enum class Actor { robot, human };

inline std::string_view to_string(Actor a) { return a == Actor::robot ? "robot" : "human"; }

/// Where a hand target comes from.
enum class Slot {
  object_pose,    // current pose of an object in the scene
  bottle_hold,    // pose at which the robot holds the bottle
  cap_drop_zone,  // where the cap is put down
  glass_target,   // where the glass ends up
};

inline std::string_view to_string(Slot s) {
  switch (s) {
    case Slot::object_pose: return "object_pose";
    case Slot::bottle_hold: return "bottle_hold";
    case Slot::cap_drop_zone: return "cap_drop_zone";
    case Slot::glass_target: return "glass_target";
  }
  return "?";
}

enum class RelationKind { at_position, aligned_above, held_by };

/// at_position(subject, slot) | aligned_above(subject, other) | held_by(subject, actor)
struct Relation {
  RelationKind kind = RelationKind::at_position;
  ObjectKind subject = ObjectKind::bottle;
  Slot slot = Slot::object_pose;
  ObjectKind other = ObjectKind::glass;
  Actor actor = Actor::human;

  static Relation at_position(ObjectKind o, Slot s) { return {RelationKind::at_position, o, s}; }
  static Relation aligned_above(ObjectKind a, ObjectKind b) {
    return {RelationKind::aligned_above, a, Slot::object_pose, b};
  }
  static Relation held_by(ObjectKind o, Actor a) {
    return {RelationKind::held_by, o, Slot::object_pose, ObjectKind::glass, a};
  }
  friend bool operator==(const Relation&, const Relation&) = default;
};

/// A point the human's hand must reach. `height` is above the table top
/// except for the bottle_hold slot, which carries its own height.
struct HandTarget {
  Slot slot = Slot::object_pose;
  ObjectKind object = ObjectKind::bottle;  // resolved for object_pose; names the reach failure
  double height = 0.0;
  std::optional<ObjectKind> load;  // object held in this hand while reaching
  friend bool operator==(const HandTarget&, const HandTarget&) = default;
};

struct HandSet {
  std::vector<HandTarget> targets;
  bool distinct_sides = false;  // each target needs its own hand
  friend bool operator==(const HandSet&, const HandSet&) = default;
};

/// Robot intervention able to serve a key-frame for the human.
enum class Intervention { none, hold_bottle, push_glass };

inline std::string_view to_string(Intervention i) {
  switch (i) {
    case Intervention::none: return "none";
    case Intervention::hold_bottle: return "hold_bottle";
    case Intervention::push_glass: return "push_glass";
  }
  return "?";
}

struct KeyFrame {
  int step_id = 0;
  std::string name;
  ObjectKind manipulated_object = ObjectKind::bottle;
  std::vector<Relation> object_constraints;
  HandSet hands;                         // human hands with the robot's support in place
  Intervention support = Intervention::none;
  std::optional<HandSet> unaided_hands;  // human hands without that support

  /// The arrangement slot this key-frame's hand targets depend on, if any.
  std::optional<Slot> arrangement_slot() const {
    for (const auto& t : hands.targets)
      if (t.slot != Slot::object_pose) return t.slot;
    return std::nullopt;
  }
  friend bool operator==(const KeyFrame&, const KeyFrame&) = default;
};

/// The same step performed by the human alone.
inline KeyFrame unaided(const KeyFrame& kf) {
  KeyFrame out = kf;
  if (kf.unaided_hands) out.hands = *kf.unaided_hands;
  for (auto& r : out.object_constraints)
    if (r.kind == RelationKind::held_by) r.actor = Actor::human;
  out.support = Intervention::none;
  out.unaided_hands.reset();
  return out;
}

struct TaskTemplate {
  std::string name;
  std::vector<KeyFrame> key_frames;
  std::string trigger_phrase;
  friend bool operator==(const TaskTemplate&, const TaskTemplate&) = default;
};

/// Geometry parameters of the pouring template, all above the table top.
struct PouringGeometry {
  double pour_height = 0.20;  // hand height while the bottle neck is over the glass
  double lift_height = 0.20;  // hand height while the user holds the bottle up alone
};

inline constexpr std::string_view kPouringTaskName = "pouring_water";
inline constexpr std::string_view kPouringTrigger = "Help me to get some water.";

inline TaskTemplate pouring_water_task(const Scene& scene, PouringGeometry geom = {}) {
  const double bottle_grasp = scene.of_kind(ObjectKind::bottle).grasp_height;
  const double cap_grasp = scene.of_kind(ObjectKind::cap).grasp_height;
  const double glass_grasp = scene.of_kind(ObjectKind::glass).grasp_height;
  using R = Relation;
  using K = ObjectKind;

  TaskTemplate t;
  t.name = std::string(kPouringTaskName);
  t.trigger_phrase = std::string(kPouringTrigger);

  KeyFrame grasp;
  grasp.step_id = 1;
  grasp.name = "grasp and lift the bottle";
  grasp.manipulated_object = K::bottle;
  grasp.object_constraints = {R::held_by(K::bottle, Actor::robot),
                              R::at_position(K::bottle, Slot::bottle_hold)};
  grasp.support = Intervention::hold_bottle;
  grasp.unaided_hands = HandSet{{HandTarget{Slot::object_pose, K::bottle, bottle_grasp, K::bottle}}};

  KeyFrame unscrew;
  unscrew.step_id = 2;
  unscrew.name = "unscrew the bottle cap";
  unscrew.manipulated_object = K::cap;
  unscrew.object_constraints = {R::held_by(K::bottle, Actor::robot),
                                R::at_position(K::bottle, Slot::bottle_hold)};
  unscrew.hands = {{HandTarget{Slot::bottle_hold, K::bottle, 0.0, std::nullopt}}};
  unscrew.support = Intervention::hold_bottle;
  // Alone, one hand holds the lifted bottle while the other turns the cap.
  unscrew.unaided_hands =
      HandSet{{HandTarget{Slot::object_pose, K::bottle, geom.lift_height, K::bottle},
               HandTarget{Slot::object_pose, K::bottle, geom.lift_height, std::nullopt}},
              true};

  KeyFrame put_cap;
  put_cap.step_id = 3;
  put_cap.name = "put the cap down";
  put_cap.manipulated_object = K::cap;
  put_cap.object_constraints = {R::held_by(K::cap, Actor::human),
                                R::at_position(K::cap, Slot::cap_drop_zone)};
  put_cap.hands = {{HandTarget{Slot::cap_drop_zone, K::cap, cap_grasp, K::cap}}};

  KeyFrame pour;
  pour.step_id = 4;
  pour.name = "pour the water into the glass";
  pour.manipulated_object = K::bottle;
  pour.object_constraints = {R::held_by(K::bottle, Actor::human),
                             R::aligned_above(K::bottle, K::glass),
                             R::at_position(K::glass, Slot::glass_target)};
  pour.hands = {{HandTarget{Slot::glass_target, K::glass, geom.pour_height, K::bottle}}};
  pour.support = Intervention::push_glass;

  KeyFrame drink;
  drink.step_id = 5;
  drink.name = "pick up the glass to drink";
  drink.manipulated_object = K::glass;
  drink.object_constraints = {R::held_by(K::glass, Actor::human),
                              R::at_position(K::glass, Slot::glass_target)};
  drink.hands = {{HandTarget{Slot::glass_target, K::glass, glass_grasp, K::glass}}};
  drink.support = Intervention::push_glass;

  t.key_frames = {grasp, unscrew, put_cap, pour, drink};
  return t;
}

/// Looks up a task template by name for a given scene.
inline TaskTemplate task_by_name(std::string_view name, const Scene& scene) {
  if (name == kPouringTaskName || name == "pouring" || name == "pour") return pouring_water_task(scene);
  throw std::invalid_argument("unknown task: " + std::string(name));
}

/// Checks the structural invariants of a template.
inline void validate_task(const TaskTemplate& task) {
  int aligned = 0;
  for (std::size_t i = 0; i < task.key_frames.size(); ++i) {
    const auto& kf = task.key_frames[i];
    if (kf.step_id != static_cast<int>(i) + 1)
      throw std::invalid_argument("key-frame step ids must run 1..n in order");
    std::optional<Slot> slot;
    for (const auto& t : kf.hands.targets) {
      if (t.slot == Slot::object_pose) continue;
      if (slot && *slot != t.slot)
        throw std::invalid_argument("a key-frame may depend on one arrangement slot");
      slot = t.slot;
    }
    for (const auto& r : kf.object_constraints)
      if (r.kind == RelationKind::aligned_above) ++aligned;
  }
  if (aligned > 1) throw std::invalid_argument("aligned_above appears in one key-frame only");
}

}  // namespace ergo_assist
