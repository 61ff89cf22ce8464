#pragma once

// Event-driven session state machine that steps through a compiled script.
// The state is a pure fold over the input events: dispatch() never mutates its
// argument and every input, including ignored ones, lands in the log so a
// fresh engine can replay it.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ergo_assist/events.hpp"
#include "ergo_assist/planner.hpp"

namespace ergo_assist {

enum class Phase { idle, awaiting_robot, awaiting_human, done, aborted };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::idle: return "idle";
    case Phase::awaiting_robot: return "awaiting_robot";
    case Phase::awaiting_human: return "awaiting_human";
    case Phase::done: return "done";
    case Phase::aborted: return "aborted";
  }
  return "?";
}

/// Log entry kinds.
namespace emit {
inline constexpr std::string_view kInput = "input";
inline constexpr std::string_view kIgnored = "ignored";
inline constexpr std::string_view kTriggerAck = "trigger_ack";
inline constexpr std::string_view kSpeech = "speech";
inline constexpr std::string_view kCueOn = "cue_on";
inline constexpr std::string_view kCueOff = "cue_off";
inline constexpr std::string_view kRobotAction = "robot_action";
inline constexpr std::string_view kSceneChanged = "scene_changed";
inline constexpr std::string_view kTaskComplete = "task_complete";
inline constexpr std::string_view kAborted = "aborted";
inline constexpr std::string_view kPlanningFailed = "planning_failed";
}  // namespace emit

struct LogEntry {
  double at = 0.0;
  std::string kind;
  json payload;
  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

inline json to_json(const LogEntry& e) { return {{"at", e.at}, {"kind", e.kind}, {"payload", e.payload}}; }

inline LogEntry log_entry_from_json(const json& j) {
  detail::Reader r(j, "log");
  r.allow({"at", "kind", "payload"});
  return {r.number("at"), r.text("kind"), j.contains("payload") ? j.at("payload") : json(nullptr)};
}

struct ActiveCue {
  CueSpec cue;
  double on_at = 0.0;
  friend bool operator==(const ActiveCue&, const ActiveCue&) = default;
};

struct EngineState {
  Phase phase = Phase::idle;
  Scene scene;
  TaskTemplate task;
  std::optional<Plan> plan;
  std::size_t cursor = 0;          // index of the active script item
  std::optional<Pose2D> anchor;    // manipulated object's pose when the item started
  double clock = 0.0;
  std::vector<ActiveCue> active_cues;
  std::vector<LogEntry> log;

  const ScriptItem* current() const {
    if (!plan || (phase != Phase::awaiting_robot && phase != Phase::awaiting_human)) return nullptr;
    return &plan->items[cursor];
  }
  friend bool operator==(const EngineState&, const EngineState&) = default;
};

struct EngineConfig {
  PlannerConfig planner;
  double arrow_angular_speed = std::numbers::pi;  // rad/s
  double robot_action_duration = 3.0;             // seconds, used by auto-mode drivers
  double move_threshold = 0.05;                   // "picked up" / "moved away" distance
  double pour_radius = 0.05;                      // bottle within this of the glass counts as pouring
};

using PlanFn = std::function<Plan(const Scene&, const TaskTemplate&)>;

/// Animation parameters of an active cue at the state's clock.
struct CueAnimation {
  CueSpec cue;
  double phase = 0.0;  // comet: fraction of the loop in [0, 1)
  double angle = 0.0;  // spinning arrows: rotation in radians
};

class Engine {
 public:
  explicit Engine(EngineConfig cfg = {}, PlanFn plan = {}) : cfg_(std::move(cfg)), plan_(std::move(plan)) {
    if (!plan_) {
      plan_ = [pc = cfg_.planner](const Scene& s, const TaskTemplate& t) { return plan_task(s, t, pc); };
    }
  }

  const EngineConfig& config() const { return cfg_; }

  EngineState start_session(const Scene& scene, const TaskTemplate& task) const {
    validate_scene(scene);
    validate_task(task);
    EngineState s;
    s.scene = scene;
    s.task = task;
    return s;
  }

  EngineState start_session(const Scene& scene, std::string_view task_name) const {
    validate_scene(scene);
    return start_session(scene, task_by_name(task_name, scene));
  }

  EngineState dispatch(EngineState s, const Event& ev) const {
    s.log.push_back({s.clock, std::string(emit::kInput), to_json(ev)});
    std::visit([&](const auto& e) { on(s, e); }, ev);
    return s;
  }

  EngineState tick(EngineState s, double dt) const { return dispatch(std::move(s), Tick{dt}); }

  std::vector<CueAnimation> animate(const EngineState& s) const {
    std::vector<CueAnimation> out;
    for (const auto& a : s.active_cues) {
      CueAnimation c{a.cue};
      const double t = s.clock - a.on_at;
      if (a.cue.kind == CueKind::comet_trail && a.cue.loop_period > 0) {
        const double cycles = t / a.cue.loop_period;
        c.phase = cycles - std::floor(cycles);
        // Guard the wrap against representation error (e.g. 0.7/0.7 landing below 1).
        if (std::abs(c.phase - 1.0) < 1e-9 || std::abs(c.phase) < 1e-9) c.phase = 0.0;
      }
      if (a.cue.kind == CueKind::spinning_arrows) c.angle = cfg_.arrow_angular_speed * t;
      out.push_back(c);
    }
    return out;
  }

 private:
  static void put(EngineState& s, std::string_view kind, json payload) {
    s.log.push_back({s.clock, std::string(kind), std::move(payload)});
  }
  static void ignore(EngineState& s, std::string reason) { put(s, emit::kIgnored, {{"reason", std::move(reason)}}); }

  static json object_json(const Scene& scene, const std::string& id) {
    const ObjectInstance& o = scene.get(id);
    json j = {{"id", o.id}, {"pose", to_json(o.pose)}};
    j["attached_to"] = o.attached_to ? json(*o.attached_to) : json(nullptr);
    return j;
  }
  static void changed(EngineState& s, const std::string& id) { put(s, emit::kSceneChanged, object_json(s.scene, id)); }

  // --- events -------------------------------------------------------------

  void on(EngineState& s, const TriggerPhrase& e) const {
    if (s.phase != Phase::idle) return ignore(s, "session already triggered");
    if (e.text != s.task.trigger_phrase) return ignore(s, "unrecognized phrase");
    Plan plan;
    try {
      plan = plan_(s.scene, s.task);
    } catch (const Error& err) {
      put(s, emit::kPlanningFailed, {{"error", err.what()}});
      s.phase = Phase::aborted;
      put(s, emit::kAborted, {{"reason", "planning failed"}});
      return;
    }
    json interventions = json::array();
    for (auto i : plan.interventions) interventions.push_back(std::string(to_string(i)));
    put(s, emit::kTriggerAck,
        {{"text", e.text}, {"interventions", interventions}, {"arrangement", to_json(plan.arrangement)}});
    s.plan = std::move(plan);
    s.cursor = 0;
    if (s.plan->items.empty()) return finish_task(s);
    enter(s);
  }

  void on(EngineState& s, const RobotActionDone& e) const {
    const ScriptItem* it = s.current();
    if (!it || it->completion != Event{e}) return ignore(s, "not awaiting this completion");
    complete(s);
  }

  void on(EngineState& s, const UserStepDone& e) const {
    const ScriptItem* it = s.current();
    if (!it || it->completion != Event{e}) return ignore(s, "not awaiting this completion");
    complete(s);
  }

  void on(EngineState& s, const Abort&) const {
    if (s.phase == Phase::done || s.phase == Phase::aborted) return ignore(s, "session already over");
    cues_off(s, true);
    s.phase = Phase::aborted;
    put(s, emit::kAborted, {{"reason", "abort"}});
  }

  void on(EngineState& s, const Tick& e) const {
    if (!(e.dt > 0.0) || !std::isfinite(e.dt)) return ignore(s, "tick dt must be positive");
    s.clock += e.dt;
  }

  void on(EngineState& s, const ObjectMoved& e) const {
    if (s.phase == Phase::done || s.phase == Phase::aborted) return ignore(s, "session already over");
    const ObjectInstance* obj = s.scene.find(e.id);
    if (!obj) return ignore(s, "unknown object " + e.id);
    if (!detail::finite(e.pose)) return ignore(s, "pose not finite");
    if (!s.scene.table.contains(e.pose.position())) return ignore(s, "pose off the table");

    const ScriptItem* it = s.current();
    const bool human_item = it && it->actor == Actor::human;
    const int step = it ? it->step_id : 0;
    const Plan* plan = s.plan ? &*s.plan : nullptr;

    if (obj->attached_to && *obj->attached_to == kRobotHand) return ignore(s, e.id + " is held by the robot");
    if (obj->attached_to && *obj->attached_to != kHumanHand) {
      // Only the cap comes off its parent, and only while the user is unscrewing it.
      if (!(human_item && step == 2 && obj->kind == ObjectKind::cap))
        return ignore(s, e.id + " is attached to " + *obj->attached_to);
      s.scene = release(s.scene, e.id, e.pose);
    } else if (obj->attached_to) {
      s.scene = (human_item && step == 3 && obj->kind == ObjectKind::cap) ? release(s.scene, e.id, e.pose)
                                                                          : carry(s.scene, e.id, e.pose);
    } else {
      s.scene = apply_pose_update(s.scene, e.id, e.pose);
    }
    changed(s, e.id);

    if (human_item && plan && step_satisfied(s, *plan, step, e.id)) complete(s, true);
  }

  // Geometric completion predicates for human steps.
  bool step_satisfied(const EngineState& s, const Plan& plan, int step, const std::string& moved) const {
    const Scene& sc = s.scene;
    auto pos = [&](const std::string& id) { return sc.get(id).pose.position(); };
    auto moved_away = [&](const std::string& id) {
      return s.anchor && distance(pos(id), s.anchor->position()) >= cfg_.move_threshold;
    };
    switch (step) {
      case 1: return moved == plan.bottle_id && moved_away(plan.bottle_id);
      case 2:
        return moved == plan.cap_id && sc.get(plan.cap_id).is_free() &&
               distance(pos(plan.cap_id), pos(plan.bottle_id)) >= cfg_.move_threshold;
      case 3: return moved == plan.cap_id && sc.get(plan.cap_id).is_free();
      case 4: return moved == plan.bottle_id && distance(pos(plan.bottle_id), pos(plan.glass_id)) <= cfg_.pour_radius;
      case 5: return moved == plan.glass_id && moved_away(plan.glass_id);
      default: return false;
    }
  }

  // --- script items -------------------------------------------------------

  static std::optional<std::string> manipulated_id(const EngineState& s, const ScriptItem& it) {
    for (const auto& kf : s.task.key_frames)
      if (kf.step_id == it.step_id) {
        for (const auto& o : s.scene.objects)
          if (o.kind == kf.manipulated_object) return o.id;
      }
    return std::nullopt;
  }

  void enter(EngineState& s) const {
    const ScriptItem& it = s.plan->items[s.cursor];
    s.phase = it.actor == Actor::robot ? Phase::awaiting_robot : Phase::awaiting_human;
    s.anchor.reset();
    if (auto id = manipulated_id(s, it)) s.anchor = s.scene.get(*id).pose;
    if (it.speech) put(s, emit::kSpeech, {{"step", it.step_id}, {"text", *it.speech}});
    for (const auto& c : it.cues) {
      put(s, emit::kCueOn, {{"step", it.step_id}, {"cue", to_json(c)}});
      s.active_cues.push_back({c, s.clock});
    }
    for (const auto& a : it.actions) {
      put(s, emit::kRobotAction, {{"step", it.step_id}, {"action", to_json(a)}});
      // Putting the bottle down is immediate; the user carries on meanwhile.
      if (a.verb == Verb::put_down && a.target_pose) {
        s.scene = release(s.scene, a.object, *a.target_pose);
        changed(s, a.object);
      }
    }
  }

  static void cues_off(EngineState& s, bool always) {
    if (s.active_cues.empty() && !always) return;
    json cues = json::array();
    for (const auto& a : s.active_cues) cues.push_back(to_json(a.cue));
    put(s, emit::kCueOff, {{"cues", cues}});
    s.active_cues.clear();
  }

  // `observed`: completion came from a pose update, which already placed the objects.
  void complete(EngineState& s, bool observed = false) const {
    const ScriptItem it = s.plan->items[s.cursor];
    const Plan& plan = *s.plan;
    cues_off(s, false);

    auto set = [&](Scene next, const std::string& id) {
      if (next == s.scene) return;
      s.scene = std::move(next);
      changed(s, id);
    };
    const ObjectInstance cap = s.scene.get(plan.cap_id);
    const ObjectInstance glass = s.scene.get(plan.glass_id);
    const ObjectInstance bottle = s.scene.get(plan.bottle_id);
    if (it.actor == Actor::robot) {
      if (it.step_id == 1) {
        const Point2 p = hold_point(s.scene, plan.arrangement.bottle_hold);
        set(carry(attach(s.scene, plan.bottle_id, kRobotHand), plan.bottle_id, {p.x, p.y, bottle.pose.yaw}),
            plan.bottle_id);
      }
      for (const auto& a : it.actions)
        if (a.verb == Verb::push && a.target_pose) set(release(s.scene, a.object, *a.target_pose), a.object);
    } else {
      switch (it.step_id) {
        case 1:
          if (bottle.is_free()) set(attach(s.scene, plan.bottle_id, kHumanHand), plan.bottle_id);
          break;
        case 2:
          if (cap.attached_to && *cap.attached_to != kHumanHand)
            set(attach(detach(s.scene, plan.cap_id), plan.cap_id, kHumanHand), plan.cap_id);
          break;
        case 3:
          if (!observed) set(release(s.scene, plan.cap_id, plan.cap_target), plan.cap_id);
          break;
        case 5:
          if (glass.is_free()) set(attach(s.scene, plan.glass_id, kHumanHand), plan.glass_id);
          break;
        default: break;
      }
    }

    ++s.cursor;
    if (s.cursor >= s.plan->items.size()) return finish_task(s);
    enter(s);
  }

  static void finish_task(EngineState& s) {
    s.phase = Phase::done;
    s.anchor.reset();
    put(s, emit::kTaskComplete, json::object());
  }

  EngineConfig cfg_;
  PlanFn plan_;
};

/// The full append-only log.
inline const std::vector<LogEntry>& session_log(const EngineState& s) { return s.log; }

/// Input events recorded in a log, in order.
inline std::vector<Event> input_events(const std::vector<LogEntry>& log) {
  std::vector<Event> out;
  for (const auto& e : log)
    if (e.kind == emit::kInput) out.push_back(event_from_json(e.payload));
  return out;
}

/// Folds events over a fresh session.
inline EngineState replay(const Engine& engine, const Scene& scene, const TaskTemplate& task,
                          const std::vector<Event>& events) {
  EngineState s = engine.start_session(scene, task);
  for (const auto& e : events) s = engine.dispatch(std::move(s), e);
  return s;
}

inline bool task_completed(const EngineState& s) { return s.phase == Phase::done; }

inline json to_json(const EngineState& s) {
  json cues = json::array();
  for (const auto& a : s.active_cues) cues.push_back({{"cue", to_json(a.cue)}, {"on_at", a.on_at}});
  json j = {{"phase", std::string(to_string(s.phase))},
            {"cursor", s.cursor},
            {"clock", s.clock},
            {"active_cues", cues},
            {"scene", serialize(s.scene)},
            {"log_length", s.log.size()}};
  if (const ScriptItem* it = s.current()) j["awaiting"] = to_json(it->completion);
  return j;
}

}  // namespace ergo_assist
