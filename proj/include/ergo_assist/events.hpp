#pragma once

// Input events consumed by the interaction engine and their JSON form:
//   {"type": "TriggerPhrase", "text": "..."}
//   {"type": "RobotActionDone", "step": 1}
//   {"type": "UserStepDone", "step": 2}
//   {"type": "ObjectMoved", "id": "glass", "pose": {"x": 0.1, "y": 0.2, "yaw": 0}}
//   {"type": "Abort"}
//   {"type": "Tick", "dt": 0.1}

#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "ergo_assist/errors.hpp"
#include "ergo_assist/scene.hpp"

namespace ergo_assist {

struct TriggerPhrase {
  std::string text;
  friend bool operator==(const TriggerPhrase&, const TriggerPhrase&) = default;
};

struct RobotActionDone {
  int step_id = 0;
  friend bool operator==(const RobotActionDone&, const RobotActionDone&) = default;
};

struct UserStepDone {
  int step_id = 0;
  friend bool operator==(const UserStepDone&, const UserStepDone&) = default;
};

struct ObjectMoved {
  std::string id;
  Pose2D pose;
  friend bool operator==(const ObjectMoved&, const ObjectMoved&) = default;
};

struct Abort {
  friend bool operator==(const Abort&, const Abort&) = default;
};

struct Tick {
  double dt = 0.0;
  friend bool operator==(const Tick&, const Tick&) = default;
};

using Event = std::variant<TriggerPhrase, RobotActionDone, UserStepDone, ObjectMoved, Abort, Tick>;

inline json to_json(const Event& e) {
  return std::visit(
      [](const auto& ev) -> json {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, TriggerPhrase>) return {{"type", "TriggerPhrase"}, {"text", ev.text}};
        if constexpr (std::is_same_v<T, RobotActionDone>) return {{"type", "RobotActionDone"}, {"step", ev.step_id}};
        if constexpr (std::is_same_v<T, UserStepDone>) return {{"type", "UserStepDone"}, {"step", ev.step_id}};
        if constexpr (std::is_same_v<T, ObjectMoved>)
          return {{"type", "ObjectMoved"}, {"id", ev.id}, {"pose", to_json(ev.pose)}};
        if constexpr (std::is_same_v<T, Abort>) return {{"type", "Abort"}};
        if constexpr (std::is_same_v<T, Tick>) return {{"type", "Tick"}, {"dt", ev.dt}};
      },
      e);
}

/// Parses an event document; throws SchemaError on malformed input.
inline Event event_from_json(const json& j) {
  detail::Reader r(j, "event");
  const std::string type = r.text("type");
  auto step = [&]() {
    const json& v = r.at("step");
    if (!v.is_number_integer()) throw SchemaError("event.step: expected integer");
    return v.get<int>();
  };
  if (type == "TriggerPhrase") {
    r.allow({"type", "text"});
    return TriggerPhrase{r.text("text")};
  }
  if (type == "RobotActionDone") {
    r.allow({"type", "step"});
    return RobotActionDone{step()};
  }
  if (type == "UserStepDone") {
    r.allow({"type", "step"});
    return UserStepDone{step()};
  }
  if (type == "ObjectMoved") {
    r.allow({"type", "id", "pose"});
    return ObjectMoved{r.text("id"), detail::read_pose(r.at("pose"), "event.pose")};
  }
  if (type == "Abort") {
    r.allow({"type"});
    return Abort{};
  }
  if (type == "Tick") {
    r.allow({"type", "dt"});
    return Tick{r.number("dt")};
  }
  throw SchemaError("event.type: unknown event '" + type + "'");
}

}  // namespace ergo_assist
