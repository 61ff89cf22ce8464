#pragma once

// Tabletop world model: object poses, table geometry, the seated human and
// their impairment. Scenes are immutable values; every operation returns a
// new Scene.
//
// Table frame: origin at the table center, +x to the seated user's right,
// +y away from the user, z measured upward from the human hip pivot.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergo_assist/errors.hpp"

namespace ergo_assist {

using json = nlohmann::json;

inline constexpr int kSceneSchemaVersion = 1;

/// Cap placement relative to its parent after it is unscrewed.
inline constexpr double kDetachOffsetX = 0.06;

/// Pseudo-object ids an object can be attached to while being held.
inline constexpr std::string_view kRobotHand = "robot";
inline constexpr std::string_view kHumanHand = "human";

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  Point2 position() const { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

enum class ObjectKind { bottle, cap, glass };
enum class Side { left, right };
enum class DisabledSide { none, left, right };

inline std::string_view to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::bottle: return "bottle";
    case ObjectKind::cap: return "cap";
    case ObjectKind::glass: return "glass";
  }
  return "?";
}

inline std::string_view to_string(Side s) { return s == Side::left ? "left" : "right"; }

inline std::string_view to_string(DisabledSide s) {
  switch (s) {
    case DisabledSide::none: return "none";
    case DisabledSide::left: return "left";
    case DisabledSide::right: return "right";
  }
  return "?";
}

inline Side mirror(Side s) { return s == Side::left ? Side::right : Side::left; }

struct ObjectInstance {
  std::string id;
  ObjectKind kind = ObjectKind::bottle;
  Pose2D pose;
  double grasp_height = 0.0;  // above the table top
  double mass = 0.0;          // load added to the hand while a human holds it
  std::optional<std::string> attached_to;

  bool is_free() const { return !attached_to.has_value(); }
  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

struct Table {
  double half_extent_x = 0.6;
  double half_extent_y = 0.4;
  double top_height = 0.30;  // above the hip pivot

  bool contains(Point2 p) const {
    return std::abs(p.x) <= half_extent_x + 1e-12 && std::abs(p.y) <= half_extent_y + 1e-12;
  }
  friend bool operator==(const Table&, const Table&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

inline constexpr double deg(double d) { return d * std::numbers::pi / 180.0; }

/// Seated human as a planar torso / upper-arm / forearm chain.
/// Joint order everywhere: 0 torso pitch, 1 shoulder flexion, 2 elbow flexion.
struct HumanModel {
  Pose2D hip_anchor{0.0, -0.55, std::numbers::pi / 2.0};
  double shoulder_lateral_offset = 0.18;
  double torso_length = 0.50;
  double upper_arm_length = 0.30;
  double forearm_length = 0.35;
  double torso_mass = 32.0;
  double upper_arm_mass = 2.0;
  double forearm_mass = 1.7;
  std::array<Interval, 3> joint_limits{
      Interval{0.0, deg(60.0)}, Interval{deg(-30.0), deg(150.0)}, Interval{0.0, deg(150.0)}};
  std::array<double, 3> torque_limits{100.0, 40.0, 20.0};

  /// Unit vector the user faces, in the table plane.
  Point2 facing() const { return {std::cos(hip_anchor.yaw), std::sin(hip_anchor.yaw)}; }

  /// Table-plane point directly below the shoulder of the given side.
  Point2 shoulder_base(Side side) const {
    const Point2 f = facing();
    const Point2 right{f.y, -f.x};
    const double s = side == Side::right ? 1.0 : -1.0;
    return {hip_anchor.x + s * shoulder_lateral_offset * right.x,
            hip_anchor.y + s * shoulder_lateral_offset * right.y};
  }

  double arm_length() const { return upper_arm_length + forearm_length; }

  friend bool operator==(const HumanModel&, const HumanModel&) = default;
};

struct ImpairmentSpec {
  DisabledSide disabled_side = DisabledSide::none;
  double reach_scale = 1.0;
  double max_torso_lean = 0.35;

  bool usable(Side s) const {
    if (disabled_side == DisabledSide::none) return true;
    return (s == Side::left) != (disabled_side == DisabledSide::left);
  }

  /// Sides the human can act with; the dominant right side first.
  std::vector<Side> usable_sides() const {
    std::vector<Side> out;
    for (Side s : {Side::right, Side::left})
      if (usable(s)) out.push_back(s);
    return out;
  }

  friend bool operator==(const ImpairmentSpec&, const ImpairmentSpec&) = default;
};

struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(Point2 p) const {
    return p.x >= x_min - 1e-12 && p.x <= x_max + 1e-12 && p.y >= y_min - 1e-12 &&
           p.y <= y_max + 1e-12;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Scene {
  Table table;
  std::vector<ObjectInstance> objects;
  HumanModel human;
  ImpairmentSpec impairment;
  Rect robot_workspace{-0.6, 0.6, -0.4, 0.4};

  const ObjectInstance* find(std::string_view id) const {
    auto it = std::find_if(objects.begin(), objects.end(),
                           [&](const ObjectInstance& o) { return o.id == id; });
    return it == objects.end() ? nullptr : &*it;
  }

  const ObjectInstance& get(std::string_view id) const {
    const ObjectInstance* o = find(id);
    if (!o) throw UnknownObject(std::string(id));
    return *o;
  }

  /// The single object of a kind. Throws ValidationError if absent.
  const ObjectInstance& of_kind(ObjectKind kind) const {
    for (const auto& o : objects)
      if (o.kind == kind) return o;
    throw ValidationError("exactly one " + std::string(to_string(kind)));
  }

  std::size_t free_object_count() const {
    return static_cast<std::size_t>(
        std::count_if(objects.begin(), objects.end(), [](const auto& o) { return o.is_free(); }));
  }

  friend bool operator==(const Scene&, const Scene&) = default;
};

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline bool finite(const Pose2D& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.yaw);
}

inline void require(bool ok, const std::string& invariant) {
  if (!ok) throw ValidationError(invariant);
}

}  // namespace detail

/// Checks invariants that hold at every point of a session.
inline void validate_world(const Scene& s) {
  using detail::require;
  require(s.table.half_extent_x > 0 && s.table.half_extent_y > 0 && s.table.top_height > 0,
          "table extents positive");

  std::set<std::string> ids;
  for (const auto& o : s.objects) {
    require(!o.id.empty(), "object id non-empty");
    require(o.id != kRobotHand && o.id != kHumanHand, "object id not reserved");
    require(ids.insert(o.id).second, "ids unique");
    require(detail::finite(o.pose), "finite values");
    require(o.pose.yaw > -std::numbers::pi && o.pose.yaw <= std::numbers::pi, "yaw normalized");
    require(std::isfinite(o.grasp_height) && o.grasp_height >= 0, "grasp height non-negative");
    require(std::isfinite(o.mass) && o.mass >= 0, "mass non-negative");
  }
  for (ObjectKind k : {ObjectKind::bottle, ObjectKind::cap, ObjectKind::glass}) {
    auto n = std::count_if(s.objects.begin(), s.objects.end(),
                           [k](const auto& o) { return o.kind == k; });
    require(n == 1, "exactly one " + std::string(to_string(k)));
  }
  for (const auto& o : s.objects) {
    if (o.attached_to) {
      const auto& a = *o.attached_to;
      require(a == kRobotHand || a == kHumanHand || (ids.count(a) && a != o.id),
              "attached_to names an object or hand");
    } else {
      require(s.table.contains(o.pose.position()), "object within table");
    }
  }

  const auto& h = s.human;
  require(detail::finite(h.hip_anchor), "finite values");
  require(h.torso_length > 0 && h.upper_arm_length > 0 && h.forearm_length > 0 &&
              h.torso_mass > 0 && h.upper_arm_mass > 0 && h.forearm_mass > 0,
          "lengths and masses positive");
  require(h.shoulder_lateral_offset >= 0, "shoulder offset non-negative");
  for (const auto& iv : h.joint_limits) require(iv.lo <= iv.hi, "joint intervals non-empty");
  for (double t : h.torque_limits) require(t > 0, "torque limits positive");

  const auto& imp = s.impairment;
  require(imp.reach_scale > 0 && imp.reach_scale <= 1, "reach_scale in (0,1]");
  require(imp.max_torso_lean >= 0, "max_torso_lean non-negative");

  const auto& w = s.robot_workspace;
  require(w.x_min <= w.x_max && w.y_min <= w.y_max, "robot workspace non-empty");
  require(w.x_max >= -s.table.half_extent_x && w.x_min <= s.table.half_extent_x &&
              w.y_max >= -s.table.half_extent_y && w.y_min <= s.table.half_extent_y,
          "robot workspace intersects table");
}

/// Checks world invariants plus the initial state of the pouring task.
inline void validate_scene(const Scene& s) {
  validate_world(s);
  const auto& cap = s.of_kind(ObjectKind::cap);
  const auto& bottle = s.of_kind(ObjectKind::bottle);
  detail::require(cap.attached_to == bottle.id, "cap attached to bottle");
  detail::require(bottle.is_free(), "bottle starts on the table");
}

// ---------------------------------------------------------------------------
// Scene document I/O

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_ + ": expected object");
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
        throw SchemaError(path_ + ": unknown key '" + it.key() + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& at(const char* key) const {
    if (!j_.contains(key)) throw SchemaError(path_ + ": missing key '" + key + "'");
    return j_.at(key);
  }

  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) throw SchemaError(sub(key) + ": expected number");
    return v.get<double>();
  }

  double number_or(const char* key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::string text(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) throw SchemaError(sub(key) + ": expected string");
    return v.get<std::string>();
  }

  std::string sub(const char* key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
};

inline Pose2D read_pose(const json& j, const std::string& path) {
  Reader r(j, path);
  r.allow({"x", "y", "yaw"});
  return {r.number("x"), r.number("y"), normalize_angle(r.number_or("yaw", 0.0))};
}

inline Interval read_interval(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SchemaError(path + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline ObjectKind read_kind(const std::string& s, const std::string& path) {
  if (s == "bottle") return ObjectKind::bottle;
  if (s == "cap") return ObjectKind::cap;
  if (s == "glass") return ObjectKind::glass;
  throw SchemaError(path + ": unknown object kind '" + s + "'");
}

inline DisabledSide read_disabled(const std::string& s, const std::string& path) {
  if (s == "none") return DisabledSide::none;
  if (s == "left") return DisabledSide::left;
  if (s == "right") return DisabledSide::right;
  throw SchemaError(path + ": disabled_side must be left, right or none");
}

inline json pose_json(const Pose2D& p) { return {{"x", p.x}, {"y", p.y}, {"yaw", p.yaw}}; }

}  // namespace detail

inline json to_json(const Pose2D& p) { return detail::pose_json(p); }

/// Parses and validates a scene document. Unknown keys are rejected.
inline Scene load_scene(const json& doc) {
  using detail::Reader;
  Reader root(doc, "scene");
  root.allow({"schema_version", "table", "objects", "human", "impairment", "robot_workspace"});
  const json& version = root.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSceneSchemaVersion)
    throw SchemaError("scene.schema_version: expected 1");

  Scene s;
  {
    Reader t(root.at("table"), "scene.table");
    t.allow({"half_extent_x", "half_extent_y", "top_height"});
    s.table.half_extent_x = t.number_or("half_extent_x", s.table.half_extent_x);
    s.table.half_extent_y = t.number_or("half_extent_y", s.table.half_extent_y);
    s.table.top_height = t.number_or("top_height", s.table.top_height);
  }

  const json& objs = root.at("objects");
  if (!objs.is_array()) throw SchemaError("scene.objects: expected array");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const std::string path = "scene.objects[" + std::to_string(i) + "]";
    Reader o(objs[i], path);
    o.allow({"id", "kind", "pose", "grasp_height", "mass", "attached_to"});
    ObjectInstance inst;
    inst.id = o.text("id");
    inst.kind = detail::read_kind(o.text("kind"), o.sub("kind"));
    inst.grasp_height = o.number("grasp_height");
    inst.mass = o.number_or("mass", 0.0);
    if (o.has("attached_to")) inst.attached_to = o.text("attached_to");
    if (o.has("pose")) {
      inst.pose = detail::read_pose(o.at("pose"), o.sub("pose"));
    } else if (!inst.attached_to) {
      throw SchemaError(path + ": missing key 'pose'");
    }
    s.objects.push_back(std::move(inst));
  }
  // Attached objects without a pose of their own sit at their parent.
  for (std::size_t i = 0; i < objs.size(); ++i) {
    auto& inst = s.objects[i];
    if (inst.attached_to && !objs[i].contains("pose")) {
      if (const ObjectInstance* parent = s.find(*inst.attached_to)) inst.pose = parent->pose;
    }
  }

  {
    Reader h(root.at("human"), "scene.human");
    h.allow({"hip_anchor", "shoulder_lateral_offset", "torso_length", "upper_arm_length",
             "forearm_length", "torso_mass", "upper_arm_mass", "forearm_mass", "joint_limits",
             "torque_limits"});
    auto& m = s.human;
    if (h.has("hip_anchor")) m.hip_anchor = detail::read_pose(h.at("hip_anchor"), h.sub("hip_anchor"));
    m.shoulder_lateral_offset = h.number_or("shoulder_lateral_offset", m.shoulder_lateral_offset);
    m.torso_length = h.number_or("torso_length", m.torso_length);
    m.upper_arm_length = h.number_or("upper_arm_length", m.upper_arm_length);
    m.forearm_length = h.number_or("forearm_length", m.forearm_length);
    m.torso_mass = h.number_or("torso_mass", m.torso_mass);
    m.upper_arm_mass = h.number_or("upper_arm_mass", m.upper_arm_mass);
    m.forearm_mass = h.number_or("forearm_mass", m.forearm_mass);
    if (h.has("joint_limits")) {
      Reader jl(h.at("joint_limits"), h.sub("joint_limits"));
      jl.allow({"torso_pitch", "shoulder_flexion", "elbow_flexion"});
      const char* names[] = {"torso_pitch", "shoulder_flexion", "elbow_flexion"};
      for (int k = 0; k < 3; ++k)
        if (jl.has(names[k]))
          m.joint_limits[k] = detail::read_interval(jl.at(names[k]), jl.sub(names[k]));
    }
    if (h.has("torque_limits")) {
      Reader tl(h.at("torque_limits"), h.sub("torque_limits"));
      tl.allow({"torso", "shoulder", "elbow"});
      m.torque_limits[0] = tl.number_or("torso", m.torque_limits[0]);
      m.torque_limits[1] = tl.number_or("shoulder", m.torque_limits[1]);
      m.torque_limits[2] = tl.number_or("elbow", m.torque_limits[2]);
    }
  }

  {
    Reader im(root.at("impairment"), "scene.impairment");
    im.allow({"disabled_side", "reach_scale", "max_torso_lean"});
    s.impairment.disabled_side = detail::read_disabled(im.text("disabled_side"), im.sub("disabled_side"));
    s.impairment.reach_scale = im.number_or("reach_scale", s.impairment.reach_scale);
    s.impairment.max_torso_lean = im.number_or("max_torso_lean", s.impairment.max_torso_lean);
  }

  {
    Reader w(root.at("robot_workspace"), "scene.robot_workspace");
    w.allow({"x_min", "x_max", "y_min", "y_max"});
    s.robot_workspace = {w.number("x_min"), w.number("x_max"), w.number("y_min"), w.number("y_max")};
  }

  validate_scene(s);
  return s;
}

inline Scene load_scene_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scene file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return load_scene(doc);
}

/// Full scene document, every field written explicitly.
inline json serialize(const Scene& s) {
  json objs = json::array();
  for (const auto& o : s.objects) {
    json j = {{"id", o.id},
              {"kind", std::string(to_string(o.kind))},
              {"pose", detail::pose_json(o.pose)},
              {"grasp_height", o.grasp_height},
              {"mass", o.mass}};
    if (o.attached_to) j["attached_to"] = *o.attached_to;
    objs.push_back(std::move(j));
  }
  const auto& h = s.human;
  auto iv = [](const Interval& i) { return json::array({i.lo, i.hi}); };
  return {
      {"schema_version", kSceneSchemaVersion},
      {"table",
       {{"half_extent_x", s.table.half_extent_x},
        {"half_extent_y", s.table.half_extent_y},
        {"top_height", s.table.top_height}}},
      {"objects", objs},
      {"human",
       {{"hip_anchor", detail::pose_json(h.hip_anchor)},
        {"shoulder_lateral_offset", h.shoulder_lateral_offset},
        {"torso_length", h.torso_length},
        {"upper_arm_length", h.upper_arm_length},
        {"forearm_length", h.forearm_length},
        {"torso_mass", h.torso_mass},
        {"upper_arm_mass", h.upper_arm_mass},
        {"forearm_mass", h.forearm_mass},
        {"joint_limits",
         {{"torso_pitch", iv(h.joint_limits[0])},
          {"shoulder_flexion", iv(h.joint_limits[1])},
          {"elbow_flexion", iv(h.joint_limits[2])}}},
        {"torque_limits",
         {{"torso", h.torque_limits[0]},
          {"shoulder", h.torque_limits[1]},
          {"elbow", h.torque_limits[2]}}}}},
      {"impairment",
       {{"disabled_side", std::string(to_string(s.impairment.disabled_side))},
        {"reach_scale", s.impairment.reach_scale},
        {"max_torso_lean", s.impairment.max_torso_lean}}},
      {"robot_workspace",
       {{"x_min", s.robot_workspace.x_min},
        {"x_max", s.robot_workspace.x_max},
        {"y_min", s.robot_workspace.y_min},
        {"y_max", s.robot_workspace.y_max}}},
  };
}

// ---------------------------------------------------------------------------
// World updates

namespace detail {

inline ObjectInstance& mutable_object(Scene& s, std::string_view id) {
  auto it = std::find_if(s.objects.begin(), s.objects.end(),
                         [&](const ObjectInstance& o) { return o.id == id; });
  if (it == s.objects.end()) throw UnknownObject(std::string(id));
  return *it;
}

}  // namespace detail

/// Replaces the pose of a free object (simulated tracking update).
inline Scene apply_pose_update(const Scene& scene, std::string_view object_id, Pose2D new_pose) {
  Scene out = scene;
  ObjectInstance& o = detail::mutable_object(out, object_id);
  if (o.attached_to) throw ObjectAttached(o.id);
  new_pose.yaw = normalize_angle(new_pose.yaw);
  detail::require(detail::finite(new_pose), "finite values");
  detail::require(out.table.contains(new_pose.position()), "object within table");
  o.pose = new_pose;
  return out;
}

/// Frees an attached object and places it beside its former parent.
inline Scene detach(const Scene& scene, std::string_view object_id) {
  Scene out = scene;
  ObjectInstance& o = detail::mutable_object(out, object_id);
  if (!o.attached_to) throw NotAttached(o.id);
  Pose2D anchor = o.pose;
  if (const ObjectInstance* parent = scene.find(*o.attached_to)) anchor = parent->pose;
  o.attached_to.reset();
  o.pose = {anchor.x + kDetachOffsetX, anchor.y, anchor.yaw};
  return out;
}

/// Attaches an object to a holder (another object id, or a robot/human hand).
inline Scene attach(const Scene& scene, std::string_view object_id, std::string_view holder) {
  Scene out = scene;
  ObjectInstance& o = detail::mutable_object(out, object_id);
  o.attached_to = std::string(holder);
  return out;
}

/// Clears an attachment and sets the object's resting pose.
inline Scene release(const Scene& scene, std::string_view object_id, Pose2D pose) {
  Scene out = scene;
  ObjectInstance& o = detail::mutable_object(out, object_id);
  o.attached_to.reset();
  o.pose = {pose.x, pose.y, normalize_angle(pose.yaw)};
  return out;
}

/// Moves an object regardless of attachment (the holder carries it).
inline Scene carry(const Scene& scene, std::string_view object_id, Pose2D pose) {
  Scene out = scene;
  ObjectInstance& o = detail::mutable_object(out, object_id);
  o.pose = {pose.x, pose.y, normalize_angle(pose.yaw)};
  return out;
}

}  // namespace ergo_assist
