#pragma once

// Static posture model of the seated human.
//
// The body is a planar chain hip -> shoulder -> elbow -> hand evaluated in the
// vertical plane through the shoulder and the reach target. Coordinates in
// that plane are (r, z): r horizontal distance from the point below the
// shoulder, z height above the hip pivot.
//
//   torso_pitch       angle of the torso from vertical, forward lean positive
//   shoulder_flexion  angle of the upper arm from hanging straight down
//   elbow_flexion     angle of the forearm relative to the upper arm
//
// The upper-arm angle is measured against gravity, not against the torso, so
// leaning the torso translates the arm without rotating it.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "ergo_assist/errors.hpp"
#include "ergo_assist/scene.hpp"

namespace ergo_assist {

inline constexpr double kGravity = 9.81;

struct Posture {
  double torso_pitch = 0.0;
  double shoulder_flexion = 0.0;
  double elbow_flexion = 0.0;
  Side side = Side::right;

  std::array<double, 3> angles() const { return {torso_pitch, shoulder_flexion, elbow_flexion}; }
  friend bool operator==(const Posture&, const Posture&) = default;
};

struct TorqueVector {
  std::array<double, 3> tau{};  // N*m: torso, shoulder, elbow
  double operator[](std::size_t i) const { return tau[i]; }
};

/// Hand target in the shoulder plane; r >= 0.
struct ReachTarget {
  double r = 0.0;
  double z = 0.0;
  friend bool operator==(const ReachTarget&, const ReachTarget&) = default;
};

struct PlanarPoint {
  double r = 0.0;
  double z = 0.0;
};

struct ChainPositions {
  PlanarPoint shoulder;
  PlanarPoint elbow;
  PlanarPoint hand;
  std::array<PlanarPoint, 3> com;  // torso, upper arm, forearm
};

/// Reach target for a table-plane point at a height above the hip pivot.
inline ReachTarget reach_target(const HumanModel& model, Side side, Point2 p, double z) {
  return {distance(model.shoulder_base(side), p), z};
}

inline void check_joint_limits(const HumanModel& model, const Posture& p) {
  static constexpr const char* kNames[] = {"torso_pitch", "shoulder_flexion", "elbow_flexion"};
  const auto a = p.angles();
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(a[i]) || !model.joint_limits[i].contains(a[i]))
      throw JointLimit(std::string(kNames[i]) + " outside joint limits");
  }
}

namespace detail {

inline ChainPositions chain(const HumanModel& m, double t0, double t1, double t2) {
  ChainPositions c;
  const double s0 = std::sin(t0), c0 = std::cos(t0);
  const double s1 = std::sin(t1), c1 = std::cos(t1);
  const double s12 = std::sin(t1 + t2), c12 = std::cos(t1 + t2);
  c.shoulder = {m.torso_length * s0, m.torso_length * c0};
  c.elbow = {c.shoulder.r + m.upper_arm_length * s1, c.shoulder.z - m.upper_arm_length * c1};
  c.hand = {c.elbow.r + m.forearm_length * s12, c.elbow.z - m.forearm_length * c12};
  c.com[0] = {0.5 * c.shoulder.r, 0.5 * c.shoulder.z};
  c.com[1] = {0.5 * (c.shoulder.r + c.elbow.r), 0.5 * (c.shoulder.z + c.elbow.z)};
  c.com[2] = {0.5 * (c.elbow.r + c.hand.r), 0.5 * (c.elbow.z + c.hand.z)};
  return c;
}

inline TorqueVector torques(const HumanModel& m, double t0, double t1, double t2, double load) {
  // Gradient of U = g * (sum of mass * COM height), hand load as a point mass.
  const double arm_mass = m.upper_arm_mass + m.forearm_mass + load;
  const double forearm_moment = m.forearm_mass * 0.5 * m.forearm_length + load * m.forearm_length;
  TorqueVector t;
  t.tau[0] = -kGravity * std::sin(t0) * m.torso_length * (0.5 * m.torso_mass + arm_mass);
  t.tau[2] = kGravity * std::sin(t1 + t2) * forearm_moment;
  t.tau[1] = kGravity * std::sin(t1) * m.upper_arm_length *
                 (0.5 * m.upper_arm_mass + m.forearm_mass + load) +
             t.tau[2];
  return t;
}

inline double cost_of(const HumanModel& m, const TorqueVector& t) {
  double c = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double n = t.tau[i] / m.torque_limits[i];
    c += n * n;
  }
  return c;
}

}  // namespace detail

/// Link positions of a posture. Throws JointLimit outside the limits.
inline ChainPositions forward_kinematics(const HumanModel& model, const Posture& posture) {
  check_joint_limits(model, posture);
  return detail::chain(model, posture.torso_pitch, posture.shoulder_flexion, posture.elbow_flexion);
}

/// Static gravity torques; `load` is a point mass (kg) held in the hand.
inline TorqueVector gravity_torques(const HumanModel& model, const Posture& posture,
                                    double load = 0.0) {
  check_joint_limits(model, posture);
  return detail::torques(model, posture.torso_pitch, posture.shoulder_flexion,
                         posture.elbow_flexion, load);
}

/// Sum of squared torque-limit-normalized joint torques.
inline double posture_cost(const HumanModel& model, const Posture& posture, double load = 0.0) {
  return detail::cost_of(model, gravity_torques(model, posture, load));
}

struct IkOptions {
  double scan_step = deg(0.5);  // torso-lean grid
  bool refine = true;           // golden-section polish around the best grid lean
};

struct PostureSolution {
  Posture posture;
  double cost = 0.0;
};

namespace detail {

struct ArmAngles {
  double shoulder;
  double elbow;
};

/// Closed-form two-link IK, elbow below the shoulder-hand line.
inline std::optional<ArmAngles> arm_ik(const HumanModel& m, double reach_scale, PlanarPoint shoulder,
                                       ReachTarget target) {
  const double l1 = m.upper_arm_length, l2 = m.forearm_length;
  const double dr = target.r - shoulder.r, dz = target.z - shoulder.z;
  const double d = std::hypot(dr, dz);
  // Relative slack keeps boundary targets such as the rest pose reachable.
  if (d > reach_scale * (l1 + l2) * (1.0 + 1e-12) || d < std::abs(l1 - l2)) return std::nullopt;
  const double c = std::clamp((d * d - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double elbow = std::acos(c);
  const double toward = std::atan2(dr, -dz);
  const double offset = std::atan2(l2 * std::sin(elbow), l1 + l2 * std::cos(elbow));
  const double shoulder_angle = normalize_angle(toward - offset);
  if (!m.joint_limits[1].contains(shoulder_angle) || !m.joint_limits[2].contains(elbow))
    return std::nullopt;
  return ArmAngles{shoulder_angle, elbow};
}

struct LeanRange {
  double lo;
  double hi;
};

inline std::optional<LeanRange> lean_range(const HumanModel& m, const ImpairmentSpec& imp) {
  const double lo = m.joint_limits[0].lo;
  const double hi = std::min(m.joint_limits[0].hi, imp.max_torso_lean);
  if (hi < lo) return std::nullopt;
  return LeanRange{lo, hi};
}

inline std::optional<PostureSolution> at_lean(const HumanModel& m, const ImpairmentSpec& imp,
                                              ReachTarget target, Side side, double load,
                                              double lean) {
  const PlanarPoint shoulder{m.torso_length * std::sin(lean), m.torso_length * std::cos(lean)};
  auto arm = arm_ik(m, imp.reach_scale, shoulder, target);
  if (!arm) return std::nullopt;
  PostureSolution s;
  s.posture = {lean, arm->shoulder, arm->elbow, side};
  s.cost = cost_of(m, torques(m, lean, arm->shoulder, arm->elbow, load));
  return s;
}

}  // namespace detail

/// Minimum-cost posture reaching `target` with the given arm, or nullopt when
/// the side is disabled or the target is out of reach for every admissible lean.
inline std::optional<PostureSolution> try_solve_posture(const HumanModel& model,
                                                        const ImpairmentSpec& impairment,
                                                        ReachTarget target, Side side,
                                                        double load = 0.0,
                                                        const IkOptions& opt = {}) {
  if (!impairment.usable(side)) return std::nullopt;
  const auto range = detail::lean_range(model, impairment);
  if (!range) return std::nullopt;

  std::optional<PostureSolution> best;
  auto consider = [&](double lean) {
    auto s = detail::at_lean(model, impairment, target, side, load, lean);
    if (s && (!best || s->cost < best->cost)) best = s;
  };
  for (int k = 0;; ++k) {
    const double lean = range->lo + k * opt.scan_step;
    if (lean > range->hi) break;
    consider(lean);
  }
  consider(range->hi);
  if (!best) return std::nullopt;

  if (opt.refine) {
    const double center = best->posture.torso_pitch;
    double a = std::max(range->lo, center - opt.scan_step);
    double b = std::min(range->hi, center + opt.scan_step);
    auto f = [&](double lean) {
      auto s = detail::at_lean(model, impairment, target, side, load, lean);
      return s ? s->cost : std::numeric_limits<double>::infinity();
    };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
      if (f1 <= f2) {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - inv_phi * (b - a); f1 = f(x1);
      } else {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + inv_phi * (b - a); f2 = f(x2);
      }
    }
    auto polished = detail::at_lean(model, impairment, target, side, load, f1 <= f2 ? x1 : x2);
    if (polished && polished->cost < best->cost) best = polished;
  }
  return best;
}

/// Throwing form of try_solve_posture: SideDisabled or Unreachable.
inline PostureSolution solve_posture(const HumanModel& model, const ImpairmentSpec& impairment,
                                     ReachTarget target, Side side, double load = 0.0,
                                     const IkOptions& opt = {}) {
  if (!impairment.usable(side))
    throw SideDisabled(std::string(to_string(side)) + " arm is disabled");
  auto s = try_solve_posture(model, impairment, target, side, load, opt);
  if (!s) throw Unreachable("target out of reach");
  return *s;
}

inline bool reach_feasible(const HumanModel& model, const ImpairmentSpec& impairment,
                           ReachTarget target, Side side) {
  return try_solve_posture(model, impairment, target, side).has_value();
}

}  // namespace ergo_assist
