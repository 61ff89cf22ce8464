#pragma once

// Human-readable plan report and the cost-table CSV.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "ergo_assist/planner.hpp"

namespace ergo_assist {

namespace detail {

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string cost_cell(const StepCost& c) { return c.feasible ? fixed(c.cost) : "infeasible"; }

inline std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace detail

inline void write_plan_report(std::ostream& os, const Plan& plan) {
  using detail::fixed;
  using detail::pad;
  const auto& a = plan.arrangement;
  os << "arrangement\n"
     << "  glass target   (" << fixed(a.glass_target.x, 3) << ", " << fixed(a.glass_target.y, 3) << ")"
     << "  from (" << fixed(plan.glass_start.x, 3) << ", " << fixed(plan.glass_start.y, 3) << ")"
     << (plan.uses(Intervention::push_glass) ? "" : "  (unused, glass stays)") << "\n"
     << "  bottle hold    r=" << fixed(a.bottle_hold.r, 3) << " z=" << fixed(a.bottle_hold.z, 3)
     << (plan.uses(Intervention::hold_bottle) ? "" : "  (unused, user lifts the bottle)") << "\n"
     << "  cap drop zone  (" << fixed(a.cap_drop_zone.x, 3) << ", " << fixed(a.cap_drop_zone.y, 3) << ")\n\n";

  os << "robot interventions: ";
  if (plan.interventions.empty()) os << "none";
  for (std::size_t i = 0; i < plan.interventions.size(); ++i)
    os << (i ? ", " : "") << to_string(plan.interventions[i]);
  os << "\n\n";

  os << pad("step", 6) << pad("name", 32) << pad("actor", 8) << pad("baseline", 12) << "assisted\n";
  for (const auto& s : plan.steps) {
    os << pad(std::to_string(s.step_id), 6) << pad(s.name, 32) << pad(std::string(to_string(s.actor)), 8)
       << pad(detail::cost_cell(s.baseline), 12)
       << (s.actor == Actor::robot ? std::string("-") : detail::cost_cell(s.assisted)) << "\n";
  }
  os << "\nscript\n";
  for (const auto& it : plan.items) {
    os << "  [" << it.step_id << "] " << to_string(it.actor);
    if (!it.instruction.empty()) os << " " << it.instruction;
    // Robot actions started alongside a human step are marked as such.
    const bool side = it.actor == Actor::human && !it.actions.empty();
    if (side) os << " (robot:";
    for (const auto& act : it.actions) os << " " << to_string(act.verb) << "(" << act.object << ")";
    if (side) os << ")";
    if (it.speech) os << "  \"" << *it.speech << "\"";
    for (const auto& c : it.cues) os << "  <" << to_string(c.kind) << ">";
    os << "\n";
  }
}

inline constexpr std::string_view kCostCsvHeader = "gx,gy,hold_r,hold_z,capx,capy,cost";

/// One cost-table CSV line; candidates failing separation carry "inf".
inline void write_cost_row(std::ostream& os, const CostRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.3f,%.3f,%.3f,%.6f,%.3f,%.3f,", row.glass.x, row.glass.y, row.hold.r,
                row.hold.z, row.cap.x, row.cap.y);
  os << buf;
  if (std::isfinite(row.cost)) {
    std::snprintf(buf, sizeof buf, "%.17g", row.cost);
    os << buf << '\n';
  } else {
    os << "inf\n";
  }
}

}  // namespace ergo_assist
