#pragma once

// Object arrangement: the placements the robot can realize (glass target,
// bottle hold pose, cap drop zone) and the grid search that picks the one
// minimizing the summed human posture cost over a task's key-frames.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "ergo_assist/ergonomics.hpp"
#include "ergo_assist/scene.hpp"
#include "ergo_assist/task.hpp"

namespace ergo_assist {

struct Arrangement {
  Pose2D glass_target;
  ReachTarget bottle_hold;  // relative to the primary shoulder, straight ahead
  Pose2D cap_drop_zone;
  friend bool operator==(const Arrangement&, const Arrangement&) = default;
};

struct ArrangementConfig {
  double grid_step = 0.02;         // table cells and hold radius, meters
  int hold_angle_step_deg = 5;     // hold elevation step
  int hold_elevation_min_deg = -90;
  int hold_elevation_max_deg = 90;
  double min_separation = 0.08;
  double hold_clearance = 0.16;    // cap height above the table while the robot holds the bottle
  std::vector<double> weights;     // per key-frame; empty means all 1
  IkOptions ik;
  unsigned threads = 0;            // 0: hardware concurrency

  double weight(std::size_t k) const { return k < weights.size() ? weights[k] : 1.0; }
  int step_mm() const { return static_cast<int>(std::lround(grid_step * 1000.0)); }
};

/// Cost of one key-frame, or the reason it is infeasible.
struct StepCost {
  bool feasible = true;
  double cost = 0.0;
  std::string reason;

  static StepCost ok(double c) { return {true, c, {}}; }
  static StepCost infeasible(std::string why) {
    return {false, std::numeric_limits<double>::infinity(), std::move(why)};
  }
  friend bool operator==(const StepCost&, const StepCost&) = default;
};

/// Arm the robot's hold pose is expressed against: right unless it is disabled.
inline Side primary_side(const ImpairmentSpec& imp) {
  return imp.usable(Side::right) ? Side::right : Side::left;
}

/// Table-plane point below a bottle hold pose.
inline Point2 hold_point(const Scene& scene, ReachTarget hold) {
  const Point2 base = scene.human.shoulder_base(primary_side(scene.impairment));
  const Point2 f = scene.human.facing();
  return {base.x + hold.r * f.x, base.y + hold.r * f.y};
}

/// Where the robot puts the bottle back down: below the hold, kept on the table.
inline Point2 bottle_rest_point(const Scene& scene, ReachTarget hold) {
  const Point2 p = hold_point(scene, hold);
  return {std::clamp(p.x, -scene.table.half_extent_x, scene.table.half_extent_x),
          std::clamp(p.y, -scene.table.half_extent_y, scene.table.half_extent_y)};
}

/// Arrangement that leaves everything where it is: glass in place, bottle held
/// where it stands at lift height, cap dropped beside the bottle.
inline Arrangement identity_arrangement(const Scene& scene, const PouringGeometry& geom = {}) {
  const auto& bottle = scene.of_kind(ObjectKind::bottle);
  const auto& glass = scene.of_kind(ObjectKind::glass);
  const Side side = primary_side(scene.impairment);
  Arrangement a;
  a.glass_target = glass.pose;
  a.bottle_hold = reach_target(scene.human, side, bottle.pose.position(),
                               scene.table.top_height + geom.lift_height);
  a.cap_drop_zone = {bottle.pose.x + kDetachOffsetX, bottle.pose.y, 0.0};
  return a;
}

/// Memo of posture solves keyed by (side, target, load). Not thread-safe.
class PostureCache {
 public:
  std::optional<double> get(Side side, ReachTarget t, double load) const {
    auto it = map_.find(Key{side, t.r, t.z, load});
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void put(Side side, ReachTarget t, double load, double cost) {
    map_.emplace(Key{side, t.r, t.z, load}, cost);
  }
  std::size_t size() const { return map_.size(); }

 private:
  struct Key {
    Side side;
    double r, z, load;
    bool operator==(const Key&) const = default;
  };
  struct Hash {
    std::size_t operator()(const Key& k) const {
      auto mix = [](std::size_t h, double v) {
        return h ^ (std::hash<double>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
      };
      std::size_t h = static_cast<std::size_t>(k.side);
      h = mix(h, k.r);
      h = mix(h, k.z);
      return mix(h, k.load);
    }
  };
  std::unordered_map<Key, double, Hash> map_;
};

namespace detail {

struct ResolvedTarget {
  Point2 p;
  double z;
  double load;
};

inline ResolvedTarget resolve(const Scene& scene, const Arrangement& arr, const HandTarget& t) {
  ResolvedTarget r{};
  const double top = scene.table.top_height;
  switch (t.slot) {
    case Slot::object_pose:
      r.p = scene.of_kind(t.object).pose.position();
      r.z = top + t.height;
      break;
    case Slot::bottle_hold:
      r.p = hold_point(scene, arr.bottle_hold);
      r.z = arr.bottle_hold.z;
      break;
    case Slot::cap_drop_zone:
      r.p = arr.cap_drop_zone.position();
      r.z = top + t.height;
      break;
    case Slot::glass_target:
      r.p = arr.glass_target.position();
      r.z = top + t.height;
      break;
  }
  r.load = t.load ? scene.of_kind(*t.load).mass : 0.0;
  return r;
}

/// Posture cost of one hand target for one side; +inf when unreachable.
inline double side_cost(const Scene& scene, const ResolvedTarget& t, Side side,
                        const IkOptions& ik, PostureCache* cache) {
  const ReachTarget rt = reach_target(scene.human, side, t.p, t.z);
  if (cache) {
    if (auto c = cache->get(side, rt, t.load)) return *c;
  }
  auto sol = try_solve_posture(scene.human, scene.impairment, rt, side, t.load, ik);
  const double c = sol ? sol->cost : std::numeric_limits<double>::infinity();
  if (cache) cache->put(side, rt, t.load, c);
  return c;
}

}  // namespace detail

/// Summed posture cost of the human hand targets of a key-frame under an
/// arrangement. Key-frames without human hand targets cost 0.
inline StepCost keyframe_cost(const Scene& scene, const Arrangement& arrangement, const KeyFrame& kf,
                              const IkOptions& ik = {}, PostureCache* cache = nullptr) {
  const auto& targets = kf.hands.targets;
  if (targets.empty()) return StepCost::ok(0.0);
  const auto sides = scene.impairment.usable_sides();
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<detail::ResolvedTarget> resolved;
  resolved.reserve(targets.size());
  for (const auto& t : targets) resolved.push_back(detail::resolve(scene, arrangement, t));

  if (kf.hands.distinct_sides) {
    if (targets.size() > 2 || sides.size() < targets.size())
      return StepCost::infeasible("hands: " + kf.name + " needs " + std::to_string(targets.size()) +
                                  " usable arms");
    double best = inf;
    // Assign the targets to (right, left) in both orders.
    for (int swap = 0; swap < static_cast<int>(targets.size()); ++swap) {
      double sum = 0.0;
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const Side side = sides[(i + swap) % sides.size()];
        sum += detail::side_cost(scene, resolved[i], side, ik, cache);
      }
      best = std::min(best, sum);
    }
    if (!std::isfinite(best)) return StepCost::infeasible("reach: " + std::string(to_string(targets[0].object)));
    return StepCost::ok(best);
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    double best = inf;
    for (Side side : sides) best = std::min(best, detail::side_cost(scene, resolved[i], side, ik, cache));
    if (!std::isfinite(best))
      return StepCost::infeasible("reach: " + std::string(to_string(targets[i].object)));
    sum += best;
  }
  return StepCost::ok(sum);
}

// ---------------------------------------------------------------------------
// Grid definition shared by the optimizer and the brute-force oracle.

/// Lattice coordinates k * step, computed from integer millimetres so that
/// coarser grids whose step divides into a finer one land on identical doubles.
inline std::vector<double> lattice(double half_extent, int step_mm) {
  std::vector<double> out;
  const int kmax = static_cast<int>(std::floor(half_extent * 1000.0 / step_mm + 1e-9));
  for (int k = -kmax; k <= kmax; ++k) out.push_back(static_cast<double>(k * step_mm) / 1000.0);
  return out;
}

inline std::vector<Point2> glass_cells(const Scene& scene, const ArrangementConfig& cfg) {
  std::vector<Point2> out;
  for (double x : lattice(scene.table.half_extent_x, cfg.step_mm()))
    for (double y : lattice(scene.table.half_extent_y, cfg.step_mm()))
      if (scene.robot_workspace.contains({x, y})) out.push_back({x, y});
  return out;
}

inline std::vector<Point2> cap_cells(const Scene& scene, const ArrangementConfig& cfg) {
  std::vector<Point2> out;
  for (double x : lattice(scene.table.half_extent_x, cfg.step_mm()))
    for (double y : lattice(scene.table.half_extent_y, cfg.step_mm())) out.push_back({x, y});
  return out;
}

/// Hold poses on a polar grid about the upright primary shoulder:
/// radius in grid steps, elevation in whole-degree steps.
inline std::vector<ReachTarget> hold_poses(const Scene& scene, const ArrangementConfig& cfg) {
  std::vector<ReachTarget> out;
  const auto& h = scene.human;
  const double max_radius = h.torso_length + h.arm_length();
  const double min_z = scene.table.top_height + cfg.hold_clearance;
  const int step = cfg.step_mm();
  for (int k = 1; static_cast<double>(k * step) / 1000.0 <= max_radius; ++k) {
    const double rho = static_cast<double>(k * step) / 1000.0;
    for (int e = cfg.hold_elevation_min_deg; e <= cfg.hold_elevation_max_deg;
         e += cfg.hold_angle_step_deg) {
      const double a = deg(static_cast<double>(e));
      const ReachTarget t{std::max(0.0, rho * std::cos(a)), h.torso_length + rho * std::sin(a)};
      if (t.z >= min_z - 1e-12) out.push_back(t);
    }
  }
  return out;
}

/// Left fold of weighted key-frame costs in key-frame order. Both search paths
/// sum through here so their totals agree bit for bit.
template <typename TermAt>
double fold_total(std::size_t n, TermAt&& term) {
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += term(k);
  return total;
}

/// Lexicographic objective with the deterministic tie-break:
/// (cost, glass displacement, glass x, glass y, cap x, cap y, hold r, hold z).
struct ArrangementKey {
  double total = std::numeric_limits<double>::infinity();
  double displacement = 0.0;
  double gx = 0.0, gy = 0.0, cx = 0.0, cy = 0.0, hr = 0.0, hz = 0.0;

  auto tie() const { return std::tie(total, displacement, gx, gy, cx, cy, hr, hz); }
  bool operator<(const ArrangementKey& o) const { return tie() < o.tie(); }
  bool operator==(const ArrangementKey& o) const { return tie() == o.tie(); }
};

inline ArrangementKey make_key(const Scene& scene, double total, Point2 g, Point2 c, ReachTarget h) {
  const Point2 current = scene.of_kind(ObjectKind::glass).pose.position();
  return {total, distance(g, current), g.x, g.y, c.x, c.y, h.r, h.z};
}

inline Arrangement make_arrangement(Point2 g, Point2 c, ReachTarget h) {
  return {Pose2D{g.x, g.y, 0.0}, h, Pose2D{c.x, c.y, 0.0}};
}

struct OptimizedArrangement {
  Arrangement arrangement;
  double total_cost = 0.0;
  std::vector<StepCost> per_keyframe;
};

/// Re-checks every arrangement invariant; returns the first violation.
inline std::optional<std::string> arrangement_violation(const Scene& scene, const TaskTemplate& task,
                                                        const Arrangement& a,
                                                        const ArrangementConfig& cfg = {}) {
  const Point2 g = a.glass_target.position();
  const Point2 c = a.cap_drop_zone.position();
  if (!scene.table.contains(g) || !scene.robot_workspace.contains(g))
    return "glass_target within table and robot workspace";
  if (!scene.table.contains(c)) return "cap_drop_zone within table";
  if (a.bottle_hold.r < 0) return "bottle_hold r non-negative";
  if (a.bottle_hold.z < scene.table.top_height + cfg.hold_clearance - 1e-12)
    return "bottle_hold above table clearance";
  const Point2 rest = bottle_rest_point(scene, a.bottle_hold);
  const double sep = cfg.min_separation - 1e-12;
  if (distance(g, c) < sep || distance(g, rest) < sep || distance(c, rest) < sep)
    return "pairwise object separation";
  for (const auto& kf : task.key_frames) {
    if (!kf.arrangement_slot()) continue;
    auto sc = keyframe_cost(scene, a, kf, cfg.ik);
    if (!sc.feasible) return "key-frame " + std::to_string(kf.step_id) + " " + sc.reason;
  }
  return std::nullopt;
}

namespace detail {

struct Candidate {
  Point2 p;                    // table cell (glass, cap) or unused
  ReachTarget hold;            // hold pose (hold slot only)
  std::vector<double> terms;   // weighted cost per dependent key-frame, indexed like `kfs`
};

struct SlotCandidates {
  std::vector<std::size_t> kfs;  // key-frame indices that depend on the slot
  std::vector<Candidate> items;
};

inline std::string blocked_message(const TaskTemplate& task, std::size_t k, const char* what) {
  const auto& kf = task.key_frames[k];
  return "key-frame " + std::to_string(kf.step_id) + " (" + kf.name + ") blocked every " + what +
         " candidate";
}

/// Evaluates every cell of one slot; keeps cells feasible for all dependent key-frames.
inline SlotCandidates evaluate_slot(const Scene& scene, const TaskTemplate& task,
                                    const ArrangementConfig& cfg, Slot slot,
                                    const std::vector<Point2>& cells,
                                    const std::vector<ReachTarget>& holds, const char* what,
                                    PostureCache& cache) {
  SlotCandidates out;
  for (std::size_t k = 0; k < task.key_frames.size(); ++k)
    if (task.key_frames[k].arrangement_slot() == slot) out.kfs.push_back(k);

  const Arrangement base = identity_arrangement(scene);
  const std::size_t n = slot == Slot::bottle_hold ? holds.size() : cells.size();
  std::vector<std::size_t> blocked(out.kfs.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    Candidate cand;
    Arrangement a = base;
    if (slot == Slot::bottle_hold) {
      cand.hold = holds[i];
      a.bottle_hold = holds[i];
    } else {
      cand.p = cells[i];
      (slot == Slot::glass_target ? a.glass_target : a.cap_drop_zone) = {cells[i].x, cells[i].y, 0.0};
    }
    bool feasible = true;
    for (std::size_t j = 0; j < out.kfs.size(); ++j) {
      const std::size_t k = out.kfs[j];
      const StepCost sc = keyframe_cost(scene, a, task.key_frames[k], cfg.ik, &cache);
      if (!sc.feasible) {
        ++blocked[j];
        feasible = false;
        break;
      }
      cand.terms.push_back(cfg.weight(k) * sc.cost);
    }
    if (feasible) out.items.push_back(std::move(cand));
  }
  if (n == 0) throw NoFeasibleArrangement(std::string("no ") + what + " cell on the grid");
  if (out.items.empty()) {
    std::size_t worst = 0;
    for (std::size_t j = 1; j < blocked.size(); ++j)
      if (blocked[j] > blocked[worst]) worst = j;
    throw NoFeasibleArrangement(blocked_message(task, out.kfs.at(worst), what));
  }
  return out;
}

}  // namespace detail

/// Grid-search optimizer. Exploits that each key-frame depends on at most one
/// arrangement slot: per-slot costs are tabulated once, and for every
/// (hold, glass) pair the cap candidates are scanned in ascending cost order
/// until the total exceeds the best found so far.
inline OptimizedArrangement optimize_arrangement(const Scene& scene, const TaskTemplate& task,
                                                 const ArrangementConfig& cfg = {}) {
  validate_task(task);
  const std::size_t nkf = task.key_frames.size();
  PostureCache cache;

  // Key-frames with no arrangement slot contribute a constant term.
  const Arrangement base = identity_arrangement(scene);
  std::vector<double> fixed(nkf, 0.0);
  for (std::size_t k = 0; k < nkf; ++k) {
    if (task.key_frames[k].arrangement_slot()) continue;
    const StepCost sc = keyframe_cost(scene, base, task.key_frames[k], cfg.ik, &cache);
    if (!sc.feasible) throw NoFeasibleArrangement(detail::blocked_message(task, k, "arrangement"));
    fixed[k] = cfg.weight(k) * sc.cost;
  }

  const auto glass = detail::evaluate_slot(scene, task, cfg, Slot::glass_target,
                                           glass_cells(scene, cfg), {}, "glass_target", cache);
  auto caps = detail::evaluate_slot(scene, task, cfg, Slot::cap_drop_zone, cap_cells(scene, cfg), {},
                                    "cap_drop_zone", cache);
  const auto holds = detail::evaluate_slot(scene, task, cfg, Slot::bottle_hold, {},
                                           hold_poses(scene, cfg), "bottle_hold", cache);

  // Which slot supplies the term of key-frame k, and at which position.
  enum Source : std::uint8_t { kFixed, kGlass, kCap, kHold };
  std::vector<std::pair<Source, std::size_t>> source(nkf, {kFixed, 0});
  auto assign = [&](const detail::SlotCandidates& s, Source src) {
    for (std::size_t j = 0; j < s.kfs.size(); ++j) source[s.kfs[j]] = {src, j};
  };
  assign(glass, kGlass);
  assign(caps, kCap);
  assign(holds, kHold);

  // With a single cap-dependent key-frame the total is monotone in that term.
  const bool monotone_caps = caps.kfs.size() == 1;
  if (monotone_caps) {
    std::stable_sort(caps.items.begin(), caps.items.end(), [](const auto& a, const auto& b) {
      return std::tie(a.terms[0], a.p.x, a.p.y) < std::tie(b.terms[0], b.p.x, b.p.y);
    });
  }

  struct Best {
    ArrangementKey key;
    std::size_t h = 0, g = 0, c = 0;
    bool found = false;
  };

  const double sep = cfg.min_separation - 1e-12;
  auto search = [&](std::size_t h_begin, std::size_t h_end) {
    Best best;
    for (std::size_t hi = h_begin; hi < h_end; ++hi) {
      const auto& hc = holds.items[hi];
      const Point2 rest = bottle_rest_point(scene, hc.hold);
      for (std::size_t gi = 0; gi < glass.items.size(); ++gi) {
        const auto& gc = glass.items[gi];
        if (distance(gc.p, rest) < sep) continue;
        for (std::size_t ci = 0; ci < caps.items.size(); ++ci) {
          const auto& cc = caps.items[ci];
          if (distance(cc.p, gc.p) < sep || distance(cc.p, rest) < sep) continue;
          const double total = fold_total(nkf, [&](std::size_t k) {
            const auto [src, j] = source[k];
            switch (src) {
              case kGlass: return gc.terms[j];
              case kCap: return cc.terms[j];
              case kHold: return hc.terms[j];
              default: return fixed[k];
            }
          });
          if (best.found && total > best.key.total) {
            if (monotone_caps) break;
            continue;
          }
          const ArrangementKey key = make_key(scene, total, gc.p, cc.p, hc.hold);
          if (!best.found || key < best.key) best = {key, hi, gi, ci, true};
        }
      }
    }
    return best;
  };

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, holds.items.size()));
  std::vector<Best> partial(threads);
  if (threads <= 1) {
    partial.assign(1, search(0, holds.items.size()));
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (holds.items.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = std::min(holds.items.size(), t * chunk);
      const std::size_t e = std::min(holds.items.size(), b + chunk);
      pool.emplace_back([&, t, b, e] { partial[t] = search(b, e); });
    }
    for (auto& th : pool) th.join();
  }

  Best best;
  for (const auto& p : partial)
    if (p.found && (!best.found || p.key < best.key)) best = p;
  if (!best.found) throw NoFeasibleArrangement("object separation blocked every candidate");

  OptimizedArrangement out;
  out.arrangement = make_arrangement(glass.items[best.g].p, caps.items[best.c].p,
                                     holds.items[best.h].hold);
  out.total_cost = best.key.total;
  for (const auto& kf : task.key_frames)
    out.per_keyframe.push_back(keyframe_cost(scene, out.arrangement, kf, cfg.ik, &cache));
  return out;
}

/// One enumerated candidate; cost is +inf when object separation fails.
struct CostRow {
  Point2 glass;
  ReachTarget hold;
  Point2 cap;
  double cost = 0.0;
};

struct BruteForceResult {
  Arrangement arrangement;
  double total_cost = 0.0;
  std::size_t glass_cells = 0;  // feasible cells per slot
  std::size_t cap_cells = 0;
  std::size_t hold_poses = 0;
  std::size_t rows = 0;
  std::vector<CostRow> table;   // filled only when requested
};

/// Exhaustive enumeration over the product of feasible glass cells, cap cells
/// and hold poses, evaluating the full objective for every candidate with no
/// pruning or ordering.
inline BruteForceResult brute_force_arrangement(
    const Scene& scene, const TaskTemplate& task, double grid_step,
    const std::function<void(const CostRow&)>& visit = {}, ArrangementConfig cfg = {}) {
  if (grid_step < 0.01 - 1e-12) throw std::invalid_argument("grid_step must be at least 0.01 m");
  cfg.grid_step = grid_step;
  validate_task(task);
  PostureCache cache;
  const Arrangement base = identity_arrangement(scene);

  // Per-candidate key-frame costs, tabulated once per slot cell; the product
  // loop below then evaluates the objective for every combination.
  const std::size_t nkf = task.key_frames.size();
  auto tabulate = [&](Slot slot, std::size_t count, auto&& make) {
    std::vector<std::size_t> kept;
    std::vector<std::vector<double>> costs;  // [candidate][key-frame], 0 for other slots
    for (std::size_t i = 0; i < count; ++i) {
      const Arrangement a = make(i);
      std::vector<double> row(nkf, 0.0);
      bool ok = true;
      for (std::size_t k = 0; k < nkf && ok; ++k) {
        if (task.key_frames[k].arrangement_slot() != slot) continue;
        const StepCost sc = keyframe_cost(scene, a, task.key_frames[k], cfg.ik, &cache);
        ok = sc.feasible;
        row[k] = sc.cost;
      }
      if (ok) {
        kept.push_back(i);
        costs.push_back(std::move(row));
      }
    }
    return std::make_pair(kept, costs);
  };

  const auto all_glass = glass_cells(scene, cfg);
  const auto all_caps = cap_cells(scene, cfg);
  const auto all_holds = hold_poses(scene, cfg);
  const auto [gi, gcost] = tabulate(Slot::glass_target, all_glass.size(), [&](std::size_t i) {
    Arrangement a = base;
    a.glass_target = {all_glass[i].x, all_glass[i].y, 0.0};
    return a;
  });
  const auto [ci, ccost] = tabulate(Slot::cap_drop_zone, all_caps.size(), [&](std::size_t i) {
    Arrangement a = base;
    a.cap_drop_zone = {all_caps[i].x, all_caps[i].y, 0.0};
    return a;
  });
  const auto [hi, hcost] = tabulate(Slot::bottle_hold, all_holds.size(), [&](std::size_t i) {
    Arrangement a = base;
    a.bottle_hold = all_holds[i];
    return a;
  });
  if (gi.empty()) throw NoFeasibleArrangement("no feasible glass_target cell");
  if (ci.empty()) throw NoFeasibleArrangement("no feasible cap_drop_zone cell");
  if (hi.empty()) throw NoFeasibleArrangement("no feasible bottle_hold pose");

  // Constant key-frames (no arrangement slot) are evaluated per candidate too.
  std::vector<double> fixed(nkf, 0.0);
  for (std::size_t k = 0; k < nkf; ++k) {
    if (task.key_frames[k].arrangement_slot()) continue;
    const StepCost sc = keyframe_cost(scene, base, task.key_frames[k], cfg.ik, &cache);
    if (!sc.feasible) throw NoFeasibleArrangement("key-frame " + std::to_string(k + 1) + " infeasible");
    fixed[k] = sc.cost;
  }

  BruteForceResult out;
  out.glass_cells = gi.size();
  out.cap_cells = ci.size();
  out.hold_poses = hi.size();

  std::optional<ArrangementKey> best;
  Arrangement best_arr;
  const double sep = cfg.min_separation - 1e-12;
  for (std::size_t a = 0; a < gi.size(); ++a) {
    const Point2 g = all_glass[gi[a]];
    for (std::size_t b = 0; b < ci.size(); ++b) {
      const Point2 c = all_caps[ci[b]];
      for (std::size_t d = 0; d < hi.size(); ++d) {
        const ReachTarget h = all_holds[hi[d]];
        CostRow row{g, h, c, std::numeric_limits<double>::infinity()};
        const Point2 rest = bottle_rest_point(scene, h);
        const bool separated = distance(g, c) >= sep && distance(g, rest) >= sep &&
                               distance(c, rest) >= sep;
        if (separated) {
          row.cost = fold_total(nkf, [&](std::size_t k) {
            const auto slot = task.key_frames[k].arrangement_slot();
            double v = fixed[k];
            if (slot == Slot::glass_target) v = gcost[a][k];
            else if (slot == Slot::cap_drop_zone) v = ccost[b][k];
            else if (slot == Slot::bottle_hold) v = hcost[d][k];
            return cfg.weight(k) * v;
          });
          const ArrangementKey key = make_key(scene, row.cost, g, c, h);
          if (!best || key < *best) {
            best = key;
            best_arr = make_arrangement(g, c, h);
          }
        }
        ++out.rows;
        if (visit) visit(row);
      }
    }
  }
  if (!best) throw NoFeasibleArrangement("object separation blocked every candidate");
  out.arrangement = best_arr;
  out.total_cost = best->total;
  return out;
}

/// Brute force that also keeps the full cost table.
inline BruteForceResult brute_force_arrangement_table(const Scene& scene, const TaskTemplate& task,
                                                      double grid_step, ArrangementConfig cfg = {}) {
  std::vector<CostRow> rows;
  auto result = brute_force_arrangement(
      scene, task, grid_step, [&](const CostRow& r) { rows.push_back(r); }, std::move(cfg));
  result.table = std::move(rows);
  return result;
}

}  // namespace ergo_assist
