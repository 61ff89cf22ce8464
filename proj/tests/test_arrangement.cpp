#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace ergo_assist;
using testing_support::paper_scene;
using testing_support::unimpaired_scene;

namespace {

const KeyFrame& frame(const TaskTemplate& t, int step) { return t.key_frames.at(step - 1); }

ArrangementConfig coarse(double step = 0.05) {
  ArrangementConfig c;
  c.grid_step = step;
  return c;
}

}  // namespace

TEST(Task, PouringTemplate) {
  const Scene s = paper_scene();
  const TaskTemplate t = pouring_water_task(s);
  ASSERT_EQ(t.key_frames.size(), 5u);
  EXPECT_EQ(t.trigger_phrase, "Help me to get some water.");
  for (int i = 0; i < 5; ++i) EXPECT_EQ(t.key_frames[i].step_id, i + 1);
  int aligned = 0;
  for (const auto& kf : t.key_frames)
    for (const auto& r : kf.object_constraints) aligned += r.kind == RelationKind::aligned_above;
  EXPECT_EQ(aligned, 1);
  EXPECT_NO_THROW(validate_task(t));
  EXPECT_THROW(task_by_name("juggling", s), std::invalid_argument);

  TaskTemplate broken = t;
  std::swap(broken.key_frames[0], broken.key_frames[1]);
  EXPECT_THROW(validate_task(broken), std::invalid_argument);
}

TEST(KeyframeCost, PourEqualsPostureAtTarget) {
  const Scene s = unimpaired_scene();
  const TaskTemplate t = pouring_water_task(s);
  Arrangement a = identity_arrangement(s);
  a.glass_target = {0.16, -0.30, 0.0};
  const auto& pour = frame(t, 4);
  const StepCost sc = keyframe_cost(s, a, pour);
  ASSERT_TRUE(sc.feasible);
  // Compose from the ergonomics layer: min over usable arms of the posture
  // cost at the glass target, pour height, with the bottle in hand.
  double expected = std::numeric_limits<double>::infinity();
  const double load = s.of_kind(ObjectKind::bottle).mass;
  for (Side side : {Side::left, Side::right}) {
    const ReachTarget rt = reach_target(s.human, side, {0.16, -0.30}, s.table.top_height + PouringGeometry{}.pour_height);
    if (auto p = try_solve_posture(s.human, s.impairment, rt, side, load)) expected = std::min(expected, p->cost);
  }
  EXPECT_EQ(sc.cost, expected);
}

TEST(KeyframeCost, RobotOnlyIsZero) {
  const Scene s = paper_scene();
  const TaskTemplate t = pouring_water_task(s);
  const StepCost sc = keyframe_cost(s, identity_arrangement(s), frame(t, 1));
  EXPECT_TRUE(sc.feasible);
  EXPECT_EQ(sc.cost, 0.0);
}

TEST(KeyframeCost, FarGlassInfeasible) {
  const Scene s = paper_scene();
  const TaskTemplate t = pouring_water_task(s);
  Arrangement a = identity_arrangement(s);
  a.glass_target = {0.55, 0.38, 0.0};
  const StepCost sc = keyframe_cost(s, a, frame(t, 4));
  EXPECT_FALSE(sc.feasible);
  EXPECT_EQ(sc.reason, "reach: glass");
}

TEST(KeyframeCost, UnscrewAloneNeedsBothArms) {
  const Scene s = paper_scene();
  const TaskTemplate t = pouring_water_task(s);
  const StepCost sc = keyframe_cost(s, identity_arrangement(s), unaided(frame(t, 2)));
  EXPECT_FALSE(sc.feasible);
  EXPECT_NE(sc.reason.find("2 usable arms"), std::string::npos);
}

TEST(Optimize, PaperScenarioMovesGlassTowardUser) {
  const Scene s = paper_scene();
  const TaskTemplate t = pouring_water_task(s);
  const auto opt = optimize_arrangement(s, t);
  const Point2 shoulder = s.human.shoulder_base(Side::right);
  const auto& glass = s.of_kind(ObjectKind::glass);
  EXPECT_LT(distance(opt.arrangement.glass_target.position(), shoulder), distance(glass.pose.position(), shoulder));
  // Leaving the glass where it is cannot even be done with the right arm.
  Arrangement stay = opt.arrangement;
  stay.glass_target = glass.pose;
  EXPECT_FALSE(keyframe_cost(s, stay, frame(t, 4)).feasible);
  EXPECT_FALSE(arrangement_violation(s, t, opt.arrangement));
  for (const auto& sc : opt.per_keyframe) EXPECT_TRUE(sc.feasible);
}

TEST(Optimize, ReturnedArrangementSatisfiesInvariants) {
  for (const Scene& s : {paper_scene(), unimpaired_scene()}) {
    const TaskTemplate t = pouring_water_task(s);
    const auto opt = optimize_arrangement(s, t);
    EXPECT_EQ(arrangement_violation(s, t, opt.arrangement), std::nullopt);
  }
}

TEST(Optimize, MatchesBruteForceOnPaperScenario) {
  const Scene s = paper_scene();
  const TaskTemplate t = pouring_water_task(s);
  const auto opt = optimize_arrangement(s, t, coarse());
  const auto bf = brute_force_arrangement(s, t, 0.05);
  EXPECT_EQ(opt.arrangement, bf.arrangement);
  EXPECT_EQ(opt.total_cost, bf.total_cost);
}

TEST(Optimize, CostTableSizeIsProduct) {
  const Scene s = unimpaired_scene();
  const TaskTemplate t = pouring_water_task(s);
  const auto bf = brute_force_arrangement_table(s, t, 0.10);
  EXPECT_EQ(bf.rows, bf.glass_cells * bf.cap_cells * bf.hold_poses);
  EXPECT_EQ(bf.table.size(), bf.rows);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : bf.table) best = std::min(best, r.cost);
  EXPECT_EQ(best, bf.total_cost);
  EXPECT_THROW(brute_force_arrangement(s, t, 0.005), std::invalid_argument);
}

TEST(Optimize, Deterministic) {
  const Scene s = paper_scene();
  const TaskTemplate t = pouring_water_task(s);
  const auto a = optimize_arrangement(s, t, coarse(0.04));
  const auto b = optimize_arrangement(s, t, coarse(0.04));
  EXPECT_EQ(a.arrangement, b.arrangement);
  EXPECT_EQ(a.total_cost, b.total_cost);
}

TEST(Optimize, SerialEqualsParallel) {
  const Scene s = unimpaired_scene();
  const TaskTemplate t = pouring_water_task(s);
  ArrangementConfig serial = coarse(0.04), parallel = coarse(0.04);
  serial.threads = 1;
  parallel.threads = 7;
  const auto a = optimize_arrangement(s, t, serial);
  const auto b = optimize_arrangement(s, t, parallel);
  EXPECT_EQ(a.arrangement, b.arrangement);
  EXPECT_EQ(a.total_cost, b.total_cost);
}

TEST(Optimize, NestedGridNeverBetterWhenCoarser) {
  for (const Scene& s : {paper_scene(), unimpaired_scene()}) {
    const TaskTemplate t = pouring_water_task(s);
    const auto fine = optimize_arrangement(s, t, coarse(0.02));
    const auto c4 = optimize_arrangement(s, t, coarse(0.04));
    EXPECT_LE(fine.total_cost, c4.total_cost);
  }
}

TEST(Optimize, FivePercentGridNotBetterOnFixtures) {
  // 5 cm is not a refinement of 2 cm (hold radii differ), so this is checked
  // on the shipped fixtures rather than claimed in general.
  for (const Scene& s : {paper_scene(), unimpaired_scene()}) {
    const TaskTemplate t = pouring_water_task(s);
    EXPECT_LE(optimize_arrangement(s, t, coarse(0.02)).total_cost,
              optimize_arrangement(s, t, coarse(0.05)).total_cost);
  }
}

TEST(Optimize, FixedPointWhenAlreadyOptimal) {
  // Put the glass at its optimal cell: the optimizer must keep it there.
  Scene s = unimpaired_scene();
  const TaskTemplate t = pouring_water_task(s);
  const auto first = optimize_arrangement(s, t, coarse());
  s = apply_pose_update(s, "glass", first.arrangement.glass_target);
  const auto second = optimize_arrangement(s, t, coarse());
  EXPECT_EQ(second.arrangement.glass_target, s.of_kind(ObjectKind::glass).pose);
  EXPECT_EQ(second.total_cost, first.total_cost);
}

TEST(Optimize, NoFeasibleArrangementNamesKeyframe) {
  Scene s = paper_scene();
  // Robot can only place the glass in the far right corner, out of reach.
  s.robot_workspace = {0.5, 0.6, 0.3, 0.4};
  const TaskTemplate t = pouring_water_task(s);
  try {
    optimize_arrangement(s, t, coarse());
    FAIL() << "expected NoFeasibleArrangement";
  } catch (const NoFeasibleArrangement& e) {
    EXPECT_NE(std::string(e.what()).find("key-frame 4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(brute_force_arrangement(s, t, 0.05), NoFeasibleArrangement);
}

TEST(Optimize, ImpairmentMonotonicity) {
  const Scene impaired = paper_scene();
  Scene free = impaired;
  free.impairment.disabled_side = DisabledSide::none;
  const TaskTemplate t = pouring_water_task(impaired);
  EXPECT_GE(optimize_arrangement(impaired, t).total_cost, optimize_arrangement(free, t).total_cost);
}

TEST(Optimize, WeightsScaleObjective) {
  const Scene s = unimpaired_scene();
  const TaskTemplate t = pouring_water_task(s);
  ArrangementConfig c = coarse();
  const auto base = optimize_arrangement(s, t, c);
  c.weights = {2, 2, 2, 2, 2};
  const auto doubled = optimize_arrangement(s, t, c);
  EXPECT_EQ(doubled.arrangement, base.arrangement);
  EXPECT_DOUBLE_EQ(doubled.total_cost, 2 * base.total_cost);
}

TEST(Optimize, RandomScenesMatchBruteForce) {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int i = 0; i < 4; ++i) {
    const Scene s = testing_support::random_scene(rng);
    const TaskTemplate t = pouring_water_task(s);
    ArrangementConfig c = coarse(0.10);
    try {
      const auto opt = optimize_arrangement(s, t, c);
      const auto bf = brute_force_arrangement(s, t, 0.10, {}, c);
      EXPECT_EQ(opt.arrangement, bf.arrangement);
      EXPECT_EQ(opt.total_cost, bf.total_cost);
      ++checked;
    } catch (const NoFeasibleArrangement&) {
      EXPECT_THROW(brute_force_arrangement(s, t, 0.10, {}, c), NoFeasibleArrangement);
    }
  }
  EXPECT_GT(checked, 0);
}
