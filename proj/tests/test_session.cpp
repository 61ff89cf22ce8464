#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "ergo_assist/session.hpp"
#include "support.hpp"

using namespace ergo_assist;
using testing_support::paper_scene;

namespace fs = std::filesystem;

namespace {

Engine make_engine() {
  static const PlanFn plan = testing_support::memo_planner();
  return Engine(EngineConfig{}, plan);
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ergo_assist_test_session";
  fs::create_directories(dir);
  return dir / name;
}

SessionRecord happy_record() {
  const Engine eng = make_engine();
  const EngineState s = run_happy_path(eng, eng.start_session(paper_scene(), "pouring_water"));
  return {"s0123456789abcdef", "2026-01-01T00:00:00Z", "pouring_water", serialize(paper_scene()), s.log};
}

}  // namespace

TEST(EventLines, BareEvents) {
  std::istringstream in(R"({"type":"TriggerPhrase","text":"Help me to get some water."}

{"type":"Tick","dt":0.5}
{"type":"RobotActionDone","step":1}
{"type":"ObjectMoved","id":"cap","pose":{"x":0.1,"y":0.0,"yaw":0.0}}
{"type":"Abort"}
)");
  const auto ev = read_event_lines(in);
  ASSERT_EQ(ev.size(), 5u);
  EXPECT_EQ(ev[0], Event{TriggerPhrase{"Help me to get some water."}});
  EXPECT_EQ(ev[1], Event{Tick{0.5}});
  EXPECT_EQ(ev[2], Event{RobotActionDone{1}});
  EXPECT_EQ(ev[3], (Event{ObjectMoved{"cap", {0.1, 0.0, 0.0}}}));
  EXPECT_EQ(ev[4], Event{Abort{}});
}

TEST(EventLines, ExportedLogUsesInputsOnly) {
  const SessionRecord r = happy_record();
  std::istringstream in(log_lines(r.log));
  EXPECT_EQ(read_event_lines(in), input_events(r.log));
}

TEST(EventLines, Errors) {
  std::istringstream garbage("{\"type\":\"Tick\",\"dt\":1}\nnot json\n");
  try {
    read_event_lines(garbage);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream unknown("{\"type\":\"Dance\"}\n");
  EXPECT_THROW(read_event_lines(unknown), SchemaError);
  std::istringstream extra("{\"type\":\"Tick\",\"dt\":1,\"speed\":2}\n");
  EXPECT_THROW(read_event_lines(extra), SchemaError);
}

TEST(Record, SaveLoadRoundTrip) {
  const SessionRecord r = happy_record();
  const fs::path f = temp_file("roundtrip.jsonl");
  save_record(r, f);
  EXPECT_EQ(load_record(f), r);
}

TEST(Record, AppendThenRestore) {
  const Engine eng = make_engine();
  SessionRecord r{"sfeedfacefeedface", utc_timestamp(), "pouring_water", serialize(paper_scene()), {}};
  const fs::path f = temp_file("append.jsonl");
  save_record(r, f);
  EngineState s = eng.start_session(paper_scene(), "pouring_water");
  for (const Event& e : std::vector<Event>{TriggerPhrase{"Help me to get some water."}, Tick{1.0}, RobotActionDone{1},
                                           UserStepDone{3}}) {
    const std::size_t before = s.log.size();
    s = eng.dispatch(s, e);
    append_entries(f, s.log, before);
  }
  const SessionRecord loaded = load_record(f);
  EXPECT_EQ(loaded.log, s.log);
  EXPECT_EQ(restore(eng, loaded), s);
}

TEST(Record, RestoreDetectsDivergence) {
  SessionRecord r = happy_record();
  r.log[2].payload["text"] = "I will hold the glass";
  EXPECT_THROW(restore(make_engine(), r), std::runtime_error);
}

TEST(Record, BadFiles) {
  const fs::path empty = temp_file("empty.jsonl");
  { std::ofstream(empty).flush(); }
  EXPECT_THROW(load_record(empty), SchemaError);
  const fs::path bad = temp_file("bad.jsonl");
  { std::ofstream(bad) << "{\"session_id\":\"x\"\n"; }
  EXPECT_THROW(load_record(bad), SchemaError);
  EXPECT_THROW(load_record(temp_file("missing.jsonl")), std::runtime_error);
}

TEST(Record, Timestamp) {
  const std::string t = utc_timestamp();
  ASSERT_EQ(t.size(), 20u);
  EXPECT_EQ(t[10], 'T');
  EXPECT_EQ(t.back(), 'Z');
}

TEST(PlanSummary, FromTriggerAck) {
  const SessionRecord r = happy_record();
  const json p = plan_summary(r.log);
  ASSERT_TRUE(p.is_object());
  EXPECT_EQ(p.at("interventions"), json({"hold_bottle", "push_glass"}));
  EXPECT_TRUE(plan_summary({}).is_null());
}
