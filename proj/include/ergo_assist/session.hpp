#pragma once

// Headless driving of an engine session and append-only session files.
//
// A session file is JSON Lines: the first line is a header
//   {"session_id": ..., "created_at": ..., "task": ..., "scene": {...}}
// and every following line is one log entry {"at", "kind", "payload"}.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ergo_assist/engine.hpp"

namespace ergo_assist {

struct HappyPathOptions {
  double human_step_duration = 2.0;  // seconds the simulated user takes per step
};

/// Auto mode: triggers the task and answers every awaited completion, advancing
/// the clock by the robot action duration (robot items) or the human step
/// duration (human items) before each one.
inline EngineState run_happy_path(const Engine& engine, EngineState s, const HappyPathOptions& opt = {}) {
  s = engine.dispatch(std::move(s), TriggerPhrase{s.task.trigger_phrase});
  while (const ScriptItem* it = s.current()) {
    const double dt = it->actor == Actor::robot ? engine.config().robot_action_duration : opt.human_step_duration;
    const Event done = it->completion;
    s = engine.dispatch(std::move(s), Tick{dt});
    s = engine.dispatch(std::move(s), done);
  }
  return s;
}

/// Parses JSON Lines of events. Lines may be bare events or exported log
/// entries; of the latter only "input" entries are used.
inline std::vector<Event> read_event_lines(std::istream& in) {
  std::vector<Event> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(n) + ": " + e.what());
    }
    if (j.is_object() && j.contains("kind") && j.contains("payload")) {
      if (j.at("kind") == emit::kInput) out.push_back(event_from_json(j.at("payload")));
      continue;
    }
    out.push_back(event_from_json(j));
  }
  return out;
}

inline std::string log_lines(const std::vector<LogEntry>& log) {
  std::string out;
  for (const auto& e : log) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

struct SessionRecord {
  std::string session_id;
  std::string created_at;  // ISO 8601, UTC
  std::string task;
  json scene;
  std::vector<LogEntry> log;
  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline json header_json(const SessionRecord& r) {
  return {{"session_id", r.session_id}, {"created_at", r.created_at}, {"task", r.task}, {"scene", r.scene}};
}

inline void save_record(const SessionRecord& r, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << header_json(r).dump() << '\n' << log_lines(r.log);
}

/// Appends log entries to an existing session file.
inline void append_entries(const std::filesystem::path& file, const std::vector<LogEntry>& entries,
                           std::size_t from) {
  std::ofstream out(file, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + file.string());
  for (std::size_t i = from; i < entries.size(); ++i) out << to_json(entries[i]).dump() << '\n';
}

inline SessionRecord load_record(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(file.string() + ": empty session file");
  SessionRecord r;
  try {
    const json h = json::parse(line);
    detail::Reader rd(h, "session");
    rd.allow({"session_id", "created_at", "task", "scene"});
    r.session_id = rd.text("session_id");
    r.created_at = rd.text("created_at");
    r.task = rd.text("task");
    r.scene = rd.at("scene");
    while (std::getline(in, line))
      if (!line.empty()) r.log.push_back(log_entry_from_json(json::parse(line)));
  } catch (const json::parse_error& e) {
    throw SchemaError(file.string() + ": " + e.what());
  }
  return r;
}

/// Rebuilds the engine state of a record by replaying its logged inputs.
/// Throws if the replay does not reproduce the stored log.
inline EngineState restore(const Engine& engine, const SessionRecord& r) {
  const Scene scene = load_scene(r.scene);
  EngineState s = replay(engine, scene, task_by_name(r.task, scene), input_events(r.log));
  if (s.log != r.log) throw std::runtime_error("session " + r.session_id + ": replay diverged from stored log");
  return s;
}

/// Plan summary carried by the trigger acknowledgment, or null before the trigger.
inline json plan_summary(const std::vector<LogEntry>& log) {
  for (const auto& e : log)
    if (e.kind == emit::kTriggerAck) return e.payload;
  return nullptr;
}

}  // namespace ergo_assist
