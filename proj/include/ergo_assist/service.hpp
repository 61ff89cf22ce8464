#pragma once

// HTTP/JSON + WebSocket service over engine sessions.
//
//   POST /sessions                  {"scene": {...} | "fixture-name", "task": "pouring_water"} -> 201 {"session_id"}
//   GET  /sessions                  -> {"sessions": [...]}
//   GET  /sessions/{id}             -> engine state summary
//   GET  /sessions/{id}/plan        -> compiled plan (a preview before the trigger)
//   POST /sessions/{id}/events      event JSON -> 200 {"entries", "phase"}; 409 when ignored
//   GET  /sessions/{id}/log?since=N -> {"entries", "next"} (polling fallback)
//   WS   /sessions/{id}/stream?since=N  one log entry per text message
//
// SessionHub holds the sessions and is usable without any transport; Server
// puts a thread-per-connection Beast front end on it.

#include <sys/socket.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "ergo_assist/session.hpp"

namespace ergo_assist {

struct ServiceConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;          // 0 picks a free port
  std::filesystem::path data_dir;      // empty: sessions live in memory only
  std::filesystem::path fixtures_dir;  // scenes addressable by name
  EngineConfig engine;
  PlanFn plan;                         // planner override, mostly for tests
  bool auto_robot = false;             // inject RobotActionDone after the action duration
};

struct Response {
  int status = 200;
  json body;
};

class SessionHub {
 public:
  explicit SessionHub(ServiceConfig cfg) : cfg_(std::move(cfg)), engine_(cfg_.engine, cfg_.plan) {
    if (!cfg_.data_dir.empty()) {
      std::filesystem::create_directories(cfg_.data_dir);
      load_existing();
    }
  }

  ~SessionHub() { shutdown(); }

  SessionHub(const SessionHub&) = delete;
  SessionHub& operator=(const SessionHub&) = delete;

  const Engine& engine() const { return engine_; }

  /// Stops pending robot timers and wakes stream waiters.
  void shutdown() {
    {
      std::lock_guard lk(timer_mutex_);
      if (stopping_) return;
      stopping_ = true;
    }
    timer_cv_.notify_all();
    for (auto& [id, s] : snapshot()) s->changed.notify_all();
    std::vector<std::thread> timers;
    {
      std::lock_guard lk(timer_mutex_);
      timers.swap(timers_);
    }
    for (auto& t : timers)
      if (t.joinable()) t.join();
  }

  bool stopping() const {
    std::lock_guard lk(timer_mutex_);
    return stopping_;
  }

  Response create(const json& body) {
    if (!body.is_object()) return error(400, "body must be an object");
    json scene_doc;
    std::string task = std::string(kPouringTaskName);
    try {
      if (body.contains("task")) {
        if (!body.at("task").is_string()) return error(400, "task must be a string");
        task = body.at("task").get<std::string>();
      }
      if (!body.contains("scene")) return error(400, "missing scene");
      const json& sc = body.at("scene");
      if (sc.is_string()) {
        auto path = fixture_path(sc.get<std::string>());
        if (!path) return error(400, "unknown scene fixture: " + sc.get<std::string>());
        scene_doc = serialize(load_scene_file(*path));
      } else {
        scene_doc = serialize(load_scene(sc));
      }
      for (const auto& [k, v] : body.items())
        if (k != "scene" && k != "task") return error(400, "unknown field: " + k);
    } catch (const std::exception& e) {
      return error(400, e.what());
    }

    auto s = std::make_shared<Session>();
    s->record.task = task;
    s->record.scene = scene_doc;
    s->record.created_at = utc_timestamp();
    try {
      const Scene scene = load_scene(scene_doc);
      s->state = engine_.start_session(scene, task_by_name(task, scene));
    } catch (const std::exception& e) {
      return error(400, e.what());
    }
    {
      std::lock_guard lk(mutex_);
      do s->record.session_id = new_id();
      while (sessions_.count(s->record.session_id));
      sessions_[s->record.session_id] = s;
    }
    if (auto f = file_of(s->record.session_id)) save_record(s->record, *f);
    return {201, {{"session_id", s->record.session_id}}};
  }

  Response list() const {
    json ids = json::array();
    for (auto& [id, s] : snapshot()) ids.push_back(id);
    return {200, {{"sessions", ids}}};
  }

  Response state(const std::string& id) {
    auto s = find(id);
    if (!s) return error(404, "unknown session");
    std::lock_guard lk(s->mutex);
    json j = to_json(s->state);
    j["session_id"] = id;
    j["task"] = s->record.task;
    j["created_at"] = s->record.created_at;
    json anim = json::array();
    for (const auto& a : engine_.animate(s->state))
      anim.push_back({{"cue", to_json(a.cue)}, {"phase", a.phase}, {"angle", a.angle}});
    j["cue_animation"] = anim;
    return {200, j};
  }

  Response plan(const std::string& id) {
    auto s = find(id);
    if (!s) return error(404, "unknown session");
    std::lock_guard lk(s->mutex);
    if (s->state.plan) return {200, with_status(to_json(*s->state.plan), "active")};
    try {
      if (!s->preview || s->preview_scene != s->state.scene) {
        s->preview = plan_with(s->state.scene, s->state.task);
        s->preview_scene = s->state.scene;
      }
    } catch (const Error& e) {
      return error(422, e.what());
    }
    return {200, with_status(to_json(*s->preview), "preview")};
  }

  Response post_event(const std::string& id, const json& body) {
    auto s = find(id);
    if (!s) return error(404, "unknown session");
    Event ev;
    try {
      ev = event_from_json(body);
    } catch (const std::exception& e) {
      return error(400, e.what());
    }
    Response r = apply(s, ev);
    if (r.status == 200) maybe_schedule(s);
    return r;
  }

  Response log(const std::string& id, std::size_t since = 0) {
    auto s = find(id);
    if (!s) return error(404, "unknown session");
    std::lock_guard lk(s->mutex);
    return {200, entries_since(s->state.log, since)};
  }

  /// Blocks until the session log grows past `seen`, the timeout passes or the
  /// hub stops; returns the new entries (possibly none). Missing session: nullopt.
  std::optional<std::vector<LogEntry>> wait_entries(const std::string& id, std::size_t seen,
                                                    std::chrono::milliseconds timeout) {
    auto s = find(id);
    if (!s) return std::nullopt;
    std::unique_lock lk(s->mutex);
    s->changed.wait_for(lk, timeout, [&] { return s->state.log.size() > seen || stopping(); });
    std::vector<LogEntry> out;
    for (std::size_t i = seen; i < s->state.log.size(); ++i) out.push_back(s->state.log[i]);
    return out;
  }

  std::optional<EngineState> snapshot_state(const std::string& id) {
    auto s = find(id);
    if (!s) return std::nullopt;
    std::lock_guard lk(s->mutex);
    return s->state;
  }

 private:
  struct Session {
    std::mutex mutex;
    std::condition_variable changed;
    SessionRecord record;  // header fields; the log lives in state
    EngineState state;
    std::optional<Plan> preview;
    Scene preview_scene;
  };
  using SessionPtr = std::shared_ptr<Session>;

  static Response error(int status, const std::string& msg) { return {status, {{"error", msg}}}; }

  static json with_status(json j, const char* status) {
    j["status"] = status;
    return j;
  }

  static json entries_since(const std::vector<LogEntry>& log, std::size_t since) {
    json arr = json::array();
    for (std::size_t i = since; i < log.size(); ++i) arr.push_back(to_json(log[i]));
    return {{"entries", arr}, {"next", log.size()}};
  }

  Plan plan_with(const Scene& scene, const TaskTemplate& task) const {
    return cfg_.plan ? cfg_.plan(scene, task) : plan_task(scene, task, cfg_.engine.planner);
  }

  // Single writer per session: the mutex is held across dispatch and persistence.
  Response apply(const SessionPtr& s, const Event& ev) {
    std::lock_guard lk(s->mutex);
    const std::size_t before = s->state.log.size();
    s->state = engine_.dispatch(std::move(s->state), ev);
    if (auto f = file_of(s->record.session_id)) append_entries(*f, s->state.log, before);
    s->changed.notify_all();
    json body = entries_since(s->state.log, before);
    body["phase"] = std::string(to_string(s->state.phase));
    bool ignored = false;
    for (std::size_t i = before; i < s->state.log.size(); ++i) ignored |= s->state.log[i].kind == emit::kIgnored;
    return {ignored ? 409 : 200, body};
  }

  // Auto mode: a robot item completes itself after the configured duration.
  void maybe_schedule(const SessionPtr& s) {
    if (!cfg_.auto_robot) return;
    std::size_t cursor;
    int step;
    {
      std::lock_guard lk(s->mutex);
      const ScriptItem* it = s->state.current();
      if (!it || it->actor != Actor::robot) return;
      cursor = s->state.cursor;
      step = it->step_id;
    }
    std::lock_guard lk(timer_mutex_);
    if (stopping_) return;
    timers_.emplace_back([this, s, cursor, step] {
      const double d = cfg_.engine.robot_action_duration;
      {
        std::unique_lock tl(timer_mutex_);
        if (timer_cv_.wait_for(tl, std::chrono::duration<double>(d), [&] { return stopping_; })) return;
      }
      {
        std::lock_guard sl(s->mutex);
        const ScriptItem* it = s->state.current();
        if (!it || it->actor != Actor::robot || s->state.cursor != cursor) return;
      }
      apply(s, Tick{d});
      if (apply(s, RobotActionDone{step}).status == 200) maybe_schedule(s);
    });
  }

  std::string new_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    char buf[20];
    std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(rng()));
    return buf;
  }

  std::optional<std::filesystem::path> file_of(const std::string& id) const {
    if (cfg_.data_dir.empty()) return std::nullopt;
    return cfg_.data_dir / (id + ".jsonl");
  }

  std::optional<std::filesystem::path> fixture_path(const std::string& name) const {
    if (cfg_.fixtures_dir.empty() || name.find('/') != std::string::npos || name.find("..") != std::string::npos)
      return std::nullopt;
    for (const auto& candidate : {cfg_.fixtures_dir / name, cfg_.fixtures_dir / (name + ".json")})
      if (std::filesystem::is_regular_file(candidate)) return candidate;
    return std::nullopt;
  }

  void load_existing() {
    for (const auto& entry : std::filesystem::directory_iterator(cfg_.data_dir)) {
      if (entry.path().extension() != ".jsonl") continue;
      SessionRecord r = load_record(entry.path());
      auto s = std::make_shared<Session>();
      s->state = restore(engine_, r);
      r.log.clear();
      s->record = std::move(r);
      sessions_[s->record.session_id] = s;
    }
  }

  SessionPtr find(const std::string& id) const {
    std::lock_guard lk(mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::map<std::string, SessionPtr> snapshot() const {
    std::lock_guard lk(mutex_);
    return sessions_;
  }

  ServiceConfig cfg_;
  Engine engine_;
  mutable std::mutex mutex_;
  std::map<std::string, SessionPtr> sessions_;

  mutable std::mutex timer_mutex_;
  std::condition_variable timer_cv_;
  std::vector<std::thread> timers_;
  bool stopping_ = false;
};

// ---------------------------------------------------------------------------
// Transport

namespace net {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;

struct Target {
  std::vector<std::string> parts;  // path segments
  std::size_t since = 0;
};

inline Target parse_target(std::string_view t) {
  Target out;
  const auto q = t.find('?');
  const std::string_view path = t.substr(0, q);
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const std::size_t j = path.find('/', i);
    const std::size_t end = j == std::string_view::npos ? path.size() : j;
    if (end > i) out.parts.emplace_back(path.substr(i, end - i));
    i = end;
  }
  if (q != std::string_view::npos) {
    const std::string_view query = t.substr(q + 1);
    const auto p = query.find("since=");
    if (p != std::string_view::npos) {
      std::size_t v = 0;
      for (std::size_t k = p + 6; k < query.size() && std::isdigit(static_cast<unsigned char>(query[k])); ++k)
        v = v * 10 + static_cast<std::size_t>(query[k] - '0');
      out.since = v;
    }
  }
  return out;
}

inline Response route(SessionHub& hub, http::verb method, const Target& t, const std::string& body) {
  const auto& p = t.parts;
  auto parse_body = [&](json& out) {
    try {
      out = json::parse(body);
      return true;
    } catch (const json::parse_error&) {
      return false;
    }
  };
  if (p.size() == 1 && p[0] == "healthz" && method == http::verb::get) return {200, {{"ok", true}}};
  if (p.empty() || p[0] != "sessions") return {404, {{"error", "not found"}}};
  if (p.size() == 1) {
    if (method == http::verb::get) return hub.list();
    if (method == http::verb::post) {
      json j;
      if (!parse_body(j)) return {400, {{"error", "body is not JSON"}}};
      return hub.create(j);
    }
    return {405, {{"error", "method not allowed"}}};
  }
  const std::string& id = p[1];
  if (p.size() == 2 && method == http::verb::get) return hub.state(id);
  if (p.size() == 3 && p[2] == "plan" && method == http::verb::get) return hub.plan(id);
  if (p.size() == 3 && p[2] == "log" && method == http::verb::get) return hub.log(id, t.since);
  if (p.size() == 3 && p[2] == "events" && method == http::verb::post) {
    json j;
    if (!parse_body(j)) {
      if (!hub.snapshot_state(id)) return {404, {{"error", "unknown session"}}};
      return {400, {{"error", "body is not JSON"}}};
    }
    return hub.post_event(id, j);
  }
  if (p.size() == 3 && p[2] == "stream") return {426, {{"error", "websocket upgrade required"}}};
  return {404, {{"error", "not found"}}};
}

class Server {
 public:
  Server(SessionHub& hub, const std::string& address, unsigned short port)
      : hub_(hub), acceptor_(ioc_, {boost::asio::ip::make_address(address), port}) {
    port_ = acceptor_.local_endpoint().port();
  }

  ~Server() { stop(); }

  unsigned short port() const { return port_; }

  void start() {
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  /// Runs the accept loop on the calling thread until stop().
  void run() { accept_loop(); }

  void stop() {
    if (stopping_.exchange(true)) return;
    // Wake the blocking accept with a throwaway connection.
    try {
      boost::asio::io_context ioc;
      tcp::socket wake(ioc);
      wake.connect({acceptor_.local_endpoint().address(), port_});
    } catch (const std::exception&) {
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::unique_ptr<Connection>> conns;
    {
      std::lock_guard lk(conn_mutex_);
      conns.swap(conns_);
    }
    for (auto& c : conns) ::shutdown(c->fd, SHUT_RDWR);
    for (auto& c : conns)
      if (c->thread.joinable()) c->thread.join();
    boost::system::error_code ec;
    acceptor_.close(ec);
  }

 private:
  struct Connection {
    int fd = -1;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop() {
    while (!stopping_) {
      tcp::socket socket(ioc_);
      boost::system::error_code ec;
      acceptor_.accept(socket, ec);
      if (stopping_) break;
      if (ec) continue;
      std::lock_guard lk(conn_mutex_);
      reap();
      auto c = std::make_unique<Connection>();
      c->fd = socket.native_handle();
      Connection* raw = c.get();
      c->thread = std::thread([this, raw, sock = std::move(socket)]() mutable {
        serve(std::move(sock));
        raw->done = true;
      });
      conns_.push_back(std::move(c));
    }
  }

  void reap() {
    for (auto it = conns_.begin(); it != conns_.end();) {
      if ((*it)->done) {
        (*it)->thread.join();
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
  }

  static void set_common(http::response<http::string_body>& res) {
    res.set(http::field::server, "ergo-assist");
    res.set(http::field::access_control_allow_origin, "*");
  }

  void serve(tcp::socket socket) {
    beast::flat_buffer buffer;
    boost::system::error_code ec;
    while (!stopping_) {
      http::request<http::string_body> req;
      http::read(socket, buffer, req, ec);
      if (ec) break;
      const auto raw_target = req.target();
      const Target target = parse_target(std::string_view(raw_target.data(), raw_target.size()));
      if (websocket::is_upgrade(req)) {
        stream(std::move(socket), req, target);
        return;
      }
      http::response<http::string_body> res;
      res.version(req.version());
      res.keep_alive(req.keep_alive());
      set_common(res);
      if (req.method() == http::verb::options) {
        res.result(http::status::no_content);
        res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
      } else {
        Response r;
        try {
          r = route(hub_, req.method(), target, req.body());
        } catch (const std::exception& e) {
          r = {500, {{"error", e.what()}}};
        }
        res.result(static_cast<http::status>(r.status));
        res.set(http::field::content_type, "application/json");
        res.body() = r.body.dump();
      }
      res.prepare_payload();
      http::write(socket, res, ec);
      if (ec || !res.keep_alive()) break;
    }
    socket.shutdown(tcp::socket::shutdown_both, ec);
  }

  // Pushes the session log to a WebSocket client, backlog first.
  void stream(tcp::socket socket, const http::request<http::string_body>& req, const Target& t) {
    boost::system::error_code ec;
    const bool valid = t.parts.size() == 3 && t.parts[0] == "sessions" && t.parts[2] == "stream";
    if (!valid || !hub_.snapshot_state(t.parts[1])) {
      http::response<http::string_body> res{http::status::not_found, req.version()};
      set_common(res);
      res.set(http::field::content_type, "application/json");
      res.body() = json{{"error", valid ? "unknown session" : "not found"}}.dump();
      res.prepare_payload();
      http::write(socket, res, ec);
      return;
    }
    websocket::stream<tcp::socket> ws(std::move(socket));
    ws.accept(req, ec);
    if (ec) return;
    ws.text(true);
    std::size_t seen = t.since;
    while (!stopping_ && !hub_.stopping()) {
      auto fresh = hub_.wait_entries(t.parts[1], seen, std::chrono::milliseconds(200));
      if (!fresh) break;
      for (const auto& e : *fresh) {
        ws.write(boost::asio::buffer(to_json(e).dump()), ec);
        if (ec) return;
      }
      seen += fresh->size();
      // Client frames are ignored, but a close must be read to be answered.
      while (ws.next_layer().available(ec) > 0 && !ec) {
        beast::flat_buffer in;
        ws.read(in, ec);
        if (ec) return;
      }
    }
    ws.close(websocket::close_code::going_away, ec);
  }

  SessionHub& hub_;
  boost::asio::io_context ioc_;
  tcp::acceptor acceptor_;
  unsigned short port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex conn_mutex_;
  std::vector<std::unique_ptr<Connection>> conns_;
};

}  // namespace net

}  // namespace ergo_assist
