// ergo-assist: plan | simulate | serve | oracle
//
// Exit codes: 0 ok, 2 invalid input (usage, missing file, schema/validation),
// 3 no feasible arrangement or plan, 4 simulation ended without TaskComplete.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ergo_assist/report.hpp"
#include "ergo_assist/service.hpp"

namespace ea = ergo_assist;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIncomplete = 4;

volatile std::sig_atomic_t g_stop = 0;

struct Common {
  std::string scene;
  std::string task = std::string(ea::kPouringTaskName);
  double grid = 0.02;
};

ea::PlannerConfig planner_config(const Common& c) {
  ea::PlannerConfig cfg;
  cfg.arrangement.grid_step = c.grid;
  return cfg;
}

int run_plan(const Common& c, bool as_json) {
  const ea::Scene scene = ea::load_scene_file(c.scene);
  const ea::TaskTemplate task = ea::task_by_name(c.task, scene);
  const ea::Plan plan = ea::plan_task(scene, task, planner_config(c));
  if (as_json) {
    std::cout << ea::to_json(plan).dump(2) << "\n";
  } else {
    ea::write_plan_report(std::cout, plan);
  }
  return 0;
}

int run_simulate(const Common& c, const std::string& script) {
  const ea::Scene scene = ea::load_scene_file(c.scene);
  const ea::TaskTemplate task = ea::task_by_name(c.task, scene);
  ea::EngineConfig cfg;
  cfg.planner = planner_config(c);
  const ea::Engine engine(cfg);
  ea::EngineState s = engine.start_session(scene, task);
  if (script == "happy") {
    s = ea::run_happy_path(engine, std::move(s));
  } else {
    std::ifstream in(script);
    if (!in) throw ea::ValidationError("cannot open events file: " + script);
    for (const auto& e : ea::read_event_lines(in)) s = engine.dispatch(std::move(s), e);
  }
  std::cout << ea::log_lines(ea::session_log(s));
  return ea::task_completed(s) ? 0 : kExitIncomplete;
}

int run_oracle(const Common& c) {
  const ea::Scene scene = ea::load_scene_file(c.scene);
  const ea::TaskTemplate task = ea::task_by_name(c.task, scene);
  std::cout << ea::kCostCsvHeader << "\n";
  ea::brute_force_arrangement(scene, task, c.grid, [](const ea::CostRow& r) { ea::write_cost_row(std::cout, r); });
  return 0;
}

int run_serve(unsigned short port, const std::string& address, const std::string& data_dir,
              const std::string& fixtures, bool auto_robot, double grid) {
  ea::ServiceConfig cfg;
  cfg.address = address;
  cfg.port = port;
  cfg.data_dir = data_dir;
  cfg.fixtures_dir = fixtures;
  cfg.auto_robot = auto_robot;
  cfg.engine.planner.arrangement.grid_step = grid;
  ea::SessionHub hub(cfg);
  ea::net::Server server(hub, cfg.address, cfg.port);
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  server.start();
  std::cerr << "ergo-assist listening on " << cfg.address << ":" << server.port();
  if (!data_dir.empty()) std::cerr << " (data dir " << data_dir << ")";
  std::cerr << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  hub.shutdown();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Assistive pouring planner and interaction simulator"};
  app.require_subcommand(1);

  Common common;
  bool as_json = false;
  std::string script = "happy";
  unsigned short port = 8080;
  std::string address = "127.0.0.1";
  std::string data_dir;
  std::string fixtures = "fixtures";
  bool auto_robot = false;

  auto add_common = [&](CLI::App* sub, bool need_scene) {
    auto* opt = sub->add_option("--scene", common.scene, "Scene JSON file");
    if (need_scene) opt->required();
    sub->add_option("--task", common.task, "Task template name")->capture_default_str();
    sub->add_option("--grid", common.grid, "Arrangement grid step in meters")->capture_default_str();
  };

  auto* plan = app.add_subcommand("plan", "Compute the arrangement, allocation and script");
  add_common(plan, true);
  plan->add_flag("--json", as_json, "Emit the plan as JSON");

  auto* sim = app.add_subcommand("simulate", "Run a session headless and print its log");
  add_common(sim, true);
  sim->add_option("--script", script, "'happy' or a JSON Lines events file")->capture_default_str();

  double oracle_grid = 0.05;
  auto* oracle = app.add_subcommand("oracle", "Brute-force cost table as CSV");
  oracle->add_option("--scene", common.scene, "Scene JSON file")->required();
  oracle->add_option("--task", common.task, "Task template name")->capture_default_str();
  oracle->add_option("--grid", oracle_grid, "Grid step in meters (>= 0.01)")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "HTTP/WebSocket session service");
  add_common(serve, false);
  serve->add_option("--port", port, "Listen port (0 picks one)")->capture_default_str();
  serve->add_option("--address", address, "Listen address")->capture_default_str();
  serve->add_option("--data-dir", data_dir, "Session files directory (env ERGO_ASSIST_DATA_DIR)");
  serve->add_option("--fixtures", fixtures, "Directory of scenes addressable by name")->capture_default_str();
  serve->add_flag("--auto-robot", auto_robot, "Complete robot actions after their duration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*plan) return run_plan(common, as_json);
    if (*sim) return run_simulate(common, script);
    if (*oracle) {
      common.grid = oracle_grid;
      return run_oracle(common);
    }
    if (*serve) {
      if (data_dir.empty())
        if (const char* env = std::getenv("ERGO_ASSIST_DATA_DIR")) data_dir = env;
      return run_serve(port, address, data_dir, fixtures, auto_robot, common.grid);
    }
  } catch (const ea::NoFeasibleArrangement& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ea::PlanningFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ea::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return 0;
}
