#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "swarmlink/errors.hpp"
#include "swarmlink/gcs_server.hpp"
#include "swarmlink/realtime.hpp"
#include "swarmlink/scenario.hpp"
#include "swarmlink/verify.hpp"

namespace {

using namespace swarmlink;

constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

struct RunArgs {
  std::string scenario;
  std::string trace;
  bool real = false;
  std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& args) {
  ScenarioConfig config;
  try {
    config = load_scenario(args.scenario);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }
  if (args.seed) config.override_seed(*args.seed);

  std::ofstream trace_file;
  if (!args.trace.empty()) {
    trace_file.open(args.trace, std::ios::binary | std::ios::trunc);
    if (!trace_file) {
      std::cerr << args.trace << ": cannot open trace file\n";
      return kExitConfig;
    }
  }
  std::ostream* trace = args.trace.empty() ? nullptr : &trace_file;
  try {
    RunSummary summary;
    if (args.real) {
      RealSwarm swarm(std::move(config), trace);
      summary = swarm.run();
    } else {
      Simulation sim(std::move(config), trace);
      summary = sim.run();
    }
    std::cout << to_json_value(summary).dump(2) << '\n';
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  }
  return 0;
}

struct VerifyArgs {
  std::string trace;
  std::vector<std::string> checks;
  ConvergenceOptions convergence;
};

int cmd_verify(const VerifyArgs& args) {
  std::ifstream in(args.trace);
  if (!in) {
    std::cerr << args.trace << ": cannot open trace\n";
    return kExitConfig;
  }
  std::vector<Json> trace;
  try {
    trace = read_trace(in);
  } catch (const InvalidArgument& e) {
    std::cerr << args.trace << ": " << e.what() << '\n';
    return kExitConfig;
  }
  bool ok = true;
  for (const auto& name : args.checks) {
    const auto result = run_check(name, trace, args.convergence);
    ok = ok && result.passed;
    std::cout << (result.passed ? "PASS " : "FAIL ") << name << '\n';
    for (const auto& f : result.failures) std::cout << "  failure: " << f << '\n';
    for (const auto& n : result.notes) std::cout << "  note: " << n << '\n';
    std::cout << "  metrics: " << result.metrics.dump() << '\n';
  }
  return ok ? 0 : 1;
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct GcsArgs {
  std::string bind = default_bind_address();
  std::string scenario;
  std::string trace;
  std::string coordinator;
  bool real = false;
  double speed = 1.0;
  double duration_s = 0.0;
};

// Plays scenario events against a RealSwarm as their wall time passes.
void serve_real(RealSwarm& swarm, const ScenarioConfig& config, const std::chrono::steady_clock::time_point deadline) {
  swarm.start();
  std::size_t next = 0;
  while (!g_interrupted && std::chrono::steady_clock::now() < deadline) {
    const auto now = swarm.now_us();
    while (next < config.events.size() && config.events[next].t_us <= now) swarm.apply(config.events[next++]);
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  swarm.stop();
}

int cmd_gcs(const GcsArgs& args) {
  ScenarioConfig config;
  mw::UdpEndpoint bind;
  try {
    config = load_scenario(args.scenario);
    bind = mw::parse_endpoint(args.bind);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "--bind: " << e.what() << '\n';
    return kExitConfig;
  }
  if (args.coordinator == "gcs") config.coordinator = CoordinatorMode::Gcs;
  if (args.coordinator == "onboard") config.coordinator = CoordinatorMode::Onboard;

  std::ofstream trace_file;
  if (!args.trace.empty()) {
    trace_file.open(args.trace, std::ios::binary | std::ios::trunc);
    if (!trace_file) {
      std::cerr << args.trace << ": cannot open trace file\n";
      return kExitConfig;
    }
  }
  std::ostream* trace = args.trace.empty() ? nullptr : &trace_file;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto deadline = args.duration_s > 0
                            ? std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                                     std::chrono::duration<double>(args.duration_s))
                            : std::chrono::steady_clock::time_point::max();
  try {
    if (args.real) {
      RealSwarm swarm(config, trace);
      RealBackend backend(swarm);
      GcsServer server(backend, bind);
      server.start();
      std::cerr << "gcs: serving real-mode swarm on " << bind.host << ':' << server.port() << '\n';
      serve_real(swarm, config, deadline);
      server.stop();
    } else {
      LiveSim sim(config, trace, args.speed);
      GcsServer server(sim, bind);
      server.start();
      sim.start();
      std::cerr << "gcs: serving live sim on " << bind.host << ':' << server.port() << '\n';
      while (!g_interrupted && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
      server.stop();
      sim.stop();
    }
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const Error& e) {
    std::cerr << "gcs: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swarmlink: UAV swarm middleware, coordinator and scenario runner"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario file and write a JSONL trace");
  run_cmd->add_option("scenario", run.scenario, "Scenario YAML file")->required();
  run_cmd->add_option("--trace", run.trace, "Write the trace to this file");
  run_cmd->add_flag("--real", run.real, "Run nodes as threads over UDP instead of the simulated network");
  run_cmd->add_option("--seed", run.seed, "Override the scenario and network seeds");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Check a property over a trace");
  verify_cmd->add_option("trace", verify.trace, "Trace JSONL file")->required();
  verify_cmd->add_option("--check", verify.checks, "Property to check (repeatable)")
      ->required()
      ->check(CLI::IsMember(check_names()));
  verify_cmd->add_option("--after", verify.convergence.after_s, "formation_convergence: ignore samples before (s)");
  verify_cmd->add_option("--threshold", verify.convergence.threshold_m, "formation_convergence: slot error bound (m)");
  verify_cmd->add_option("--settle", verify.convergence.settle_s, "formation_convergence: grace after a change (s)");

  GcsArgs gcs;
  auto* gcs_cmd = app.add_subcommand("gcs", "Serve the ground-station HTTP/WebSocket API for a live sim or real-mode swarm");
  gcs_cmd->add_option("--bind", gcs.bind, "host:port to listen on (default $GCS_BIND or 127.0.0.1:8400)");
  gcs_cmd->add_option("--scenario", gcs.scenario, "Scenario YAML file")->required();
  gcs_cmd->add_flag("--real", gcs.real, "Run the swarm as UDP node threads instead of a live sim");
  gcs_cmd->add_option("--coordinator", gcs.coordinator, "Override where swarm/state originates")
      ->check(CLI::IsMember({"gcs", "onboard"}));
  gcs_cmd->add_option("--speed", gcs.speed, "Live sim rate relative to wall time")->check(CLI::PositiveNumber);
  gcs_cmd->add_option("--trace", gcs.trace, "Write the trace to this file");
  gcs_cmd->add_option("--duration", gcs.duration_s, "Exit after this many seconds (0: until interrupted)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (*run_cmd) return cmd_run(run);
  if (*verify_cmd) return cmd_verify(verify);
  if (*gcs_cmd) return cmd_gcs(gcs);
  return 1;
}
