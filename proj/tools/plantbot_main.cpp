// plantbot: run the agent network, analyze logs, replay runs.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "plantbot/config.hpp"
#include "plantbot/console.hpp"
#include "plantbot/gateway.hpp"
#include "plantbot/telemetry.hpp"

using namespace plantbot;

namespace {

std::atomic<bool>* g_stop = nullptr;

extern "C" void on_signal(int) {
  if (g_stop) g_stop->store(true);
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string duration;
  bool headless = false;
  std::string backend;
  std::string console_bind;
};

int cmd_run(const RunArgs& a) {
  try {
    gateway::Overrides o;
    o.seed = a.seed;
    if (!a.duration.empty()) {
      try {
        o.duration_s = config::parse_duration(a.duration);
      } catch (const std::invalid_argument& e) {
        throw config::StartupError("config", e.what());
      }
    }
    if (a.backend == "live") o.backend = config::BackendKind::live;
    if (a.backend == "scripted") o.backend = config::BackendKind::scripted;
    if (!a.console_bind.empty()) o.console_bind = a.console_bind;
    o.headless = a.headless;

    gateway::Runtime rt(gateway::apply(config::load(a.config), o));
    g_stop = &rt.stop_flag();
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    if (auto port = rt.console_port()) std::cerr << "console listening on port " << *port << "\n";

    const auto ticks = rt.run();
    g_stop = nullptr;
    std::cerr << "run " << rt.config().run_id << ": " << ticks << " ticks, " << rt.sink().count()
              << " records, seed " << rt.seed();
    if (!rt.config().log.empty()) std::cerr << ", log " << rt.config().log.string();
    std::cerr << "\n";
    return 0;
  } catch (const config::StartupError& e) {
    std::cerr << "plantbot: startup failed in " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "plantbot: " << e.what() << "\n";
    return 1;
  }
}

int cmd_validate(const std::string& path) {
  try {
    const auto cfg = config::load(path);
    cfg.validate_files();
    std::cout << "ok: " << path << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "plantbot: " << e.what() << "\n";
    return 2;
  }
}

struct AnalyzeArgs {
  std::string log;
  bool states = false;
  bool runs = false;
  std::string terms_agent;
  std::string pre_transition;
  std::size_t window = 3;
  std::vector<std::string> export_args;
  std::size_t top_k = 20;
};

void print_terms(const telemetry::TermCounts& terms) {
  std::size_t rank = 0;
  for (const auto& [term, count] : terms) std::printf("%4zu  %-24s %zu\n", ++rank, term.c_str(), count);
}

int cmd_analyze(const AnalyzeArgs& a) {
  telemetry::LoadResult loaded;
  try {
    loaded = telemetry::load_records(a.log);
  } catch (const std::exception& e) {
    std::cerr << "plantbot: " << e.what() << "\n";
    return 1;
  }
  if (loaded.malformed)
    std::cerr << "skipped " << loaded.malformed << " malformed line(s), first at line " << *loaded.first_malformed_line
              << "\n";
  const auto& recs = loaded.records;
  const bool any = a.runs || !a.terms_agent.empty() || !a.pre_transition.empty() || !a.export_args.empty();

  if (a.states || !any) {
    const auto c = telemetry::state_counts(recs);
    std::printf("stop %zu\nmove %zu\n", c.stop, c.move);
  }
  if (a.runs) {
    const auto rl = telemetry::run_lengths(recs);
    std::printf("state length count\n");
    for (const auto& [len, n] : rl.stop) std::printf("stop %zu %zu\n", len, n);
    for (const auto& [len, n] : rl.move) std::printf("move %zu %zu\n", len, n);
  }
  if (!a.terms_agent.empty()) print_terms(telemetry::term_frequency(recs, a.terms_agent, a.top_k));
  if (!a.pre_transition.empty()) {
    if (a.pre_transition != "move" && a.pre_transition != "stop") {
      std::cerr << "plantbot: --pre-transition takes 'move' or 'stop'\n";
      return 1;
    }
    print_terms(telemetry::pre_transition_terms(recs, a.pre_transition == "move", a.window, a.top_k));
  }
  if (!a.export_args.empty()) {
    try {
      const auto n = telemetry::export_corpus(recs, a.export_args[0], a.export_args[1]);
      std::cerr << "exported " << n << " line(s) to " << a.export_args[1] << "\n";
    } catch (const std::exception& e) {
      std::cerr << "plantbot: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}

int cmd_replay(const std::string& log, double speed, const std::string& bind) {
  try {
    std::unique_ptr<console::Server> server;
    if (!bind.empty()) {
      const auto [host, port] = config::parse_host_port(bind);
      server = std::make_unique<console::Server>(host, port, [](const std::string&) {
        return console::error_event(0, "replay is read-only");
      });
      std::cerr << "console listening on port " << server->port() << "\n";
    }
    const auto result = console::replay(log, speed, [&](const console::Event& e) {
      std::cout << console::to_line(e) << "\n";
      if (server) server->broadcast(e);
    });
    std::cout.flush();
    if (result.corrupt_line) {
      std::cerr << "replay stopped at corrupt line " << *result.corrupt_line << " after " << result.events
                << " event(s)\n";
      return 1;
    }
    std::cerr << "replayed " << result.events << " event(s)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "plantbot: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plant-robot agent network"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run the world and agents");
  run_cmd->add_option("--config", run.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "world seed, overrides config and scenario");
  run_cmd->add_option("--duration", run.duration, "run length, e.g. 10s, 2m, 600");
  run_cmd->add_flag("--headless", run.headless, "do not start the console server");
  run_cmd->add_option("--backend", run.backend, "completion backend")->check(CLI::IsMember({"live", "scripted"}));
  run_cmd->add_option("--console-bind", run.console_bind, "console address HOST:PORT");

  std::string validate_path;
  auto* val_cmd = app.add_subcommand("validate-config", "check a run configuration and the files it names");
  val_cmd->add_option("--config", validate_path, "run configuration (JSON)")->required();

  AnalyzeArgs an;
  auto* an_cmd = app.add_subcommand("analyze", "statistics over a run log");
  an_cmd->add_option("logfile", an.log, "JSONL log")->required();
  an_cmd->add_flag("--states", an.states, "stop/move decision counts");
  an_cmd->add_flag("--runs", an.runs, "run-length histograms");
  an_cmd->add_option("--terms", an.terms_agent, "term frequencies for an agent ('*' for all)");
  an_cmd->add_option("--pre-transition", an.pre_transition, "chat terms before switches to move|stop");
  an_cmd->add_option("--window", an.window, "records before each transition")->check(CLI::PositiveNumber);
  an_cmd->add_option("--export", an.export_args, "write AGENT's utterances to PATH, one per line")->expected(2);
  an_cmd->add_option("--top-k", an.top_k, "terms to print");

  std::string replay_log;
  double speed = 1.0;
  std::string replay_bind;
  auto* rp_cmd = app.add_subcommand("replay", "re-emit console events from a log");
  rp_cmd->add_option("logfile", replay_log, "JSONL log")->required();
  rp_cmd->add_option("--speed", speed, "time scale; 0 replays without delay");
  rp_cmd->add_option("--console-bind", replay_bind, "also serve the events on HOST:PORT");

  CLI11_PARSE(app, argc, argv);

  if (*run_cmd) return cmd_run(run);
  if (*val_cmd) return cmd_validate(validate_path);
  if (*an_cmd) return cmd_analyze(an);
  if (*rp_cmd) return cmd_replay(replay_log, speed, replay_bind);
  return 1;
}
