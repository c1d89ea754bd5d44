#include "lifespace/cli.hpp"

#include "lifespace/engine.hpp"
#include "lifespace/errors.hpp"
#include "lifespace/server.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <thread>

namespace lifespace {

namespace {

struct World {
    AppConfig config;
    WorldMap map;
    SimState state;
};

World build_world(const CliOptions& options) {
    World w;
    w.config = resolve_config(options);
    if (options.resume_path) {
        auto snap = load_snapshot(*options.resume_path);
        w.map = std::move(snap.map);
        w.state = std::move(snap.state);
        auto pacing = w.config.sim.tick_ms;
        if (!options.config_path && !options.seed) w.config.sim = snap.config;
        w.config.sim.tick_ms = pacing;
        w.config.sim.seed = w.state.seed;
        return w;
    }
    w.map = w.config.map_path ? load_map_file(*w.config.map_path) : load_map(default_map_text());
    auto roster = w.config.roster_path ? make_roster(load_roster_file(*w.config.roster_path), w.map)
                                       : default_roster(w.map);
    w.state = make_initial_state(std::move(roster), w.config.sim);
    return w;
}

std::pair<std::string, unsigned short> split_listen(const std::string& listen) {
    auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw ValidationError("--listen must be host:port");
    int port = 0;
    try {
        port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
        throw ValidationError("--listen port is not a number");
    }
    if (port < 0 || port > 65535) throw ValidationError("--listen port out of range");
    return {listen.substr(0, colon), static_cast<unsigned short>(port)};
}

}  // namespace

AppConfig resolve_config(const CliOptions& options) {
    AppConfig config = options.config_path ? load_app_config(*options.config_path) : default_app_config();
    if (options.map_path) config.map_path = options.map_path;
    if (options.roster_path) config.roster_path = options.roster_path;
    if (options.seed) config.sim.seed = *options.seed;
    if (options.tick_ms) config.sim.tick_ms = *options.tick_ms;
    if (options.provider) {
        auto kind = parse_provider_kind(*options.provider);
        if (!kind) throw ValidationError("--provider must be 'stub' or 'remote'");
        config.provider = *kind;
    }
    validate(config.sim);
    return config;
}

int cmd_run(const CliOptions& options, std::ostream& out, std::ostream& err, RunSummary* summary_out) {
    try {
        auto world = build_world(options);
        Simulation sim(world.map, std::move(world.state), world.config.sim, make_providers(world.config));

        std::ofstream log_file;
        std::optional<EventLogWriter> writer;
        if (options.out_path) {
            log_file.open(*options.out_path, std::ios::binary | std::ios::trunc);
            if (!log_file) throw Error("cannot write log file '" + *options.out_path + "'");
            writer.emplace(log_file);
            writer->header(sim.map(), sim.config(), sim.state());
        }

        RunSummary summary;
        summary.first_tick = sim.state().tick + 1;
        for (std::uint64_t i = 0; i < options.ticks; ++i) {
            auto events = sim.tick();
            if (writer) {
                writer->events(events);
                writer->checkpoint(sim.state());
            }
            for (const auto& e : events) {
                ++summary.events;
                ++summary.by_type[std::string(e.type())];
                if (e.as<ev::ConversationStarted>()) ++summary.conversations;
                if (e.as<ev::MemoryCompressed>()) ++summary.compressions;
            }
        }
        summary.last_tick = sim.state().tick;
        summary.digest = state_digest(sim.state());
        if (writer) {
            writer->trailer(sim.state());
            log_file.flush();
            if (!log_file) throw Error("failed writing log file '" + *options.out_path + "'");
        }
        if (options.snapshot_on_exit)
            save_snapshot(*options.snapshot_on_exit, sim.map(), sim.config(), sim.state());

        out << "ticks " << summary.first_tick << ".." << summary.last_tick << "\n";
        out << "events " << summary.events << "\n";
        for (const auto& [type, n] : summary.by_type) out << "  " << type << " " << n << "\n";
        out << "conversations " << summary.conversations << "\n";
        out << "compressions " << summary.compressions << "\n";
        if (sim.degraded_calls() > 0) out << "degraded provider calls " << sim.degraded_calls() << "\n";
        out << "digest " << summary.digest << "\n";
        if (options.out_path) out << "log " << *options.out_path << "\n";
        if (summary_out) *summary_out = std::move(summary);
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_replay(const std::string& log_path, std::ostream& out, std::ostream& err) {
    try {
        auto report = replay_log_file(log_path);
        if (report.match) {
            out << "digest match " << report.actual_digest << " (" << report.events << " events)\n";
            return 0;
        }
        out << "digest mismatch";
        if (report.first_divergent_seq) out << " at seq " << *report.first_divergent_seq;
        out << ": expected " << report.expected_digest << ", replayed " << report.actual_digest;
        if (!report.detail.empty()) out << " (" << report.detail << ")";
        out << "\n";
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_serve(const CliOptions& options, std::ostream& out, std::ostream& err, const std::atomic<bool>& stop) {
    try {
        auto world = build_world(options);
        auto [host, port] = split_listen(options.listen);
        Engine engine(world.map, std::move(world.state), world.config.sim, make_providers(world.config));
        std::ofstream log_file;
        if (options.out_path) {
            log_file.open(*options.out_path, std::ios::binary | std::ios::trunc);
            if (!log_file) throw Error("cannot write log file '" + *options.out_path + "'");
            engine.attach_log(log_file);
        }
        Server server(engine, host, port);
        engine.start();
        server.start();
        out << "listening on " << host << ":" << server.port() << std::endl;
        while (!stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
        server.stop();
        engine.stop();
        if (options.snapshot_on_exit) {
            engine.save_snapshot(*options.snapshot_on_exit);
            out << "snapshot " << *options.snapshot_on_exit << "\n";
        }
        out << "stopped after event " << engine.last_seq() << "\n";
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err, const std::atomic<bool>& stop) {
    CLI::App app{"lifespace: a multi-agent life space simulator"};
    app.require_subcommand(1);
    CliOptions options;
    std::string replay_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", options.config_path, "JSON config file");
        cmd->add_option("--map", options.map_path, "map file");
        cmd->add_option("--roster", options.roster_path, "roster JSON file");
        cmd->add_option("--seed", options.seed, "simulation seed");
        cmd->add_option("--tick-ms", options.tick_ms, "wall-clock milliseconds per tick");
        cmd->add_option("--provider", options.provider, "stub or remote")->check(CLI::IsMember({"stub", "remote"}));
        cmd->add_option("--out", options.out_path, "write the JSON Lines event log here");
        cmd->add_option("--resume", options.resume_path, "start from a snapshot file");
        cmd->add_option("--snapshot-on-exit", options.snapshot_on_exit, "save a snapshot when finished");
    };

    auto* run = app.add_subcommand("run", "run a fixed number of ticks");
    add_common(run);
    run->add_option("--ticks", options.ticks, "number of ticks")->check(CLI::NonNegativeNumber);

    auto* serve = app.add_subcommand("serve", "run continuously behind the HTTP/WebSocket API");
    add_common(serve);
    serve->add_option("--listen", options.listen, "host:port");

    auto* replay = app.add_subcommand("replay", "re-derive a log's final state and check its digest");
    replay->add_option("log", replay_path, "event log")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 2;
    }
    if (*run) return cmd_run(options, out, err);
    if (*serve) return cmd_serve(options, out, err, stop);
    return cmd_replay(replay_path, out, err);
}

}  // namespace lifespace
