#include "config.hpp"
#include "runners.hpp"

#include <clocksync/rtt.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Clock synchronization toolkit: communication plans, averaging "
                 "methods, and roaming-agent scenarios"};
    app.require_subcommand(1);

    // collective
    auto* collective = app.add_subcommand("collective", "Build and validate one communication plan");
    std::string pattern = "broadcast";
    int coll_n = 8;
    std::string coll_out;
    collective->add_option("--pattern", pattern, "Plan to build")
        ->check(CLI::IsMember(
            {"broadcast", "gather", "ring-shift-copy", "rd-shift-copy", "rd-shift-max"}))
        ->capture_default_str();
    collective->add_option("--n", coll_n, "Group size")->check(CLI::PositiveNumber)
        ->capture_default_str();
    collective->add_option("--out", coll_out, "Output directory")->required();

    // sync
    auto* sync = app.add_subcommand("sync", "Run one synchronization method over drifting clocks");
    clocksync::cli::SyncOptions sync_opts;
    std::string sync_out;
    sync->add_option("--method", sync_opts.method, "distributed or leader")
        ->check(CLI::IsMember({"distributed", "leader"}))
        ->capture_default_str();
    sync->add_option("--n", sync_opts.n, "Number of nodes")->check(CLI::Range(2, 1 << 20))
        ->capture_default_str();
    sync->add_option("--seed", sync_opts.seed, "Run seed")->capture_default_str();
    sync->add_option("--offset-step", sync_opts.offset_step_seconds,
                     "Node i starts offset by i times this many seconds")
        ->capture_default_str();
    sync->add_option("--freq-ppm", sync_opts.freq_ppm,
                     "Frequency error drawn uniform in +-this (ppm)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sync->add_option("--latency", sync_opts.latency_seconds, "One-way base latency in seconds")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sync->add_option("--jitter", sync_opts.jitter_seconds, "Uniform jitter bound in seconds")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sync->add_option("--compute-cost", sync_opts.compute_cost_seconds,
                     "Leader-side computation time in seconds")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sync->add_option("--out", sync_out, "Output directory")->required();

    // scenario
    auto* scenario = app.add_subcommand("scenario", "Replay roaming-agent scenarios over seeds");
    std::string scenario_letter = "A";
    std::string config_path;
    std::string seeds_text = "10";
    std::string protocol = "both";
    std::string scen_out;
    scenario->add_option("--scenario", scenario_letter, "Lettered layout")
        ->check(CLI::IsMember({"A", "B", "C"}))
        ->capture_default_str();
    scenario->add_option("--config", config_path, "Config file layered over the preset")
        ->check(CLI::ExistingFile);
    scenario->add_option("--seeds", seeds_text,
                         "Comma-separated seed list, or a count K meaning 1..K")
        ->capture_default_str();
    scenario->add_option("--protocol", protocol, "Which protocol to run")
        ->check(CLI::IsMember({"proposed", "baseline", "both"}))
        ->capture_default_str();
    scenario->add_option("--out", scen_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (collective->parsed()) {
        const std::string summary = clocksync::cli::run_collective(pattern, coll_n, coll_out);
        std::printf("pattern,N,rounds,steps,valid\n%s\n", summary.c_str());
        return 0;
    }

    if (sync->parsed()) {
        const auto report = clocksync::cli::run_sync(sync_opts, sync_out);
        std::printf("method=%s n=%d seed=%llu rounds=%d doubling_rounds=%d\n",
                    report.method.c_str(), report.n,
                    static_cast<unsigned long long>(report.seed), report.rounds,
                    report.doubling_rounds);
        std::printf("pre_max_offset_s=%.9f post_max_offset_s=%.9f final_mean_s=%.9f\n",
                    clocksync::seconds_from_ticks(report.pre_max_offset),
                    clocksync::seconds_from_ticks(report.post_max_offset),
                    clocksync::seconds_from_ticks(report.final_mean));
        return 0;
    }

    clocksync::cli::ScenarioOptions opts;
    opts.scenario = scenario_letter[0];
    opts.config_path = config_path;
    opts.seeds = clocksync::cli::parse_seeds(seeds_text);
    opts.run_proposed = protocol != "baseline";
    opts.run_baseline = protocol != "proposed";
    const auto summaries = clocksync::cli::run_scenario(opts, scen_out);
    for (const auto& s : summaries) {
        std::printf("scenario %s %s: steady fraction %.4f (stddev %.4f) over %d seeds\n",
                    s.scenario_label.c_str(), s.protocol.c_str(), s.steady_mean,
                    s.steady_stddev, s.seed_count);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const clocksync::UnstableChannelError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
