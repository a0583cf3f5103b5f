#pragma once

#include <clocksync/agents.hpp>
#include <clocksync/collectives.hpp>
#include <clocksync/netsim.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace clocksync::cli {

/// `collective`: builds and validates one communication plan, writes
/// schedule.csv and summary.csv, returns the one-line summary
/// `pattern,N,rounds,steps,valid`.
///
/// Patterns: broadcast, gather, ring-shift-copy, rd-shift-copy, rd-shift-max.
/// For the tree patterns steps counts transfers; for the shift patterns it
/// counts one node's shift and copy operations separately.
std::string run_collective(const std::string& pattern, int n, const std::string& out_dir);

struct SyncOptions {
    std::string method = "distributed";  ///< distributed | leader
    int n = 8;
    std::uint64_t seed = 1;
    double offset_step_seconds = 1.0;  ///< node i starts at i * step
    double freq_ppm = 0.0;             ///< drift drawn uniform in +-this
    double latency_seconds = 0.0;
    double jitter_seconds = 0.0;
    double compute_cost_seconds = 0.0;  ///< leader method only
};

struct SyncReport {
    std::string method;
    int n = 0;
    std::uint64_t seed = 0;
    int rounds = 0;           ///< communication rounds the method used
    int doubling_rounds = 0;  ///< gather+broadcast rounds of the halving plan
    Ticks pre_max_offset = 0;
    Ticks post_max_offset = 0;
    Ticks final_mean = 0;
    std::vector<Ticks> residuals;  ///< per node, against the post-run mean
};

/// `sync`: runs one synchronization method over n drifting clocks and writes
/// sync_report.csv plus residuals.csv.
SyncReport run_sync(const SyncOptions& options, const std::string& out_dir);

struct ScenarioOptions {
    char scenario = 'A';
    std::string config_path;  ///< optional overlay on the lettered preset
    std::vector<std::uint64_t> seeds = {1};
    bool run_proposed = true;
    bool run_baseline = true;
};

struct ScenarioSummary {
    std::string scenario_label;
    std::string protocol;
    int seed_count = 0;
    double steady_mean = 0.0;
    double steady_stddev = 0.0;
};

/// Mean synchronized fraction over the final third of the samples; the
/// steady-state figure a run is judged by.
double steady_state_fraction(const MetricsSeries& series);

/// `scenario`: replays every (protocol, seed) pair over identical
/// trajectories, one metrics CSV per run plus aggregate.csv. Replications
/// fan out across workers keyed by seed; output order is fixed.
std::vector<ScenarioSummary> run_scenario(const ScenarioOptions& options,
                                          const std::string& out_dir);

}  // namespace clocksync::cli
