#include "runners.hpp"

#include "config.hpp"
#include "manifest.hpp"

#include <clocksync/rtt.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <random>
#include <sstream>
#include <stdexcept>

namespace clocksync::cli {
namespace {

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

}  // namespace

std::string run_collective(const std::string& pattern, int n, const std::string& out_dir) {
    if (n < 1) throw std::invalid_argument("collective: order must be at least 1");

    CommSchedule schedule;
    int rounds = 0;
    int steps = 0;
    if (pattern == "broadcast") {
        schedule = broadcast_schedule_recursive_doubling(n);
        rounds = schedule.round_count();
        steps = schedule.transfer_count();
    } else if (pattern == "gather") {
        schedule = gather_schedule_recursive_doubling(n);
        rounds = schedule.round_count();
        steps = schedule.transfer_count();
    } else if (pattern == "ring-shift-copy") {
        schedule = ring_shift_copy_schedule(n, ReductionKind::CopyAll);
        rounds = schedule.round_count();
        steps = 2 * rounds;  // each round: one shift plus one local copy
    } else if (pattern == "rd-shift-copy") {
        schedule = recursive_doubled_schedule(n, ReductionKind::CopyAll);
        rounds = schedule.round_count();
        steps = rounds;
    } else if (pattern == "rd-shift-max") {
        schedule = recursive_doubled_schedule(n, ReductionKind::RunningMaxKeyed);
        rounds = schedule.round_count();
        steps = rounds;
    } else {
        throw std::invalid_argument("collective: unknown pattern '" + pattern + "'");
    }

    const auto violation = validate_schedule(schedule, n);
    const bool valid = !violation.has_value();

    std::ostringstream summary;
    summary << pattern << ',' << n << ',' << rounds << ',' << steps << ','
            << (valid ? "true" : "false");

    RunManifest manifest("collective", out_dir);
    manifest.emit_file("schedule.csv", schedule_to_csv(schedule));
    manifest.emit_file("summary.csv", "pattern,N,rounds,steps,valid\n" + summary.str() + "\n");
    manifest.write();

    if (!valid) {
        throw std::runtime_error("collective: schedule failed validation: " +
                                 violation->describe());
    }
    return summary.str();
}

namespace {

std::vector<SimulatedClock> make_sync_clocks(const SyncOptions& o) {
    std::vector<SimulatedClock> clocks;
    clocks.reserve(static_cast<std::size_t>(o.n));
    const Ticks step = ticks_from_seconds(o.offset_step_seconds);
    for (int i = 0; i < o.n; ++i) {
        double freq = 0.0;
        if (o.freq_ppm != 0.0) {
            std::mt19937_64 rng(derive_seed(o.seed, 0x51, static_cast<std::uint64_t>(i)));
            freq = std::uniform_real_distribution<double>(-o.freq_ppm * 1e-6,
                                                          o.freq_ppm * 1e-6)(rng);
        }
        const Ticks offset = step * i;
        clocks.emplace_back(i, offset, freq, offset,
                            derive_seed(o.seed, 0x52, static_cast<std::uint64_t>(i)));
    }
    return clocks;
}

Ticks max_pairwise_offset(const std::vector<SimulatedClock>& clocks) {
    Ticks lo = clocks.front().read();
    Ticks hi = lo;
    for (const auto& c : clocks) {
        lo = std::min(lo, c.read());
        hi = std::max(hi, c.read());
    }
    return hi - lo;
}

}  // namespace

SyncReport run_sync(const SyncOptions& o, const std::string& out_dir) {
    if (o.n < 2) throw std::invalid_argument("sync: need at least two nodes");
    if (o.method != "distributed" && o.method != "leader") {
        throw std::invalid_argument("sync: unknown method '" + o.method + "'");
    }

    std::vector<SimulatedClock> clocks = make_sync_clocks(o);

    LatencyModel latency;
    latency.base_latency = ticks_from_seconds(o.latency_seconds);
    latency.jitter = JitterSpec{0, ticks_from_seconds(o.jitter_seconds)};
    latency.validate();

    SyncReport report;
    report.method = o.method;
    report.n = o.n;
    report.seed = o.seed;
    report.pre_max_offset = max_pairwise_offset(clocks);
    report.doubling_rounds = gather_schedule_recursive_doubling(o.n).round_count() +
                             broadcast_schedule_recursive_doubling(o.n).round_count();

    if (o.method == "distributed") {
        const auto result = distributed_average(clocks, latency, RttThresholds{}, o.seed);
        report.rounds = result.counts.comm_rounds;
    } else {
        const auto result = leader_sequential_sync(clocks, latency, RttThresholds{}, o.seed,
                                                   ticks_from_seconds(o.compute_cost_seconds));
        report.rounds = result.counts.comm_rounds;
    }

    report.post_max_offset = max_pairwise_offset(clocks);
    __int128 sum = 0;
    for (const auto& c : clocks) sum += c.read();
    report.final_mean = detail::floordiv(sum, o.n);
    report.residuals.reserve(clocks.size());
    for (const auto& c : clocks) report.residuals.push_back(c.read() - report.final_mean);

    std::ostringstream rep;
    rep << "method,n,seed,rounds,doubling_rounds,pre_max_offset_ticks,post_max_offset_ticks,"
           "final_mean_ticks\n"
        << report.method << ',' << report.n << ',' << report.seed << ',' << report.rounds << ','
        << report.doubling_rounds << ',' << report.pre_max_offset << ','
        << report.post_max_offset << ',' << report.final_mean << '\n';

    std::ostringstream res;
    res << "node,residual_ticks\n";
    for (std::size_t i = 0; i < report.residuals.size(); ++i) {
        res << i << ',' << report.residuals[i] << '\n';
    }

    RunManifest manifest("sync", out_dir);
    manifest.set_seeds({o.seed});
    manifest.emit_file("sync_report.csv", rep.str());
    manifest.emit_file("residuals.csv", res.str());
    manifest.write();
    return report;
}

double steady_state_fraction(const MetricsSeries& series) {
    const std::size_t m = series.samples.size();
    if (m == 0) return 0.0;
    const std::size_t take = std::max<std::size_t>(1, m / 3);
    double sum = 0.0;
    for (std::size_t i = m - take; i < m; ++i) sum += series.samples[i].fraction_synced;
    return sum / static_cast<double>(take);
}

namespace {

std::string metrics_csv(const ScenarioConfig& cfg, const MetricsSeries& series) {
    std::ostringstream out;
    out << "scenario,protocol,seed,t_seconds,fraction_synced\n";
    const char* protocol = cfg.protocol == Protocol::Proposed ? "proposed" : "baseline";
    for (const auto& s : series.samples) {
        out << cfg.scenario_label << ',' << protocol << ',' << cfg.rng_seed << ','
            << format_double("%.3f", seconds_from_ticks(s.true_time)) << ','
            << format_double("%.6f", s.fraction_synced) << '\n';
    }
    return out.str();
}

}  // namespace

std::vector<ScenarioSummary> run_scenario(const ScenarioOptions& options,
                                          const std::string& out_dir) {
    if (options.seeds.empty()) throw std::invalid_argument("scenario: no seeds given");
    if (!options.run_proposed && !options.run_baseline) {
        throw std::invalid_argument("scenario: no protocol selected");
    }

    ScenarioConfig base = scenario_preset(options.scenario);
    if (!options.config_path.empty()) {
        base = apply_config_file(base, options.config_path);
    }

    std::vector<Protocol> protocols;
    if (options.run_proposed) protocols.push_back(Protocol::Proposed);
    if (options.run_baseline) protocols.push_back(Protocol::Baseline);

    struct Job {
        ScenarioConfig cfg;
        std::string file_name;
    };
    std::vector<Job> jobs;
    for (const Protocol protocol : protocols) {
        for (const std::uint64_t seed : options.seeds) {
            ScenarioConfig cfg = base;
            cfg.protocol = protocol;
            cfg.rng_seed = seed;
            const char* name = protocol == Protocol::Proposed ? "proposed" : "baseline";
            std::string file_name = "metrics_" + cfg.scenario_label + "_" + name + "_seed" +
                                    std::to_string(seed) + ".csv";
            jobs.push_back({std::move(cfg), std::move(file_name)});
        }
    }

    // Share-nothing fan-out: each job copies its config, runs its own world,
    // and returns finished CSV text. Files land in fixed job order.
    std::vector<std::future<std::pair<std::string, double>>> futures;
    futures.reserve(jobs.size());
    for (const Job& job : jobs) {
        futures.push_back(std::async(std::launch::async, [&job] {
            World world(job.cfg);
            const MetricsSeries series = world.run();
            return std::make_pair(metrics_csv(job.cfg, series), steady_state_fraction(series));
        }));
    }

    RunManifest manifest("scenario", out_dir);
    manifest.set_seeds(options.seeds);
    if (!options.config_path.empty()) manifest.set_config_path(options.config_path);

    std::vector<double> steady(jobs.size(), 0.0);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto [csv, fraction] = futures[i].get();
        steady[i] = fraction;
        manifest.emit_file(jobs[i].file_name, csv);
    }

    std::vector<ScenarioSummary> summaries;
    std::ostringstream agg;
    agg << "scenario,protocol,seeds,steady_mean,steady_stddev\n";
    const std::size_t per_protocol = options.seeds.size();
    for (std::size_t p = 0; p < protocols.size(); ++p) {
        double sum = 0.0;
        for (std::size_t k = 0; k < per_protocol; ++k) sum += steady[p * per_protocol + k];
        const double mean = sum / static_cast<double>(per_protocol);
        double var = 0.0;
        for (std::size_t k = 0; k < per_protocol; ++k) {
            const double d = steady[p * per_protocol + k] - mean;
            var += d * d;
        }
        const double stddev =
            per_protocol > 1 ? std::sqrt(var / static_cast<double>(per_protocol - 1)) : 0.0;

        ScenarioSummary s;
        s.scenario_label = base.scenario_label;
        s.protocol = protocols[p] == Protocol::Proposed ? "proposed" : "baseline";
        s.seed_count = static_cast<int>(per_protocol);
        s.steady_mean = mean;
        s.steady_stddev = stddev;
        summaries.push_back(s);

        agg << s.scenario_label << ',' << s.protocol << ',' << s.seed_count << ','
            << format_double("%.6f", mean) << ',' << format_double("%.6f", stddev) << '\n';
    }

    manifest.emit_file("aggregate.csv", agg.str());
    manifest.write();
    return summaries;
}

}  // namespace clocksync::cli
