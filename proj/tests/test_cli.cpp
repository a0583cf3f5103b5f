#include "config.hpp"
#include "manifest.hpp"
#include "runners.hpp"

#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace clocksync;
using namespace clocksync::cli;

namespace fs = std::filesystem;

namespace {

/// Fresh directory under the system temp root, removed on destruction.
struct TempDir {
    fs::path path;

    TempDir() {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path = fs::temp_directory_path() /
               ("clocksync_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
    REQUIRE(out.good());
}

}  // namespace

TEST_CASE("the digest matches the published reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
    CHECK(fnv1a64("foobar") != fnv1a64("foobaz"));
}

TEST_CASE("seed lists and seed counts both parse") {
    CHECK(parse_seeds("3,17,99") == std::vector<std::uint64_t>{3, 17, 99});
    CHECK(parse_seeds("1, 2") == std::vector<std::uint64_t>{1, 2});
    CHECK(parse_seeds("4,4") == std::vector<std::uint64_t>{4, 4});
    CHECK(parse_seeds("5") == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(parse_seeds(" 3 ") == std::vector<std::uint64_t>{1, 2, 3});

    CHECK_THROWS_AS(parse_seeds("0"), ConfigError);
    CHECK_THROWS_AS(parse_seeds("200000"), ConfigError);
    CHECK_THROWS_AS(parse_seeds(""), ConfigError);
    CHECK_THROWS_AS(parse_seeds("1,,2"), ConfigError);
    CHECK_THROWS_AS(parse_seeds("x"), ConfigError);
    CHECK_THROWS_AS(parse_seeds("1,-2"), ConfigError);
}

TEST_CASE("scenario sections override commons regardless of file order") {
    const ScenarioConfig base = scenario_preset('A');
    const std::string text =
        "agent_count = 50\n"
        "[scenario.A]\n"
        "speed = 3.25\n"
        "[common]\n"
        "speed = 2.0\n"
        "[scenario.B]\n"
        "speed = 9.0\n";
    const ScenarioConfig cfg = apply_config_text(base, text, "test.cfg");
    CHECK(cfg.agent_count == 50);
    CHECK(cfg.speed == 3.25);  // matching section beats common; B is skipped
    CHECK(cfg.scenario_label == "A");
}

TEST_CASE("every scalar key lands on its field") {
    const std::string text =
        "world_width = 120\n"
        "world_height = 90\n"
        "gamma_x = 10\n"
        "gamma_y = 20\n"
        "influence_radius = 9\n"
        "fenced = true\n"
        "authorized_fraction = 0.25\n"
        "agent_count = 7\n"
        "speed = 0.5\n"
        "threshold_seconds = 0.75\n"
        "tick_seconds = 0.2\n"
        "duration_seconds = 12\n"
        "broadcast_radius = 6\n"
        "ranging_fraction = 0.4\n"
        "initial_offset_seconds = 30\n"
        "frequency_error_ppm = 50\n"
        "baseline_lag_min_seconds = 0.1\n"
        "baseline_lag_max_seconds = 0.2\n"
        "clear_disruptions = true\n";
    const ScenarioConfig cfg = apply_config_text(scenario_preset('A'), text, "t");
    CHECK(cfg.world_width == 120.0);
    CHECK(cfg.world_height == 90.0);
    CHECK(cfg.gamma_position.x == 10.0);
    CHECK(cfg.gamma_position.y == 20.0);
    CHECK(cfg.influence_radius == 9.0);
    CHECK(cfg.fenced);
    CHECK(cfg.authorized_fraction == 0.25);
    CHECK(cfg.agent_count == 7);
    CHECK(cfg.speed == 0.5);
    CHECK(cfg.threshold_seconds == 0.75);
    CHECK(cfg.tick_seconds == 0.2);
    CHECK(cfg.duration_seconds == 12.0);
    CHECK(cfg.broadcast_radius == 6.0);
    CHECK(cfg.ranging_fraction == 0.4);
    CHECK(cfg.initial_offset_seconds == 30.0);
    CHECK(cfg.frequency_error_ppm == 50.0);
    CHECK(cfg.baseline_lag_min_seconds == 0.1);
    CHECK(cfg.baseline_lag_max_seconds == 0.2);
    CHECK(cfg.disruption_areas.empty());
}

TEST_CASE("the first disruption line replaces, later ones append") {
    const ScenarioConfig base = scenario_preset('A');
    REQUIRE(base.disruption_areas.size() == 3);

    const ScenarioConfig replaced =
        apply_config_text(base, "disruption = 30, 30, 5\ndisruption = 70, 70, 6\n", "t");
    REQUIRE(replaced.disruption_areas.size() == 2);
    CHECK(replaced.disruption_areas[0].center.x == 30.0);
    CHECK(replaced.disruption_areas[1].radius == 6.0);

    // a scenario section opens its own scope: its first line replaces again
    const ScenarioConfig rescoped = apply_config_text(
        base, "disruption = 30, 30, 5\n[scenario.A]\ndisruption = 70, 70, 6\n", "t");
    REQUIRE(rescoped.disruption_areas.size() == 1);
    CHECK(rescoped.disruption_areas[0].center.x == 70.0);

    const ScenarioConfig cleared = apply_config_text(base, "clear_disruptions = true\n", "t");
    CHECK(cleared.disruption_areas.empty());
}

TEST_CASE("config diagnostics carry the source name and line number") {
    const ScenarioConfig base = scenario_preset('A');
    const auto message_of = [&base](const std::string& text) -> std::string {
        try {
            apply_config_text(base, text, "test.cfg");
        } catch (const ConfigError& e) {
            return e.what();
        }
        return {};
    };

    CHECK(message_of("bogus = 1\n").find("test.cfg:1:") != std::string::npos);
    CHECK(message_of("bogus = 1\n").find("unknown key 'bogus'") != std::string::npos);
    CHECK(message_of("\n# note\nbogus = 1\n").find("test.cfg:3:") != std::string::npos);
    CHECK(message_of("[common\n").find("unterminated") != std::string::npos);
    CHECK(message_of("[weird]\n").find("unknown section") != std::string::npos);
    CHECK(message_of("speed =\n").find("empty value") != std::string::npos);
    CHECK(message_of("speed = fast\n").find("cannot parse") != std::string::npos);
    CHECK(message_of("fenced = maybe\n").find("boolean") != std::string::npos);
    CHECK(message_of("speed 3\n").find("expected 'key = value'") != std::string::npos);
    CHECK(message_of("disruption = 1,2\n").find("x,y,radius") != std::string::npos);

    // keys inside a skipped section are still spell- and value-checked
    CHECK(message_of("[scenario.Z]\nbogus = 1\n").find("unknown key") != std::string::npos);
    CHECK(message_of("[scenario.Z]\nspeed = zoom\n").find("cannot parse") != std::string::npos);

    // a config that parses but breaks the scenario invariants is rejected too
    CHECK(message_of("speed = -1\n").find("invalid") != std::string::npos);
}

TEST_CASE("comments and inline comments are stripped") {
    const ScenarioConfig cfg = apply_config_text(
        scenario_preset('A'), "# leading note\nspeed = 2.5  ; trailing note\n", "t");
    CHECK(cfg.speed == 2.5);
}

TEST_CASE("a missing config file is a config error") {
    CHECK_THROWS_AS(apply_config_file(scenario_preset('A'), "/nonexistent/nowhere.cfg"),
                    ConfigError);
}

TEST_CASE("the steady-state figure averages the final third") {
    MetricsSeries series;
    for (const double f : {0.0, 0.0, 0.0, 0.1, 0.5, 0.9}) {
        series.samples.push_back({static_cast<Ticks>(series.samples.size()), f});
    }
    CHECK(steady_state_fraction(series) == doctest::Approx(0.7));  // mean of the last 2

    MetricsSeries one;
    one.samples.push_back({0, 0.42});
    CHECK(steady_state_fraction(one) == doctest::Approx(0.42));

    CHECK(steady_state_fraction(MetricsSeries{}) == 0.0);
}

TEST_CASE("a manifest records every emitted file with its digest") {
    TempDir dir;
    RunManifest manifest("collective", dir.path);
    manifest.emit_file("x.csv", "hello");
    manifest.write();

    REQUIRE(manifest.entries().size() == 1);
    CHECK(manifest.entries()[0].name == "x.csv");
    CHECK(manifest.entries()[0].digest == fnv1a64("hello"));
    CHECK(manifest.entries()[0].bytes == 5);
    CHECK(slurp(dir.path / "x.csv") == "hello");

    const std::string json = slurp(dir.path / "manifest.json");
    CHECK(json.find("\"x.csv\"") != std::string::npos);
    CHECK(json.find("collective") != std::string::npos);
    char hex[32];
    std::snprintf(hex, sizeof hex, "0x%016llx",
                  static_cast<unsigned long long>(fnv1a64("hello")));
    CHECK(json.find(hex) != std::string::npos);
}

TEST_CASE("the collective runner writes a validated plan") {
    TempDir dir;
    CHECK(run_collective("broadcast", 8, dir.str()) == "broadcast,8,3,7,true");
    const std::string schedule = slurp(dir.path / "schedule.csv");
    CHECK(schedule.rfind("round,sender,receiver,payload_bits\n", 0) == 0);
    CHECK(slurp(dir.path / "summary.csv") ==
          "pattern,N,rounds,steps,valid\nbroadcast,8,3,7,true\n");
    CHECK(fs::exists(dir.path / "manifest.json"));

    TempDir ring;
    CHECK(run_collective("ring-shift-copy", 8, ring.str()) == "ring-shift-copy,8,7,14,true");

    TempDir bad;
    CHECK_THROWS_AS(run_collective("mystery", 8, bad.str()), std::exception);
}

TEST_CASE("the sync runner reports zero residuals on a quiet network") {
    TempDir dir;
    SyncOptions options;
    options.method = "distributed";
    options.n = 4;
    options.offset_step_seconds = 1.0;
    const SyncReport report = run_sync(options, dir.str());
    CHECK(report.rounds == 2);
    CHECK(report.pre_max_offset == 3 * kTicksPerSecond);
    CHECK(report.post_max_offset == 0);
    CHECK(report.final_mean == kTicksPerSecond + kTicksPerSecond / 2);
    for (const Ticks r : report.residuals) CHECK(r == 0);
    CHECK(slurp(dir.path / "residuals.csv").rfind("node,residual_ticks\n", 0) == 0);
    CHECK(fs::exists(dir.path / "sync_report.csv"));
}

TEST_CASE("a zero-duration scenario run yields header-only metrics") {
    TempDir dir;
    const fs::path cfg_path = dir.path / "zero.cfg";
    spit(cfg_path, "duration_seconds = 0\nagent_count = 5\n");

    ScenarioOptions options;
    options.scenario = 'A';
    options.config_path = cfg_path.string();
    options.seeds = {1, 2};
    const fs::path out = dir.path / "out";
    const auto summaries = run_scenario(options, out.string());

    REQUIRE(summaries.size() == 2);
    CHECK(summaries[0].protocol == "proposed");
    CHECK(summaries[1].protocol == "baseline");
    CHECK(summaries[0].steady_mean == 0.0);
    CHECK(slurp(out / "metrics_A_proposed_seed1.csv") ==
          "scenario,protocol,seed,t_seconds,fraction_synced\n");
    CHECK(fs::exists(out / "metrics_A_baseline_seed2.csv"));
    const std::string aggregate = slurp(out / "aggregate.csv");
    CHECK(aggregate.rfind("scenario,protocol,seeds,steady_mean,steady_stddev\n", 0) == 0);
    CHECK(aggregate.find("A,proposed,2,0.000000,0.000000") != std::string::npos);
}

TEST_CASE("repeated scenario runs emit byte-identical data files") {
    TempDir dir;
    const fs::path cfg_path = dir.path / "small.cfg";
    spit(cfg_path, "duration_seconds = 3\nagent_count = 30\n");

    ScenarioOptions options;
    options.scenario = 'B';
    options.config_path = cfg_path.string();
    options.seeds = {1, 2, 3};

    const fs::path first = dir.path / "first";
    const fs::path second = dir.path / "second";
    const auto summary1 = run_scenario(options, first.string());
    const auto summary2 = run_scenario(options, second.string());

    REQUIRE(summary1.size() == summary2.size());
    for (std::size_t i = 0; i < summary1.size(); ++i) {
        CHECK(summary1[i].steady_mean == summary2[i].steady_mean);
        CHECK(summary1[i].steady_stddev == summary2[i].steady_stddev);
    }
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(first)) {
        if (entry.path().extension() != ".csv") continue;
        const auto name = entry.path().filename();
        CHECK(slurp(entry.path()) == slurp(second / name));
        ++compared;
    }
    CHECK(compared == 3 * 2 + 1);  // one metrics file per (seed, protocol) plus the aggregate
}

TEST_CASE("metrics rows carry the label, protocol and seed of their run") {
    TempDir dir;
    const fs::path cfg_path = dir.path / "tiny.cfg";
    spit(cfg_path, "duration_seconds = 0.5\nagent_count = 10\n");

    ScenarioOptions options;
    options.scenario = 'C';
    options.config_path = cfg_path.string();
    options.seeds = {7};
    options.run_baseline = false;
    run_scenario(options, dir.str());

    const std::string csv = slurp(dir.path / "metrics_C_proposed_seed7.csv");
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "scenario,protocol,seed,t_seconds,fraction_synced");
    std::getline(in, line);
    CHECK(line.rfind("C,proposed,7,0.100,", 0) == 0);
    int rows = 0;
    do {
        ++rows;
    } while (std::getline(in, line) && !line.empty());
    CHECK(rows == 5);  // 0.5 s at 0.1 s per tick
}
