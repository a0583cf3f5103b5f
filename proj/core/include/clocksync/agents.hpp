#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "clocksync/collectives.hpp"
#include "clocksync/timebase.hpp"

namespace clocksync {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

double distance(const Vec2& a, const Vec2& b);

enum class SyncMode { Passive, Aggressive };
enum class InfluenceState { InGamma, OutGamma };
enum class Protocol { Proposed, Baseline };

/// Sentinel for "never synchronized"; any real record compares greater.
inline constexpr Ticks kNeverSynced = std::numeric_limits<Ticks>::min();

/// A roaming agent: a drifting clock plus the records and radio properties
/// the protocol works with. gamma_sync_record is the global-time stamp of
/// the last sync against the influence area; clock_sync_record is the local
/// reading at the last sync taken from another agent.
struct AgentClock {
    SimulatedClock clock;
    Ticks gamma_sync_record = kNeverSynced;
    Ticks clock_sync_record = kNeverSynced;
    Vec2 position;
    Vec2 velocity;
    Vec2 waypoint;  ///< current roaming target
    SyncMode mode = SyncMode::Aggressive;
    InfluenceState state = InfluenceState::OutGamma;
    bool ranging_capable = false;
    bool authorized = true;
    double broadcast_radius = 8.0;

    bool has_lineage() const { return gamma_sync_record != kNeverSynced; }
};

struct DisruptionArea {
    Vec2 center;
    double radius = 10.0;
};

/// Full description of one simulation run. Defaults describe the standard
/// 100 m square world; scenario_preset() fills in the lettered layouts.
struct ScenarioConfig {
    std::string scenario_label = "A";
    double world_width = 100.0;
    double world_height = 100.0;
    Vec2 gamma_position{50.0, 50.0};
    double influence_radius = 15.0;
    bool fenced = false;
    double authorized_fraction = 1.0;
    std::vector<DisruptionArea> disruption_areas;
    int agent_count = 100;
    double speed = 1.5;
    double threshold_seconds = 0.5;
    double tick_seconds = 0.1;
    double duration_seconds = 30.0;
    double broadcast_radius = 8.0;
    double ranging_fraction = 0.5;
    double initial_offset_seconds = 60.0;   ///< offsets drawn uniform in +-this
    double frequency_error_ppm = 100.0;     ///< drift drawn uniform in +-this
    double baseline_lag_min_seconds = 0.3;  ///< per-transfer error of the baseline
    double baseline_lag_max_seconds = 0.6;
    std::uint64_t rng_seed = 1;
    Protocol protocol = Protocol::Proposed;

    void validate() const;
};

/// Lettered layouts: A has the influence area centered with three disruption
/// circles spread evenly around it; B adds the fence (10% authorized) and
/// moves the influence area off-center; C fences it at the center with the
/// disruption circles tangent to its boundary.
ScenarioConfig scenario_preset(char label);

struct MetricsSample {
    Ticks true_time = 0;
    double fraction_synced = 0.0;
};

struct MetricsSeries {
    std::vector<MetricsSample> samples;
};

/// Unconditional sync against the reference: the agent adopts G and stamps
/// its gamma record.
void in_gamma_aggressive(AgentClock& agent, Ticks global_now);

/// Threshold-gated sync: adopts G only when the local reading strays more
/// than the threshold. A ranging agent that observes itself receding flips
/// to Aggressive for the following ticks.
void in_gamma_passive(AgentClock& agent, Ticks global_now, Ticks threshold_ticks,
                      bool receding_from_gamma);

/// What a baseline agent remembers of a peer at contact time.
struct BaselineSnapshot {
    std::int64_t time_reading = 0;
    Ticks gamma_sync_record = kNeverSynced;
};

/// The baseline's manual reset at the reference: the agent sets its clock to
/// G plus the drawn lag error. One glance per visit.
void baseline_gamma_sync(AgentClock& agent, Ticks global_now, Ticks lag);

/// Word-of-mouth transfer: the target copies the source's reading plus the
/// per-hop lag error and inherits the source's gamma record. A source that
/// never carried reference time is ignored.
void baseline_contact_sync(const BaselineSnapshot& source, AgentClock& target, Ticks lag);

/// Connected components of the proximity graph over the eligible agents
/// (pairwise within both broadcast radii), with edges to a ranging agent's
/// receding peers removed. Components of one are not groups. previous
/// positions supply the distance trend.
std::vector<std::vector<int>> form_adhoc_group(const std::vector<AgentClock>& agents,
                                               std::span<const Vec2> previous_positions,
                                               std::span<const char> eligible);

struct GroupSyncResult {
    KeyedValue winner;
    int comm_rounds = 0;
    bool adopted = false;  ///< false when no member carries reference lineage
};

/// Group consensus: a keyed shift-max over (gamma record, current reading)
/// crowns the member with the freshest reference sync; the others adopt its
/// reading and record, stamping their clock_sync_record. Members flagged in
/// departed drop out of the adoption only.
GroupSyncResult out_gamma_sync(std::vector<AgentClock*>& members,
                               std::span<const char> departed = {});

/// Share of agents within the threshold of the reference.
double fraction_synchronized(std::span<const AgentClock> agents, Ticks global_now,
                             Ticks threshold_ticks);

/// One simulation instance: the reference clock, the agents, and the two
/// seeded streams (motion and protocol) that make replays byte-identical.
/// Motion draws never depend on the protocol, so proposed and baseline runs
/// over one seed see identical trajectories.
class World {
   public:
    explicit World(const ScenarioConfig& config);

    void step();
    MetricsSeries run();

    const ScenarioConfig& config() const { return config_; }
    const std::vector<AgentClock>& agents() const { return agents_; }
    const GlobalClock& global_clock() const { return global_; }
    Ticks threshold_ticks() const { return threshold_ticks_; }
    int ticks_run() const { return ticks_run_; }

    double fraction_synchronized() const;

   private:
    void spawn_agents();
    void move_agents();
    void apply_influence_protocol();
    void apply_adhoc_protocol();
    bool inside_disruption(const Vec2& p) const;
    Ticks draw_lag();

    ScenarioConfig config_;
    GlobalClock global_;
    std::vector<AgentClock> agents_;
    std::vector<Vec2> previous_positions_;
    std::vector<char> pending_glance_;  // baseline: a reference glance still owed for this visit
    std::mt19937_64 rng_motion_;
    std::mt19937_64 rng_protocol_;
    Ticks tick_ticks_ = 0;
    Ticks threshold_ticks_ = 0;
    int ticks_run_ = 0;
};

}  // namespace clocksync
