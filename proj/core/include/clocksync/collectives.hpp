#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "clocksync/netsim.hpp"
#include "clocksync/rtt.hpp"
#include "clocksync/timebase.hpp"

namespace clocksync {

/// Everything the leader accumulates while averaging a group: its own
/// reference reading, the peers' reported readings with the leader-clock
/// stamps of each exchange, per-peer round-trip means, and the dispatch
/// bookkeeping of the distribution phase. All timestamps live on the
/// leader's clock.
struct LeaderCollection {
    Ticks leader_time = 0;                     ///< leader reading at collection start
    std::vector<std::int64_t> readings;        ///< per peer, as reported
    std::vector<Ticks> receipt_timestamps;     ///< leader clock when each reading arrived
    std::vector<Ticks> request_timestamps;     ///< leader clock when each query left
    std::vector<Ticks> rtt_means;              ///< per-peer round-trip mean
    Ticks compute_cost = 0;                    ///< leader-local time spent computing the mean
    std::vector<Ticks> send_delays;            ///< leader-local duration of each distribution hop

    int peer_count() const { return static_cast<int>(readings.size()); }
    int node_count() const { return peer_count() + 1; }
};

/// Mean of the group as seen by the leader: every reading enters as its
/// offset against the leader clock at receipt, so late arrivals do not skew
/// the result. Computed with two running sums and one floored division.
Ticks leader_average(const LeaderCollection& c);

/// Same mean with each reading additionally credited half its round-trip
/// for time spent in flight.
Ticks leader_average_rtt(const LeaderCollection& c);

/// Values handed out during sequential distribution: peer i receives the
/// mean advanced by the compute cost and by the dispatch delays of all hops
/// completed before its own.
std::vector<std::int64_t> leader_distribute_values(std::int64_t mean, const LeaderCollection& c);

/// Halving-distance broadcast from node 0: ceil(log2 n) rounds, every
/// holder forwarding into the far half of its still-uncovered range.
CommSchedule broadcast_schedule_recursive_doubling(int n);

/// Mirror image of the broadcast: same pairs in reverse round order with
/// direction flipped, payload growing with the subtree being merged.
CommSchedule gather_schedule_recursive_doubling(int n);

/// One peer per round reporting to node 0.
CommSchedule sequential_collect_schedule(int n);

/// Node 0 sending to one peer per round.
CommSchedule sequential_distribute_schedule(int n);

/// Fewest rounds to rotate by q on an n-cycle: min(q, n - q).
int circular_shift_steps(int n, int q);

enum class ReductionKind { CopyAll, RunningSum, RunningMaxKeyed };

/// n - 1 rounds of simultaneous rotate-by-one.
CommSchedule ring_shift_copy_schedule(int n, ReductionKind kind);

/// log2 n rounds with jumps n/2, n/4, ..., 1 when n is a power of two;
/// otherwise falls back to the ring plan.
CommSchedule recursive_doubled_schedule(int n, ReductionKind kind);

/// Payload for reductions that pick a winner: ordered by key, then value,
/// then origin, so ties break identically everywhere.
struct KeyedValue {
    std::int64_t key = 0;
    std::int64_t value = 0;
    std::int32_t origin = 0;
};

bool keyed_less(const KeyedValue& a, const KeyedValue& b);

struct CollectiveCounts {
    int comm_rounds = 0;
    int steps = 0;  ///< shift and copy counted separately on the ring
};

struct CopyAllResult {
    std::vector<std::vector<std::int64_t>> per_node;  ///< rotation order: own value first
    CommSchedule schedule;
    CollectiveCounts counts;
};

/// Pipelines every value around the ring. Node i ends holding all n values
/// as [v_i, v_{i-1}, ..., v_{i-n+1}] (indices mod n).
CopyAllResult ring_shift_copy_all(std::span<const std::int64_t> values);

struct ShiftCopyResult {
    std::vector<std::vector<std::int64_t>> per_node_values;  ///< CopyAll only
    std::vector<std::int64_t> per_node_sum;                  ///< RunningSum only
    CommSchedule schedule;
    CollectiveCounts counts;
};

/// Halving-jump shift-copy under the chosen reduction (CopyAll or
/// RunningSum). Non-power-of-two sizes run the ring plan instead.
ShiftCopyResult recursive_doubled_shift_copy(std::span<const std::int64_t> values,
                                             ReductionKind kind);

struct ShiftMaxResult {
    std::vector<KeyedValue> per_node;  ///< every node: the globally maximal pair
    CommSchedule schedule;
    CollectiveCounts counts;
};

/// Halving-jump shift under the keyed-max reduction; every node ends with
/// the maximal (key, value) pair. Non-power-of-two sizes use the ring.
ShiftMaxResult recursive_doubled_shift_max(std::span<const KeyedValue> values);

struct DistributedAverageResult {
    std::vector<Ticks> per_node_mean;
    CollectiveCounts counts;
    Ticks elapsed = 0;  ///< true time the collective consumed
};

/// Leaderless averaging: every node pulls a round-trip-validated partial
/// from its shift peer each round, ages partials by its own local elapsed
/// time, and ends holding the group mean with no further communication.
/// All clocks adopt their mean at the final barrier.
DistributedAverageResult distributed_average(std::vector<SimulatedClock>& clocks,
                                             const LatencyModel& latency,
                                             const RttThresholds& thresholds = {},
                                             std::uint64_t seed = 0);

/// Node 0 fetches every peer's reading one session at a time. The world
/// advances by each session's duration, so receipt stamps are honest.
LeaderCollection leader_collect_sequential(std::vector<SimulatedClock>& clocks,
                                           const LatencyModel& latency,
                                           const RttThresholds& thresholds = {},
                                           std::uint64_t seed = 0);

struct GatherReadingsResult {
    std::vector<std::int64_t> leader_values;  ///< index i: node i's reading, RTT-corrected
    CollectiveCounts counts;
    Ticks elapsed = 0;
};

/// Executes the halving-distance gather over live clocks: each hop runs a
/// validated round-trip session, forwards the sender's stash with per-value
/// flight credit, and leaves node 0 holding one corrected reading per node.
GatherReadingsResult gather_readings(std::vector<SimulatedClock>& clocks,
                                     const LatencyModel& latency,
                                     const RttThresholds& thresholds = {},
                                     std::uint64_t seed = 0);

struct LeaderSyncResult {
    Ticks mean = 0;
    LeaderCollection collection;
    std::vector<std::int64_t> distributed;  ///< value adopted by each peer
    CollectiveCounts counts;                ///< sequential collect + distribute rounds
    Ticks elapsed = 0;
};

/// Full leader cycle: sequential collection, corrected mean, sequential
/// distribution with dispatch-delay compensation. Peers adopt on delivery;
/// the leader adopts the mean when computed.
LeaderSyncResult leader_sequential_sync(std::vector<SimulatedClock>& clocks,
                                        const LatencyModel& latency,
                                        const RttThresholds& thresholds = {},
                                        std::uint64_t seed = 0, Ticks compute_cost = 0);

}  // namespace clocksync
