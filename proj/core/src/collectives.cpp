#include "clocksync/collectives.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <tuple>

namespace clocksync {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int reduction_payload_bits(ReductionKind kind, int carried_values) {
    switch (kind) {
        case ReductionKind::CopyAll: return kValueBits * carried_values;
        case ReductionKind::RunningSum: return kValueBits;
        case ReductionKind::RunningMaxKeyed: return 2 * kValueBits;
    }
    return kValueBits;
}

// One forwarding hop of the halving-distance tree: the holder of [lo, hi)
// seeds mid with the upper half. Broadcast walks the splits forward, gather
// walks them backward with direction flipped.
struct Split {
    int round;
    int lo;
    int mid;
    int hi;
};

std::vector<Split> doubling_splits(int n) {
    std::vector<Split> out;
    std::vector<std::pair<int, int>> active{{0, n}};
    int round = 0;
    while (true) {
        std::vector<std::pair<int, int>> next;
        bool split_any = false;
        for (const auto& [lo, hi] : active) {
            const int size = hi - lo;
            if (size <= 1) continue;
            split_any = true;
            const int mid = lo + size / 2;
            out.push_back(Split{round, lo, mid, hi});
            next.emplace_back(lo, mid);
            next.emplace_back(mid, hi);
        }
        if (!split_any) break;
        active = std::move(next);
        ++round;
    }
    return out;
}

void require_positive_order(int n, const char* what) {
    if (n < 1) {
        throw std::invalid_argument(std::string(what) + ": need at least one node, got " +
                                    std::to_string(n));
    }
}

}  // namespace

Ticks leader_average(const LeaderCollection& c) {
    if (c.readings.empty()) return c.leader_time;
    if (c.receipt_timestamps.size() != c.readings.size()) {
        throw std::invalid_argument("leader averaging: every reading needs its receipt stamp");
    }
    const int n = c.node_count();
    __int128 num = static_cast<__int128>(n) * c.leader_time;
    for (std::size_t i = 0; i < c.readings.size(); ++i) {
        num += c.readings[i];
        num -= c.receipt_timestamps[i];
    }
    return detail::floordiv(num, n);
}

Ticks leader_average_rtt(const LeaderCollection& c) {
    if (c.readings.empty()) return c.leader_time;
    if (c.receipt_timestamps.size() != c.readings.size()) {
        throw std::invalid_argument("leader averaging: every reading needs its receipt stamp");
    }
    if (c.rtt_means.size() != c.readings.size()) {
        throw std::invalid_argument("leader averaging: missing round-trip entry for a peer");
    }
    const int n = c.node_count();
    __int128 num = 2 * static_cast<__int128>(n) * c.leader_time;
    for (std::size_t i = 0; i < c.readings.size(); ++i) {
        num += 2 * static_cast<__int128>(c.readings[i]);
        num += c.rtt_means[i];
        num -= 2 * static_cast<__int128>(c.receipt_timestamps[i]);
    }
    return detail::floordiv(num, 2 * static_cast<__int128>(n));
}

std::vector<std::int64_t> leader_distribute_values(std::int64_t mean, const LeaderCollection& c) {
    const std::size_t peers = c.readings.size();
    if (peers > 0 && c.send_delays.size() + 1 < peers) {
        throw std::invalid_argument("distribution values: need a send delay per completed hop");
    }
    std::vector<std::int64_t> out;
    out.reserve(peers);
    std::int64_t running = mean + c.compute_cost;
    for (std::size_t i = 0; i < peers; ++i) {
        out.push_back(running);
        if (i < c.send_delays.size()) running += c.send_delays[i];
    }
    return out;
}

CommSchedule broadcast_schedule_recursive_doubling(int n) {
    require_positive_order(n, "broadcast schedule");
    CommSchedule schedule;
    for (const Split& s : doubling_splits(n)) {
        if (s.round >= schedule.round_count()) schedule.rounds.resize(static_cast<std::size_t>(s.round) + 1);
        schedule.rounds[static_cast<std::size_t>(s.round)].push_back(
            ScheduleEntry{s.lo, s.mid, kValueBits});
    }
    return schedule;
}

CommSchedule gather_schedule_recursive_doubling(int n) {
    require_positive_order(n, "gather schedule");
    const std::vector<Split> splits = doubling_splits(n);
    int total_rounds = 0;
    for (const Split& s : splits) total_rounds = std::max(total_rounds, s.round + 1);
    CommSchedule schedule;
    schedule.rounds.resize(static_cast<std::size_t>(total_rounds));
    for (const Split& s : splits) {
        const int flipped = total_rounds - 1 - s.round;
        schedule.rounds[static_cast<std::size_t>(flipped)].push_back(
            ScheduleEntry{s.mid, s.lo, kValueBits * (s.hi - s.mid)});
    }
    return schedule;
}

CommSchedule sequential_collect_schedule(int n) {
    require_positive_order(n, "sequential collect schedule");
    CommSchedule schedule;
    schedule.rounds.reserve(static_cast<std::size_t>(n - 1));
    for (int i = 1; i < n; ++i) {
        schedule.rounds.push_back({ScheduleEntry{i, 0, kValueBits}});
    }
    return schedule;
}

CommSchedule sequential_distribute_schedule(int n) {
    require_positive_order(n, "sequential distribute schedule");
    CommSchedule schedule;
    schedule.rounds.reserve(static_cast<std::size_t>(n - 1));
    for (int i = 1; i < n; ++i) {
        schedule.rounds.push_back({ScheduleEntry{0, i, kValueBits}});
    }
    return schedule;
}

int circular_shift_steps(int n, int q) {
    if (n < 2 || q < 1 || q >= n) {
        throw std::invalid_argument("circular shift: requires 0 < q < n, got q=" + std::to_string(q) +
                                    ", n=" + std::to_string(n));
    }
    return std::min(q, n - q);
}

CommSchedule ring_shift_copy_schedule(int n, ReductionKind kind) {
    require_positive_order(n, "ring schedule");
    CommSchedule schedule;
    schedule.rounds.reserve(static_cast<std::size_t>(n - 1));
    const int payload = reduction_payload_bits(kind, 1);
    for (int r = 0; r + 1 < n; ++r) {
        std::vector<ScheduleEntry> round;
        round.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) round.push_back(ScheduleEntry{i, (i + 1) % n, payload});
        schedule.rounds.push_back(std::move(round));
    }
    return schedule;
}

CommSchedule recursive_doubled_schedule(int n, ReductionKind kind) {
    require_positive_order(n, "halving-jump schedule");
    if (!is_power_of_two(n)) return ring_shift_copy_schedule(n, kind);
    CommSchedule schedule;
    int carried = 1;
    for (int jump = n / 2; jump >= 1; jump /= 2) {
        const int payload = reduction_payload_bits(kind, carried);
        std::vector<ScheduleEntry> round;
        round.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) round.push_back(ScheduleEntry{i, (i + jump) % n, payload});
        schedule.rounds.push_back(std::move(round));
        carried *= 2;
    }
    return schedule;
}

bool keyed_less(const KeyedValue& a, const KeyedValue& b) {
    return std::tie(a.key, a.value, a.origin) < std::tie(b.key, b.value, b.origin);
}

CopyAllResult ring_shift_copy_all(std::span<const std::int64_t> values) {
    const int n = static_cast<int>(values.size());
    require_positive_order(n, "ring shift-copy");
    CopyAllResult out;
    out.schedule = ring_shift_copy_schedule(n, ReductionKind::CopyAll);
    out.counts = CollectiveCounts{n - 1, 2 * (n - 1)};
    out.per_node.resize(static_cast<std::size_t>(n));
    std::vector<std::int64_t> forward(values.begin(), values.end());
    for (int i = 0; i < n; ++i) out.per_node[static_cast<std::size_t>(i)] = {values[static_cast<std::size_t>(i)]};
    execute(
        out.schedule, n, LatencyModel::zero(),
        [&forward](int, const ScheduleEntry& e) {
            return std::vector<std::int64_t>{forward[static_cast<std::size_t>(e.sender)]};
        },
        [&out, &forward](int, const Message& m) {
            out.per_node[static_cast<std::size_t>(m.dst)].push_back(m.values.front());
            forward[static_cast<std::size_t>(m.dst)] = m.values.front();
        },
        /*seed=*/0);
    return out;
}

ShiftCopyResult recursive_doubled_shift_copy(std::span<const std::int64_t> values,
                                             ReductionKind kind) {
    if (kind == ReductionKind::RunningMaxKeyed) {
        throw std::invalid_argument("keyed-max reduction takes (key, value) pairs; use the keyed shift-max");
    }
    const int n = static_cast<int>(values.size());
    require_positive_order(n, "halving-jump shift-copy");
    ShiftCopyResult out;
    out.schedule = recursive_doubled_schedule(n, kind);
    const bool pow2 = is_power_of_two(n);
    out.counts = pow2 ? CollectiveCounts{out.schedule.round_count(), out.schedule.round_count()}
                      : CollectiveCounts{n - 1, 2 * (n - 1)};
    if (kind == ReductionKind::CopyAll) {
        out.per_node_values.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            out.per_node_values[static_cast<std::size_t>(i)] = {values[static_cast<std::size_t>(i)]};
        }
        if (pow2) {
            execute(
                out.schedule, n, LatencyModel::zero(),
                [&out](int, const ScheduleEntry& e) {
                    return out.per_node_values[static_cast<std::size_t>(e.sender)];
                },
                [&out](int, const Message& m) {
                    auto& stash = out.per_node_values[static_cast<std::size_t>(m.dst)];
                    stash.insert(stash.end(), m.values.begin(), m.values.end());
                },
                /*seed=*/0);
        } else {
            std::vector<std::int64_t> forward(values.begin(), values.end());
            execute(
                out.schedule, n, LatencyModel::zero(),
                [&forward](int, const ScheduleEntry& e) {
                    return std::vector<std::int64_t>{forward[static_cast<std::size_t>(e.sender)]};
                },
                [&out, &forward](int, const Message& m) {
                    out.per_node_values[static_cast<std::size_t>(m.dst)].push_back(m.values.front());
                    forward[static_cast<std::size_t>(m.dst)] = m.values.front();
                },
                /*seed=*/0);
        }
        return out;
    }
    // Running sum. The halving-jump form exchanges disjoint partials, so
    // partials merge directly; the ring form pipelines originals and adds
    // them locally to keep every value counted exactly once.
    out.per_node_sum.assign(values.begin(), values.end());
    if (pow2) {
        execute(
            out.schedule, n, LatencyModel::zero(),
            [&out](int, const ScheduleEntry& e) {
                return std::vector<std::int64_t>{out.per_node_sum[static_cast<std::size_t>(e.sender)]};
            },
            [&out](int, const Message& m) {
                out.per_node_sum[static_cast<std::size_t>(m.dst)] += m.values.front();
            },
            /*seed=*/0);
    } else {
        std::vector<std::int64_t> forward(values.begin(), values.end());
        execute(
            out.schedule, n, LatencyModel::zero(),
            [&forward](int, const ScheduleEntry& e) {
                return std::vector<std::int64_t>{forward[static_cast<std::size_t>(e.sender)]};
            },
            [&out, &forward](int, const Message& m) {
                out.per_node_sum[static_cast<std::size_t>(m.dst)] += m.values.front();
                forward[static_cast<std::size_t>(m.dst)] = m.values.front();
            },
            /*seed=*/0);
    }
    return out;
}

ShiftMaxResult recursive_doubled_shift_max(std::span<const KeyedValue> values) {
    const int n = static_cast<int>(values.size());
    require_positive_order(n, "keyed shift-max");
    ShiftMaxResult out;
    out.schedule = recursive_doubled_schedule(n, ReductionKind::RunningMaxKeyed);
    const bool pow2 = is_power_of_two(n);
    out.counts = pow2 ? CollectiveCounts{out.schedule.round_count(), out.schedule.round_count()}
                      : CollectiveCounts{n - 1, 2 * (n - 1)};
    out.per_node.assign(values.begin(), values.end());
    // Keyed max is idempotent, so both forms forward the running best.
    execute(
        out.schedule, n, LatencyModel::zero(),
        [&out](int, const ScheduleEntry& e) {
            const KeyedValue& best = out.per_node[static_cast<std::size_t>(e.sender)];
            return std::vector<std::int64_t>{best.key, best.value, best.origin};
        },
        [&out](int, const Message& m) {
            const KeyedValue candidate{m.values[0], m.values[1], static_cast<std::int32_t>(m.values[2])};
            KeyedValue& mine = out.per_node[static_cast<std::size_t>(m.dst)];
            if (keyed_less(mine, candidate)) mine = candidate;
        },
        /*seed=*/0);
    return out;
}

namespace {

// Aging: a partial that stands for `count` clock readings grows by count
// ticks per local tick, so a stored partial is brought to "now" before it
// is shipped, merged, or read out.
struct Partial {
    std::int64_t sum = 0;
    std::int64_t count = 0;
    Ticks as_of = 0;

    void age_to(Ticks now) {
        sum += count * (now - as_of);
        as_of = now;
    }
};

}  // namespace

DistributedAverageResult distributed_average(std::vector<SimulatedClock>& clocks,
                                             const LatencyModel& latency,
                                             const RttThresholds& thresholds, std::uint64_t seed) {
    const int n = static_cast<int>(clocks.size());
    if (n < 2) throw std::invalid_argument("distributed averaging: need at least two nodes");
    latency.validate();
    thresholds.validate();

    const bool pow2 = is_power_of_two(n);
    const CommSchedule schedule = recursive_doubled_schedule(n, ReductionKind::RunningSum);

    std::vector<Partial> state(static_cast<std::size_t>(n));
    std::vector<Partial> carry(static_cast<std::size_t>(n));  // pipelined original (ring form)
    for (int i = 0; i < n; ++i) {
        const Ticks reading = clocks[static_cast<std::size_t>(i)].read();
        state[static_cast<std::size_t>(i)] = Partial{reading, 1, reading};
        carry[static_cast<std::size_t>(i)] = Partial{reading, 1, reading};
    }

    DistributedAverageResult out;
    std::vector<Partial> pending(static_cast<std::size_t>(n));
    for (int r = 0; r < schedule.round_count(); ++r) {
        Ticks round_elapsed = 0;
        for (const ScheduleEntry& e : schedule.rounds[static_cast<std::size_t>(r)]) {
            const int s = e.sender;
            const int v = e.receiver;
            SimulatedPairChannel channel(clocks[static_cast<std::size_t>(v)],
                                         clocks[static_cast<std::size_t>(s)], latency,
                                         derive_seed(seed, static_cast<std::uint64_t>(r) + 1,
                                                     static_cast<std::uint64_t>(v)));
            Partial& shipped = pow2 ? state[static_cast<std::size_t>(s)] : carry[static_cast<std::size_t>(s)];
            channel.set_responder_value([&shipped](Ticks responder_now) {
                shipped.age_to(responder_now);
                return shipped.sum;
            });
            PeerTimeReading reading;
            try {
                reading = estimate_with_reading(channel, thresholds);
            } catch (const UnstableChannelError& err) {
                throw UnstableChannelError(err.attempts(), v, s);
            }
            const std::int64_t count = shipped.count;
            pending[static_cast<std::size_t>(v)] =
                Partial{reading.reading + count * detail::floordiv(reading.rtt.mean, 2), count,
                        reading.response_received};
            round_elapsed = std::max(round_elapsed, channel.elapsed());
        }
        for (auto& clock : clocks) clock.advance(round_elapsed);
        out.elapsed += round_elapsed;
        for (const ScheduleEntry& e : schedule.rounds[static_cast<std::size_t>(r)]) {
            const int v = e.receiver;
            const Ticks now = clocks[static_cast<std::size_t>(v)].read();
            Partial& mine = state[static_cast<std::size_t>(v)];
            Partial& got = pending[static_cast<std::size_t>(v)];
            mine.age_to(now);
            got.age_to(now);
            mine.sum += got.sum;
            mine.count += got.count;
            carry[static_cast<std::size_t>(v)] = got;
        }
    }

    out.counts.comm_rounds = schedule.round_count();
    out.counts.steps = pow2 ? schedule.round_count() : 2 * (n - 1);
    out.per_node_mean.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Partial& mine = state[static_cast<std::size_t>(i)];
        mine.age_to(clocks[static_cast<std::size_t>(i)].read());
        if (mine.count != n) {
            throw std::logic_error("distributed averaging: partial covers " +
                                   std::to_string(mine.count) + " of " + std::to_string(n) + " nodes");
        }
        out.per_node_mean.push_back(detail::floordiv(mine.sum, mine.count));
    }
    for (int i = 0; i < n; ++i) {
        clocks[static_cast<std::size_t>(i)].set_local_time(out.per_node_mean[static_cast<std::size_t>(i)]);
    }
    return out;
}

namespace {

struct CollectOutcome {
    LeaderCollection collection;
    Ticks elapsed = 0;
};

CollectOutcome collect_sequential_impl(std::vector<SimulatedClock>& clocks,
                                       const LatencyModel& latency, const RttThresholds& thresholds,
                                       std::uint64_t seed) {
    const int n = static_cast<int>(clocks.size());
    if (n < 1) throw std::invalid_argument("leader collection: need at least one node");
    latency.validate();
    thresholds.validate();
    CollectOutcome out;
    out.collection.leader_time = clocks[0].read();
    for (int i = 1; i < n; ++i) {
        SimulatedPairChannel channel(clocks[0], clocks[static_cast<std::size_t>(i)], latency,
                                     derive_seed(seed, static_cast<std::uint64_t>(i), 0xC011));
        PeerTimeReading reading;
        try {
            reading = estimate_with_reading(channel, thresholds);
        } catch (const UnstableChannelError& err) {
            throw UnstableChannelError(err.attempts(), 0, i);
        }
        out.collection.readings.push_back(reading.reading);
        out.collection.request_timestamps.push_back(reading.request_sent);
        out.collection.receipt_timestamps.push_back(reading.response_received);
        out.collection.rtt_means.push_back(reading.rtt.mean);
        for (auto& clock : clocks) clock.advance(channel.elapsed());
        out.elapsed += channel.elapsed();
    }
    return out;
}

}  // namespace

LeaderCollection leader_collect_sequential(std::vector<SimulatedClock>& clocks,
                                           const LatencyModel& latency,
                                           const RttThresholds& thresholds, std::uint64_t seed) {
    return collect_sequential_impl(clocks, latency, thresholds, seed).collection;
}

GatherReadingsResult gather_readings(std::vector<SimulatedClock>& clocks,
                                     const LatencyModel& latency, const RttThresholds& thresholds,
                                     std::uint64_t seed) {
    const int n = static_cast<int>(clocks.size());
    require_positive_order(n, "gather execution");
    latency.validate();
    thresholds.validate();

    struct Entry {
        int origin;
        std::int64_t value;
        Ticks as_of;  // holder-local stamp the value was last aged to
    };
    std::vector<std::vector<Entry>> stash(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Ticks reading = clocks[static_cast<std::size_t>(i)].read();
        stash[static_cast<std::size_t>(i)] = {Entry{i, reading, reading}};
    }

    const CommSchedule schedule = gather_schedule_recursive_doubling(n);
    GatherReadingsResult out;
    for (int r = 0; r < schedule.round_count(); ++r) {
        Ticks round_elapsed = 0;
        std::vector<std::pair<int, std::vector<Entry>>> arrivals;
        for (const ScheduleEntry& e : schedule.rounds[static_cast<std::size_t>(r)]) {
            const int s = e.sender;
            const int v = e.receiver;
            SimulatedPairChannel channel(clocks[static_cast<std::size_t>(v)],
                                         clocks[static_cast<std::size_t>(s)], latency,
                                         derive_seed(seed, static_cast<std::uint64_t>(r) + 1,
                                                     static_cast<std::uint64_t>(s)));
            auto& outbox = stash[static_cast<std::size_t>(s)];
            std::size_t cursor = 0;
            channel.set_responder_value([&outbox, &cursor](Ticks responder_now) {
                Entry& item = outbox[cursor++];
                item.value += responder_now - item.as_of;
                item.as_of = responder_now;
                return item.value;
            });
            PeerTimeReading first;
            try {
                first = estimate_with_reading(channel, thresholds);
            } catch (const UnstableChannelError& err) {
                throw UnstableChannelError(err.attempts(), v, s);
            }
            const Ticks half_trip = detail::floordiv(first.rtt.mean, 2);
            std::vector<Entry> received;
            received.reserve(outbox.size());
            received.push_back(Entry{outbox[0].origin, first.reading + half_trip, first.response_received});
            while (cursor < outbox.size()) {
                const int origin = outbox[cursor].origin;
                const RequestChannel::Exchange ex = channel.query_value();
                received.push_back(Entry{origin, ex.value + half_trip, ex.response_received});
            }
            arrivals.emplace_back(v, std::move(received));
            round_elapsed = std::max(round_elapsed, channel.elapsed());
        }
        for (auto& clock : clocks) clock.advance(round_elapsed);
        out.elapsed += round_elapsed;
        for (auto& [v, received] : arrivals) {
            auto& inbox = stash[static_cast<std::size_t>(v)];
            inbox.insert(inbox.end(), received.begin(), received.end());
        }
    }

    out.counts.comm_rounds = schedule.round_count();
    out.counts.steps = schedule.round_count();
    out.leader_values.assign(static_cast<std::size_t>(n), 0);
    const Ticks leader_now = clocks[0].read();
    for (Entry& item : stash[0]) {
        item.value += leader_now - item.as_of;
        item.as_of = leader_now;
        out.leader_values[static_cast<std::size_t>(item.origin)] = item.value;
    }
    return out;
}

LeaderSyncResult leader_sequential_sync(std::vector<SimulatedClock>& clocks,
                                        const LatencyModel& latency, const RttThresholds& thresholds,
                                        std::uint64_t seed, Ticks compute_cost) {
    const int n = static_cast<int>(clocks.size());
    if (n < 1) throw std::invalid_argument("leader sync: need at least one node");
    if (compute_cost < 0) throw std::invalid_argument("leader sync: negative compute cost");

    LeaderSyncResult out;
    CollectOutcome collected = collect_sequential_impl(clocks, latency, thresholds, seed);
    out.collection = std::move(collected.collection);
    out.elapsed = collected.elapsed;

    if (compute_cost > 0) {
        const Ticks leader_before = clocks[0].read();
        for (auto& clock : clocks) clock.advance(compute_cost);
        out.elapsed += compute_cost;
        out.collection.compute_cost = clocks[0].read() - leader_before;
    }

    out.mean = leader_average_rtt(out.collection);
    clocks[0].set_local_time(out.mean + out.collection.compute_cost);

    std::mt19937_64 flight_rng(derive_seed(seed, 0xD157));
    std::int64_t running = out.mean + out.collection.compute_cost;
    for (int i = 1; i < n; ++i) {
        const std::int64_t value = running;
        const Ticks leader_before = clocks[0].read();
        const Ticks flight = latency.one_way(kValueBits, true, flight_rng);
        for (auto& clock : clocks) clock.advance(flight);
        out.elapsed += flight;
        const Ticks dispatch = clocks[0].read() - leader_before;
        clocks[static_cast<std::size_t>(i)].set_local_time(value);
        out.distributed.push_back(value);
        out.collection.send_delays.push_back(dispatch);
        running += dispatch;
    }

    out.counts.comm_rounds = 2 * (n - 1);
    out.counts.steps = 2 * (n - 1);
    return out;
}

}  // namespace clocksync
