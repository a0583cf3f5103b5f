#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "clocksync/timebase.hpp"

namespace clocksync {

/// Stable seed derivation: mixes a base seed with up to two salts so that
/// every (round, node) pair gets an independent, reproducible stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt_a, std::uint64_t salt_b = 0);

/// One value on the wire is 32 bits; a bare request is a single bit.
inline constexpr int kRequestBits = 1;
inline constexpr int kValueBits = 32;

struct JitterSpec {
    Ticks min = 0;
    Ticks max = 0;
};

/// One-way delivery cost of a link. The jitter draw is uniform over
/// [min, max] from a seeded engine; direction multipliers let a link be
/// asymmetric while staying deterministic.
struct LatencyModel {
    Ticks base_latency = 0;
    Ticks per_bit_cost = 0;
    JitterSpec jitter;
    double forward_multiplier = 1.0;
    double reverse_multiplier = 1.0;

    void validate() const;

    /// Latency of one delivery. Never negative.
    Ticks one_way(int payload_bits, bool forward, std::mt19937_64& rng) const;

    static LatencyModel zero() { return LatencyModel{}; }
    static LatencyModel fixed(Ticks one_way_latency);
};

struct Message {
    int src = 0;
    int dst = 0;
    int payload_bits = 0;
    Ticks send_time = 0;
    Ticks deliver_time = 0;
    std::vector<std::int64_t> values;
};

/// Circulant overlay C_n^q: vertex i links to (i + q) mod n.
class CirculantTopology {
   public:
    CirculantTopology(int order, int jump);

    int order() const { return order_; }
    int jump() const { return jump_; }

    /// Directed edges (i, (i + q) mod n) for all i.
    std::vector<std::pair<int, int>> edges() const;

   private:
    int order_;
    int jump_;
};

/// Maps the overlay onto a host network of host_order nodes; the overlay
/// cannot exceed the host.
std::vector<std::pair<int, int>> embed(const CirculantTopology& overlay, int host_order);

struct ScheduleEntry {
    int sender = 0;
    int receiver = 0;
    int payload_bits = 0;
};

/// A communication plan: rounds of simultaneous directed transfers. Rounds
/// are synchronous barriers; every node is single-port duplex, so per round
/// it may appear in at most one entry as sender and at most one as receiver.
struct CommSchedule {
    std::vector<std::vector<ScheduleEntry>> rounds;

    int round_count() const { return static_cast<int>(rounds.size()); }
    int transfer_count() const;
};

struct ScheduleViolation {
    enum class Kind { SendsTwice, ReceivesTwice, IndexOutOfRange, SelfMessage };

    int round = 0;
    int node = 0;
    Kind kind = Kind::SendsTwice;

    std::string describe() const;
};

/// First violation of the single-port duplex discipline in scan order, or
/// nullopt when the schedule is clean for node_count nodes.
std::optional<ScheduleViolation> validate_schedule(const CommSchedule& schedule, int node_count);

/// CSV rendering, one row per transfer: round,sender,receiver,payload_bits.
std::string schedule_to_csv(const CommSchedule& schedule);

struct InboxEntry {
    int round = 0;
    Message message;
};

struct ExecutionTrace {
    std::vector<std::vector<InboxEntry>> inbox;  ///< per receiving node, delivery order
    Ticks start_time = 0;
    Ticks end_time = 0;
};

/// Produces the payload values a sender puts on the wire this round.
using SendFn = std::function<std::vector<std::int64_t>(int round, const ScheduleEntry&)>;
/// Consumes a delivered message. Called only after every send of the round.
using ReceiveFn = std::function<void(int round, const Message&)>;

/// Runs a schedule over the latency model. Within a round all sends happen
/// at the round start and all deliveries complete before the next round
/// begins; the next round starts at the latest delivery time. The schedule
/// is validated first and an invalid one raises before any delivery.
ExecutionTrace execute(const CommSchedule& schedule, int node_count, const LatencyModel& latency,
                       const SendFn& on_send, const ReceiveFn& on_receive, std::uint64_t seed,
                       Ticks start_time = 0);

/// Request/response transport between one requester and one responder. Each
/// exchange is a request followed by a reply; both endpoint timestamps are
/// taken on the requester's clock, so round-trip arithmetic never mixes
/// timescales.
class RequestChannel {
   public:
    struct Exchange {
        Ticks request_sent = 0;       ///< requester clock at send
        Ticks response_received = 0;  ///< requester clock at receipt
        std::int64_t value = 0;       ///< payload of the reply
    };

    virtual ~RequestChannel() = default;

    /// One-bit request answered by a 32-bit dummy. Used for sampling only.
    virtual Exchange probe() = 0;

    /// One-bit request answered by the responder's 32-bit value.
    virtual Exchange query_value() = 0;
};

/// Channel between two simulated clocks. The session keeps its own elapsed
/// true-time cursor and reads both clocks through peek(), so the caller
/// decides when (and whether) the world actually advances by elapsed().
class SimulatedPairChannel final : public RequestChannel {
   public:
    SimulatedPairChannel(const SimulatedClock& requester, const SimulatedClock& responder,
                         const LatencyModel& latency, std::uint64_t seed);

    /// Overrides the reply payload; the default is the responder's reading.
    /// The hook sees the responder's local time at the moment it answers.
    void set_responder_value(std::function<std::int64_t(Ticks responder_now)> fn);

    Exchange probe() override;
    Exchange query_value() override;

    /// True time consumed by every exchange so far.
    Ticks elapsed() const { return elapsed_; }

   private:
    Exchange run_exchange(bool carry_value);

    const SimulatedClock* requester_;
    const SimulatedClock* responder_;
    LatencyModel latency_;
    std::mt19937_64 rng_;
    std::function<std::int64_t(Ticks)> value_fn_;
    Ticks elapsed_ = 0;
};

}  // namespace clocksync
