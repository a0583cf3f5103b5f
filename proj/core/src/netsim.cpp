#include "clocksync/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace clocksync {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt_a, std::uint64_t salt_b) {
    // splitmix64 finalizer over the combined words.
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (salt_a + 1) + 0x94d049bb133111ebull * (salt_b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

void LatencyModel::validate() const {
    if (base_latency < 0) throw std::invalid_argument("latency model: negative base latency");
    if (per_bit_cost < 0) throw std::invalid_argument("latency model: negative per-bit cost");
    if (jitter.min < 0 || jitter.max < jitter.min) {
        throw std::invalid_argument("latency model: jitter bounds must satisfy 0 <= min <= max");
    }
    if (forward_multiplier < 0.0 || reverse_multiplier < 0.0) {
        throw std::invalid_argument("latency model: negative direction multiplier");
    }
}

Ticks LatencyModel::one_way(int payload_bits, bool forward, std::mt19937_64& rng) const {
    if (payload_bits < 0) throw std::invalid_argument("latency model: negative payload size");
    const double mult = forward ? forward_multiplier : reverse_multiplier;
    const __int128 deterministic =
        static_cast<__int128>(base_latency) + static_cast<__int128>(per_bit_cost) * payload_bits;
    Ticks jitter_draw = 0;
    if (jitter.max > jitter.min) {
        jitter_draw = std::uniform_int_distribution<Ticks>(jitter.min, jitter.max)(rng);
    } else {
        jitter_draw = jitter.min;
    }
    const double scaled = static_cast<double>(deterministic) * mult;
    const Ticks total = static_cast<Ticks>(std::llround(scaled)) + jitter_draw;
    return total < 0 ? 0 : total;
}

LatencyModel LatencyModel::fixed(Ticks one_way_latency) {
    LatencyModel m;
    m.base_latency = one_way_latency;
    return m;
}

CirculantTopology::CirculantTopology(int order, int jump) : order_(order), jump_(jump) {
    if (order < 1) throw std::invalid_argument("circulant overlay: order must be at least 1");
    if (jump < 1 || jump >= order) {
        throw std::invalid_argument("circulant overlay: jump " + std::to_string(jump) +
                                    " must lie in [1, " + std::to_string(order) + ")");
    }
}

std::vector<std::pair<int, int>> CirculantTopology::edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(order_));
    for (int i = 0; i < order_; ++i) out.emplace_back(i, (i + jump_) % order_);
    return out;
}

std::vector<std::pair<int, int>> embed(const CirculantTopology& overlay, int host_order) {
    if (host_order < overlay.order()) {
        throw std::invalid_argument("embed: overlay of order " + std::to_string(overlay.order()) +
                                    " does not fit a host of " + std::to_string(host_order) +
                                    " nodes");
    }
    return overlay.edges();
}

int CommSchedule::transfer_count() const {
    int total = 0;
    for (const auto& round : rounds) total += static_cast<int>(round.size());
    return total;
}

std::string ScheduleViolation::describe() const {
    std::ostringstream os;
    os << "round " << round << ", node " << node << ": ";
    switch (kind) {
        case Kind::SendsTwice: os << "sends twice"; break;
        case Kind::ReceivesTwice: os << "receives twice"; break;
        case Kind::IndexOutOfRange: os << "index out of range"; break;
        case Kind::SelfMessage: os << "message to itself"; break;
    }
    return os.str();
}

std::optional<ScheduleViolation> validate_schedule(const CommSchedule& schedule, int node_count) {
    std::vector<char> sends(static_cast<std::size_t>(std::max(node_count, 0)));
    std::vector<char> receives(sends.size());
    for (int r = 0; r < schedule.round_count(); ++r) {
        std::fill(sends.begin(), sends.end(), 0);
        std::fill(receives.begin(), receives.end(), 0);
        for (const ScheduleEntry& e : schedule.rounds[static_cast<std::size_t>(r)]) {
            if (e.sender < 0 || e.sender >= node_count) {
                return ScheduleViolation{r, e.sender, ScheduleViolation::Kind::IndexOutOfRange};
            }
            if (e.receiver < 0 || e.receiver >= node_count) {
                return ScheduleViolation{r, e.receiver, ScheduleViolation::Kind::IndexOutOfRange};
            }
            if (e.sender == e.receiver) {
                return ScheduleViolation{r, e.sender, ScheduleViolation::Kind::SelfMessage};
            }
            if (sends[static_cast<std::size_t>(e.sender)]) {
                return ScheduleViolation{r, e.sender, ScheduleViolation::Kind::SendsTwice};
            }
            if (receives[static_cast<std::size_t>(e.receiver)]) {
                return ScheduleViolation{r, e.receiver, ScheduleViolation::Kind::ReceivesTwice};
            }
            sends[static_cast<std::size_t>(e.sender)] = 1;
            receives[static_cast<std::size_t>(e.receiver)] = 1;
        }
    }
    return std::nullopt;
}

std::string schedule_to_csv(const CommSchedule& schedule) {
    std::ostringstream os;
    os << "round,sender,receiver,payload_bits\n";
    for (int r = 0; r < schedule.round_count(); ++r) {
        for (const ScheduleEntry& e : schedule.rounds[static_cast<std::size_t>(r)]) {
            os << r << ',' << e.sender << ',' << e.receiver << ',' << e.payload_bits << '\n';
        }
    }
    return os.str();
}

ExecutionTrace execute(const CommSchedule& schedule, int node_count, const LatencyModel& latency,
                       const SendFn& on_send, const ReceiveFn& on_receive, std::uint64_t seed,
                       Ticks start_time) {
    latency.validate();
    if (node_count < 1) throw std::invalid_argument("execute: node count must be at least 1");
    if (auto violation = validate_schedule(schedule, node_count)) {
        throw std::invalid_argument("execute: invalid schedule: " + violation->describe());
    }

    ExecutionTrace trace;
    trace.inbox.resize(static_cast<std::size_t>(node_count));
    trace.start_time = start_time;

    Ticks now = start_time;
    for (int r = 0; r < schedule.round_count(); ++r) {
        // All sends leave at the round start; the round barrier closes once
        // the slowest delivery lands.
        std::vector<Message> in_flight;
        const auto& round = schedule.rounds[static_cast<std::size_t>(r)];
        in_flight.reserve(round.size());
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        for (const ScheduleEntry& e : round) {
            Message m;
            m.src = e.sender;
            m.dst = e.receiver;
            m.payload_bits = e.payload_bits;
            m.send_time = now;
            m.deliver_time = now + latency.one_way(e.payload_bits, true, rng);
            if (on_send) m.values = on_send(r, e);
            in_flight.push_back(std::move(m));
        }
        std::stable_sort(in_flight.begin(), in_flight.end(),
                         [](const Message& a, const Message& b) {
                             if (a.deliver_time != b.deliver_time) return a.deliver_time < b.deliver_time;
                             return a.dst < b.dst;
                         });
        Ticks round_end = now;
        for (Message& m : in_flight) {
            round_end = std::max(round_end, m.deliver_time);
            if (on_receive) on_receive(r, m);
            trace.inbox[static_cast<std::size_t>(m.dst)].push_back(InboxEntry{r, std::move(m)});
        }
        now = round_end;
    }
    trace.end_time = now;
    return trace;
}

SimulatedPairChannel::SimulatedPairChannel(const SimulatedClock& requester,
                                           const SimulatedClock& responder,
                                           const LatencyModel& latency, std::uint64_t seed)
    : requester_(&requester), responder_(&responder), latency_(latency), rng_(seed) {
    latency_.validate();
}

void SimulatedPairChannel::set_responder_value(std::function<std::int64_t(Ticks)> fn) {
    value_fn_ = std::move(fn);
}

RequestChannel::Exchange SimulatedPairChannel::run_exchange(bool carry_value) {
    Exchange ex;
    ex.request_sent = requester_->peek(elapsed_);
    elapsed_ += latency_.one_way(kRequestBits, true, rng_);
    const Ticks responder_now = responder_->peek(elapsed_);
    std::int64_t value = 0;
    if (carry_value) value = value_fn_ ? value_fn_(responder_now) : responder_now;
    elapsed_ += latency_.one_way(kValueBits, false, rng_);
    ex.response_received = requester_->peek(elapsed_);
    ex.value = value;
    return ex;
}

RequestChannel::Exchange SimulatedPairChannel::probe() { return run_exchange(false); }

RequestChannel::Exchange SimulatedPairChannel::query_value() { return run_exchange(true); }

}  // namespace clocksync
