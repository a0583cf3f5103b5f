#include <clocksync/collectives.hpp>
#include <clocksync/netsim.hpp>

#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

using namespace clocksync;

namespace {

constexpr Ticks kSecond = kTicksPerSecond;

CommSchedule single_round(std::vector<ScheduleEntry> entries) {
    CommSchedule s;
    s.rounds.push_back(std::move(entries));
    return s;
}

}  // namespace

TEST_CASE("seed derivation is deterministic and salt-sensitive") {
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("one_way cost is base plus per-bit, exactly, when jitter is off") {
    LatencyModel model;
    model.base_latency = 5 * kSecond;
    model.per_bit_cost = 3;
    std::mt19937_64 rng(9);
    CHECK(model.one_way(1, true, rng) == 5 * kSecond + 3);
    CHECK(model.one_way(32, true, rng) == 5 * kSecond + 96);
    CHECK(model.one_way(32, false, rng) == 5 * kSecond + 96);
}

TEST_CASE("a longer payload is never faster on the same link") {
    LatencyModel model;
    model.base_latency = 1000;
    model.per_bit_cost = 7;
    std::mt19937_64 rng_a(4);
    std::mt19937_64 rng_b(4);
    // same rng state: identical jitter draw isolates the payload term
    CHECK(model.one_way(1, true, rng_a) < model.one_way(32, true, rng_b));
}

TEST_CASE("jitter draws stay inside the configured interval") {
    LatencyModel model;
    model.base_latency = 100;
    model.jitter = JitterSpec{10, 50};
    std::mt19937_64 rng(77);
    for (int i = 0; i < 500; ++i) {
        const Ticks cost = model.one_way(1, true, rng);
        CHECK(cost >= 110);
        CHECK(cost <= 150);
    }
}

TEST_CASE("direction multipliers apply per direction and never go negative") {
    LatencyModel model;
    model.base_latency = 1000;
    model.forward_multiplier = 2.0;
    model.reverse_multiplier = 0.5;
    std::mt19937_64 rng(1);
    CHECK(model.one_way(1, true, rng) == 2000);
    CHECK(model.one_way(1, false, rng) == 500);

    LatencyModel bad;
    bad.base_latency = -5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    LatencyModel swapped;
    swapped.jitter = JitterSpec{50, 10};
    CHECK_THROWS_AS(swapped.validate(), std::invalid_argument);
}

TEST_CASE("circulant overlays enumerate exactly the jump edges") {
    const CirculantTopology ring(8, 1);
    CHECK(ring.edges().size() == 8);
    const auto hosted = embed(ring, 8);
    CHECK(hosted.size() == 8);
    for (const auto& [a, b] : hosted) {
        CHECK((b - a + 8) % 8 == 1);
    }
}

TEST_CASE("the half-order jump pairs up into involution edges") {
    // (i+4) mod 8 applied twice is the identity: 4 distinct undirected edges.
    const CirculantTopology overlay(8, 4);
    const auto hosted = embed(overlay, 8);
    std::set<std::pair<int, int>> undirected;
    for (const auto& [a, b] : hosted) {
        undirected.insert({std::min(a, b), std::max(a, b)});
    }
    CHECK(undirected.size() == 4);
}

TEST_CASE("embedding requires the host to be at least the overlay order") {
    CHECK_THROWS_AS(embed(CirculantTopology(9, 2), 8), std::invalid_argument);
    CHECK_NOTHROW(embed(CirculantTopology(8, 2), 64));
}

TEST_CASE("overlay constructor rejects out-of-range jumps") {
    CHECK_THROWS_AS(CirculantTopology(8, 0), std::invalid_argument);
    CHECK_THROWS_AS(CirculantTopology(8, 8), std::invalid_argument);
    CHECK_NOTHROW(CirculantTopology(8, 7));
}

TEST_CASE("schedule validation accepts a clean round") {
    CHECK(!validate_schedule(single_round({{0, 4, 32}}), 8).has_value());
}

TEST_CASE("schedule validation reports the first double send") {
    const auto violation = validate_schedule(single_round({{0, 2, 32}, {0, 3, 32}}), 8);
    REQUIRE(violation.has_value());
    CHECK(violation->round == 0);
    CHECK(violation->node == 0);
    CHECK(violation->describe().find("send") != std::string::npos);
}

TEST_CASE("schedule validation reports double receives, self sends, bad indices") {
    CHECK(validate_schedule(single_round({{1, 5, 32}, {2, 5, 32}}), 8).has_value());
    CHECK(validate_schedule(single_round({{3, 3, 32}}), 8).has_value());
    CHECK(validate_schedule(single_round({{0, 9, 32}}), 8).has_value());
    CHECK(validate_schedule(single_round({{-1, 2, 32}}), 8).has_value());
}

TEST_CASE("a node may send and receive within the same round") {
    CHECK(!validate_schedule(single_round({{0, 1, 32}, {1, 2, 32}}), 3).has_value());
}

TEST_CASE("the eight-node halving broadcast plan is single-port clean") {
    CHECK(!validate_schedule(broadcast_schedule_recursive_doubling(8), 8).has_value());
}

TEST_CASE("execution delivers payloads unchanged at zero latency") {
    std::vector<std::int64_t> seen;
    const auto trace = execute(
        single_round({{2, 5, 32}}), 8, LatencyModel{},
        [](int, const ScheduleEntry&) { return std::vector<std::int64_t>{42, 7}; },
        [&seen](int, const Message& m) { seen = m.values; }, 1);
    CHECK(seen == std::vector<std::int64_t>{42, 7});
    REQUIRE(trace.inbox[5].size() == 1);
    CHECK(trace.inbox[5][0].message.send_time == trace.inbox[5][0].message.deliver_time);
}

TEST_CASE("every delivery costs exactly the base latency when only it is set") {
    LatencyModel model;
    model.base_latency = 5 * kSecond;
    const auto schedule = broadcast_schedule_recursive_doubling(8);
    const auto trace = execute(
        schedule, 8, model, [](int, const ScheduleEntry&) { return std::vector<std::int64_t>{1}; },
        [](int, const Message&) {}, 3);
    int deliveries = 0;
    for (const auto& inbox : trace.inbox) {
        for (const auto& entry : inbox) {
            CHECK(entry.message.deliver_time - entry.message.send_time == 5 * kSecond);
            ++deliveries;
        }
    }
    CHECK(deliveries == 7);
}

TEST_CASE("an invalid schedule raises before any handler runs") {
    int handler_calls = 0;
    const auto count_send = [&handler_calls](int, const ScheduleEntry&) {
        ++handler_calls;
        return std::vector<std::int64_t>{};
    };
    CHECK_THROWS_AS(execute(single_round({{0, 0, 1}}), 4, LatencyModel{}, count_send,
                            [](int, const Message&) {}, 1),
                    std::invalid_argument);
    CHECK(handler_calls == 0);
}

TEST_CASE("no message is delivered before it is sent, jitter included") {
    LatencyModel model;
    model.jitter = JitterSpec{0, 1000};
    const auto schedule = recursive_doubled_schedule(8, ReductionKind::CopyAll);
    const auto trace = execute(
        schedule, 8, model, [](int, const ScheduleEntry&) { return std::vector<std::int64_t>{0}; },
        [](int, const Message&) {}, 17);
    for (const auto& inbox : trace.inbox) {
        for (const auto& entry : inbox) {
            CHECK(entry.message.deliver_time >= entry.message.send_time);
        }
    }
}

TEST_CASE("rounds are barriers: all round-r sends land before round r+1 begins") {
    LatencyModel model;
    model.jitter = JitterSpec{0, 10 * kSecond};
    const auto schedule = recursive_doubled_schedule(8, ReductionKind::CopyAll);
    std::vector<int> receive_rounds;
    const auto trace = execute(
        schedule, 8, model, [](int, const ScheduleEntry&) { return std::vector<std::int64_t>{0}; },
        [&receive_rounds](int round, const Message&) { receive_rounds.push_back(round); }, 29);
    CHECK(std::is_sorted(receive_rounds.begin(), receive_rounds.end()));

    Ticks latest_round0_delivery = 0;
    Ticks earliest_round1_send = std::numeric_limits<Ticks>::max();
    for (const auto& inbox : trace.inbox) {
        for (const auto& entry : inbox) {
            if (entry.round == 0) {
                latest_round0_delivery = std::max(latest_round0_delivery, entry.message.deliver_time);
            }
            if (entry.round == 1) {
                earliest_round1_send = std::min(earliest_round1_send, entry.message.send_time);
            }
        }
    }
    CHECK(earliest_round1_send >= latest_round0_delivery);
}

TEST_CASE("execution is deterministic per seed and diverges across seeds") {
    LatencyModel model;
    model.jitter = JitterSpec{0, 100000};
    const auto schedule = recursive_doubled_schedule(8, ReductionKind::CopyAll);
    const auto send = [](int, const ScheduleEntry&) { return std::vector<std::int64_t>{0}; };
    const auto sink = [](int, const Message&) {};
    const auto a = execute(schedule, 8, model, send, sink, 5);
    const auto b = execute(schedule, 8, model, send, sink, 5);
    const auto c = execute(schedule, 8, model, send, sink, 6);
    CHECK(a.end_time == b.end_time);
    CHECK(a.end_time != c.end_time);
}

TEST_CASE("the schedule dump is the documented four-column table") {
    CommSchedule schedule;
    schedule.rounds.push_back({{0, 4, 32}});
    schedule.rounds.push_back({{0, 2, 32}, {4, 6, 32}});
    CHECK(schedule_to_csv(schedule) ==
          "round,sender,receiver,payload_bits\n"
          "0,0,4,32\n"
          "1,0,2,32\n"
          "1,4,6,32\n");
}

TEST_CASE("a pair exchange reads both endpoints on the requester clock") {
    SimulatedClock requester(0, 0, 0.0, 0, 3);
    SimulatedClock responder(1, 100 * kSecond, 0.0, 100 * kSecond, 4);
    LatencyModel model;
    model.base_latency = 5 * kSecond;

    SimulatedPairChannel channel(requester, responder, model, 21);
    const auto exchange = channel.query_value();
    CHECK(exchange.response_received - exchange.request_sent == 10 * kSecond);
    // responder answered after one forward leg
    CHECK(exchange.value == 100 * kSecond + 5 * kSecond);
    CHECK(channel.elapsed() == 10 * kSecond);
    // the channel never advanced the real clocks
    CHECK(requester.read() == 0);
    CHECK(responder.read() == 100 * kSecond);
}

TEST_CASE("a zero-latency exchange is instantaneous and echoes the responder") {
    SimulatedClock requester(0, 7, 0.0, 7, 3);
    SimulatedClock responder(1, 900, 0.0, 900, 4);
    SimulatedPairChannel channel(requester, responder, LatencyModel{}, 21);
    const auto exchange = channel.query_value();
    CHECK(exchange.request_sent == exchange.response_received);
    CHECK(exchange.value == 900);
}

TEST_CASE("the responder value hook sees the responder's own clock") {
    SimulatedClock requester(0, 0, 0.0, 0, 3);
    SimulatedClock responder(1, 50, 0.0, 50, 4);
    LatencyModel model;
    model.base_latency = 10;
    SimulatedPairChannel channel(requester, responder, model, 21);
    channel.set_responder_value([](Ticks responder_now) { return responder_now * 2; });
    CHECK(channel.query_value().value == (50 + 10) * 2);
}
