#include "clocksync/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace clocksync {

double distance(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

namespace {

void require_circle_in_bounds(const Vec2& center, double radius, double width, double height,
                              const std::string& what) {
    if (center.x - radius < 0.0 || center.x + radius > width || center.y - radius < 0.0 ||
        center.y + radius > height) {
        throw std::invalid_argument(what + " does not lie within the world bounds");
    }
}

}  // namespace

void ScenarioConfig::validate() const {
    if (scenario_label.empty()) throw std::invalid_argument("scenario: empty label");
    if (world_width <= 0.0 || world_height <= 0.0) {
        throw std::invalid_argument("scenario: world dimensions must be positive");
    }
    if (influence_radius <= 0.0) throw std::invalid_argument("scenario: influence radius must be positive");
    if (threshold_seconds <= 0.0) throw std::invalid_argument("scenario: threshold must be positive");
    if (tick_seconds <= 0.0) throw std::invalid_argument("scenario: tick must be positive");
    if (duration_seconds < 0.0) throw std::invalid_argument("scenario: negative duration");
    if (agent_count < 0) throw std::invalid_argument("scenario: negative agent count");
    if (speed < 0.0) throw std::invalid_argument("scenario: negative speed");
    if (broadcast_radius < 0.0) throw std::invalid_argument("scenario: negative broadcast radius");
    if (authorized_fraction < 0.0 || authorized_fraction > 1.0) {
        throw std::invalid_argument("scenario: authorized fraction outside [0, 1]");
    }
    if (ranging_fraction < 0.0 || ranging_fraction > 1.0) {
        throw std::invalid_argument("scenario: ranging fraction outside [0, 1]");
    }
    if (initial_offset_seconds < 0.0) throw std::invalid_argument("scenario: negative initial offset range");
    if (frequency_error_ppm < 0.0 || frequency_error_ppm >= 1e6) {
        throw std::invalid_argument("scenario: frequency error range must lie in [0, 1e6) ppm");
    }
    if (baseline_lag_min_seconds > baseline_lag_max_seconds) {
        throw std::invalid_argument("scenario: baseline lag bounds out of order");
    }
    require_circle_in_bounds(gamma_position, influence_radius, world_width, world_height,
                             "scenario: influence area");
    for (std::size_t i = 0; i < disruption_areas.size(); ++i) {
        if (disruption_areas[i].radius <= 0.0) {
            throw std::invalid_argument("scenario: disruption area " + std::to_string(i) +
                                        " has nonpositive radius");
        }
        require_circle_in_bounds(disruption_areas[i].center, disruption_areas[i].radius, world_width,
                                 world_height, "scenario: disruption area " + std::to_string(i));
    }
}

ScenarioConfig scenario_preset(char label) {
    ScenarioConfig cfg;
    cfg.disruption_areas = {DisruptionArea{{50.0, 82.0}, 10.0}, DisruptionArea{{22.2872, 34.0}, 10.0},
                            DisruptionArea{{77.7128, 34.0}, 10.0}};
    switch (label) {
        case 'A':
        case 'a':
            cfg.scenario_label = "A";
            break;
        case 'B':
        case 'b':
            cfg.scenario_label = "B";
            cfg.fenced = true;
            cfg.authorized_fraction = 0.1;
            cfg.gamma_position = Vec2{20.0, 75.0};
            break;
        case 'C':
        case 'c':
            cfg.scenario_label = "C";
            cfg.fenced = true;
            cfg.authorized_fraction = 0.1;
            cfg.gamma_position = Vec2{50.0, 50.0};
            cfg.disruption_areas = {DisruptionArea{{50.0, 75.0}, 10.0},
                                    DisruptionArea{{28.3494, 37.5}, 10.0},
                                    DisruptionArea{{71.6506, 37.5}, 10.0}};
            break;
        default:
            throw std::invalid_argument(std::string("unknown scenario label '") + label + "'");
    }
    cfg.validate();
    return cfg;
}

void in_gamma_aggressive(AgentClock& agent, Ticks global_now) {
    agent.clock.set_local_time(global_now);
    agent.gamma_sync_record = global_now;
}

void in_gamma_passive(AgentClock& agent, Ticks global_now, Ticks threshold_ticks,
                      bool receding_from_gamma) {
    if (agent.ranging_capable && receding_from_gamma) agent.mode = SyncMode::Aggressive;
    const Ticks delta = global_now - agent.clock.read();
    if (delta > threshold_ticks || delta < -threshold_ticks) {
        agent.clock.set_local_time(global_now);
        agent.gamma_sync_record = global_now;
    }
}

void baseline_gamma_sync(AgentClock& agent, Ticks global_now, Ticks lag) {
    agent.clock.set_local_time(global_now + lag);
    agent.gamma_sync_record = global_now;
}

void baseline_contact_sync(const BaselineSnapshot& source, AgentClock& target, Ticks lag) {
    if (source.gamma_sync_record == kNeverSynced) return;
    target.clock.set_local_time(source.time_reading + lag);
    target.gamma_sync_record = source.gamma_sync_record;
    target.clock_sync_record = target.clock.read();
}

std::vector<std::vector<int>> form_adhoc_group(const std::vector<AgentClock>& agents,
                                               std::span<const Vec2> previous_positions,
                                               std::span<const char> eligible) {
    const int n = static_cast<int>(agents.size());
    if (previous_positions.size() != agents.size() || eligible.size() != agents.size()) {
        throw std::invalid_argument("group formation: positions and eligibility must cover every agent");
    }
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&parent](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (int a = 0; a < n; ++a) {
        if (!eligible[static_cast<std::size_t>(a)]) continue;
        for (int b = a + 1; b < n; ++b) {
            if (!eligible[static_cast<std::size_t>(b)]) continue;
            const double reach = std::min(agents[static_cast<std::size_t>(a)].broadcast_radius,
                                          agents[static_cast<std::size_t>(b)].broadcast_radius);
            const double now_apart =
                distance(agents[static_cast<std::size_t>(a)].position, agents[static_cast<std::size_t>(b)].position);
            if (now_apart > reach) continue;
            const bool either_ranges = agents[static_cast<std::size_t>(a)].ranging_capable ||
                                       agents[static_cast<std::size_t>(b)].ranging_capable;
            if (either_ranges) {
                const double before_apart = distance(previous_positions[static_cast<std::size_t>(a)],
                                                     previous_positions[static_cast<std::size_t>(b)]);
                if (now_apart > before_apart) continue;  // receding peers stay out
            }
            parent[static_cast<std::size_t>(find(a))] = find(b);
        }
    }
    std::vector<std::vector<int>> by_root(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (!eligible[static_cast<std::size_t>(i)]) continue;
        by_root[static_cast<std::size_t>(find(i))].push_back(i);
    }
    std::vector<std::vector<int>> groups;
    for (auto& members : by_root) {
        if (members.size() >= 2) groups.push_back(std::move(members));
    }
    return groups;
}

GroupSyncResult out_gamma_sync(std::vector<AgentClock*>& members, std::span<const char> departed) {
    if (members.size() < 2) throw std::invalid_argument("group sync: need at least two members");
    if (!departed.empty() && departed.size() != members.size()) {
        throw std::invalid_argument("group sync: departed mask must cover every member");
    }
    std::vector<KeyedValue> entries;
    entries.reserve(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        entries.push_back(KeyedValue{members[i]->gamma_sync_record, members[i]->clock.read(),
                                     static_cast<std::int32_t>(i)});
    }
    const ShiftMaxResult consensus = recursive_doubled_shift_max(entries);
    GroupSyncResult out;
    out.winner = consensus.per_node.front();
    out.comm_rounds = consensus.counts.comm_rounds;
    if (out.winner.key == kNeverSynced) return out;  // nobody carries reference time
    out.adopted = true;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (!departed.empty() && departed[i]) continue;
        if (static_cast<std::int32_t>(i) == out.winner.origin) continue;  // winner keeps its record
        AgentClock& member = *members[i];
        member.clock.set_local_time(out.winner.value);
        member.gamma_sync_record = out.winner.key;
        member.clock_sync_record = out.winner.value;
    }
    return out;
}

double fraction_synchronized(std::span<const AgentClock> agents, Ticks global_now,
                             Ticks threshold_ticks) {
    if (agents.empty()) return 0.0;
    std::size_t synced = 0;
    for (const AgentClock& a : agents) {
        const Ticks delta = a.clock.read() - global_now;
        if (delta <= threshold_ticks && delta >= -threshold_ticks) ++synced;
    }
    return static_cast<double>(synced) / static_cast<double>(agents.size());
}

World::World(const ScenarioConfig& config)
    : config_(config),
      rng_motion_(derive_seed(config.rng_seed, 0xA0)),
      rng_protocol_(derive_seed(config.rng_seed, 0xB1)) {
    config_.validate();
    tick_ticks_ = ticks_from_seconds(config_.tick_seconds);
    threshold_ticks_ = ticks_from_seconds(config_.threshold_seconds);
    spawn_agents();
}

void World::spawn_agents() {
    const int n = config_.agent_count;
    agents_.reserve(static_cast<std::size_t>(n));
    previous_positions_.resize(static_cast<std::size_t>(n));
    pending_glance_.assign(static_cast<std::size_t>(n), 0);
    const int authorized_count =
        config_.fenced ? static_cast<int>(std::ceil(config_.authorized_fraction * n)) : n;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> across_width(0.0, config_.world_width);
    std::uniform_real_distribution<double> across_height(0.0, config_.world_height);
    std::uniform_real_distribution<double> offset_draw(-config_.initial_offset_seconds,
                                                       config_.initial_offset_seconds);
    std::uniform_real_distribution<double> freq_draw(-config_.frequency_error_ppm,
                                                     config_.frequency_error_ppm);
    for (int i = 0; i < n; ++i) {
        AgentClock a;
        a.authorized = i < authorized_count;
        if (config_.fenced && a.authorized) {
            // Authorized personnel start on site, inside the influence area.
            const double radial = config_.influence_radius * std::sqrt(unit(rng_motion_));
            const double angle = 2.0 * M_PI * unit(rng_motion_);
            a.position = Vec2{config_.gamma_position.x + radial * std::cos(angle),
                              config_.gamma_position.y + radial * std::sin(angle)};
        } else {
            a.position = Vec2{across_width(rng_motion_), across_height(rng_motion_)};
        }
        const Ticks offset = ticks_from_seconds(offset_draw(rng_motion_));
        const double frequency_error = freq_draw(rng_motion_) * 1e-6;
        a.ranging_capable = unit(rng_motion_) < config_.ranging_fraction;
        a.waypoint = Vec2{across_width(rng_motion_), across_height(rng_motion_)};
        a.clock = SimulatedClock(i, offset, frequency_error, offset,
                                 derive_seed(config_.rng_seed, 0xC1, static_cast<std::uint64_t>(i)));
        a.broadcast_radius = config_.broadcast_radius;
        const double to_target = distance(a.position, a.waypoint);
        a.velocity = to_target > 0.0
                         ? Vec2{(a.waypoint.x - a.position.x) / to_target * config_.speed,
                                (a.waypoint.y - a.position.y) / to_target * config_.speed}
                         : Vec2{};
        previous_positions_[static_cast<std::size_t>(i)] = a.position;
        agents_.push_back(std::move(a));
    }
}

bool World::inside_disruption(const Vec2& p) const {
    for (const DisruptionArea& area : config_.disruption_areas) {
        if (distance(p, area.center) <= area.radius) return true;
    }
    return false;
}

Ticks World::draw_lag() {
    std::uniform_real_distribution<double> lag_draw(config_.baseline_lag_min_seconds,
                                                    config_.baseline_lag_max_seconds);
    return ticks_from_seconds(lag_draw(rng_protocol_));
}

void World::move_agents() {
    const double step_length = config_.speed * config_.tick_seconds;
    if (step_length <= 0.0) return;
    std::uniform_real_distribution<double> across_width(0.0, config_.world_width);
    std::uniform_real_distribution<double> across_height(0.0, config_.world_height);
    for (AgentClock& a : agents_) {
        double remaining = step_length;
        Vec2 pos = a.position;
        for (int hops = 0; remaining > 1e-12 && hops < 64; ++hops) {
            const double to_target = distance(pos, a.waypoint);
            if (to_target <= remaining) {
                pos = a.waypoint;
                remaining -= to_target;
                a.waypoint = Vec2{across_width(rng_motion_), across_height(rng_motion_)};
            } else {
                pos.x += (a.waypoint.x - pos.x) / to_target * remaining;
                pos.y += (a.waypoint.y - pos.y) / to_target * remaining;
                remaining = 0.0;
            }
        }
        pos.x = std::clamp(pos.x, 0.0, config_.world_width);
        pos.y = std::clamp(pos.y, 0.0, config_.world_height);
        a.position = pos;
        const double to_target = distance(pos, a.waypoint);
        a.velocity = to_target > 0.0 ? Vec2{(a.waypoint.x - pos.x) / to_target * config_.speed,
                                            (a.waypoint.y - pos.y) / to_target * config_.speed}
                                     : Vec2{};
    }
}

void World::apply_influence_protocol() {
    const Ticks now = global_.read();
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        AgentClock& a = agents_[i];
        const double dist_now = distance(a.position, config_.gamma_position);
        const double dist_before = distance(previous_positions_[i], config_.gamma_position);
        const bool eligible =
            dist_now <= config_.influence_radius && (!config_.fenced || a.authorized);
        const bool entering = eligible && a.state == InfluenceState::OutGamma;
        a.state = eligible ? InfluenceState::InGamma : InfluenceState::OutGamma;
        if (!eligible) {
            pending_glance_[i] = 0;
            continue;
        }
        const bool receding = dist_now > dist_before;
        const bool approaching = dist_now < dist_before;
        if (entering) {
            pending_glance_[i] = 1;
            a.mode = (a.ranging_capable && !receding) ? SyncMode::Passive : SyncMode::Aggressive;
        }
        const bool disrupted = inside_disruption(a.position);
        if (config_.protocol == Protocol::Proposed) {
            if (!disrupted) {
                if (a.mode == SyncMode::Aggressive) {
                    in_gamma_aggressive(a, now);
                } else {
                    in_gamma_passive(a, now, threshold_ticks_, receding);
                }
            } else if (a.ranging_capable && a.mode == SyncMode::Passive && receding) {
                a.mode = SyncMode::Aggressive;  // ranging is local sensing, not communication
            }
            if (a.ranging_capable && !entering && approaching && a.mode == SyncMode::Aggressive) {
                a.mode = SyncMode::Passive;
            }
        } else {
            if (!disrupted && pending_glance_[i]) {
                baseline_gamma_sync(a, now, draw_lag());
                pending_glance_[i] = 0;
            }
        }
    }
}

void World::apply_adhoc_protocol() {
    const std::size_t n = agents_.size();
    std::vector<char> can_send(n);
    std::vector<char> eligible(n);
    for (std::size_t i = 0; i < n; ++i) {
        can_send[i] = inside_disruption(agents_[i].position) ? 0 : 1;
        eligible[i] = (agents_[i].state == InfluenceState::OutGamma && can_send[i]) ? 1 : 0;
    }
    if (config_.protocol == Protocol::Proposed) {
        const auto groups = form_adhoc_group(agents_, previous_positions_, eligible);
        std::vector<AgentClock*> members;
        for (const auto& group : groups) {
            members.clear();
            members.reserve(group.size());
            for (int idx : group) members.push_back(&agents_[static_cast<std::size_t>(idx)]);
            out_gamma_sync(members);
        }
        return;
    }
    // Baseline: everyone with reference lineage talks; each listener takes
    // the nearest-to-fresh source in radio range this tick.
    std::vector<BaselineSnapshot> snapshot(n);
    for (std::size_t i = 0; i < n; ++i) {
        snapshot[i] = BaselineSnapshot{agents_[i].clock.read(), agents_[i].gamma_sync_record};
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!eligible[i]) continue;
        int best = -1;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !can_send[j]) continue;
            if (snapshot[j].gamma_sync_record == kNeverSynced) continue;
            if (snapshot[j].gamma_sync_record <= snapshot[i].gamma_sync_record) continue;
            const double reach = std::min(agents_[i].broadcast_radius, agents_[j].broadcast_radius);
            if (distance(agents_[i].position, agents_[j].position) > reach) continue;
            if (best < 0 || snapshot[static_cast<std::size_t>(best)].gamma_sync_record <
                                snapshot[j].gamma_sync_record) {
                best = static_cast<int>(j);
            }
        }
        if (best >= 0) {
            baseline_contact_sync(snapshot[static_cast<std::size_t>(best)], agents_[i], draw_lag());
        }
    }
}

void World::step() {
    global_.advance(tick_ticks_);
    for (AgentClock& a : agents_) a.clock.advance(tick_ticks_);
    for (std::size_t i = 0; i < agents_.size(); ++i) previous_positions_[i] = agents_[i].position;
    move_agents();
    apply_influence_protocol();
    apply_adhoc_protocol();
    ++ticks_run_;
}

MetricsSeries World::run() {
    MetricsSeries series;
    const long long steps = std::llround(config_.duration_seconds / config_.tick_seconds);
    series.samples.reserve(static_cast<std::size_t>(std::max(steps, 0ll)));
    for (long long s = 0; s < steps; ++s) {
        step();
        series.samples.push_back(MetricsSample{global_.read(), fraction_synchronized()});
    }
    return series;
}

double World::fraction_synchronized() const {
    return clocksync::fraction_synchronized(agents_, global_.read(), threshold_ticks_);
}

}  // namespace clocksync
