#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace clocksync::cli {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& what) {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& source, int line, const std::string& key,
                    const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail(source, line, "key '" + key + "': cannot parse '" + value + "' as a number");
    }
}

std::int64_t parse_int(const std::string& source, int line, const std::string& key,
                       const std::string& value) {
    std::int64_t v = 0;
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        fail(source, line, "key '" + key + "': cannot parse '" + value + "' as an integer");
    }
    return v;
}

bool parse_bool(const std::string& source, int line, const std::string& key,
                const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    fail(source, line, "key '" + key + "': cannot parse '" + value + "' as a boolean");
}

/// Splits "x,y,r" for a disruption circle.
DisruptionArea parse_disruption(const std::string& source, int line, const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) parts.push_back(trim(part));
    if (parts.size() != 3) {
        fail(source, line, "key 'disruption': expected 'x,y,radius', got '" + value + "'");
    }
    DisruptionArea a;
    a.center.x = parse_double(source, line, "disruption", parts[0]);
    a.center.y = parse_double(source, line, "disruption", parts[1]);
    a.radius = parse_double(source, line, "disruption", parts[2]);
    return a;
}

struct Scope {
    bool disruptions_replaced = false;
};

void apply_key(ScenarioConfig& cfg, Scope& scope, const std::string& source, int line,
               const std::string& key, const std::string& value) {
    if (key == "world_width") {
        cfg.world_width = parse_double(source, line, key, value);
    } else if (key == "world_height") {
        cfg.world_height = parse_double(source, line, key, value);
    } else if (key == "gamma_x") {
        cfg.gamma_position.x = parse_double(source, line, key, value);
    } else if (key == "gamma_y") {
        cfg.gamma_position.y = parse_double(source, line, key, value);
    } else if (key == "influence_radius") {
        cfg.influence_radius = parse_double(source, line, key, value);
    } else if (key == "fenced") {
        cfg.fenced = parse_bool(source, line, key, value);
    } else if (key == "authorized_fraction") {
        cfg.authorized_fraction = parse_double(source, line, key, value);
    } else if (key == "agent_count") {
        const auto v = parse_int(source, line, key, value);
        cfg.agent_count = static_cast<int>(v);
    } else if (key == "speed") {
        cfg.speed = parse_double(source, line, key, value);
    } else if (key == "threshold_seconds") {
        cfg.threshold_seconds = parse_double(source, line, key, value);
    } else if (key == "tick_seconds") {
        cfg.tick_seconds = parse_double(source, line, key, value);
    } else if (key == "duration_seconds") {
        cfg.duration_seconds = parse_double(source, line, key, value);
    } else if (key == "broadcast_radius") {
        cfg.broadcast_radius = parse_double(source, line, key, value);
    } else if (key == "ranging_fraction") {
        cfg.ranging_fraction = parse_double(source, line, key, value);
    } else if (key == "initial_offset_seconds") {
        cfg.initial_offset_seconds = parse_double(source, line, key, value);
    } else if (key == "frequency_error_ppm") {
        cfg.frequency_error_ppm = parse_double(source, line, key, value);
    } else if (key == "baseline_lag_min_seconds") {
        cfg.baseline_lag_min_seconds = parse_double(source, line, key, value);
    } else if (key == "baseline_lag_max_seconds") {
        cfg.baseline_lag_max_seconds = parse_double(source, line, key, value);
    } else if (key == "disruption") {
        if (!scope.disruptions_replaced) {
            cfg.disruption_areas.clear();
            scope.disruptions_replaced = true;
        }
        cfg.disruption_areas.push_back(parse_disruption(source, line, value));
    } else if (key == "clear_disruptions") {
        if (parse_bool(source, line, key, value)) {
            cfg.disruption_areas.clear();
            scope.disruptions_replaced = true;
        }
    } else {
        fail(source, line, "unknown key '" + key + "'");
    }
}

}  // namespace

ScenarioConfig apply_config_text(const ScenarioConfig& base, const std::string& text,
                                 const std::string& source_name) {
    ScenarioConfig cfg = base;

    // Two passes over one scan: common keys always apply, scenario sections
    // only when the label matches. Sections may appear in any order because
    // matching scenario keys are collected and applied after the commons.
    struct Pending {
        int line;
        std::string key;
        std::string value;
    };
    std::vector<Pending> scenario_keys;

    enum class Section { Common, MatchingScenario, OtherScenario };
    Section section = Section::Common;
    Scope common_scope;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        // strip comments first so "key = v  # note" works
        if (const auto pos = line.find_first_of("#;"); pos != std::string::npos) {
            line.erase(pos);
        }
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(source_name, line_no, "unterminated section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name == "common") {
                section = Section::Common;
            } else if (name.rfind("scenario.", 0) == 0) {
                const std::string label = name.substr(9);
                if (label.empty()) fail(source_name, line_no, "empty scenario label");
                section = (label == cfg.scenario_label) ? Section::MatchingScenario
                                                        : Section::OtherScenario;
            } else {
                fail(source_name, line_no, "unknown section '[" + name + "]'");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(source_name, line_no, "expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(source_name, line_no, "empty key");
        if (value.empty()) fail(source_name, line_no, "key '" + key + "': empty value");

        switch (section) {
            case Section::Common:
                apply_key(cfg, common_scope, source_name, line_no, key, value);
                break;
            case Section::MatchingScenario:
                scenario_keys.push_back({line_no, key, value});
                break;
            case Section::OtherScenario:
                // validate the key spelling even when the section is skipped
                {
                    ScenarioConfig probe = cfg;
                    Scope probe_scope;
                    apply_key(probe, probe_scope, source_name, line_no, key, value);
                }
                break;
        }
    }

    Scope scenario_scope;
    for (const auto& p : scenario_keys) {
        apply_key(cfg, scenario_scope, source_name, p.line, p.key, p.value);
    }

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(source_name + ": resulting configuration invalid: " + e.what());
    }
    return cfg;
}

ScenarioConfig apply_config_file(const ScenarioConfig& base, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return apply_config_text(base, buf.str(), path);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    const std::string trimmed = trim(text);
    if (trimmed.empty()) throw ConfigError("--seeds: empty value");

    auto parse_one = [&](const std::string& tok) -> std::uint64_t {
        std::uint64_t v = 0;
        const auto* first = tok.data();
        const auto* last = tok.data() + tok.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) {
            throw ConfigError("--seeds: cannot parse '" + tok + "' as a seed");
        }
        return v;
    };

    if (trimmed.find(',') == std::string::npos) {
        // bare count: K means seeds 1..K
        const std::uint64_t count = parse_one(trimmed);
        if (count == 0) throw ConfigError("--seeds: count must be at least 1");
        if (count > 100000) throw ConfigError("--seeds: count too large");
        std::vector<std::uint64_t> seeds(count);
        for (std::uint64_t i = 0; i < count; ++i) seeds[i] = i + 1;
        return seeds;
    }

    std::vector<std::uint64_t> seeds;
    std::stringstream ss(trimmed);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const std::string t = trim(tok);
        if (t.empty()) throw ConfigError("--seeds: empty entry in list");
        seeds.push_back(parse_one(t));
    }
    return seeds;
}

}  // namespace clocksync::cli
