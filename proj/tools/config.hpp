#pragma once

#include <clocksync/agents.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace clocksync::cli {

/// Raised on any malformed config input; the message carries the line number
/// and offending field.
class ConfigError : public std::runtime_error {
   public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Applies a key/value config file on top of `base` and returns the result.
///
/// Format: `key = value` lines, `#` or `;` comments, blank lines ignored.
/// Keys before any section header and keys under `[common]` apply to every
/// scenario; keys under `[scenario.<label>]` apply only when `<label>`
/// matches the scenario being configured. Unknown keys, unknown sections and
/// unparsable values are rejected.
///
/// The repeatable key `disruption = x,y,r` replaces the inherited disruption
/// list on its first occurrence within a scope and appends on later ones;
/// `clear_disruptions = true` empties the list.
ScenarioConfig apply_config_text(const ScenarioConfig& base, const std::string& text,
                                 const std::string& source_name);

/// apply_config_text over the contents of a file.
ScenarioConfig apply_config_file(const ScenarioConfig& base, const std::string& path);

/// Parses `--seeds`: either an explicit comma-separated list ("3,17,99") or a
/// bare count K meaning seeds 1..K. Rejects empty lists, zero counts and
/// non-numeric input.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

}  // namespace clocksync::cli
