#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "luenn/codec.hpp"
#include "luenn/filtering.hpp"
#include "luenn/metrics.hpp"
#include "luenn/render.hpp"
#include "luenn/sim.hpp"

namespace luenn {

/// Every tunable of a run. Serialized as flat `key = value` text.
struct RunConfig {
    std::string preset = "custom";
    std::string snr = "custom";
    SimConfig sim;
    DecodeConfig decode;
    MatchConfig match;
    ConvergenceConfig convergence;
    ProxyConfig proxy;
    double filter_rate = 0.0;
    double map_noise = 0.0;  // oracle decoder noise, unit amplitude
    RenderConfig render;

    void validate() const;
};

/// Names accepted by expand_preset, in table order.
const std::vector<std::string>& preset_names();

/// Full configuration for AI-1..AI-9, AI-AS, AI-DH. Throws ValidationError for
/// unknown names.
RunConfig expand_preset(std::string_view name);

/// Sets one key from its text form. Throws ValidationError for unknown keys or
/// unparsable values.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Sorted list of every recognized key.
std::vector<std::string> config_keys();

/// Canonical text: one `key = value` line per key, keys sorted.
std::string serialize_config(const RunConfig& cfg);

/// Applies the lines of `text` on top of `base`. Unknown keys, duplicate keys
/// and malformed lines raise ParseError with the 1-based line number.
RunConfig parse_config(std::string_view text, RunConfig base = {}, const std::string& source = "<config>");

RunConfig read_config_file(const std::string& path, RunConfig base = {});

}  // namespace luenn
