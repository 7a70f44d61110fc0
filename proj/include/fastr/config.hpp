#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "fastr/bench.hpp"
#include "fastr/data.hpp"
#include "fastr/fit.hpp"
#include "fastr/model.hpp"
#include "fastr/simulate.hpp"

namespace fastr {

inline constexpr std::string_view config_schema_id = "fastr-config/1";

/// One JSON configuration document. Every section is optional; commands
/// check for the sections they need.
struct RunConfig {
    Schema schema;
    bool has_model = false;
    ModelSpec model;
    FitConfig fit;
    std::optional<DGPSpec> simulate;
    BenchConfig bench;
    std::size_t grid_size = 100;
};

/// Parses and validates a "fastr-config/1" document; unknown keys and wrong
/// types are ConfigErrors naming the offending path.
RunConfig parse_config(const std::string& text, const std::string& source = "<memory>");
RunConfig load_config(const std::string& path);

/// Applies a command-line seed to the fit, simulate and bench sections.
void override_seed(RunConfig& cfg, std::uint64_t seed);

} // namespace fastr
