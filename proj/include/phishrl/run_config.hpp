#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "phishrl/agent.hpp"
#include "phishrl/fetcher.hpp"

namespace phishrl {

// Flat JSON document: every TrainConfig field under its own name, fetcher
// settings prefixed with "fetch_", file paths, seed and test_fraction.
struct RunConfig {
    TrainConfig train;
    FetchConfig fetch;
    std::string dataset;
    std::string embeddings;
    std::string checkpoint;
    std::string report_dir;
    std::string train_log;
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
};

// Seed from PHISHRL_SEED, or 0 when unset. Throws ConfigError when malformed.
std::uint64_t default_seed();

// Every key is optional; unknown keys and wrongly typed values throw ConfigError.
RunConfig parse_run_config(std::string_view json_text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
// Applies one "key=value" override; the value is read as JSON when it parses,
// otherwise as a plain string.
void apply_override(RunConfig& cfg, std::string_view assignment);

std::string to_json_string(const RunConfig& cfg);
std::vector<std::string> run_config_keys();

}  // namespace phishrl
