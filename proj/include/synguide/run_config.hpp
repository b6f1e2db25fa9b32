#ifndef SYNGUIDE_RUN_CONFIG_HPP
#define SYNGUIDE_RUN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synguide/trainer.hpp"

namespace synguide {

// Flat key=value run configuration. Blank lines and lines starting with '#'
// are ignored; unknown keys are rejected. `seeds` and `out_dir` are required
// unless supplied on the command line.
struct RunConfig {
  ExperimentConfig experiment;
  // Non-empty: zero-shot tunes lambda3 over these values on real val.
  std::vector<double> lambda3_grid;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::filesystem::path> out_dir;

  // Canonical key=value text of every setting (seeds and out_dir excluded),
  // one per line in a fixed order. Parsing it back yields the same settings.
  std::string canonical_text() const;
  std::uint64_t hash() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Keys accepted by parse_run_config, in canonical order.
const std::vector<std::string>& run_config_keys();

}  // namespace synguide

#endif  // SYNGUIDE_RUN_CONFIG_HPP
