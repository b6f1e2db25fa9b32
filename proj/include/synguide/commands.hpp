#ifndef SYNGUIDE_COMMANDS_HPP
#define SYNGUIDE_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "synguide/run_config.hpp"

namespace synguide {

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"zero-shot", "low-shot", "loss-split", "observe"};
  return names;
}

// Writes <out_dir>/seed_<s>/{real,prior,synthetic}.txt for every seed.
void cmd_gen(const RunConfig& config, const std::filesystem::path& out_dir,
             const std::vector<std::uint64_t>& seeds);

// Per-seed scalars in output order.
using MetricRow = std::vector<std::pair<std::string, double>>;

// Runs one preset over all seeds. Layout:
//   <out_dir>/<preset>/config.txt
//   <out_dir>/<preset>/seed_<s>/{report*.csv, final.csv, metrics.csv, ...}
//   <out_dir>/<preset>/aggregate.csv   (written last)
void cmd_run(const RunConfig& config, const std::string& preset,
             const std::filesystem::path& out_dir, const std::vector<std::uint64_t>& seeds);

// Per-seed work of cmd_run; returns the scalars that go into metrics.csv.
MetricRow run_preset_seed(const RunConfig& config, const std::string& preset,
                          const std::filesystem::path& seed_dir, std::uint64_t seed);

// metric,n,mean,std with the sample standard deviation (0 for a single seed).
// Metric order follows the first row; every row must carry the same names.
std::string aggregate_csv(const std::vector<MetricRow>& rows);

std::string metrics_csv(const MetricRow& row);
MetricRow parse_metrics_csv(const std::string& text);

// Text tables for every preset directory under run_dir holding aggregate.csv.
std::string cmd_summarize(const std::filesystem::path& run_dir);

}  // namespace synguide

#endif  // SYNGUIDE_COMMANDS_HPP
