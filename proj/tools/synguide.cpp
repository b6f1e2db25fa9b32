#include <CLI11.hpp>

#include <iostream>

#include "synguide/commands.hpp"

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  std::string seeds;
};

synguide::RunConfig resolve(const Options& o, std::vector<std::uint64_t>& seeds,
                            std::filesystem::path& out) {
  synguide::RunConfig cfg = synguide::load_run_config(o.config);
  if (!o.seeds.empty()) {
    seeds = synguide::parse_seed_list(o.seeds);
  } else if (cfg.seeds) {
    seeds = *cfg.seeds;
  } else {
    throw std::invalid_argument("missing required key 'seeds' (set it in the config or pass --seeds)");
  }
  if (!o.out.empty()) {
    out = o.out;
  } else if (cfg.out_dir) {
    out = *cfg.out_dir;
  } else {
    throw std::invalid_argument("missing required key 'out_dir' (set it in the config or pass --out)");
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synguide: synthetic-data guidance experiments"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen", "Write real, prior and synthetic datasets per seed");
  gen->add_option("--config", o.config, "Run config file")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, "Output directory (overrides out_dir)");
  gen->add_option("--seeds", o.seeds, "Comma-separated seeds (overrides seeds)");

  auto* run = app.add_subcommand("run", "Run a preset over all seeds");
  run->add_option("--config", o.config, "Run config file")->required()->check(CLI::ExistingFile);
  run->add_option("--preset", o.preset, "zero-shot, low-shot, loss-split or observe")
      ->required()
      ->check(CLI::IsMember(synguide::preset_names()));
  run->add_option("--out", o.out, "Output directory (overrides out_dir)");
  run->add_option("--seeds", o.seeds, "Comma-separated seeds (overrides seeds)");

  auto* summarize = app.add_subcommand("summarize", "Print tables for a run directory");
  summarize->add_option("--out,run_dir", o.out, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*summarize) {
      std::cout << synguide::cmd_summarize(o.out);
      return 0;
    }
    std::vector<std::uint64_t> seeds;
    std::filesystem::path out;
    const synguide::RunConfig cfg = resolve(o, seeds, out);
    if (*gen) {
      synguide::cmd_gen(cfg, out, seeds);
    } else {
      synguide::cmd_run(cfg, o.preset, out, seeds);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
