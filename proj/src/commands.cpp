#include "synguide/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "synguide/util.hpp"

namespace synguide {

namespace fs = std::filesystem;

namespace {

std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

void write(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double projection_rate(const ExperimentReport& r) {
  return r.rg_steps == 0 ? 0.0
                         : static_cast<double>(r.rg_projected_steps) /
                               static_cast<double>(r.rg_steps);
}

void append_report_metrics(MetricRow& row, const ExperimentReport& r) {
  for (const auto& m : r.metrics) row.push_back(m);
  row.emplace_back("rg_projection_rate", projection_rate(r));
}

void write_reports(const fs::path& dir, const std::string& suffix, const ExperimentReport& r) {
  write(dir / ("report" + suffix + ".csv"), report_csv(r));
}

MetricRow zero_shot_seed(const RunConfig& cfg, const fs::path& dir, std::uint64_t seed) {
  const ExperimentConfig& ec = cfg.experiment;
  const ExperimentData data = prepare_data(ec, seed);
  const ExperimentReport main = ec.train.pg && !cfg.lambda3_grid.empty()
                                    ? run_zero_shot_tuned(ec, data, seed, cfg.lambda3_grid)
                                    : run_zero_shot(ec, data, seed);
  write_reports(dir, "", main);
  write(dir / "final.csv", final_csv(main, cfg.hash()));
  MetricRow row{{"test_accuracy", main.test_accuracy}};
  if (ec.train.pg) {
    ExperimentConfig plain = ec;
    plain.train.pg.reset();
    const ExperimentReport base = run_zero_shot(plain, data, seed);
    write_reports(dir, "_baseline", base);
    row.emplace_back("baseline_test_accuracy", base.test_accuracy);
    row.emplace_back("improvement", main.test_accuracy - base.test_accuracy);
  }
  append_report_metrics(row, main);
  return row;
}

MetricRow low_shot_seed(const RunConfig& cfg, const fs::path& dir, std::uint64_t seed) {
  const ExperimentConfig& ec = cfg.experiment;
  const ExperimentData data = prepare_data(ec, seed);
  const ExperimentReport main = run_low_shot(ec, data, seed);
  write_reports(dir, "", main);
  write(dir / "final.csv", final_csv(main, cfg.hash()));
  MetricRow row{{"test_accuracy", main.test_accuracy}};
  if (!ec.naive_mixing) {
    ExperimentConfig naive = ec;
    naive.naive_mixing = true;
    const ExperimentReport base = run_low_shot(naive, data, seed);
    write_reports(dir, "_naive", base);
    row.emplace_back("naive_test_accuracy", base.test_accuracy);
    row.emplace_back("improvement", main.test_accuracy - base.test_accuracy);
  }
  append_report_metrics(row, main);
  return row;
}

MetricRow loss_split_seed(const RunConfig& cfg, const fs::path& dir, std::uint64_t seed) {
  const LossSplitReports r = run_loss_split_augmentation(cfg.experiment, seed);
  write_reports(dir, "_baseline", r.baseline);
  write_reports(dir, "_low", r.low_half);
  write_reports(dir, "_high", r.high_half);
  write(dir / "final.csv", final_csv(r.high_half, cfg.hash()));
  MetricRow row{{"test_accuracy", r.high_half.test_accuracy},
                {"baseline_test_accuracy", r.baseline.test_accuracy},
                {"low_test_accuracy", r.low_half.test_accuracy},
                {"high_test_accuracy", r.high_half.test_accuracy},
                {"high_minus_low", r.high_half.test_accuracy - r.low_half.test_accuracy}};
  append_report_metrics(row, r.high_half);
  return row;
}

MetricRow observe_seed(const RunConfig& cfg, const fs::path& dir, std::uint64_t seed) {
  const ExperimentConfig& ec = cfg.experiment;
  const ExperimentData data = prepare_data(ec, seed);
  const ObservationReport obs = run_observe(ec, data, seed);
  write_reports(dir, "_real", obs.real_run);
  write_reports(dir, "_synthetic", obs.syn_run);
  write(dir / "final.csv", final_csv(obs.syn_run, cfg.hash()));
  write(dir / "crosseval.csv", crosseval_csv(obs.cross));
  write(dir / "losses_syn_under_real.csv", losses_csv(data.syn_train, obs.syn_under_real));
  write(dir / "losses_real_under_syn.csv", losses_csv(data.real_train, obs.real_under_syn));
  write(dir / "coverage.csv", "radius_multiplier,mode_coverage\n" +
                                  format_double(ec.coverage_radius) + "," +
                                  format_double(obs.coverage) + "\n");

  const std::size_t k = obs.early_epoch - 1;
  const auto early = [&](const ExperimentReport& r) {
    return k < r.curve.size() ? r.curve[k].train_accuracy : std::nan("");
  };
  const CrossEvalTable& t = obs.cross;
  return MetricRow{
      {"test_accuracy", obs.syn_run.test_accuracy},
      {"acc_real_on_real", t.at(Source::kReal, Source::kReal)},
      {"acc_real_on_synthetic", t.at(Source::kReal, Source::kSynthetic)},
      {"acc_synthetic_on_real", t.at(Source::kSynthetic, Source::kReal)},
      {"acc_synthetic_on_synthetic", t.at(Source::kSynthetic, Source::kSynthetic)},
      {"real_side_gap", t.real_side_gap()},
      {"synthetic_side_gap", t.synthetic_side_gap()},
      {"early_epoch", static_cast<double>(obs.early_epoch)},
      {"early_train_acc_synthetic", early(obs.syn_run)},
      {"early_train_acc_real", early(obs.real_run)},
      {"mean_loss_syn_under_real", obs.syn_under_real.mean},
      {"mean_loss_real_under_syn", obs.real_under_syn.mean},
      {"mode_coverage", obs.coverage},
      {"syn_kept_fraction", data.syn_kept_fraction},
  };
}

void check_preset(const std::string& preset) {
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), preset) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + preset + "' (expected one of: " + list +
                                ")");
  }
}

void check_seeds(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

const std::vector<std::string>& knob_keys() {
  static const std::vector<std::string> keys = {
      "content_drop", "appearance_offset", "appearance_scale", "quality_rate",
      "rejection_threshold", "real_shots_per_class", "naive_mixing", "epochs",
      "pg", "pg_similarity", "pg_metric", "pg_lambda3", "pg_lambda3_grid",
      "rg", "rg_lambda1", "rg_lambda2", "rg_project"};
  return keys;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string summarize_one(const std::string& name, const fs::path& dir) {
  std::string out = "== " + name + " ==\n";
  const fs::path cfg_path = dir / "config.txt";
  if (fs::exists(cfg_path)) {
    std::string knobs;
    for (const auto& line : lines_of(read_text(cfg_path))) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      const auto& keys = knob_keys();
      if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
        knobs += (knobs.empty() ? "" : " ") + line;
      }
    }
    out += "knobs: " + (knobs.empty() ? std::string("(none)") : knobs) + "\n";
  } else {
    out += "knobs: (config.txt not found)\n";
  }

  const auto rows = lines_of(read_text(dir / "aggregate.csv"));
  if (rows.empty() || rows.front() != "metric,n,mean,std") {
    throw std::runtime_error((dir / "aggregate.csv").string() +
                             ": expected header metric,n,mean,std");
  }
  std::vector<std::vector<std::string>> cells;
  std::size_t width = 6;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto c = split_csv_line(rows[i]);
    if (c.size() != 4) {
      throw std::runtime_error((dir / "aggregate.csv").string() + " line " +
                               std::to_string(i + 1) + ": expected 4 fields");
    }
    width = std::max(width, c[0].size());
    cells.push_back(std::move(c));
  }
  out += pad("metric", width) + "  n  mean ± std\n";
  std::string projection, coverage;
  for (const auto& c : cells) {
    out += pad(c[0], width) + "  " + c[1] + "  " + c[2] + " ± " + c[3] + "\n";
    if (c[0] == "rg_projection_rate") projection = c[2] + " ± " + c[3];
    if (c[0] == "mode_coverage") coverage = c[2] + " ± " + c[3];
  }
  out += "rg projection rate: " + (projection.empty() ? std::string("n/a") : projection) + "\n";
  out += "mode coverage: " + (coverage.empty() ? std::string("n/a") : coverage) + "\n";
  return out;
}

}  // namespace

void cmd_gen(const RunConfig& config, const fs::path& out_dir,
             const std::vector<std::uint64_t>& seeds) {
  check_seeds(seeds);
  config.experiment.validate();
  for (std::uint64_t seed : seeds) {
    const GeneratedDatasets g = generate_datasets(config.experiment, seed);
    const fs::path dir = out_dir / seed_dir_name(seed);
    fs::create_directories(dir);
    save_dataset(g.real, dir / "real.txt");
    save_dataset(g.prior, dir / "prior.txt");
    save_dataset(g.synthetic, dir / "synthetic.txt");
  }
}

MetricRow run_preset_seed(const RunConfig& config, const std::string& preset,
                          const fs::path& seed_dir, std::uint64_t seed) {
  check_preset(preset);
  MetricRow row;
  if (preset == "zero-shot") {
    row = zero_shot_seed(config, seed_dir, seed);
  } else if (preset == "low-shot") {
    row = low_shot_seed(config, seed_dir, seed);
  } else if (preset == "loss-split") {
    row = loss_split_seed(config, seed_dir, seed);
  } else {
    row = observe_seed(config, seed_dir, seed);
  }
  write(seed_dir / "metrics.csv", metrics_csv(row));
  return row;
}

void cmd_run(const RunConfig& config, const std::string& preset, const fs::path& out_dir,
             const std::vector<std::uint64_t>& seeds) {
  check_preset(preset);
  check_seeds(seeds);
  config.experiment.validate();
  const fs::path dir = out_dir / preset;
  fs::create_directories(dir);
  write(dir / "config.txt", config.canonical_text());
  std::vector<MetricRow> rows;
  for (std::uint64_t seed : seeds) {
    rows.push_back(run_preset_seed(config, preset, dir / seed_dir_name(seed), seed));
  }
  write(dir / "aggregate.csv", aggregate_csv(rows));
}

std::string metrics_csv(const MetricRow& row) {
  std::string out = "name,value\n";
  for (const auto& [name, value] : row) out += name + "," + format_double(value) + "\n";
  return out;
}

MetricRow parse_metrics_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != "name,value") {
    throw std::invalid_argument("metrics file: expected header name,value");
  }
  MetricRow row;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split_csv_line(lines[i]);
    if (c.size() != 2) {
      throw std::invalid_argument("metrics file line " + std::to_string(i + 1) +
                                  ": expected 2 fields");
    }
    row.emplace_back(c[0], parse_double(c[1], c[0]));
  }
  return row;
}

std::string aggregate_csv(const std::vector<MetricRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("aggregate_csv: no rows");
  std::string out = "metric,n,mean,std\n";
  const MetricRow& first = rows.front();
  for (std::size_t m = 0; m < first.size(); ++m) {
    const std::string& name = first[m].first;
    std::vector<double> v;
    for (const auto& row : rows) {
      if (row.size() != first.size() || row[m].first != name) {
        throw std::invalid_argument("aggregate_csv: seeds report different metrics at '" + name +
                                    "'");
      }
      v.push_back(row[m].second);
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    out += name + "," + std::to_string(v.size()) + "," + format_double(mean) + "," +
           format_double(sd) + "\n";
  }
  return out;
}

std::string cmd_summarize(const fs::path& run_dir) {
  const std::string expected =
      "expected <run_dir>/<preset>/aggregate.csv (and optionally config.txt) for a preset in "
      "{zero-shot, low-shot, loss-split, observe}, or aggregate.csv directly in run_dir";
  if (!fs::is_directory(run_dir)) {
    throw std::runtime_error("run directory " + run_dir.string() + " does not exist; " + expected);
  }
  std::vector<std::pair<std::string, fs::path>> sections;
  if (fs::exists(run_dir / "aggregate.csv")) {
    sections.emplace_back(run_dir.filename().string(), run_dir);
  }
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "aggregate.csv")) {
      sections.emplace_back(entry.path().filename().string(), entry.path());
    }
  }
  if (sections.empty()) {
    throw std::runtime_error("no aggregate.csv found under " + run_dir.string() + "; " + expected);
  }
  std::sort(sections.begin() + (fs::exists(run_dir / "aggregate.csv") ? 1 : 0), sections.end());
  std::string out;
  for (const auto& [name, dir] : sections) {
    if (!out.empty()) out += "\n";
    out += summarize_one(name, dir);
  }
  return out;
}

}  // namespace synguide
