#ifndef SYNGUIDE_TRAINER_HPP
#define SYNGUIDE_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "synguide/datagen.hpp"
#include "synguide/dataset.hpp"
#include "synguide/diagnostics.hpp"
#include "synguide/guidance.hpp"
#include "synguide/model.hpp"

namespace synguide {

enum class InitMode { kRandom, kFromPrior };

std::string to_string(InitMode m);
InitMode parse_init_mode(const std::string& text);

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double lr = 0.05;
  std::uint64_t seed = 0;
  InitMode init = InitMode::kRandom;
  std::optional<PgConfig> pg;
  std::optional<RgConfig> rg;
  std::size_t eval_every = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_accuracy = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;  // NaN when not evaluated this epoch or no val set
  double val_loss = 0.0;
  double pg_loss = 0.0;                 // mean over steps that applied PG
  double rg_projection_fraction = 0.0;  // projected steps / RG steps
};

struct ExperimentReport {
  std::string preset;
  std::uint64_t seed = 0;
  std::string config_echo;
  std::vector<EpochRecord> curve;
  double test_accuracy = 0.0;  // NaN without a test set
  // Preset-specific scalars in insertion order.
  std::vector<std::pair<std::string, double>> metrics;

  std::size_t rg_steps = 0;
  std::size_t rg_projected_steps = 0;
  // Smallest g_f_new . g_r / (|g_f_new| |g_r|) over RG steps (1 when unused).
  double min_rg_alignment = 1.0;
  // Smallest g_update . g_r - lambda1 |g_r|^2 over RG steps; nonnegative up to rounding.
  double min_rg_update_margin = 0.0;

  double metric(const std::string& name) const;
  void set_metric(const std::string& name, double value);
};

// Absent pointers mean the corresponding set is not used.
struct TrainInputs {
  const LabeledDataset* real_train = nullptr;
  const LabeledDataset* syn_train = nullptr;
  const MlpModel* prior_model = nullptr;
  const LabeledDataset* val = nullptr;
  const LabeledDataset* test = nullptr;
};

struct TrainResult {
  MlpModel model;
  ExperimentReport report;
};

// One epoch is a pass over the synthetic set when present, else over the real
// set. Each step: g_f from a synthetic batch (cross-entropy plus the PG feature
// gradient), g_r from a real batch cycled over the real set. With both sources
// and RG configured the update is lambda1 g_r + lambda2 proj(g_f); with both
// sources and no RG it is g_r + g_f.
TrainResult train(MlpModel model, const TrainInputs& inputs, const TrainConfig& config);

// Pipeline settings shared by every preset.
struct ExperimentConfig {
  DeskGeometry geometry;
  GapKnobs knobs;
  std::size_t train_per_class = 500;
  std::size_t val_per_class = 100;
  std::size_t test_per_class = 500;
  std::size_t syn_per_class = 500;
  std::size_t prior_per_class = 500;
  double rejection_threshold = kDefaultRejectionThreshold;
  std::vector<std::size_t> hidden = {32, 16};
  std::vector<std::size_t> prior_hidden = {32, 16};
  Activation activation = Activation::kTanh;
  std::size_t prior_epochs = 30;
  std::size_t real_shots_per_class = 5;
  // Real samples per class for the loss-split experiment; 0 uses the full real train set.
  std::size_t loss_split_real_per_class = 20;
  // Low-shot baseline: pool the real shots into the synthetic set and train plain CE
  // (PG and RG settings are ignored).
  bool naive_mixing = false;
  double coverage_radius = 1.0;
  TrainConfig train;

  MixtureSpec spec() const { return desk_spec(geometry); }
  std::vector<std::size_t> model_dims() const;
  std::vector<std::size_t> prior_dims() const;
  void validate() const;
};

// Everything upstream of the trainee for one seed.
struct ExperimentData {
  MixtureSpec spec;
  LabeledDataset prior;
  MlpModel prior_model;  // frozen
  LabeledDataset real_train;
  LabeledDataset real_val;
  LabeledDataset real_test;
  // Real-trained classifier: rejection-sampling oracle and real baseline.
  MlpModel real_model;
  ExperimentReport real_report;
  LabeledDataset syn_train;  // clone after rejection sampling
  LabeledDataset syn_test;
  double syn_kept_fraction = 0.0;
};

// Raw datasets of one seed: prior sample, real sample (train + val rows per
// class, before the split) and the synthetic clone before rejection sampling.
struct GeneratedDatasets {
  LabeledDataset prior;
  LabeledDataset real;
  LabeledDataset synthetic;
};

GeneratedDatasets generate_datasets(const ExperimentConfig& config, std::uint64_t seed);

ExperimentData prepare_data(const ExperimentConfig& config, std::uint64_t seed);

// Fresh trainee for a seed, random or copied from the prior model.
MlpModel make_trainee(const ExperimentConfig& config, const ExperimentData& data,
                      std::uint64_t seed);

ExperimentReport run_zero_shot(const ExperimentConfig& config, std::uint64_t seed);
ExperimentReport run_zero_shot(const ExperimentConfig& config, const ExperimentData& data,
                               std::uint64_t seed);

// Runs zero-shot PG for each lambda3 and keeps the best final val accuracy
// (first on ties). The chosen value is reported as metric "lambda3".
ExperimentReport run_zero_shot_tuned(const ExperimentConfig& config, const ExperimentData& data,
                                     std::uint64_t seed, const std::vector<double>& grid);

ExperimentReport run_low_shot(const ExperimentConfig& config, std::uint64_t seed);
ExperimentReport run_low_shot(const ExperimentConfig& config, const ExperimentData& data,
                              std::uint64_t seed);

struct LossSplitReports {
  ExperimentReport baseline;  // real only
  ExperimentReport low_half;  // real + low-loss synthetic half
  ExperimentReport high_half;
};

LossSplitReports run_loss_split_augmentation(const ExperimentConfig& config,
                                             std::uint64_t seed);
LossSplitReports run_loss_split_augmentation(const ExperimentConfig& config,
                                             const ExperimentData& data, std::uint64_t seed);

struct ObservationReport {
  CrossEvalTable cross;
  ExperimentReport real_run;
  ExperimentReport syn_run;
  LossProfile syn_under_real;  // synthetic train samples scored by the real-trained model
  LossProfile real_under_syn;  // real train samples scored by the synthetic-trained model
  double coverage = 0.0;       // mode_coverage(real_train, syn_train)
  std::size_t early_epoch = 0; // 25% mark used for the saturation comparison
};

ObservationReport run_observe(const ExperimentConfig& config, std::uint64_t seed);
ObservationReport run_observe(const ExperimentConfig& config, const ExperimentData& data,
                              std::uint64_t seed);

// report.csv: epoch,split,accuracy,ce_loss,pg_loss,rg_projection_applied_fraction
std::string report_csv(const ExperimentReport& report);
// final.csv: config_hash,seed,test_accuracy
std::string final_csv(const ExperimentReport& report, std::uint64_t config_hash);

}  // namespace synguide

#endif  // SYNGUIDE_TRAINER_HPP
