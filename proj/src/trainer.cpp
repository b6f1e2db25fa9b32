#include "synguide/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "synguide/util.hpp"

namespace synguide {

namespace {

// Sub-stream ids for derive_seed; one per independent random decision.
enum Stream : std::uint64_t {
  kPriorSample = 1,
  kPriorTrain,
  kRealSample,
  kRealSplit,
  kTestSample,
  kSynSample,
  kSynTestSample,
  kRealInit,
  kRealTrain,
  kTraineeInit,
  kTraineeTrain,
  kShots,
  kLossSplitReal,
  kLossSplitTrain,
  kPrimaryOrder,
  kRealOrder,
};

std::string describe(const TrainConfig& c) {
  std::string s = "epochs=" + std::to_string(c.epochs) +
                  " batch_size=" + std::to_string(c.batch_size) + " lr=" + format_double(c.lr) +
                  " init=" + to_string(c.init);
  if (c.pg) {
    s += " pg=" + to_string(c.pg->similarity) + "/" + to_string(c.pg->metric) +
         "/t=" + format_double(c.pg->temperature) + "/l3=" + format_double(c.pg->lambda3);
  } else {
    s += " pg=off";
  }
  if (c.rg) {
    s += " rg=l1=" + format_double(c.rg->lambda1) + "/l2=" + format_double(c.rg->lambda2) +
         (c.rg->project ? "/project" : "/noproject");
  } else {
    s += " rg=off";
  }
  return s;
}

double mean_loss(const MlpModel& model, const LabeledDataset& ds) {
  return cross_entropy(forward(model, ds.features).logits, ds.labels).loss;
}

// Cycles through a shuffled index order, reshuffling on wrap.
class BatchCycler {
 public:
  BatchCycler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    std::iota(order_.begin(), order_.end(), 0);
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  std::vector<std::size_t> next(std::size_t batch_size) {
    if (order_.size() <= batch_size) return order_;
    std::vector<std::size_t> out;
    out.reserve(batch_size);
    while (out.size() < batch_size) {
      if (cursor_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
      }
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::mt19937_64 rng_;
  std::size_t cursor_ = 0;
};

constexpr double kRgTolerance = 1e-9;

}  // namespace

std::string to_string(InitMode m) { return m == InitMode::kRandom ? "random" : "prior"; }

InitMode parse_init_mode(const std::string& text) {
  if (text == "random") return InitMode::kRandom;
  if (text == "prior" || text == "from-prior-weights") return InitMode::kFromPrior;
  throw std::invalid_argument("unknown init '" + text + "' (expected random or prior)");
}

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || !(lr > 0.0)) {
    throw std::invalid_argument("train config: epochs, batch_size and lr must be positive");
  }
  if (eval_every == 0) throw std::invalid_argument("train config: eval_every must be >= 1");
  if (pg) {
    pg->validate();
    if (pg->similarity == Similarity::kKL && batch_size < 3) {
      throw std::invalid_argument("train config: KL pretrained guidance needs batch_size >= 3");
    }
    if (batch_size < 2) {
      throw std::invalid_argument("train config: pretrained guidance needs batch_size >= 2");
    }
  }
  if (rg) rg->validate();
}

double ExperimentReport::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return v;
  throw std::out_of_range("report has no metric '" + name + "'");
}

void ExperimentReport::set_metric(const std::string& name, double value) {
  for (auto& [k, v] : metrics) {
    if (k == name) {
      v = value;
      return;
    }
  }
  metrics.emplace_back(name, value);
}

TrainResult train(MlpModel model, const TrainInputs& in, const TrainConfig& config) {
  config.validate();
  if (!in.real_train && !in.syn_train) {
    throw std::invalid_argument("train: need a real or a synthetic training set");
  }
  const bool use_pg = config.pg.has_value();
  if (use_pg != (in.prior_model != nullptr)) {
    throw std::invalid_argument("train: a prior model is required exactly when PG is configured");
  }
  if (model.frozen()) throw std::invalid_argument("train: trainee model is frozen");
  for (const LabeledDataset* ds : {in.real_train, in.syn_train, in.val, in.test}) {
    if (!ds) continue;
    ds->validate();
    if (ds->dim() != model.input_dim() && !ds->empty()) {
      throw std::invalid_argument("train: dataset dim " + std::to_string(ds->dim()) +
                                  " does not match model input " +
                                  std::to_string(model.input_dim()));
    }
  }
  if (in.real_train && in.real_train->empty()) throw std::invalid_argument("train: empty real set");
  if (in.syn_train && in.syn_train->empty()) {
    throw std::invalid_argument("train: empty synthetic set");
  }
  if (use_pg && in.prior_model->input_dim() != model.input_dim()) {
    throw std::invalid_argument("train: prior model input dim differs from trainee");
  }

  const LabeledDataset& primary = in.syn_train ? *in.syn_train : *in.real_train;
  const bool dual = in.syn_train && in.real_train;
  const std::size_t min_pg_batch =
      use_pg && config.pg->similarity == Similarity::kKL ? 3 : 2;
  const bool pg_active = use_pg && config.pg->lambda3 > 0.0;

  ExperimentReport report;
  report.seed = config.seed;
  report.config_echo = describe(config);
  report.min_rg_update_margin = 0.0;

  std::mt19937_64 order_rng(derive_seed(config.seed, kPrimaryOrder));
  std::optional<BatchCycler> real_batches;
  if (dual) real_batches.emplace(in.real_train->size(), derive_seed(config.seed, kRealOrder));
  std::vector<std::size_t> order(primary.size());
  std::iota(order.begin(), order.end(), 0);
  bool any_rg_step = false;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double pg_total = 0.0;
    std::size_t pg_steps = 0;
    std::size_t rg_steps = 0;
    std::size_t rg_projected = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const LabeledDataset batch =
          primary.subset(std::span<const std::size_t>(order.data() + start, stop - start));

      std::optional<Matrix> feature_grad;
      if (in.syn_train && pg_active && batch.size() >= min_pg_batch) {
        const Matrix f_u = forward(model, batch.features).features;
        const Matrix f_p = forward(*in.prior_model, batch.features).features;
        PgFeatureGrad pg = pg_feature_grad(f_p, f_u, *config.pg);
        pg_total += pg.loss;
        ++pg_steps;
        feature_grad = std::move(pg.grad_fu);
      }
      GradientVector update = backward(model, batch.features, batch.labels, feature_grad).grad;

      if (dual) {
        const auto idx = real_batches->next(config.batch_size);
        const LabeledDataset real_batch = in.real_train->subset(idx);
        const GradientVector g_r = backward(model, real_batch.features, real_batch.labels).grad;
        if (config.rg) {
          const RgConfig& rg = *config.rg;
          const bool conflict = dot(update, g_r) < 0.0;
          const GradientVector g_f_new = rg.project ? project_gradient(update, g_r) : update;
          if (rg.project) {
            const double scale = norm(g_f_new) * norm(g_r);
            const double alignment = scale > 0.0 ? dot(g_f_new, g_r) / scale : 1.0;
            if (alignment < -kRgTolerance) {
              throw std::logic_error("train: projected synthetic gradient opposes the real "
                                     "gradient (cosine " + format_double(alignment) + ")");
            }
            report.min_rg_alignment = std::min(report.min_rg_alignment, alignment);
            if (conflict) ++rg_projected;
          }
          update = combine_gradients(g_r, g_f_new, rg);
          const double margin = dot(update, g_r) - rg.lambda1 * dot(g_r, g_r);
          report.min_rg_update_margin =
              any_rg_step ? std::min(report.min_rg_update_margin, margin) : margin;
          any_rg_step = true;
          ++rg_steps;
        } else {
          for (std::size_t k = 0; k < update.size(); ++k) update.values[k] += g_r.values[k];
        }
      }
      sgd_step(model, update, config.lr);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_accuracy = evaluate(model, primary);
    rec.train_loss = mean_loss(model, primary);
    const bool eval_now = epoch % config.eval_every == 0 || epoch == config.epochs;
    if (in.val && !in.val->empty() && eval_now) {
      rec.val_accuracy = evaluate(model, *in.val);
      rec.val_loss = mean_loss(model, *in.val);
    } else {
      rec.val_accuracy = std::nan("");
      rec.val_loss = std::nan("");
    }
    rec.pg_loss = pg_steps ? pg_total / static_cast<double>(pg_steps) : 0.0;
    rec.rg_projection_fraction =
        rg_steps ? static_cast<double>(rg_projected) / static_cast<double>(rg_steps) : 0.0;
    report.rg_steps += rg_steps;
    report.rg_projected_steps += rg_projected;
    report.curve.push_back(rec);
  }
  report.test_accuracy = in.test && !in.test->empty() ? evaluate(model, *in.test) : std::nan("");
  return {std::move(model), std::move(report)};
}

std::vector<std::size_t> ExperimentConfig::model_dims() const {
  std::vector<std::size_t> dims{geometry.dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(geometry.classes);
  return dims;
}

std::vector<std::size_t> ExperimentConfig::prior_dims() const {
  std::vector<std::size_t> dims{geometry.dim};
  dims.insert(dims.end(), prior_hidden.begin(), prior_hidden.end());
  dims.push_back(geometry.classes);
  return dims;
}

void ExperimentConfig::validate() const {
  train.validate();
  knobs.validate(geometry.dim);
  spec().validate();
  if (train_per_class == 0 || test_per_class == 0 || syn_per_class == 0 || prior_per_class == 0) {
    throw std::invalid_argument("experiment config: per-class sample counts must be >= 1");
  }
  if (!(rejection_threshold >= 0.0 && rejection_threshold < 1.0)) {
    throw std::invalid_argument("experiment config: rejection_threshold must lie in [0, 1)");
  }
  if (prior_epochs == 0) throw std::invalid_argument("experiment config: prior_epochs must be >= 1");
  if (train.init == InitMode::kFromPrior && model_dims() != prior_dims()) {
    throw std::invalid_argument("experiment config: init=prior needs identical architectures");
  }
}

GeneratedDatasets generate_datasets(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const MixtureSpec spec = config.spec();
  GeneratedDatasets out;
  out.prior = sample_mixture(balanced_modes(spec), config.prior_per_class,
                             derive_seed(seed, kPriorSample));
  out.real = sample_mixture(spec, config.train_per_class + config.val_per_class,
                            derive_seed(seed, kRealSample));
  out.synthetic = make_synthetic_clone(spec, config.knobs, config.syn_per_class,
                                       derive_seed(seed, kSynSample));
  return out;
}

ExperimentData prepare_data(const ExperimentConfig& config, std::uint64_t seed) {
  GeneratedDatasets raw = generate_datasets(config, seed);
  ExperimentData data;
  data.spec = config.spec();

  data.prior = std::move(raw.prior);
  PretrainConfig pre;
  pre.layer_dims = config.prior_dims();
  pre.activation = config.activation;
  pre.epochs = config.prior_epochs;
  pre.batch_size = config.train.batch_size;
  pre.lr = config.train.lr;
  pre.seed = derive_seed(seed, kPriorTrain);
  data.prior_model = pretrain(data.prior, pre);

  auto [train_set, val_set] =
      split_train_val(raw.real, config.val_per_class, derive_seed(seed, kRealSplit));
  data.real_train = std::move(train_set);
  data.real_val = std::move(val_set);
  data.real_test =
      sample_mixture(data.spec, config.test_per_class, derive_seed(seed, kTestSample));

  TrainConfig real_cfg = config.train;
  real_cfg.pg.reset();
  real_cfg.rg.reset();
  real_cfg.seed = derive_seed(seed, kRealTrain);
  TrainInputs real_in;
  real_in.real_train = &data.real_train;
  real_in.val = &data.real_val;
  real_in.test = &data.real_test;
  auto real = train(init_model(config.model_dims(), config.activation,
                               derive_seed(seed, kRealInit)),
                    real_in, real_cfg);
  data.real_model = std::move(real.model);
  data.real_report = std::move(real.report);
  data.real_report.preset = "real";

  data.syn_train = rejection_sample(raw.synthetic, data.real_model, config.rejection_threshold);
  data.syn_kept_fraction = static_cast<double>(data.syn_train.size()) /
                           static_cast<double>(raw.synthetic.size());
  data.syn_test = rejection_sample(make_synthetic_clone(data.spec, config.knobs,
                                                        config.test_per_class,
                                                        derive_seed(seed, kSynTestSample)),
                                   data.real_model, config.rejection_threshold);
  return data;
}

MlpModel make_trainee(const ExperimentConfig& config, const ExperimentData& data,
                      std::uint64_t seed) {
  if (config.train.init == InitMode::kRandom) {
    return init_model(config.model_dims(), config.activation, derive_seed(seed, kTraineeInit));
  }
  MlpModel model(config.model_dims(), config.activation);
  model.unflatten(data.prior_model.flatten());
  return model;
}

namespace {

TrainConfig trainee_config(const ExperimentConfig& config, std::uint64_t seed,
                           std::uint64_t stream = kTraineeTrain) {
  TrainConfig tc = config.train;
  tc.seed = derive_seed(seed, stream);
  return tc;
}

void add_common_metrics(ExperimentReport& r, const ExperimentConfig& config,
                        const ExperimentData& data) {
  r.set_metric("real_baseline_test_accuracy", data.real_report.test_accuracy);
  r.set_metric("syn_train_size", static_cast<double>(data.syn_train.size()));
  r.set_metric("syn_kept_fraction", data.syn_kept_fraction);
  r.set_metric("mode_coverage",
               mode_coverage(data.real_train, data.syn_train, config.coverage_radius));
}

}  // namespace

ExperimentReport run_zero_shot(const ExperimentConfig& config, std::uint64_t seed) {
  return run_zero_shot(config, prepare_data(config, seed), seed);
}

ExperimentReport run_zero_shot(const ExperimentConfig& config, const ExperimentData& data,
                               std::uint64_t seed) {
  TrainConfig tc = trainee_config(config, seed);
  tc.rg.reset();
  TrainInputs in;
  in.syn_train = &data.syn_train;
  in.prior_model = tc.pg ? &data.prior_model : nullptr;
  in.val = &data.real_val;
  in.test = &data.real_test;
  auto result = train(make_trainee(config, data, seed), in, tc);
  ExperimentReport& r = result.report;
  r.preset = "zero-shot";
  r.seed = seed;
  add_common_metrics(r, config, data);
  if (tc.pg) r.set_metric("lambda3", tc.pg->lambda3);
  return std::move(r);
}

ExperimentReport run_zero_shot_tuned(const ExperimentConfig& config, const ExperimentData& data,
                                     std::uint64_t seed, const std::vector<double>& grid) {
  if (!config.train.pg) throw std::invalid_argument("lambda3 tuning requires PG to be configured");
  if (grid.empty()) throw std::invalid_argument("lambda3 grid is empty");
  std::optional<ExperimentReport> best;
  for (double lambda3 : grid) {
    ExperimentConfig c = config;
    c.train.pg->lambda3 = lambda3;
    ExperimentReport r = run_zero_shot(c, data, seed);
    if (!best || r.curve.back().val_accuracy > best->curve.back().val_accuracy) {
      best = std::move(r);
    }
  }
  return std::move(*best);
}

ExperimentReport run_low_shot(const ExperimentConfig& config, std::uint64_t seed) {
  return run_low_shot(config, prepare_data(config, seed), seed);
}

ExperimentReport run_low_shot(const ExperimentConfig& config, const ExperimentData& data,
                              std::uint64_t seed) {
  if (config.real_shots_per_class == 0) {
    throw std::invalid_argument("low-shot needs real_shots_per_class >= 1; use zero-shot");
  }
  const LabeledDataset shots =
      take_per_class(data.real_train, config.real_shots_per_class, derive_seed(seed, kShots));
  TrainConfig tc = trainee_config(config, seed);
  if (config.naive_mixing) {
    tc.pg.reset();
    tc.rg.reset();
  }
  TrainInputs in;
  in.prior_model = tc.pg ? &data.prior_model : nullptr;
  in.val = &data.real_val;
  in.test = &data.real_test;
  LabeledDataset pooled;
  if (config.naive_mixing) {
    pooled = concat(data.syn_train, shots);
    in.syn_train = &pooled;
  } else {
    in.real_train = &shots;
    in.syn_train = &data.syn_train;
  }
  auto result = train(make_trainee(config, data, seed), in, tc);
  ExperimentReport& r = result.report;
  r.preset = "low-shot";
  r.seed = seed;
  add_common_metrics(r, config, data);
  r.set_metric("real_shots", static_cast<double>(shots.size()));
  r.set_metric("syn_to_real_ratio",
               static_cast<double>(data.syn_train.size()) / static_cast<double>(shots.size()));
  r.set_metric("naive_mixing", config.naive_mixing ? 1.0 : 0.0);
  return std::move(r);
}

LossSplitReports run_loss_split_augmentation(const ExperimentConfig& config, std::uint64_t seed) {
  return run_loss_split_augmentation(config, prepare_data(config, seed), seed);
}

LossSplitReports run_loss_split_augmentation(const ExperimentConfig& config,
                                             const ExperimentData& data, std::uint64_t seed) {
  const LabeledDataset real =
      config.loss_split_real_per_class == 0
          ? data.real_train
          : take_per_class(data.real_train, config.loss_split_real_per_class,
                           derive_seed(seed, kLossSplitReal));
  TrainConfig tc = trainee_config(config, seed, kLossSplitTrain);
  tc.pg.reset();
  tc.rg.reset();
  TrainInputs in;
  in.val = &data.real_val;
  in.test = &data.real_test;
  const MlpModel init = make_trainee(config, data, seed);

  LossSplitReports out;
  in.real_train = &real;
  auto baseline = train(init, in, tc);
  out.baseline = std::move(baseline.report);
  out.baseline.preset = "loss-split/baseline";

  const LossProfile profile = sample_losses(baseline.model, data.syn_train);
  const auto [low, high] = split_by_loss(data.syn_train, profile);
  const LabeledDataset with_low = concat(real, low);
  const LabeledDataset with_high = concat(real, high);
  in.real_train = &with_low;
  out.low_half = train(init, in, tc).report;
  out.low_half.preset = "loss-split/low";
  in.real_train = &with_high;
  out.high_half = train(init, in, tc).report;
  out.high_half.preset = "loss-split/high";

  const LossProfile low_p = sample_losses(baseline.model, low);
  const LossProfile high_p = sample_losses(baseline.model, high);
  for (ExperimentReport* r : {&out.baseline, &out.low_half, &out.high_half}) {
    r->seed = seed;
    r->set_metric("real_train_size", static_cast<double>(real.size()));
    r->set_metric("low_half_mean_loss", low_p.mean);
    r->set_metric("high_half_mean_loss", high_p.mean);
  }
  return out;
}

ObservationReport run_observe(const ExperimentConfig& config, std::uint64_t seed) {
  return run_observe(config, prepare_data(config, seed), seed);
}

ObservationReport run_observe(const ExperimentConfig& config, const ExperimentData& data,
                              std::uint64_t seed) {
  TrainConfig tc = trainee_config(config, seed);
  tc.pg.reset();
  tc.rg.reset();
  TrainInputs in;
  in.syn_train = &data.syn_train;
  in.val = &data.real_val;
  in.test = &data.real_test;
  auto syn = train(make_trainee(config, data, seed), in, tc);

  ObservationReport out;
  out.cross = cross_eval(data.real_model, syn.model, data.real_test, data.syn_test);
  out.real_run = data.real_report;
  out.syn_run = std::move(syn.report);
  out.syn_run.preset = "observe/synthetic";
  out.syn_run.seed = seed;
  out.real_run.seed = seed;
  out.syn_under_real = sample_losses(data.real_model, data.syn_train);
  out.real_under_syn = sample_losses(syn.model, data.real_train);
  out.coverage = mode_coverage(data.real_train, data.syn_train, config.coverage_radius);
  out.early_epoch = std::max<std::size_t>(1, (config.train.epochs + 2) / 4);
  return out;
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "epoch,split,accuracy,ce_loss,pg_loss,rg_projection_applied_fraction\n";
  for (const auto& e : report.curve) {
    const std::string ep = std::to_string(e.epoch);
    out += ep + ",train," + format_double(e.train_accuracy) + "," + format_double(e.train_loss) +
           "," + format_double(e.pg_loss) + "," + format_double(e.rg_projection_fraction) + "\n";
    out += ep + ",val," + format_double(e.val_accuracy) + "," + format_double(e.val_loss) +
           ",,\n";
  }
  return out;
}

std::string final_csv(const ExperimentReport& report, std::uint64_t config_hash) {
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(config_hash));
  return "config_hash,seed,test_accuracy\n" + std::string(hash) + "," +
         std::to_string(report.seed) + "," + format_double(report.test_accuracy) + "\n";
}

}  // namespace synguide
