#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "synguide/trainer.hpp"

using synguide::ExperimentConfig;
using synguide::LabeledDataset;
using synguide::MlpModel;
using synguide::TrainConfig;
using synguide::TrainInputs;

namespace {

synguide::MixtureSpec separable_spec() {
  synguide::MixtureSpec s;
  s.dim = 3;
  s.classes = {{synguide::Mode{{3, 0, 0}, 1.0, 1.0, false}},
               {synguide::Mode{{0, 3, 0}, 1.0, 1.0, false}},
               {synguide::Mode{{0, 0, 3}, 1.0, 1.0, false}}};
  return s;
}

MlpModel fresh(std::uint64_t seed = 1) {
  return synguide::init_model({3, 8, 6, 3}, synguide::Activation::kTanh, seed);
}

TrainConfig quick(std::size_t epochs = 5) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.seed = 42;
  return c;
}

ExperimentConfig small_experiment() {
  ExperimentConfig c;
  c.train_per_class = 60;
  c.val_per_class = 20;
  c.test_per_class = 60;
  c.syn_per_class = 80;
  c.prior_per_class = 60;
  c.prior_epochs = 5;
  c.knobs.content_drop = 0.95;
  c.train.epochs = 6;
  c.train.batch_size = 16;
  return c;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("synthetic-only CE training lowers the loss") {
  const auto syn_real = synguide::sample_mixture(separable_spec(), 100, 3);
  LabeledDataset syn = syn_real;
  syn.source = synguide::Source::kSynthetic;
  TrainInputs in;
  in.syn_train = &syn;
  const auto r = synguide::train(fresh(), in, quick()).report;
  REQUIRE(r.curve.size() == 5);
  for (std::size_t e = 1; e < 5; ++e) CHECK(r.curve[e].train_loss <= r.curve[e - 1].train_loss);
  CHECK(r.curve.back().train_accuracy > 0.9);
  CHECK(std::isnan(r.test_accuracy));
}

TEST_CASE("real-only run ignores guidance settings that need two sources") {
  const auto real = synguide::sample_mixture(separable_spec(), 40, 5);
  TrainInputs in;
  in.real_train = &real;
  TrainConfig with_rg = quick();
  with_rg.rg = synguide::RgConfig{};
  const auto a = synguide::train(fresh(), in, quick());
  const auto b = synguide::train(fresh(), in, with_rg);
  CHECK(a.model.flatten() == b.model.flatten());
  CHECK(b.report.rg_steps == 0);
}

TEST_CASE("zero-weight guidance reproduces plain synthetic training") {
  const auto spec = separable_spec();
  LabeledDataset syn = synguide::make_synthetic_clone(spec, {}, 50, 7);
  const auto real = synguide::sample_mixture(spec, 5, 8);
  synguide::PretrainConfig pc;
  pc.layer_dims = {3, 5, 4, 3};
  pc.epochs = 2;
  const MlpModel prior = synguide::pretrain(real, pc);

  TrainInputs plain;
  plain.syn_train = &syn;
  const auto base = synguide::train(fresh(), plain, quick());

  TrainInputs guided = plain;
  guided.real_train = &real;
  guided.prior_model = &prior;
  TrainConfig cfg = quick();
  cfg.pg = synguide::PgConfig{};
  cfg.pg->lambda3 = 0.0;
  cfg.rg = synguide::RgConfig{0.0, 1.0, false};
  const auto same = synguide::train(fresh(), guided, cfg);
  CHECK(same.model.flatten() == base.model.flatten());
}

TEST_CASE("real guidance keeps every update aligned with the real gradient") {
  const auto spec = separable_spec();
  synguide::GapKnobs k;
  k.appearance_offset = {1.5, -1.5, 0.5};
  const LabeledDataset syn = synguide::make_synthetic_clone(spec, k, 60, 9);
  const auto real = synguide::sample_mixture(spec, 5, 10);
  for (double lambda1 : {0.0, 1.0}) {
    TrainInputs in;
    in.syn_train = &syn;
    in.real_train = &real;
    TrainConfig cfg = quick(8);
    cfg.rg = synguide::RgConfig{lambda1, 1.0, true};
    const auto r = synguide::train(fresh(), in, cfg).report;
    CHECK(r.rg_steps == 8 * 12);
    CHECK(r.min_rg_alignment >= -1e-9);
    CHECK(r.min_rg_update_margin >= -1e-9);
  }
}

TEST_CASE("a disabled synthetic term leaves only the real gradient") {
  const auto spec = separable_spec();
  const LabeledDataset syn_a = synguide::make_synthetic_clone(spec, {}, 40, 1);
  synguide::GapKnobs k;
  k.appearance_offset = {4, 4, 4};
  const LabeledDataset syn_b = synguide::make_synthetic_clone(spec, k, 40, 2);
  const auto real = synguide::sample_mixture(spec, 5, 3);
  TrainConfig cfg = quick();
  cfg.rg = synguide::RgConfig{1.0, 0.0, true};
  TrainInputs in;
  in.real_train = &real;
  in.syn_train = &syn_a;
  const auto a = synguide::train(fresh(), in, cfg);
  in.syn_train = &syn_b;
  const auto b = synguide::train(fresh(), in, cfg);
  CHECK(a.model.flatten() == b.model.flatten());
}

TEST_CASE("config validation") {
  TrainConfig c = quick();
  c.pg = synguide::PgConfig{};
  c.batch_size = 2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.pg->similarity = synguide::Similarity::kL1;
  CHECK_NOTHROW(c.validate());
  c.lr = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  const auto real = synguide::sample_mixture(separable_spec(), 5, 3);
  TrainInputs in;
  CHECK_THROWS_AS(synguide::train(fresh(), in, quick()), std::invalid_argument);
  in.real_train = &real;
  TrainConfig pg = quick();
  pg.pg = synguide::PgConfig{};
  CHECK_THROWS_AS(synguide::train(fresh(), in, pg), std::invalid_argument);
}

TEST_CASE("experiment presets are deterministic") {
  const ExperimentConfig cfg = small_experiment();
  const auto data = synguide::prepare_data(cfg, 3);
  const auto a = synguide::run_zero_shot(cfg, data, 3);
  const auto b = synguide::run_zero_shot(cfg, 3);
  CHECK(synguide::report_csv(a) == synguide::report_csv(b));
  CHECK(synguide::final_csv(a, 1) == synguide::final_csv(b, 1));
  CHECK(a.metric("syn_train_size") == static_cast<double>(data.syn_train.size()));

  const auto s1 = synguide::run_loss_split_augmentation(cfg, data, 3);
  const auto s2 = synguide::run_loss_split_augmentation(cfg, data, 3);
  CHECK(synguide::report_csv(s1.high_half) == synguide::report_csv(s2.high_half));
  CHECK(synguide::report_csv(s1.low_half) == synguide::report_csv(s2.low_half));
}

TEST_CASE("low-shot preconditions and tuning") {
  ExperimentConfig cfg = small_experiment();
  cfg.real_shots_per_class = 0;
  CHECK_THROWS_AS(synguide::run_low_shot(cfg, 1), std::invalid_argument);

  cfg = small_experiment();
  cfg.train.pg = synguide::PgConfig{};
  cfg.train.rg = synguide::RgConfig{};
  const auto data = synguide::prepare_data(cfg, 4);
  const auto r = synguide::run_low_shot(cfg, data, 4);
  CHECK(r.metric("real_shots") == 4 * 5);
  CHECK(r.rg_steps > 0);
  ExperimentConfig naive = cfg;
  naive.naive_mixing = true;
  ExperimentConfig plain_naive = naive;
  plain_naive.train.pg.reset();
  plain_naive.train.rg.reset();
  CHECK(synguide::report_csv(synguide::run_low_shot(naive, data, 4)) ==
        synguide::report_csv(synguide::run_low_shot(plain_naive, data, 4)));
  const auto tuned = synguide::run_zero_shot_tuned(cfg, data, 4, {0.03, 0.3});
  const double chosen = tuned.metric("lambda3");
  CHECK((chosen == 0.03 || chosen == 0.3));
}

TEST_CASE("csv schemas") {
  synguide::ExperimentReport r;
  r.seed = 7;
  r.test_accuracy = 0.5;
  synguide::EpochRecord e;
  e.epoch = 1;
  e.train_accuracy = 1;
  e.val_accuracy = std::nan("");
  e.val_loss = std::nan("");
  r.curve.push_back(e);
  CHECK(synguide::report_csv(r) ==
        "epoch,split,accuracy,ce_loss,pg_loss,rg_projection_applied_fraction\n"
        "1,train,1,0,0,0\n1,val,nan,nan,,\n");
  CHECK(synguide::final_csv(r, 0xabc) == "config_hash,seed,test_accuracy\n0000000000000abc,7,0.5\n");
}

}
