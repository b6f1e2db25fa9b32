#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "synguide/datagen.hpp"

using synguide::GapKnobs;
using synguide::LabeledDataset;
using synguide::Matrix;
using synguide::MixtureSpec;
using synguide::Mode;

namespace {

MixtureSpec two_mode_spec(double common, double rare) {
  MixtureSpec s;
  s.dim = 2;
  s.classes = {{Mode{{0, 0}, 1.0, common, false}, Mode{{6, 0}, 1.0, rare, true}},
               {Mode{{0, 6}, 1.0, 1.0, false}}};
  return s;
}

std::size_t rare_count(const MixtureSpec& spec, const LabeledDataset& ds) {
  std::size_t n = 0;
  for (int id : ds.mode_ids) n += spec.is_rare_mode(id) ? 1 : 0;
  return n;
}

LabeledDataset rows(const Matrix& x) {
  LabeledDataset ds;
  ds.features = x;
  ds.labels.assign(x.rows(), 1);
  ds.mode_ids.assign(x.rows(), 0);
  ds.num_classes = 2;
  ds.source = synguide::Source::kSynthetic;
  return ds;
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("sample_mixture determinism and shape") {
  const auto spec = two_mode_spec(0.9, 0.1);
  const auto a = synguide::sample_mixture(spec, 50, 1);
  const auto b = synguide::sample_mixture(spec, 50, 1);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.mode_ids == b.mode_ids);
  CHECK(a.size() == 100);
  CHECK(a.class_counts() == std::vector<std::size_t>{50, 50});
  CHECK(synguide::sample_mixture(spec, 50, 2).features != a.features);
}

TEST_CASE("sample_mixture degenerate stdev") {
  MixtureSpec s;
  s.dim = 3;
  s.classes = {{Mode{{1, -2, 0.5}, 1e-300, 1.0, false}}};
  const auto ds = synguide::sample_mixture(s, 20, 4);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.features(i, 0) == 1.0);
    CHECK(ds.features(i, 1) == -2.0);
    CHECK(ds.features(i, 2) == 0.5);
  }
}

TEST_CASE("rare-mode frequency within the binomial 99.9% interval") {
  MixtureSpec s;
  s.dim = 1;
  s.classes = {{Mode{{0}, 1.0, 0.9, false}, Mode{{5}, 1.0, 0.1, true}}};
  const auto ds = synguide::sample_mixture(s, 10000, 17);
  const std::size_t rare = rare_count(s, ds);
  CHECK(rare >= 850);
  CHECK(rare <= 1150);
}

TEST_CASE("invalid specs") {
  auto s = two_mode_spec(0.5, 0.4);
  CHECK_THROWS_AS(synguide::sample_mixture(s, 10, 1), std::invalid_argument);
  s = two_mode_spec(0.9, 0.1);
  s.classes[0][0].stdev = 0.0;
  CHECK_THROWS_AS(synguide::sample_mixture(s, 10, 1), std::invalid_argument);
  s = two_mode_spec(0.9, 0.1);
  s.classes[1][0].mean = {1};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("content drop reweighting") {
  const auto spec = two_mode_spec(0.8, 0.2);
  const auto half = synguide::apply_content_drop(spec, 0.5);
  CHECK(half.classes[0][1].weight == doctest::Approx(0.1 / 0.9).epsilon(1e-14));
  CHECK(half.classes[0][0].weight == doctest::Approx(0.8 / 0.9).epsilon(1e-14));
  const auto full = synguide::apply_content_drop(spec, 1.0);
  CHECK(full.classes[0][1].weight == 0.0);

  MixtureSpec only_rare;
  only_rare.dim = 1;
  only_rare.classes = {{Mode{{0}, 1.0, 1.0, true}}};
  CHECK_THROWS_AS(synguide::apply_content_drop(only_rare, 1.0), std::invalid_argument);
}

TEST_CASE("content drop removes the lightest rare modes first") {
  MixtureSpec s;
  s.dim = 1;
  s.classes = {{Mode{{0}, 1.0, 0.6, false}, Mode{{3}, 1.0, 0.1, true},
                Mode{{6}, 1.0, 0.3, true}}};
  // Dropping half of the 0.4 rare mass removes 0.1 from mode 1, then 0.1 from mode 2.
  const auto d = synguide::apply_content_drop(s, 0.5);
  CHECK(d.classes[0][1].weight == doctest::Approx(0.0).scale(1.0));
  CHECK(d.classes[0][2].weight == doctest::Approx(0.2 / 0.8).epsilon(1e-14));
  CHECK(d.classes[0][0].weight == doctest::Approx(0.6 / 0.8).epsilon(1e-14));
}

TEST_CASE("synthetic clone") {
  const auto spec = two_mode_spec(0.8, 0.2);
  GapKnobs k;
  k.content_drop = 1.0;
  const auto dropped = synguide::make_synthetic_clone(spec, k, 2000, 3);
  CHECK(dropped.source == synguide::Source::kSynthetic);
  CHECK(rare_count(spec, dropped) == 0);

  k.content_drop = 0.5;
  const std::size_t n = 20000;
  const auto half = synguide::make_synthetic_clone(spec, k, n, 5);
  const double frac = static_cast<double>(rare_count(spec, half)) / static_cast<double>(n);
  const double p = 0.1 / 0.9;
  const double sd = std::sqrt(p * (1 - p) / static_cast<double>(n));
  CHECK(std::abs(frac - p) < 3.3 * sd);

  const auto a = synguide::make_synthetic_clone(spec, k, 30, 9);
  CHECK(a.features == synguide::make_synthetic_clone(spec, k, 30, 9).features);
}

TEST_CASE("identity knobs match the real distribution in moments") {
  const auto spec = two_mode_spec(0.8, 0.2);
  const std::size_t n = 20000;
  const auto real = synguide::sample_mixture(spec, n, 21);
  const auto syn = synguide::make_synthetic_clone(spec, GapKnobs{}, n, 22);
  for (std::size_t k = 0; k < 2; ++k) {
    double m1 = 0, m2 = 0, s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < real.size(); ++i) {
      m1 += real.features(i, k);
      s1 += real.features(i, k) * real.features(i, k);
      m2 += syn.features(i, k);
      s2 += syn.features(i, k) * syn.features(i, k);
    }
    const double total = static_cast<double>(real.size());
    m1 /= total, m2 /= total, s1 /= total, s2 /= total;
    const double var = s1 - m1 * m1;
    CHECK(std::abs(m1 - m2) < 5 * std::sqrt(2 * var / total));
    CHECK(std::abs(s1 - s2) / s1 < 0.05);
  }
}

TEST_CASE("appearance and quality knobs") {
  MixtureSpec s;
  s.dim = 2;
  s.classes = {{Mode{{1, 2}, 1e-300, 1.0, false}}};
  GapKnobs k;
  k.appearance_scale = {2.0};
  k.appearance_offset = {1.0, -1.0};
  const auto ds = synguide::make_synthetic_clone(s, k, 5, 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.features(i, 0) == doctest::Approx(3.0));
    CHECK(ds.features(i, 1) == doctest::Approx(3.0));
  }
  k = GapKnobs{};
  k.quality_rate = 1.0;
  const auto noisy = synguide::make_synthetic_clone(s, k, 50, 1);
  std::size_t moved = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) moved += noisy.features(i, 0) != 1.0 ? 1 : 0;
  CHECK(moved == 50);
  k.quality_rate = 1.5;
  CHECK_THROWS_AS(k.validate(2), std::invalid_argument);
  k = GapKnobs{};
  k.appearance_offset = {1, 2, 3};
  CHECK_THROWS_AS(k.validate(2), std::invalid_argument);
}

TEST_CASE("rejection sampling with a constructed oracle") {
  // Head-only identity oracle: p(class 0) = softmax([x0, x1])[0].
  synguide::MlpModel oracle({2, 2}, synguide::Activation::kTanh);
  oracle.mutable_weights(0) = Matrix::identity(2);
  const double a = std::log(9.0);  // softmax([ln 9, 0]) = (0.9, 0.1)
  const auto ds = rows(Matrix::from_rows({{a, 0}, {0, 0}, {0, a}, {0.1, 0}, {a, 0}, {0, 0}}));
  const auto kept = synguide::rejection_sample(ds, oracle, 0.8);
  CHECK(kept.size() == 3);
  CHECK(kept.labels == std::vector<int>{0, 1, 0});
  CHECK(kept.features(1, 1) == a);

  const auto all = synguide::rejection_sample(ds, oracle, 0.0);
  CHECK(all.size() == ds.size());
  CHECK(all.labels == std::vector<int>{0, 0, 1, 0, 0, 0});

  try {
    synguide::rejection_sample(rows(Matrix(4, 2)), oracle, 0.999);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("lower the threshold") != std::string::npos);
  }
  CHECK_THROWS_AS(synguide::rejection_sample(ds, oracle, 1.0), std::invalid_argument);
}

TEST_CASE("split_train_val") {
  const auto ds = synguide::sample_mixture(two_mode_spec(0.9, 0.1), 30, 3);
  const auto [train, val] = synguide::split_train_val(ds, 10, 4);
  CHECK(val.class_counts() == std::vector<std::size_t>{10, 10});
  CHECK(train.class_counts() == std::vector<std::size_t>{20, 20});
  const auto again = synguide::split_train_val(ds, 10, 4);
  CHECK(again.first.features == train.features);
  CHECK(again.second.features == val.features);

  const auto [all, none] = synguide::split_train_val(ds, 0, 4);
  CHECK(none.empty());
  CHECK(all.features == ds.features);

  try {
    synguide::split_train_val(ds, 30, 4);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("class 0") != std::string::npos);
  }
}

TEST_CASE("desk geometry") {
  const auto spec = synguide::desk_spec(synguide::DeskGeometry{});
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.num_classes() == 4);
  CHECK(spec.mode_count() == 12);
  for (const auto& modes : spec.classes) {
    double rare = 0.0;
    for (const auto& m : modes) rare += m.rare ? m.weight : 0.0;
    CHECK(rare == doctest::Approx(0.2));
  }
  const auto bal = synguide::balanced_modes(spec);
  for (const auto& modes : bal.classes)
    for (const auto& m : modes) CHECK(m.weight == doctest::Approx(1.0 / 3));
}

}

TEST_SUITE("dataset") {

TEST_CASE("save and load round trip") {
  auto ds = synguide::sample_mixture(two_mode_spec(0.7, 0.3), 40, 8);
  const auto dir = std::filesystem::temp_directory_path() / "synguide_dataset_test";
  std::filesystem::create_directories(dir);
  synguide::save_dataset(ds, dir / "d.txt");
  const auto back = synguide::load_dataset(dir / "d.txt");
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);
  CHECK(back.mode_ids == ds.mode_ids);
  CHECK(back.source == ds.source);
  CHECK(back.num_classes == ds.num_classes);
  CHECK_FALSE(std::filesystem::exists(dir / "d.txt.tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("parse errors cite the line") {
  auto expect_line = [](const std::string& text, const std::string& where) {
    try {
      synguide::parse_dataset(text);
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(where) != std::string::npos);
    }
  };
  expect_line("", "line 1");
  expect_line("d=2 C=2 source=Real\n1 2 0 0\n1 2 0\n", "line 3");
  expect_line("d=2 C=2 source=Real\n1 2 5 0\n", "line 2");
  expect_line("dims=2 C=2 source=Real\n", "line 1");
  expect_line("d=2 C=2 source=Real\n1 x 0 0\n", "line 2");
}

TEST_CASE("concat and subset") {
  const auto ds = synguide::sample_mixture(two_mode_spec(0.9, 0.1), 5, 1);
  const std::size_t idx[] = {3, 0};
  const auto sub = ds.subset(idx);
  CHECK(sub.size() == 2);
  CHECK(sub.labels[0] == ds.labels[3]);
  const auto both = synguide::concat(ds, sub);
  CHECK(both.size() == 12);
  CHECK(both.features(11, 0) == ds.features(0, 0));
}

}
