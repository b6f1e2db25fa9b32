#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <limits>
#include <stdexcept>

#include "synguide/datagen.hpp"
#include "synguide/diagnostics.hpp"

using synguide::LabeledDataset;
using synguide::Matrix;
using synguide::MlpModel;
using synguide::Mode;

namespace {

LabeledDataset make(const Matrix& x, std::vector<int> labels, int classes) {
  LabeledDataset ds;
  ds.features = x;
  ds.labels = std::move(labels);
  ds.mode_ids.assign(ds.labels.size(), 0);
  ds.num_classes = classes;
  return ds;
}

// Head-only model whose logits are `scale` times the input.
MlpModel scaled_identity(std::size_t c, double scale) {
  MlpModel m({c, c}, synguide::Activation::kTanh);
  Matrix w = Matrix::identity(c);
  for (double& v : w.values()) v *= scale;
  m.mutable_weights(0) = w;
  return m;
}

// One common mode and two rare modes per class, centroids 12 sigma apart.
synguide::MixtureSpec separated_spec() {
  synguide::MixtureSpec s;
  s.dim = 2;
  for (int c = 0; c < 2; ++c) {
    const double y = 12.0 * c;
    s.classes.push_back({Mode{{0, y}, 1.0, 0.6, false}, Mode{{12, y + 24}, 1.0, 0.2, true},
                         Mode{{24, y + 48}, 1.0, 0.2, true}});
  }
  return s;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("cross_eval") {
  const auto x = Matrix::from_rows({{1, 0}, {0, 1}, {1, 0}});
  const auto real = make(x, {0, 1, 1}, 2);
  const auto syn = make(x, {0, 1, 0}, 2);
  const MlpModel m = scaled_identity(2, 1.0);
  const auto t = synguide::cross_eval(m, m, real, syn);
  CHECK(t.accuracy[0] == t.accuracy[1]);
  CHECK(t.at(synguide::Source::kReal, synguide::Source::kReal) == doctest::Approx(2.0 / 3));
  CHECK(t.at(synguide::Source::kReal, synguide::Source::kSynthetic) == 1.0);
  CHECK(t.real_side_gap() == 0.0);

  const auto one = make(Matrix::from_rows({{0, 1}}), {1}, 2);
  const auto u = synguide::cross_eval(m, scaled_identity(2, -1.0), one, one);
  for (const auto& row : u.accuracy)
    for (double v : row) CHECK((v == 0.0 || v == 1.0));

  const std::string csv = synguide::crosseval_csv(u);
  CHECK(csv.rfind("train_source,eval_source,accuracy\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.find("Synthetic,Real,0\n") != std::string::npos);
}

TEST_CASE("sample_losses") {
  const auto x = Matrix::from_rows({{1, 0}, {0, 1}, {1, 0}});
  const auto ds = make(x, {0, 1, 0}, 2);
  const auto sure = synguide::sample_losses(scaled_identity(2, 100.0), ds);
  CHECK(sure.mean < 1e-6);

  const MlpModel flat({10, 10}, synguide::Activation::kTanh);
  const auto uni = synguide::sample_losses(flat, make(Matrix(4, 10), {0, 3, 9, 2}, 10));
  for (double l : uni.losses) CHECK(l == doctest::Approx(std::log(10.0)).epsilon(1e-14));

  const auto mixed = make(Matrix::from_rows({{2, 0}, {0, 1}, {0.5, 0.5}, {1, 3}}), {0, 0, 1, 0}, 2);
  const auto p = synguide::sample_losses(scaled_identity(2, 1.0), mixed, 4);
  double sum = 0.0;
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    const double a = mixed.features(i, 0), b = mixed.features(i, 1);
    const double own = mixed.labels[i] == 0 ? a : b;
    sum += std::log(std::exp(a) + std::exp(b)) - own;
  }
  CHECK(p.mean == doctest::Approx(sum / 4).epsilon(1e-14));
  std::size_t counted = 0;
  for (auto c : p.counts) counted += c;
  CHECK(counted == 4);
  CHECK(p.bin_edges.size() == 5);
  CHECK(p.bin_edges.front() == 0.0);
}

TEST_CASE("split_by_loss") {
  const auto ds = make(Matrix::from_rows({{0}, {1}, {2}}), {0, 0, 0}, 1);
  synguide::LossProfile equal;
  equal.losses = {0.5, 0.5, 0.5};
  const auto [low, high] = synguide::split_by_loss(ds, equal);
  CHECK(low.size() == 2);
  CHECK(high.size() == 1);
  CHECK(low.features == Matrix::from_rows({{0}, {1}}));

  synguide::LossProfile distinct;
  distinct.losses = {0.9, 0.1, 0.4};
  const auto [lo, hi] = synguide::split_by_loss(ds, distinct);
  CHECK(lo.features == Matrix::from_rows({{1}, {2}}));
  CHECK(hi.features == Matrix::from_rows({{0}}));
  CHECK_THROWS_AS(synguide::split_by_loss(ds, synguide::LossProfile{}), std::invalid_argument);
}

TEST_CASE("mode_coverage") {
  const auto spec = separated_spec();
  const auto real = synguide::sample_mixture(spec, 300, 1);
  CHECK(synguide::mode_coverage(real, real, 1.0) == 1.0);

  synguide::GapKnobs k;
  k.content_drop = 1.0;
  const auto syn = synguide::make_synthetic_clone(spec, k, 300, 2);
  CHECK(synguide::mode_coverage(real, syn, 1.0) == doctest::Approx(2.0 / 6));
  CHECK(synguide::mode_coverage(real, syn, std::numeric_limits<double>::infinity()) == 1.0);

  auto unlabeled = real;
  unlabeled.mode_ids[4] = -1;
  CHECK_THROWS_AS(synguide::mode_coverage(unlabeled, syn, 1.0), std::invalid_argument);
}

}
