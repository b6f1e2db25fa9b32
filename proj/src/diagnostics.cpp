#include "synguide/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "synguide/util.hpp"

namespace synguide {

double CrossEvalTable::real_side_gap() const {
  return at(Source::kReal, Source::kReal) - at(Source::kSynthetic, Source::kReal);
}

double CrossEvalTable::synthetic_side_gap() const {
  return at(Source::kSynthetic, Source::kSynthetic) - at(Source::kReal, Source::kSynthetic);
}

CrossEvalTable cross_eval(const MlpModel& model_real, const MlpModel& model_syn,
                          const LabeledDataset& real_test, const LabeledDataset& syn_test) {
  CrossEvalTable t;
  const MlpModel* models[2] = {&model_real, &model_syn};
  const LabeledDataset* sets[2] = {&real_test, &syn_test};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) t.accuracy[a][b] = evaluate(*models[a], *sets[b]);
  return t;
}

LossProfile sample_losses(const MlpModel& model, const LabeledDataset& ds, std::size_t bins) {
  if (ds.empty()) throw std::invalid_argument("sample_losses: empty dataset");
  if (bins == 0) throw std::invalid_argument("sample_losses: bins must be >= 1");
  const CrossEntropy ce = cross_entropy(forward(model, ds.features).logits, ds.labels);
  LossProfile p;
  p.losses = ce.per_sample;
  p.mean = ce.loss;

  std::vector<double> sorted = p.losses;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  p.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  const double top = sorted.back() > 0.0 ? sorted.back() : 1.0;
  p.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    p.bin_edges[b] = top * static_cast<double>(b) / static_cast<double>(bins);
  }
  p.counts.assign(bins, 0);
  for (double loss : p.losses) {
    auto b = static_cast<std::size_t>(loss / top * static_cast<double>(bins));
    ++p.counts[std::min(b, bins - 1)];
  }
  return p;
}

std::pair<LabeledDataset, LabeledDataset> split_by_loss(const LabeledDataset& ds,
                                                        const LossProfile& profile) {
  if (profile.losses.size() != ds.size()) {
    throw std::invalid_argument("split_by_loss: profile has " +
                                std::to_string(profile.losses.size()) + " losses for " +
                                std::to_string(ds.size()) + " rows");
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return profile.losses[a] < profile.losses[b];
  });
  const std::size_t low_n = (ds.size() + 1) / 2;
  std::vector<std::size_t> low(order.begin(), order.begin() + static_cast<long>(low_n));
  std::vector<std::size_t> high(order.begin() + static_cast<long>(low_n), order.end());
  return {ds.subset(low), ds.subset(high)};
}

double mode_coverage(const LabeledDataset& real, const LabeledDataset& syn,
                     double radius_multiplier) {
  if (real.empty() || syn.empty()) throw std::invalid_argument("mode_coverage: empty dataset");
  if (real.dim() != syn.dim()) {
    throw std::invalid_argument("mode_coverage: feature dims " + std::to_string(real.dim()) +
                                " and " + std::to_string(syn.dim()) + " differ");
  }
  if (!(radius_multiplier >= 0.0)) {
    throw std::invalid_argument("mode_coverage: radius multiplier must be nonnegative");
  }
  std::map<int, std::vector<std::size_t>> modes;
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (real.mode_ids[i] < 0) {
      throw std::invalid_argument("mode_coverage: real row " + std::to_string(i) +
                                  " has no mode id");
    }
    modes[real.mode_ids[i]].push_back(i);
  }
  const std::size_t d = real.dim();
  std::size_t covered = 0;
  for (const auto& [id, rows] : modes) {
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i : rows) {
      const auto r = real.features.row(i);
      for (std::size_t k = 0; k < d; ++k) centroid[k] += r[k];
    }
    for (double& v : centroid) v /= static_cast<double>(rows.size());
    double sq = 0.0;
    for (std::size_t i : rows) {
      const auto r = real.features.row(i);
      for (std::size_t k = 0; k < d; ++k) sq += (r[k] - centroid[k]) * (r[k] - centroid[k]);
    }
    const double rms = std::sqrt(sq / static_cast<double>(rows.size()));
    const double radius = std::isinf(radius_multiplier) ? INFINITY : radius_multiplier * rms;
    for (std::size_t j = 0; j < syn.size(); ++j) {
      const auto r = syn.features.row(j);
      double dist2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) dist2 += (r[k] - centroid[k]) * (r[k] - centroid[k]);
      if (std::sqrt(dist2) <= radius) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(modes.size());
}

std::string crosseval_csv(const CrossEvalTable& table) {
  std::string out = "train_source,eval_source,accuracy\n";
  const Source sources[2] = {Source::kReal, Source::kSynthetic};
  for (Source a : sources) {
    for (Source b : sources) {
      out += to_string(a) + "," + to_string(b) + "," + format_double(table.at(a, b)) + "\n";
    }
  }
  return out;
}

std::string losses_csv(const LabeledDataset& ds, const LossProfile& profile) {
  std::string out = "index,label,source,loss\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(ds.labels[i]) + "," + to_string(ds.source) +
           "," + format_double(profile.losses[i]) + "\n";
  }
  return out;
}

}  // namespace synguide
