#include "synguide/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "synguide/util.hpp"

namespace synguide {

std::size_t MixtureSpec::mode_count() const {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.size();
  return n;
}

int MixtureSpec::mode_id(std::size_t c, std::size_t m) const {
  std::size_t id = 0;
  for (std::size_t k = 0; k < c; ++k) id += classes[k].size();
  return static_cast<int>(id + m);
}

bool MixtureSpec::is_rare_mode(int mode_id) const {
  if (mode_id < 0) return false;
  auto id = static_cast<std::size_t>(mode_id);
  for (const auto& c : classes) {
    if (id < c.size()) return c[id].rare;
    id -= c.size();
  }
  return false;
}

void MixtureSpec::validate() const {
  if (dim == 0) throw std::invalid_argument("mixture spec: feature dim must be >= 1");
  if (classes.empty()) throw std::invalid_argument("mixture spec: no classes");
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& modes = classes[c];
    const std::string where = "mixture spec class " + std::to_string(c);
    if (modes.empty()) throw std::invalid_argument(where + ": no modes");
    double total = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const Mode& mode = modes[m];
      if (mode.mean.size() != dim) {
        throw std::invalid_argument(where + " mode " + std::to_string(m) + ": mean has " +
                                    std::to_string(mode.mean.size()) + " entries, dim is " +
                                    std::to_string(dim));
      }
      if (!(mode.stdev > 0.0)) {
        throw std::invalid_argument(where + " mode " + std::to_string(m) +
                                    ": stdev must be positive");
      }
      if (!(mode.weight >= 0.0)) {
        throw std::invalid_argument(where + " mode " + std::to_string(m) +
                                    ": weight must be nonnegative");
      }
      total += mode.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument(where + ": mode weights sum to " + format_double(total) +
                                  ", expected 1");
    }
  }
}

void GapKnobs::validate(std::size_t dim) const {
  if (!(content_drop >= 0.0 && content_drop <= 1.0)) {
    throw std::invalid_argument("content_drop must lie in [0, 1]");
  }
  if (!(quality_rate >= 0.0 && quality_rate <= 1.0)) {
    throw std::invalid_argument("quality_rate must lie in [0, 1]");
  }
  auto check = [dim](const std::vector<double>& v, const char* name) {
    if (v.size() > 1 && v.size() != dim) {
      throw std::invalid_argument(std::string(name) + " has " + std::to_string(v.size()) +
                                  " entries; expected 1 or " + std::to_string(dim));
    }
  };
  check(appearance_offset, "appearance_offset");
  check(appearance_scale, "appearance_scale");
}

MixtureSpec apply_content_drop(const MixtureSpec& spec, double content_drop) {
  if (!(content_drop >= 0.0 && content_drop <= 1.0)) {
    throw std::invalid_argument("content_drop must lie in [0, 1]");
  }
  MixtureSpec out = spec;
  for (std::size_t c = 0; c < out.classes.size(); ++c) {
    auto& modes = out.classes[c];
    std::vector<std::size_t> rare;
    double rare_total = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if (modes[m].rare) {
        rare.push_back(m);
        rare_total += modes[m].weight;
      }
    }
    std::stable_sort(rare.begin(), rare.end(), [&](std::size_t a, std::size_t b) {
      return modes[a].weight < modes[b].weight;
    });
    if (content_drop == 1.0) {
      for (std::size_t m : rare) modes[m].weight = 0.0;
    } else {
      double remaining = content_drop * rare_total;
      for (std::size_t m : rare) {
        const double take = std::min(modes[m].weight, remaining);
        modes[m].weight -= take;
        remaining -= take;
      }
    }
    double total = 0.0;
    for (const auto& mode : modes) total += mode.weight;
    if (!(total > 0.0)) {
      throw std::invalid_argument("content_drop leaves class " + std::to_string(c) +
                                  " with zero total weight; cannot renormalize");
    }
    for (auto& mode : modes) mode.weight /= total;
  }
  return out;
}

LabeledDataset sample_mixture(const MixtureSpec& spec, std::size_t n_per_class,
                              std::uint64_t seed) {
  spec.validate();
  if (n_per_class == 0) throw std::invalid_argument("sample_mixture: n_per_class must be >= 1");
  const std::size_t classes = spec.classes.size();
  LabeledDataset ds;
  ds.source = Source::kReal;
  ds.num_classes = spec.num_classes();
  std::vector<double> data;
  data.reserve(classes * n_per_class * spec.dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto& modes = spec.classes[c];
    std::vector<double> weights;
    for (const auto& m : modes) weights.push_back(m.weight);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const std::size_t m = pick(rng);
      const Mode& mode = modes[m];
      for (std::size_t k = 0; k < spec.dim; ++k) {
        data.push_back(mode.mean[k] + mode.stdev * gauss(rng));
      }
      ds.labels.push_back(static_cast<int>(c));
      ds.mode_ids.push_back(spec.mode_id(c, m));
    }
  }
  ds.features = Matrix(ds.labels.size(), spec.dim, std::move(data));
  return ds;
}

LabeledDataset make_synthetic_clone(const MixtureSpec& spec, const GapKnobs& knobs,
                                    std::size_t n_per_class, std::uint64_t seed) {
  spec.validate();
  knobs.validate(spec.dim);
  const MixtureSpec shifted = apply_content_drop(spec, knobs.content_drop);
  LabeledDataset ds = sample_mixture(shifted, n_per_class, seed);
  ds.source = Source::kSynthetic;

  auto knob_at = [](const std::vector<double>& v, std::size_t k, double fallback) {
    if (v.empty()) return fallback;
    return v.size() == 1 ? v[0] : v[k];
  };
  if (!knobs.appearance_offset.empty() || !knobs.appearance_scale.empty()) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      auto row = ds.features.row(i);
      for (std::size_t k = 0; k < row.size(); ++k) {
        row[k] = row[k] * knob_at(knobs.appearance_scale, k, 1.0) +
                 knob_at(knobs.appearance_offset, k, 0.0);
      }
    }
  }
  if (knobs.quality_rate > 0.0) {
    std::mt19937_64 rng(derive_seed(seed, 0x51));
    std::bernoulli_distribution hit(knobs.quality_rate);
    std::normal_distribution<double> gauss(0.0, kQualityNoiseScale);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (!hit(rng)) continue;
      for (double& v : ds.features.row(i)) v += gauss(rng);
    }
  }
  return ds;
}

LabeledDataset rejection_sample(const LabeledDataset& ds, const MlpModel& oracle,
                                double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("rejection threshold must lie in [0, 1)");
  }
  if (oracle.num_classes() != static_cast<std::size_t>(ds.num_classes)) {
    throw std::invalid_argument("rejection_sample: oracle has " +
                                std::to_string(oracle.num_classes()) + " classes, dataset has " +
                                std::to_string(ds.num_classes));
  }
  if (ds.empty()) throw std::invalid_argument("rejection_sample: empty dataset");
  const Matrix probs = row_softmax(forward(oracle, ds.features).logits, 1.0);
  std::vector<std::size_t> keep;
  std::vector<int> relabel;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const int top = argmax_row(probs.row(i));
    if (probs(i, static_cast<std::size_t>(top)) > threshold) {
      keep.push_back(i);
      relabel.push_back(top);
    }
  }
  if (keep.empty()) {
    throw std::runtime_error("rejection_sample: no sample exceeds confidence threshold " +
                             format_double(threshold) + "; lower the threshold");
  }
  LabeledDataset out = ds.subset(keep);
  out.labels = std::move(relabel);
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split_train_val(const LabeledDataset& ds,
                                                          std::size_t val_per_class,
                                                          std::uint64_t seed) {
  ds.validate();
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  std::vector<bool> in_val(ds.size(), false);
  if (val_per_class > 0) {
    std::mt19937_64 rng(seed);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto& idx = by_class[c];
      if (idx.size() <= val_per_class) {
        throw std::invalid_argument("split_train_val: class " + std::to_string(c) + " has " +
                                    std::to_string(idx.size()) + " samples, needs more than " +
                                    std::to_string(val_per_class));
      }
      std::shuffle(idx.begin(), idx.end(), rng);
      for (std::size_t k = 0; k < val_per_class; ++k) in_val[idx[k]] = true;
    }
  }
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  for (std::size_t i = 0; i < ds.size(); ++i) (in_val[i] ? val_idx : train_idx).push_back(i);
  return {ds.subset(train_idx), ds.subset(val_idx)};
}

LabeledDataset take_per_class(const LabeledDataset& ds, std::size_t per_class,
                              std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.size() < per_class) {
      throw std::invalid_argument("take_per_class: class " + std::to_string(c) + " has only " +
                                  std::to_string(idx.size()) + " samples");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<long>(per_class));
  }
  std::sort(chosen.begin(), chosen.end());
  return ds.subset(chosen);
}

MixtureSpec desk_spec(const DeskGeometry& g) {
  if (g.classes < 2 || g.common_modes < 1 || g.dim == 0) {
    throw std::invalid_argument("desk_spec: need >= 2 classes, >= 1 common mode, dim >= 1");
  }
  if (!(g.rare_weight > 0.0 && g.rare_weight < 1.0)) {
    throw std::invalid_argument("desk_spec: rare_weight must lie in (0, 1)");
  }
  MixtureSpec spec;
  spec.dim = g.dim;
  const std::size_t C = g.classes;
  auto axis = [&](std::size_t k) { return k % g.dim; };
  const double common_weight = (1.0 - g.rare_weight) / static_cast<double>(g.common_modes);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<Mode> modes;
    for (std::size_t m = 0; m < g.common_modes; ++m) {
      Mode mode{std::vector<double>(g.dim, 0.0), g.stdev, common_weight, false};
      mode.mean[axis(c)] += g.class_separation;
      if (g.common_modes > 1) {
        // Spread the common modes symmetrically along the class's split axis.
        const double t = static_cast<double>(m) / static_cast<double>(g.common_modes - 1);
        mode.mean[axis(2 * C + c)] += g.mode_split * (2.0 * t - 1.0);
      }
      modes.push_back(std::move(mode));
    }
    Mode rare{std::vector<double>(g.dim, 0.0), g.stdev, g.rare_weight, true};
    rare.mean[axis((c + 1) % C)] += g.class_separation;
    rare.mean[axis(C + c)] += g.rare_signature;
    modes.push_back(std::move(rare));
    spec.classes.push_back(std::move(modes));
  }
  spec.validate();
  return spec;
}

MixtureSpec balanced_modes(const MixtureSpec& spec) {
  MixtureSpec out = spec;
  for (auto& modes : out.classes) {
    for (auto& m : modes) m.weight = 1.0 / static_cast<double>(modes.size());
  }
  return out;
}

}  // namespace synguide
