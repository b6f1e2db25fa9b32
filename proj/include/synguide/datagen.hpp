#ifndef SYNGUIDE_DATAGEN_HPP
#define SYNGUIDE_DATAGEN_HPP

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "synguide/dataset.hpp"
#include "synguide/model.hpp"

namespace synguide {

struct Mode {
  std::vector<double> mean;
  double stdev = 1.0;
  double weight = 1.0;
  bool rare = false;
};

// Gaussian mixture per class. Mode ids are assigned globally in class-major
// order: class 0's modes first, then class 1's, and so on.
struct MixtureSpec {
  std::size_t dim = 0;
  std::vector<std::vector<Mode>> classes;

  int num_classes() const { return static_cast<int>(classes.size()); }
  std::size_t mode_count() const;
  // Global id of mode m of class c.
  int mode_id(std::size_t c, std::size_t m) const;
  bool is_rare_mode(int mode_id) const;
  // Throws std::invalid_argument on empty classes, non-positive stdev or
  // weights, per-class weights not summing to 1, or mean/dim mismatch.
  void validate() const;
};

// Appearance: x -> x * appearance_scale + appearance_offset (each empty = identity,
// one entry = broadcast, otherwise one per feature). Content: rare-mode weight
// removed. Quality: fraction of rows hit by scale-5 Gaussian noise.
struct GapKnobs {
  double content_drop = 0.0;
  std::vector<double> appearance_offset;
  std::vector<double> appearance_scale;
  double quality_rate = 0.0;

  void validate(std::size_t dim) const;
};

constexpr double kQualityNoiseScale = 5.0;

// Removes content_drop of each class's total rare-mode weight, taking it from
// the lightest rare modes first, then renormalizes per class. With one rare
// mode per class this multiplies its weight by (1 - content_drop).
MixtureSpec apply_content_drop(const MixtureSpec& spec, double content_drop);

LabeledDataset sample_mixture(const MixtureSpec& spec, std::size_t n_per_class,
                              std::uint64_t seed);

LabeledDataset make_synthetic_clone(const MixtureSpec& spec, const GapKnobs& knobs,
                                    std::size_t n_per_class, std::uint64_t seed);

constexpr double kDefaultRejectionThreshold = 0.8;

// Keeps rows whose oracle max softmax probability exceeds `threshold` and
// relabels them with the oracle argmax.
LabeledDataset rejection_sample(const LabeledDataset& ds, const MlpModel& oracle,
                                double threshold);

// Per-class random split; both halves keep the original row order.
std::pair<LabeledDataset, LabeledDataset> split_train_val(const LabeledDataset& ds,
                                                          std::size_t val_per_class,
                                                          std::uint64_t seed);

// First `per_class` rows of each class after a seeded shuffle.
LabeledDataset take_per_class(const LabeledDataset& ds, std::size_t per_class,
                              std::uint64_t seed);

// Reference geometry for the experiments. Each class has `common_modes`
// common modes and one rare mode. Common modes of class c sit at
// class_separation along axis c, split along axis 2C + c. The rare mode of
// class c sits at class (c + 1)'s position and carries a signature of
// rare_signature along axis C + c, so it is only separable from class c + 1
// using a direction that common data never exercises.
struct DeskGeometry {
  std::size_t dim = 16;
  std::size_t classes = 4;
  std::size_t common_modes = 2;
  double class_separation = 4.0;
  double mode_split = 2.0;
  double rare_signature = 5.0;
  double stdev = 1.0;
  double rare_weight = 0.2;
};

MixtureSpec desk_spec(const DeskGeometry& g);

// Spec with every mode of each class weighted equally: full content coverage.
MixtureSpec balanced_modes(const MixtureSpec& spec);

}  // namespace synguide

#endif  // SYNGUIDE_DATAGEN_HPP
