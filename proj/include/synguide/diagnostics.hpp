#ifndef SYNGUIDE_DIAGNOSTICS_HPP
#define SYNGUIDE_DIAGNOSTICS_HPP

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "synguide/dataset.hpp"
#include "synguide/model.hpp"

namespace synguide {

// accuracy[train][eval], indexed by Source (0 = Real, 1 = Synthetic).
struct CrossEvalTable {
  std::array<std::array<double, 2>, 2> accuracy{};

  double at(Source train, Source eval) const {
    return accuracy[static_cast<std::size_t>(train)][static_cast<std::size_t>(eval)];
  }
  // Drop of the synthetic-trained model on real data relative to the
  // real-trained model, and the mirror quantity on synthetic data.
  double real_side_gap() const;
  double synthetic_side_gap() const;
};

CrossEvalTable cross_eval(const MlpModel& model_real, const MlpModel& model_syn,
                          const LabeledDataset& real_test, const LabeledDataset& syn_test);

struct LossProfile {
  std::vector<double> losses;
  std::vector<double> bin_edges;  // bins + 1 edges over [0, max]
  std::vector<std::size_t> counts;
  double mean = 0.0;
  double median = 0.0;
};

constexpr std::size_t kDefaultLossBins = 50;

LossProfile sample_losses(const MlpModel& model, const LabeledDataset& ds,
                          std::size_t bins = kDefaultLossBins);

// Ascending loss, ties by original index; the first ceil(N/2) rows go low.
std::pair<LabeledDataset, LabeledDataset> split_by_loss(const LabeledDataset& ds,
                                                        const LossProfile& profile);

// Fraction of real modes whose centroid has a synthetic sample within
// radius_multiplier times the mode's RMS distance to its centroid.
double mode_coverage(const LabeledDataset& real, const LabeledDataset& syn,
                     double radius_multiplier);

// Columns: train_source,eval_source,accuracy.
std::string crosseval_csv(const CrossEvalTable& table);
std::string losses_csv(const LabeledDataset& ds, const LossProfile& profile);

}  // namespace synguide

#endif  // SYNGUIDE_DIAGNOSTICS_HPP
