#ifndef SYNGUIDE_DATASET_HPP
#define SYNGUIDE_DATASET_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "synguide/matrix.hpp"

namespace synguide {

enum class Source { kReal, kSynthetic };

std::string to_string(Source s);
Source parse_source(const std::string& text);

// Feature rows with class labels, a source tag, and the generating mode of
// each row (-1 when unknown). Mode ids are global across classes.
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<int> mode_ids;
  Source source = Source::kReal;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  bool empty() const { return labels.empty(); }

  // Throws std::invalid_argument when lengths disagree or a label is out of range.
  void validate() const;

  LabeledDataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> class_counts() const;
};

// Rows of `b` appended to `a`; keeps a's source tag.
LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

// Text format: header `d=<int> C=<int> source=<Real|Synthetic>`, then one
// line per sample with d features, label, mode_id separated by spaces.
std::string serialize_dataset(const LabeledDataset& ds);
LabeledDataset parse_dataset(const std::string& text);

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

}  // namespace synguide

#endif  // SYNGUIDE_DATASET_HPP
