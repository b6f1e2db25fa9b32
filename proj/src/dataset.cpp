#include "synguide/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "synguide/util.hpp"

namespace synguide {

std::string to_string(Source s) { return s == Source::kReal ? "Real" : "Synthetic"; }

Source parse_source(const std::string& text) {
  if (text == "Real") return Source::kReal;
  if (text == "Synthetic") return Source::kSynthetic;
  throw std::invalid_argument("unknown source '" + text + "' (expected Real or Synthetic)");
}

void LabeledDataset::validate() const {
  if (features.rows() != labels.size() || mode_ids.size() != labels.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(features.rows()) +
                                " feature rows, " + std::to_string(labels.size()) +
                                " labels and " + std::to_string(mode_ids.size()) + " mode ids");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " at row " +
                                  std::to_string(i) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.source = source;
  out.num_classes = num_classes;
  out.features = Matrix(indices.size(), dim());
  out.labels.reserve(indices.size());
  out.mode_ids.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= size()) throw std::out_of_range("subset index " + std::to_string(i));
    const auto src = features.row(i);
    std::copy(src.begin(), src.end(), out.features.row(k).begin());
    out.labels.push_back(labels[i]);
    out.mode_ids.push_back(mode_ids[i]);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.empty()) {
    LabeledDataset out = b;
    out.source = a.source;
    out.num_classes = std::max(a.num_classes, b.num_classes);
    return out;
  }
  if (!b.empty() && a.dim() != b.dim()) {
    throw std::invalid_argument("concat: feature dims " + std::to_string(a.dim()) + " and " +
                                std::to_string(b.dim()) + " differ");
  }
  std::vector<double> data(a.features.values().begin(), a.features.values().end());
  data.insert(data.end(), b.features.values().begin(), b.features.values().end());
  LabeledDataset out;
  out.source = a.source;
  out.num_classes = std::max(a.num_classes, b.num_classes);
  out.features = Matrix(a.size() + b.size(), a.dim(), std::move(data));
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.mode_ids = a.mode_ids;
  out.mode_ids.insert(out.mode_ids.end(), b.mode_ids.begin(), b.mode_ids.end());
  return out;
}

std::string serialize_dataset(const LabeledDataset& ds) {
  ds.validate();
  std::string out = "d=" + std::to_string(ds.dim()) + " C=" + std::to_string(ds.num_classes) +
                    " source=" + to_string(ds.source) + "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.features.row(i)) {
      out += format_double(v);
      out += ' ';
    }
    out += std::to_string(ds.labels[i]);
    out += ' ';
    out += std::to_string(ds.mode_ids[i]);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void fail_at(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + what);
}

std::string_view header_value(std::string_view token, std::string_view key, std::size_t line) {
  if (token.substr(0, key.size()) != key || token.size() <= key.size() ||
      token[key.size()] != '=') {
    fail_at(line, "malformed header, expected '" + std::string(key) + "=<value>'");
  }
  return token.substr(key.size() + 1);
}

}  // namespace

LabeledDataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_ws(line).empty()) {
    throw std::runtime_error("dataset line 1: empty file, expected header");
  }
  const auto head = split_ws(line);
  if (head.size() != 3) fail_at(1, "malformed header, expected 'd=<int> C=<int> source=<...>'");
  LabeledDataset ds;
  long long dim = 0;
  long long classes = 0;
  try {
    dim = parse_int(header_value(head[0], "d", 1), "d");
    classes = parse_int(header_value(head[1], "C", 1), "C");
    ds.source = parse_source(std::string(header_value(head[2], "source", 1)));
  } catch (const std::invalid_argument& e) {
    fail_at(1, e.what());
  }
  if (dim < 1 || classes < 1) fail_at(1, "d and C must be positive");
  ds.num_classes = static_cast<int>(classes);

  std::vector<double> data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != static_cast<std::size_t>(dim) + 2) {
      fail_at(line_no, "expected " + std::to_string(dim + 2) + " columns, found " +
                           std::to_string(tok.size()));
    }
    try {
      for (long long k = 0; k < dim; ++k) data.push_back(parse_double(tok[k], "feature"));
      const auto label = parse_int(tok[dim], "label");
      if (label < 0 || label >= classes) {
        fail_at(line_no, "label " + std::to_string(label) + " outside [0, " +
                             std::to_string(classes) + ")");
      }
      ds.labels.push_back(static_cast<int>(label));
      ds.mode_ids.push_back(static_cast<int>(parse_int(tok[dim + 1], "mode_id")));
    } catch (const std::invalid_argument& e) {
      fail_at(line_no, e.what());
    }
  }
  ds.features = Matrix(ds.labels.size(), static_cast<std::size_t>(dim), std::move(data));
  return ds;
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_dataset(ds));
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

}  // namespace synguide
