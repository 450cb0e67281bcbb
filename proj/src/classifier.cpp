#include "crowdqc/baseline/classifier.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "crowdqc/error.hpp"
#include "crowdqc/unicode.hpp"

namespace crowdqc::baseline {

void ClassifierConfig::validate() const {
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (word_ngrams < 1) throw Error("word_ngrams must be >= 1");
  if (dim < 1) throw Error("dim must be >= 1");
  if (hash_buckets == 0 || !std::has_single_bit(hash_buckets)) {
    throw Error("hash_buckets must be a power of two");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error("learning_rate must be positive");
  }
  if (subwords && (subwords->min < 1 || subwords->min > subwords->max)) {
    throw Error("subword range must satisfy 1 <= min <= max");
  }
}

std::unordered_map<std::string, std::vector<double>> load_vectors(
    const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read vector file " + path.string());
  std::unordered_map<std::string, std::vector<double>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) throw ParseError("non-numeric vector component", lineno);
    if (lineno == 1 && values.size() == 1) continue;  // "count dim" header
    if (values.size() != dim) {
      throw ParseError("vector for \"" + token + "\" has " + std::to_string(values.size()) +
                           " components, expected " + std::to_string(dim),
                       lineno);
    }
    out.emplace(std::move(token), std::move(values));
  }
  return out;
}

std::vector<std::string> target_names() {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < kNumTargets; ++c) {
    names.emplace_back(to_string(static_cast<Target>(c)));
  }
  return names;
}

MetricsReport evaluate_predictions(std::span<const Example> examples,
                                   std::span<const Target> predicted) {
  if (examples.empty()) throw Error("cannot evaluate on an empty test set");
  if (examples.size() != predicted.size()) throw Error("prediction count mismatch");
  ConfusionMatrix confusion = ConfusionMatrix::Zero(kNumTargets, kNumTargets);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    ++confusion(static_cast<Eigen::Index>(index_of(examples[i].label)),
                static_cast<Eigen::Index>(index_of(predicted[i])));
  }
  return metrics_from_confusion(confusion, target_names());
}

std::optional<double> error_length_ratio(std::span<const Example> examples,
                                         std::span<const Target> predicted) {
  double wrong_len = 0, right_len = 0;
  std::size_t wrong = 0, right = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto len = static_cast<double>(unicode::length(examples[i].text));
    if (predicted[i] == examples[i].label) {
      right_len += len;
      ++right;
    } else {
      wrong_len += len;
      ++wrong;
    }
  }
  if (wrong == 0 || right == 0) return std::nullopt;
  return (wrong_len / static_cast<double>(wrong)) / (right_len / static_cast<double>(right));
}

}  // namespace crowdqc::baseline
