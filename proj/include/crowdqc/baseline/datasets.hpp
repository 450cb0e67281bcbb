#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crowdqc/aggregate.hpp"
#include "crowdqc/baseline/text_features.hpp"

namespace crowdqc::baseline {

enum class DatasetMode { WholeReview, Spans };

std::string_view to_string(DatasetMode m);
DatasetMode parse_dataset_mode(std::string_view s);

/// One example per labeled row: caption plus body. DataError rows are skipped.
std::vector<Example> whole_review_examples(std::span<const LabeledRow> rows);

/// One example per highlighted span with its row's class, plus the text no
/// annotator of the review highlighted, cut at sentence boundaries, as
/// Other. Pieces without any word token are dropped.
std::vector<Example> build_span_dataset(std::span<const LabeledRow> rows);

std::vector<Example> build_dataset(std::span<const LabeledRow> rows, DatasetMode mode);

struct Split {
  std::vector<Example> train;
  std::vector<Example> test;
  std::vector<std::string> warnings;
};

/// Seeded 80/20 split, stratified by class, that never separates rows of the
/// same group (review). A group's stratum is its most frequent label.
Split split_80_20(std::span<const Example> rows, std::uint64_t seed);

/// Gives every row its own group so that split_80_20 splits rows, not reviews.
std::vector<Example> ungrouped(std::vector<Example> rows);

}  // namespace crowdqc::baseline
