#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdqc/annotation.hpp"
#include "crowdqc/corpus.hpp"

namespace crowdqc {

struct LabelBundle {
  std::string review_id;
  std::vector<Annotation> annotations;    // valid, non-gold, one per worker
  std::optional<ClassLabel> majority;     // empty when tied
  std::map<ClassLabel, SpanList> merged_spans;
};

/// Strict plurality over the bundle's annotations; std::nullopt on a tie.
/// Throws crowdqc::Error for an empty bundle.
std::optional<ClassLabel> majority_vote(std::span<const Annotation> annotations);
std::optional<ClassLabel> majority_vote(const LabelBundle& bundle);

/// Canonical union of every annotator's spans for `label`.
SpanList merge_spans(const LabelBundle& bundle, ClassLabel label);

/// Bundles for every review with at least one valid label, in corpus order.
std::vector<LabelBundle> make_bundles(const AnnotationStore& store, const ReviewSet& reviews);

struct Distribution {
  std::array<std::size_t, 5> counts{};  // indexed by ClassLabel

  std::size_t operator[](ClassLabel c) const { return counts[index_of(c)]; }
  std::size_t total() const;
  /// Share of the most frequent class: accuracy of always predicting it.
  double majority_share() const;
};

/// Counts valid non-gold annotations (not reviews) per class.
Distribution label_distribution(const AnnotationStore& store);

enum class ExportMode { PerAnnotation, Majority };

std::string_view to_string(ExportMode m);
ExportMode parse_export_mode(std::string_view s);

/// One labeled.jsonl row. `worker_id` is only present in per-annotation mode.
struct LabeledRow {
  std::string review_id;
  std::optional<std::string> worker_id;
  ClassLabel label = ClassLabel::Other;
  SpanList spans;
  std::string body;
  std::string caption;

  friend bool operator==(const LabeledRow&, const LabeledRow&) = default;
};

struct ExportSummary {
  std::size_t rows = 0;
  std::size_t tied_skipped = 0;
  std::size_t quarantined = 0;  // DataError rows
  std::vector<std::string> tied_reviews;
};

/// Builds export rows. DataError rows go to `quarantine` instead of the result.
std::vector<LabeledRow> export_rows(const AnnotationStore& store, const ReviewSet& reviews,
                                    ExportMode mode, ExportSummary* summary = nullptr,
                                    std::vector<LabeledRow>* quarantine = nullptr);

/// Writes `path`, `path.quarantine.jsonl` and `path.meta.json` (mode, seed,
/// counts). Throws crowdqc::Error on I/O failure or when nothing is labeled.
ExportSummary export_dataset(const AnnotationStore& store, const ReviewSet& reviews,
                             ExportMode mode, const std::filesystem::path& path,
                             std::uint64_t seed);

void write_labeled(std::ostream& out, std::span<const LabeledRow> rows);
std::vector<LabeledRow> read_labeled(std::istream& in);
std::vector<LabeledRow> load_labeled(const std::filesystem::path& path);

}  // namespace crowdqc
