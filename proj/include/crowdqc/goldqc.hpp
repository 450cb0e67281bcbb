#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdqc/annotation.hpp"
#include "crowdqc/corpus.hpp"
#include "crowdqc/spantext.hpp"

namespace crowdqc {

enum class SpanMetric { SentenceRelative, CharIou };

std::string_view to_string(SpanMetric m);
SpanMetric parse_span_metric(std::string_view s);

struct QcPolicy {
  double span_threshold = 0.7;
  std::size_t qual_questions = 5;
  double qual_pass_ratio = 0.8;
  double max_gold_error_rate = 0.3;
  std::size_t min_gold_before_exclusion = 5;
  double gold_interleave_rate = 0.1;
  std::size_t worker_cap = 300;
  std::size_t redundancy = 3;
  SpanMetric span_metric = SpanMetric::SentenceRelative;

  /// Throws crowdqc::Error when a ratio leaves [0,1] or a count is zero.
  void validate() const;
};

struct GoldVerdict {
  bool class_match = false;
  std::optional<OverlapScore> span_score;
  bool passed = false;
};

enum class WorkerPhase { Qualifying, Active, Excluded };

std::string_view to_string(WorkerPhase p);

struct WorkerState {
  std::string worker_id;
  WorkerPhase phase = WorkerPhase::Qualifying;
  std::size_t gold_seen = 0;
  std::size_t gold_passed = 0;
  std::size_t tasks_completed = 0;

  double gold_error_rate() const {
    return gold_seen == 0 ? 0.0
                          : static_cast<double>(gold_seen - gold_passed) /
                                static_cast<double>(gold_seen);
  }
};

/// Scores one gold answer. Span agreement is only checked when the expert
/// marked spans; a threshold of 0 reduces the verdict to class equality.
GoldVerdict judge_gold(const Annotation& annotation, const GoldItem& gold,
                       std::span<const SentenceBound> sentences,
                       const QcPolicy& policy);

/// Folds a gold verdict into the worker's counters and applies the
/// qualification and exclusion rules. Counts the gold answer as a completed
/// task.
WorkerState record_verdict(WorkerState state, const GoldVerdict& verdict,
                           const QcPolicy& policy);

struct PurgeResult {
  std::size_t invalidated = 0;
  std::vector<std::size_t> annotation_indices;
  std::vector<std::string> requeued_reviews;  // one entry per invalidated label
};

/// Invalidates all non-gold annotations of an excluded worker; gold answers
/// stay valid for audit.
PurgeResult purge_worker_labels(const WorkerState& worker, AnnotationStore& store);

}  // namespace crowdqc
