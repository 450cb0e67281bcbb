#include "crowdqc/goldqc.hpp"

#include "crowdqc/error.hpp"

namespace crowdqc {

namespace {

bool unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::string_view to_string(SpanMetric m) {
  return m == SpanMetric::CharIou ? "char_iou" : "sentence_relative";
}

SpanMetric parse_span_metric(std::string_view s) {
  if (s == "char_iou") return SpanMetric::CharIou;
  if (s == "sentence_relative") return SpanMetric::SentenceRelative;
  throw Error("unknown span metric \"" + std::string(s) + "\"");
}

std::string_view to_string(WorkerPhase p) {
  switch (p) {
    case WorkerPhase::Qualifying: return "qualifying";
    case WorkerPhase::Active: return "active";
    case WorkerPhase::Excluded: return "excluded";
  }
  return "unknown";
}

void QcPolicy::validate() const {
  if (!unit(span_threshold) || !unit(qual_pass_ratio) ||
      !unit(max_gold_error_rate) || !unit(gold_interleave_rate)) {
    throw Error("QC policy ratios must lie in [0,1]");
  }
  if (qual_questions < 1 || min_gold_before_exclusion < 1 || worker_cap < 1 ||
      redundancy < 1) {
    throw Error("QC policy counts must be at least 1");
  }
}

GoldVerdict judge_gold(const Annotation& annotation, const GoldItem& gold,
                       std::span<const SentenceBound> sentences,
                       const QcPolicy& policy) {
  if (annotation.review_id != gold.review_id) {
    throw Error("gold judged against the wrong review: \"" + annotation.review_id +
                "\" vs \"" + gold.review_id + "\"");
  }
  GoldVerdict v;
  v.class_match = annotation.label == gold.expert_class;
  if (gold.expert_spans.empty()) {
    v.passed = v.class_match;
    return v;
  }
  v.span_score = policy.span_metric == SpanMetric::CharIou
                     ? char_iou(annotation.spans, gold.expert_spans)
                     : sentence_relative_overlap(annotation.spans, gold.expert_spans,
                                                 sentences);
  v.passed = v.class_match && v.span_score->ratio >= policy.span_threshold;
  return v;
}

WorkerState record_verdict(WorkerState state, const GoldVerdict& verdict,
                           const QcPolicy& policy) {
  if (state.phase == WorkerPhase::Excluded) {
    throw Error("worker \"" + state.worker_id + "\" is excluded");
  }
  ++state.tasks_completed;
  ++state.gold_seen;
  if (verdict.passed) ++state.gold_passed;

  const auto seen = static_cast<double>(state.gold_seen);
  const double pass_rate = static_cast<double>(state.gold_passed) / seen;
  const double error_rate = static_cast<double>(state.gold_seen - state.gold_passed) / seen;
  if (state.phase == WorkerPhase::Qualifying) {
    if (state.gold_seen >= policy.qual_questions) {
      state.phase = pass_rate >= policy.qual_pass_ratio ? WorkerPhase::Active
                                                        : WorkerPhase::Excluded;
    }
  } else if (state.gold_seen >= policy.min_gold_before_exclusion &&
             error_rate > policy.max_gold_error_rate) {
    state.phase = WorkerPhase::Excluded;
  }
  return state;
}

PurgeResult purge_worker_labels(const WorkerState& worker, AnnotationStore& store) {
  if (worker.phase != WorkerPhase::Excluded) {
    throw Error("cannot purge labels of non-excluded worker \"" + worker.worker_id + "\"");
  }
  PurgeResult out;
  const auto indices = store.by_worker(worker.worker_id);
  const std::vector<std::size_t> snapshot(indices.begin(), indices.end());
  for (std::size_t i : snapshot) {
    if (store[i].is_gold) continue;
    if (store.invalidate(i)) {
      ++out.invalidated;
      out.annotation_indices.push_back(i);
      out.requeued_reviews.push_back(store[i].review_id);
    }
  }
  return out;
}

}  // namespace crowdqc
