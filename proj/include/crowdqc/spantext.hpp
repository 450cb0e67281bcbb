#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "crowdqc/corpus.hpp"
#include "crowdqc/error.hpp"

namespace crowdqc {

struct SentenceBound {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t index = 0;

  Span span() const { return {start, end}; }
  friend bool operator==(const SentenceBound&, const SentenceBound&) = default;
};

struct OverlapScore {
  std::size_t intersection_chars = 0;
  std::size_t union_chars = 0;
  double ratio = 1.0;
};

/// Thrown by canonicalize for a span that cannot be clipped into the body.
class SpanError : public Error {
 public:
  SpanError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Rule-based splitter: a sentence ends after a run of '.', '!', '?' or
/// newline. Bounds never include leading or trailing whitespace, and a body
/// without terminators is a single sentence. No abbreviation handling.
std::vector<SentenceBound> segment_sentences(std::u32string_view body);

/// Clips to [0, body_len), sorts, and merges overlapping or adjacent spans.
/// Throws SpanError for empty/inverted spans or spans starting past the body.
SpanList canonicalize(SpanList spans, std::size_t body_len);

/// Character-level intersection over union of two canonical span sets.
OverlapScore char_iou(std::span<const Span> a, std::span<const Span> b);

/// Replaces every span by the whole sentences it touches. Result is canonical.
SpanList expand_to_sentences(std::span<const Span> spans,
                             std::span<const SentenceBound> sentences);

/// char_iou after expanding both sides to sentence granularity.
OverlapScore sentence_relative_overlap(std::span<const Span> worker,
                                       std::span<const Span> gold,
                                       std::span<const SentenceBound> sentences);

/// Index of the sentence containing offset `pos`, if any.
std::optional<std::size_t> sentence_at(std::span<const SentenceBound> sentences,
                                       std::size_t pos);

/// Maximal runs of [0, body_len) not covered by the canonical set `spans`.
SpanList complement(std::span<const Span> spans, std::size_t body_len);

}  // namespace crowdqc
