#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crowdqc/corpus.hpp"

namespace crowdqc {

/// Milliseconds since the Unix epoch (or any fixed origin in simulations).
using Timestamp = std::chrono::milliseconds;

struct Annotation {
  std::uint64_t assignment_id = 0;
  std::string worker_id;
  std::string review_id;
  ClassLabel label = ClassLabel::Other;
  SpanList spans;  // canonical against the review body
  bool is_gold = false;
  bool valid = true;
  Timestamp submitted_at{0};

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// Append-only record of submitted annotations. Entries are never removed;
/// purging flips `valid`.
class AnnotationStore {
 public:
  /// Returns the index of the new entry.
  std::size_t add(Annotation a);

  std::span<const Annotation> all() const { return entries_; }
  const Annotation& operator[](std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }

  /// Indices of every annotation by one worker, in submission order.
  std::span<const std::size_t> by_worker(std::string_view worker_id) const;
  /// Indices of every annotation of one review, in submission order.
  std::span<const std::size_t> by_review(std::string_view review_id) const;

  /// Marks one entry invalid. Returns false if it already was.
  bool invalidate(std::size_t index);

  /// Valid, non-gold annotations for a review.
  std::vector<const Annotation*> valid_labels(std::string_view review_id) const;
  std::size_t valid_label_count() const;

 private:
  std::vector<Annotation> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_worker_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_review_;
};

}  // namespace crowdqc
