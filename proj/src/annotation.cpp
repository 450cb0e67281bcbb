#include "crowdqc/annotation.hpp"

namespace crowdqc {

std::size_t AnnotationStore::add(Annotation a) {
  const std::size_t index = entries_.size();
  by_worker_[a.worker_id].push_back(index);
  by_review_[a.review_id].push_back(index);
  entries_.push_back(std::move(a));
  return index;
}

std::span<const std::size_t> AnnotationStore::by_worker(std::string_view worker_id) const {
  auto it = by_worker_.find(std::string(worker_id));
  if (it == by_worker_.end()) return {};
  return it->second;
}

std::span<const std::size_t> AnnotationStore::by_review(std::string_view review_id) const {
  auto it = by_review_.find(std::string(review_id));
  if (it == by_review_.end()) return {};
  return it->second;
}

bool AnnotationStore::invalidate(std::size_t index) {
  Annotation& a = entries_.at(index);
  if (!a.valid) return false;
  a.valid = false;
  return true;
}

std::vector<const Annotation*> AnnotationStore::valid_labels(std::string_view review_id) const {
  std::vector<const Annotation*> out;
  for (std::size_t i : by_review(review_id)) {
    const Annotation& a = entries_[i];
    if (a.valid && !a.is_gold) out.push_back(&a);
  }
  return out;
}

std::size_t AnnotationStore::valid_label_count() const {
  std::size_t n = 0;
  for (const Annotation& a : entries_) n += (a.valid && !a.is_gold);
  return n;
}

}  // namespace crowdqc
