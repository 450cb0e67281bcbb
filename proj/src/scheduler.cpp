#include "crowdqc/scheduler.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace crowdqc {

std::string_view to_string(AssignmentStatus s) {
  switch (s) {
    case AssignmentStatus::Open: return "open";
    case AssignmentStatus::Submitted: return "submitted";
    case AssignmentStatus::Expired: return "expired";
    case AssignmentStatus::Invalidated: return "invalidated";
  }
  return "unknown";
}

std::string_view SubmitError::code() const noexcept {
  switch (kind_) {
    case Kind::UnknownAssignment: return "unknown_assignment";
    case Kind::Stale: return "stale_assignment";
    case Kind::Expired: return "expired_assignment";
    case Kind::ReviewMismatch: return "review_mismatch";
    case Kind::SpanOutOfBounds: return "span_out_of_bounds";
    case Kind::MissingSpan: return "missing_span";
  }
  return "error";
}

Campaign::Campaign(std::shared_ptr<const ReviewSet> reviews,
                   std::shared_ptr<const GoldSet> gold, QcPolicy policy,
                   std::uint64_t seed)
    : reviews_(std::move(reviews)),
      gold_(std::move(gold)),
      policy_(policy),
      rng_(derive_seed(seed, 0xca3b)) {
  policy_.validate();
  const std::size_t n = reviews_->size();
  sentences_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) sentences_.push_back(segment_sentences(reviews_->text(i)));

  gold_flag_.assign(n, false);
  for (const GoldItem& g : *gold_) {
    const std::size_t idx = reviews_->require(g.review_id);
    gold_flag_[idx] = true;
    gold_reviews_.push_back(idx);
  }
  if (!gold_reviews_.empty() && gold_reviews_.size() < policy_.qual_questions) {
    throw Error("gold set has " + std::to_string(gold_reviews_.size()) +
                " items, fewer than the " + std::to_string(policy_.qual_questions) +
                " qualification questions");
  }

  rank_to_index_.resize(n);
  std::iota(rank_to_index_.begin(), rank_to_index_.end(), 0);
  std::sort(rank_to_index_.begin(), rank_to_index_.end(), [&](std::size_t a, std::size_t b) {
    return (*reviews_)[a].review_id < (*reviews_)[b].review_id;
  });
  id_rank_.resize(n);
  for (std::size_t r = 0; r < n; ++r) id_rank_[rank_to_index_[r]] = r;

  valid_.assign(n, 0);
  open_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!gold_flag_[i]) pool_.insert({0, id_rank_[i]});
  }
}

std::string Campaign::register_worker() {
  std::string id;
  do {
    char buf[32];
    std::snprintf(buf, sizeof buf, "w%04zu", next_worker_++);
    id = buf;
  } while (workers_.count(id));
  register_worker(id);
  return id;
}

void Campaign::register_worker(const std::string& worker_id) {
  if (worker_id.empty()) throw Error("empty worker id");
  Worker w;
  w.state.worker_id = worker_id;
  w.unseen_gold = gold_reviews_;
  if (!workers_.emplace(worker_id, std::move(w)).second) {
    throw Error("worker \"" + worker_id + "\" already registered");
  }
}

bool Campaign::has_worker(std::string_view worker_id) const {
  return workers_.find(worker_id) != workers_.end();
}

Campaign::Worker& Campaign::worker_ref(std::string_view worker_id) {
  auto it = workers_.find(worker_id);
  if (it == workers_.end()) throw Error("unknown worker \"" + std::string(worker_id) + "\"");
  return it->second;
}

const WorkerState& Campaign::worker(std::string_view worker_id) const {
  return const_cast<Campaign*>(this)->worker_ref(worker_id).state;
}

std::vector<WorkerState> Campaign::workers() const {
  std::vector<WorkerState> out;
  out.reserve(workers_.size());
  for (const auto& [_, w] : workers_) out.push_back(w.state);
  return out;
}

const Assignment& Campaign::assignment(std::uint64_t id) const {
  if (id == 0 || id > assignments_.size()) {
    throw SubmitError(SubmitError::Kind::UnknownAssignment,
                      "unknown assignment " + std::to_string(id));
  }
  return assignments_[id - 1];
}

void Campaign::refresh_pool(std::size_t review_index, std::size_t old_valid) {
  pool_.erase({old_valid, id_rank_[review_index]});
  if (!gold_flag_[review_index] &&
      valid_[review_index] + open_[review_index] < policy_.redundancy) {
    pool_.insert({valid_[review_index], id_rank_[review_index]});
  }
}

Assignment& Campaign::issue(Worker& w, std::size_t review_index, bool is_gold,
                            Timestamp now) {
  Assignment a;
  a.assignment_id = assignments_.size() + 1;
  a.worker_id = w.state.worker_id;
  a.review_id = (*reviews_)[review_index].review_id;
  a.is_gold = is_gold;
  a.issued_at = now;
  w.seen.insert(review_index);
  ++w.open;
  if (is_gold) {
    ++w.open_gold;
  } else {
    ++open_[review_index];
    refresh_pool(review_index, valid_[review_index]);
  }
  open_ids_.insert(a.assignment_id);
  assignments_.push_back(std::move(a));
  return assignments_.back();
}

std::optional<Assignment> Campaign::next_task(std::string_view worker_id, Timestamp now) {
  Worker& w = worker_ref(worker_id);
  if (w.state.phase == WorkerPhase::Excluded) return std::nullopt;
  if (w.state.tasks_completed + w.open >= policy_.worker_cap) return std::nullopt;

  auto draw_gold = [&]() -> Assignment& {
    const std::size_t k = rng_.below(w.unseen_gold.size());
    const std::size_t review_index = w.unseen_gold[k];
    w.unseen_gold[k] = w.unseen_gold.back();
    w.unseen_gold.pop_back();
    return issue(w, review_index, true, now);
  };

  if (w.state.phase == WorkerPhase::Qualifying) {
    if (w.unseen_gold.empty() ||
        w.state.gold_seen + w.open_gold >= policy_.qual_questions) {
      return std::nullopt;
    }
    return draw_gold();
  }

  std::optional<std::size_t> candidate;
  for (const auto& [valid, rank] : pool_) {
    const std::size_t idx = rank_to_index_[rank];
    if (!w.seen.count(idx)) {
      candidate = idx;
      break;
    }
  }
  if (!candidate) return std::nullopt;
  if (rng_.bernoulli(policy_.gold_interleave_rate) && !w.unseen_gold.empty()) {
    return draw_gold();
  }
  return issue(w, *candidate, false, now);
}

std::size_t Campaign::close_open(Assignment& a, AssignmentStatus to) {
  Worker& w = worker_ref(a.worker_id);
  a.status = to;
  open_ids_.erase(a.assignment_id);
  --w.open;
  if (a.is_gold) {
    --w.open_gold;
    return 0;
  }
  const std::size_t idx = reviews_->require(a.review_id);
  --open_[idx];
  return idx;
}

SubmitOutcome Campaign::submit(std::uint64_t assignment_id, const Submission& submission,
                               Timestamp now) {
  using Kind = SubmitError::Kind;
  assignment(assignment_id);  // range check
  Assignment& a = assignments_[assignment_id - 1];
  if (a.status == AssignmentStatus::Submitted) {
    throw SubmitError(Kind::Stale, "assignment " + std::to_string(assignment_id) +
                                       " was already submitted");
  }
  if (a.status != AssignmentStatus::Open) {
    throw SubmitError(Kind::Expired, "assignment " + std::to_string(assignment_id) +
                                         " is " + std::string(to_string(a.status)));
  }
  if (submission.review_id && *submission.review_id != a.review_id) {
    throw SubmitError(Kind::ReviewMismatch, "submission names review \"" +
                                                *submission.review_id + "\", assigned \"" +
                                                a.review_id + "\"");
  }
  const std::size_t review_index = reviews_->require(a.review_id);
  const std::size_t body_len = reviews_->body_length(review_index);
  for (std::size_t i = 0; i < submission.spans.size(); ++i) {
    if (!submission.spans[i].valid_for(body_len)) {
      throw SubmitError(Kind::SpanOutOfBounds,
                        "span " + std::to_string(i) + " [" +
                            std::to_string(submission.spans[i].start) + "," +
                            std::to_string(submission.spans[i].end) +
                            ") is not within the body of length " + std::to_string(body_len));
    }
  }
  if (is_sentiment(submission.label) && submission.spans.empty()) {
    throw SubmitError(Kind::MissingSpan, std::string(to_string(submission.label)) +
                                             " needs at least one justification span");
  }

  Annotation ann;
  ann.assignment_id = a.assignment_id;
  ann.worker_id = a.worker_id;
  ann.review_id = a.review_id;
  ann.label = submission.label;
  ann.spans = canonicalize(submission.spans, body_len);
  ann.is_gold = a.is_gold;
  ann.submitted_at = now;

  close_open(a, AssignmentStatus::Submitted);
  Worker& w = worker_ref(a.worker_id);
  SubmitOutcome outcome;
  outcome.accepted = true;

  if (a.is_gold) {
    const GoldItem* g = gold_->find(a.review_id);
    outcome.verdict = judge_gold(ann, *g, sentences_[review_index], policy_);
    store_.add(std::move(ann));
    w.state = record_verdict(w.state, *outcome.verdict, policy_);
    if (w.state.phase == WorkerPhase::Excluded) exclude(w, outcome);
  } else {
    store_.add(std::move(ann));
    ++w.state.tasks_completed;
    const std::size_t old = valid_[review_index];
    ++valid_[review_index];
    refresh_pool(review_index, old);
  }
  return outcome;
}

void Campaign::exclude(Worker& w, SubmitOutcome& outcome) {
  outcome.worker_excluded = true;
  const std::vector<std::uint64_t> open(open_ids_.begin(), open_ids_.end());
  for (std::uint64_t id : open) {
    Assignment& a = assignments_[id - 1];
    if (a.worker_id != w.state.worker_id) continue;
    const std::size_t idx = close_open(a, AssignmentStatus::Expired);
    if (!a.is_gold) refresh_pool(idx, valid_[idx]);
    ++outcome.expired_open;
  }
  const PurgeResult purge = purge_worker_labels(w.state, store_);
  for (std::size_t k = 0; k < purge.annotation_indices.size(); ++k) {
    const Annotation& ann = store_[purge.annotation_indices[k]];
    assignments_[ann.assignment_id - 1].status = AssignmentStatus::Invalidated;
    const std::size_t idx = reviews_->require(ann.review_id);
    const std::size_t old = valid_[idx];
    --valid_[idx];
    refresh_pool(idx, old);
  }
  outcome.purged = purge.invalidated;
}

std::size_t Campaign::expire_stale(Timestamp now, std::chrono::milliseconds ttl) {
  if (ttl.count() <= 0) throw Error("ttl must be positive");
  std::size_t count = 0;
  const std::vector<std::uint64_t> open(open_ids_.begin(), open_ids_.end());
  for (std::uint64_t id : open) {
    Assignment& a = assignments_[id - 1];
    if (now - a.issued_at <= ttl) continue;
    const std::size_t idx = close_open(a, AssignmentStatus::Expired);
    if (!a.is_gold) refresh_pool(idx, valid_[idx]);
    ++count;
  }
  return count;
}

ProgressReport Campaign::progress() const {
  ProgressReport p;
  p.corpus_size = reviews_->size();
  p.gold_reviews = gold_reviews_.size();
  for (std::size_t i = 0; i < reviews_->size(); ++i) {
    if (gold_flag_[i]) continue;
    if (valid_[i] >= policy_.redundancy) {
      ++p.reviews_complete;
    } else {
      ++p.reviews_pending;
    }
  }
  p.open_assignments = open_ids_.size();
  for (const auto& [_, w] : workers_) {
    ++p.workers_by_phase[static_cast<std::size_t>(w.state.phase)];
    if (w.state.gold_seen > 0) {
      const double rate = static_cast<double>(w.state.gold_passed) /
                          static_cast<double>(w.state.gold_seen);
      p.gold_pass_histogram[std::min<std::size_t>(9, static_cast<std::size_t>(rate * 10))]++;
    }
  }
  return p;
}

}  // namespace crowdqc
