#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "crowdqc/annotation.hpp"
#include "crowdqc/corpus.hpp"
#include "crowdqc/goldqc.hpp"
#include "crowdqc/rng.hpp"
#include "crowdqc/spantext.hpp"

namespace crowdqc {

enum class AssignmentStatus { Open, Submitted, Expired, Invalidated };

std::string_view to_string(AssignmentStatus s);

struct Assignment {
  std::uint64_t assignment_id = 0;
  std::string worker_id;
  std::string review_id;
  bool is_gold = false;  // never shown to workers
  Timestamp issued_at{0};
  AssignmentStatus status = AssignmentStatus::Open;
};

/// A worker's answer as received from the client.
struct Submission {
  ClassLabel label = ClassLabel::Other;
  SpanList spans;
  /// When present it must match the assigned review.
  std::optional<std::string> review_id;
};

class SubmitError : public Error {
 public:
  enum class Kind { UnknownAssignment, Stale, Expired, ReviewMismatch, SpanOutOfBounds, MissingSpan };

  SubmitError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }
  /// Stable short code for API responses, e.g. "missing_span".
  std::string_view code() const noexcept;

 private:
  Kind kind_;
};

struct SubmitOutcome {
  bool accepted = false;
  std::optional<GoldVerdict> verdict;  // gold submissions only
  bool worker_excluded = false;
  std::size_t purged = 0;
  std::size_t expired_open = 0;
};

struct ProgressReport {
  std::size_t corpus_size = 0;
  std::size_t gold_reviews = 0;
  std::size_t reviews_complete = 0;
  std::size_t reviews_pending = 0;
  std::size_t open_assignments = 0;
  std::array<std::size_t, 3> workers_by_phase{};  // indexed by WorkerPhase
  /// Workers with at least one gold answer, by pass rate in tenths; 1.0 lands
  /// in the last bin.
  std::array<std::size_t, 10> gold_pass_histogram{};
};

/// All mutable state of one labeling campaign.
///
/// next_task and submit are deterministic given the prior call sequence and
/// the seed. Not thread-safe; callers serialize access.
class Campaign {
 public:
  Campaign(std::shared_ptr<const ReviewSet> reviews, std::shared_ptr<const GoldSet> gold,
           QcPolicy policy, std::uint64_t seed);

  /// Registers a worker under a generated id ("w0001", ...).
  std::string register_worker();
  void register_worker(const std::string& worker_id);
  bool has_worker(std::string_view worker_id) const;

  std::optional<Assignment> next_task(std::string_view worker_id, Timestamp now);
  /// Throws SubmitError when the submission is rejected; state is unchanged then.
  SubmitOutcome submit(std::uint64_t assignment_id, const Submission& submission,
                       Timestamp now);
  std::size_t expire_stale(Timestamp now, std::chrono::milliseconds ttl);

  ProgressReport progress() const;

  const ReviewSet& reviews() const { return *reviews_; }
  const GoldSet& gold() const { return *gold_; }
  const QcPolicy& policy() const { return policy_; }
  const AnnotationStore& store() const { return store_; }
  const std::vector<Assignment>& assignments() const { return assignments_; }
  const Assignment& assignment(std::uint64_t id) const;
  const WorkerState& worker(std::string_view worker_id) const;
  std::vector<WorkerState> workers() const;
  std::span<const SentenceBound> sentences(std::size_t review_index) const {
    return sentences_[review_index];
  }
  std::size_t valid_labels(std::size_t review_index) const { return valid_[review_index]; }
  bool is_gold_review(std::size_t review_index) const { return gold_flag_[review_index]; }

 private:
  struct Worker {
    WorkerState state;
    std::unordered_set<std::size_t> seen;  // review indices ever issued
    std::vector<std::size_t> unseen_gold;  // review indices
    std::size_t open = 0;
    std::size_t open_gold = 0;
  };
  using PoolKey = std::pair<std::size_t, std::size_t>;  // (valid labels, id rank)

  Worker& worker_ref(std::string_view worker_id);
  Assignment& issue(Worker& w, std::size_t review_index, bool is_gold, Timestamp now);
  std::size_t close_open(Assignment& a, AssignmentStatus to);
  void exclude(Worker& w, SubmitOutcome& outcome);
  void refresh_pool(std::size_t review_index, std::size_t old_valid);

  std::shared_ptr<const ReviewSet> reviews_;
  std::shared_ptr<const GoldSet> gold_;
  QcPolicy policy_;
  Rng rng_;
  std::vector<std::vector<SentenceBound>> sentences_;
  std::vector<bool> gold_flag_;
  std::vector<std::size_t> gold_reviews_;
  std::vector<std::size_t> id_rank_;
  std::vector<std::size_t> rank_to_index_;
  std::vector<std::size_t> valid_;
  std::vector<std::size_t> open_;
  std::set<PoolKey> pool_;  // non-gold reviews with valid + open < redundancy
  std::map<std::string, Worker, std::less<>> workers_;
  std::size_t next_worker_ = 1;
  std::vector<Assignment> assignments_;
  std::set<std::uint64_t> open_ids_;
  AnnotationStore store_;
};

}  // namespace crowdqc
