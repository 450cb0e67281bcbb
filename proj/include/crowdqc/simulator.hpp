#pragma once

#include <array>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdqc/aggregate.hpp"
#include "crowdqc/corpus.hpp"
#include "crowdqc/rng.hpp"
#include "crowdqc/scheduler.hpp"

namespace crowdqc {

struct WorkerProfile {
  double class_accuracy = 1.0;  // P(true class); errors are uniform over the others
  std::size_t span_jitter = 0;  // max chars of edge noise, kept inside the cue sentence
  double span_drop = 0.0;       // P(right class, wrong sentence)
  std::uint64_t seed = 0;

  void validate() const;
};

/// One simulated answer for a review with known truth.
Submission simulate_annotation(const WorkerProfile& profile, std::u32string_view body,
                               std::span<const SentenceBound> sentences,
                               const TruthRecord& truth, Rng& rng);

struct TaskRef {
  std::uint64_t assignment_id = 0;
  std::string review_id;
};

/// Anything a simulated crowd can talk to: the campaign itself, the service
/// core, or the HTTP API.
template <class B>
concept CampaignBackend = requires(B& b, const std::string& worker, std::uint64_t id,
                                   const Submission& s, Timestamp now) {
  { b.register_worker() } -> std::convertible_to<std::string>;
  { b.next_task(worker, now) } -> std::same_as<std::optional<TaskRef>>;
  { b.submit(id, s, now) } -> std::same_as<bool>;
};

/// Drives a campaign with synthetic workers, one backend call per step.
///
/// Workers are served round-robin; a task is fetched in one step and
/// answered in the next. The run ends after a full round in which no worker
/// received a task. The clock advances one second per step, so the call
/// sequence depends only on the seed and the backend's answers. Because all
/// driver state lives here, the backend can be swapped between steps (e.g.
/// for a restarted service).
class CampaignDriver {
 public:
  CampaignDriver(const ReviewSet& reviews, const std::vector<TruthRecord>& truth,
                 std::vector<WorkerProfile> profiles, std::uint64_t seed);

  template <CampaignBackend B>
  bool step(B& backend);

  template <CampaignBackend B>
  void run(B& backend) {
    while (step(backend)) {
    }
  }

  const std::vector<std::string>& worker_ids() const { return worker_ids_; }
  const std::vector<WorkerProfile>& profiles() const { return profiles_; }
  std::size_t steps() const { return steps_; }
  std::size_t rejected() const { return rejected_; }
  bool done() const { return done_; }
  Timestamp now() const { return Timestamp(static_cast<std::int64_t>(steps_) * 1000); }

 private:
  Submission answer(std::size_t worker, const std::string& review_id) const;

  const ReviewSet* reviews_;
  std::vector<const TruthRecord*> truth_;  // parallel to reviews
  std::vector<std::vector<SentenceBound>> sentences_;
  std::vector<WorkerProfile> profiles_;
  std::uint64_t seed_;
  std::vector<std::string> worker_ids_;
  std::optional<std::pair<std::size_t, TaskRef>> pending_;
  std::size_t cursor_ = 0;
  std::size_t idle_ = 0;
  std::size_t steps_ = 0;
  std::size_t rejected_ = 0;
  bool done_ = false;
};

template <CampaignBackend B>
bool CampaignDriver::step(B& backend) {
  if (done_) return false;
  if (worker_ids_.size() < profiles_.size()) {
    worker_ids_.push_back(backend.register_worker());
    ++steps_;
    return true;
  }
  if (profiles_.empty()) {
    done_ = true;
    return false;
  }
  if (pending_) {
    const auto [worker, task] = *pending_;
    pending_.reset();
    const Timestamp t = now();
    ++steps_;
    if (!backend.submit(task.assignment_id, answer(worker, task.review_id), t)) ++rejected_;
    cursor_ = (cursor_ + 1) % profiles_.size();
    return true;
  }
  while (idle_ < profiles_.size()) {
    const std::size_t worker = cursor_;
    const Timestamp t = now();
    ++steps_;
    if (auto task = backend.next_task(worker_ids_[worker], t)) {
      pending_.emplace(worker, std::move(*task));
      idle_ = 0;
      return true;
    }
    ++idle_;
    cursor_ = (cursor_ + 1) % profiles_.size();
  }
  done_ = true;
  return false;
}

/// Backend that calls a Campaign directly.
class InProcessBackend {
 public:
  explicit InProcessBackend(Campaign& campaign) : campaign_(&campaign) {}
  std::string register_worker() { return campaign_->register_worker(); }
  std::optional<TaskRef> next_task(const std::string& worker, Timestamp now);
  bool submit(std::uint64_t id, const Submission& s, Timestamp now);

 private:
  Campaign* campaign_;
};

struct WorkerOutcome {
  std::string worker_id;
  WorkerProfile profile;
  bool accurate = false;
  WorkerState state;
};

struct CampaignReport {
  std::uint64_t seed = 0;
  std::vector<WorkerOutcome> workers;
  /// [accurate ? 0 : 1][excluded ? 1 : 0]
  std::array<std::array<std::size_t, 2>, 2> exclusion_confusion{};
  std::size_t reviews = 0;  // non-gold
  std::size_t reviews_complete = 0;
  std::vector<std::string> incomplete_reviews;
  std::size_t majority_evaluated = 0;  // reviews with at least one valid label
  std::size_t majority_correct = 0;
  std::size_t majority_tied = 0;
  double majority_accuracy = 0.0;
  Distribution distribution;
  std::size_t assignments = 0;
  std::size_t annotations = 0;
  std::size_t steps = 0;
  std::string transcript;  // where the full transcript lives

  std::size_t accurate_excluded() const { return exclusion_confusion[0][1]; }
  std::size_t inaccurate_excluded() const { return exclusion_confusion[1][1]; }
  bool complete() const { return incomplete_reviews.empty(); }
};

/// Workers at or above this class accuracy count as accurate in reports.
inline constexpr double kAccurateCutoff = 0.75;

CampaignReport make_report(const Campaign& campaign, const CampaignDriver& driver,
                           const std::vector<TruthRecord>& truth, std::uint64_t seed);

nlohmann::ordered_json to_json(const CampaignReport& report);

/// Runs a whole campaign in-process. Starvation is reported through
/// `incomplete_reviews`, never thrown.
CampaignReport run_campaign(const SyntheticCorpus& corpus,
                            const std::vector<WorkerProfile>& profiles,
                            const QcPolicy& policy, std::uint64_t seed,
                            Campaign* final_state = nullptr);

/// Checks the scheduler invariants over a finished or running campaign and
/// returns one message per violation.
std::vector<std::string> audit_campaign(const Campaign& campaign);

/// `good` workers at p=0.95 followed by `bad` workers at p=0.4.
std::vector<WorkerProfile> mixed_pool(std::size_t good, std::size_t bad, std::uint64_t seed);

}  // namespace crowdqc
