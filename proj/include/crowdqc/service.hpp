#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crowdqc/aggregate.hpp"
#include "crowdqc/config.hpp"
#include "crowdqc/event_log.hpp"
#include "crowdqc/scheduler.hpp"
#include "crowdqc/simulator.hpp"

namespace crowdqc {

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Markdown shown to every new worker.
std::string_view instructions_markdown();
/// Short help text for one class button.
std::string_view class_help(ClassLabel c);

nlohmann::ordered_json to_json(const ProgressReport& p);
nlohmann::ordered_json to_json(const WorkerState& w);
nlohmann::ordered_json to_json(const Distribution& d);
nlohmann::ordered_json to_json(const ExportSummary& s);

/// A campaign with durable state.
///
/// Every mutation is appended to `events.log` under the data directory
/// before the call returns. Construction replays an existing log: commands
/// (registrations, assignments, submissions, expiry sweeps) are re-executed
/// and the derived verdict/exclusion records are checked against the
/// re-executed outcome. Derived records lost to a crash after their command
/// was written are re-appended.
///
/// All methods are thread-safe; mutations are serialized and reads see a
/// consistent snapshot.
class Service {
 public:
  using Clock = std::function<Timestamp()>;
  static Timestamp system_now();

  /// Loads the corpus and gold set named in `config`.
  explicit Service(CampaignConfig config, Clock clock = &Service::system_now);
  Service(CampaignConfig config, std::shared_ptr<const ReviewSet> reviews,
          std::shared_ptr<const GoldSet> gold, Clock clock = &Service::system_now);

  std::string register_worker(std::optional<Timestamp> now = std::nullopt);
  /// Runs the expiry sweep, then asks the scheduler. Throws NotFoundError for
  /// an unknown worker.
  std::optional<Assignment> next_task(std::string_view worker_id,
                                      std::optional<Timestamp> now = std::nullopt);
  /// Throws SubmitError on rejection; nothing is logged then.
  SubmitOutcome label(std::uint64_t assignment_id, const Submission& submission,
                      std::optional<Timestamp> now = std::nullopt);

  ProgressReport progress() const;
  std::vector<WorkerState> workers() const;
  Distribution distribution() const;
  const Review& review(const std::string& review_id) const;
  /// Writes `labeled.jsonl` (plus quarantine and meta files) to `path`, or into
  /// the data directory by default.
  ExportSummary export_labels(ExportMode mode,
                              std::optional<std::filesystem::path> path = std::nullopt) const;
  std::filesystem::path default_export_path() const { return config_.data_dir / "labeled.jsonl"; }

  /// Runs `f(const Campaign&)` under the read lock.
  template <class F>
  decltype(auto) inspect(F&& f) const {
    std::shared_lock lock(mutex_);
    return std::forward<F>(f)(*campaign_);
  }

  const CampaignConfig& config() const { return config_; }
  const ReviewSet& reviews() const { return *reviews_; }
  const std::vector<std::string>& replay_warnings() const { return warnings_; }
  std::size_t replayed_events() const { return replayed_; }
  std::uint64_t last_seq() const;

 private:
  using Data = std::pair<std::shared_ptr<const ReviewSet>, std::shared_ptr<const GoldSet>>;
  static Data load_data(const CampaignConfig& config);
  Service(CampaignConfig config, Data data, Clock clock);

  void replay();
  std::vector<EventRecord> apply_submit(Timestamp ts, std::uint64_t id, const Submission& s,
                                        SubmitOutcome* outcome);
  void commit(std::vector<EventRecord>& events);
  void check_usable() const;

  CampaignConfig config_;
  Clock clock_;
  std::shared_ptr<const ReviewSet> reviews_;
  std::shared_ptr<const GoldSet> gold_;
  std::unique_ptr<Campaign> campaign_;
  std::unique_ptr<EventLog> log_;
  std::vector<std::string> warnings_;
  std::size_t replayed_ = 0;
  bool failed_ = false;
  mutable std::shared_mutex mutex_;
};

/// CampaignBackend over a Service, passing the driver's clock through.
class ServiceBackend {
 public:
  explicit ServiceBackend(Service& service) : service_(&service) {}
  std::string register_worker() { return service_->register_worker(now_); }
  std::optional<TaskRef> next_task(const std::string& worker, Timestamp now);
  bool submit(std::uint64_t id, const Submission& s, Timestamp now);

 private:
  Service* service_;
  std::optional<Timestamp> now_ = Timestamp(0);
};

}  // namespace crowdqc
