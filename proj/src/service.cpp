#include "crowdqc/service.hpp"

#include <chrono>
#include <iostream>
#include <mutex>

#include "crowdqc/json_io.hpp"

namespace crowdqc {

using ojson = nlohmann::ordered_json;

std::string_view instructions_markdown() {
  return R"(# Review labeling

Read the product image, the caption and the review text, then pick one class:

- **positive**: the review praises the product.
- **neutral**: the review describes the product without a clear opinion.
- **negative**: the review criticizes the product.
- **other**: the text is off topic, about delivery or the seller, or mixes opinions without
  a dominant one.
- **data_error**: the review does not match the product shown, or the text is broken.

For positive, neutral and negative you must highlight at least one passage of the review
that justifies your choice. Highlight the words that carry the opinion, not the whole review.

The first tasks are test questions. Further tasks unlock once you pass them, and test
questions keep appearing from time to time.
)";
}

std::string_view class_help(ClassLabel c) {
  switch (c) {
    case ClassLabel::Positive: return "Praises the product. Highlight the reason.";
    case ClassLabel::Neutral: return "Describes the product without an opinion. Highlight it.";
    case ClassLabel::Negative: return "Criticizes the product. Highlight the reason.";
    case ClassLabel::Other: return "Off topic, shipping, seller, or no dominant opinion.";
    case ClassLabel::DataError: return "Text does not match the product or is broken.";
  }
  return "";
}

ojson to_json(const ProgressReport& p) {
  ojson phases = ojson::object();
  for (auto ph : {WorkerPhase::Qualifying, WorkerPhase::Active, WorkerPhase::Excluded}) {
    phases[std::string(to_string(ph))] = p.workers_by_phase[static_cast<std::size_t>(ph)];
  }
  return ojson{{"corpus_size", p.corpus_size},
               {"gold_reviews", p.gold_reviews},
               {"reviews_complete", p.reviews_complete},
               {"reviews_pending", p.reviews_pending},
               {"open_assignments", p.open_assignments},
               {"workers_by_phase", std::move(phases)},
               {"gold_pass_histogram", p.gold_pass_histogram}};
}

ojson to_json(const WorkerState& w) {
  return ojson{{"worker_id", w.worker_id},
               {"phase", to_string(w.phase)},
               {"gold_seen", w.gold_seen},
               {"gold_passed", w.gold_passed},
               {"gold_error_rate", w.gold_error_rate()},
               {"tasks_completed", w.tasks_completed}};
}

ojson to_json(const Distribution& d) {
  ojson counts = ojson::object();
  for (auto c : kAllLabels) counts[std::string(to_string(c))] = d[c];
  return ojson{{"counts", std::move(counts)}, {"total", d.total()}};
}

ojson to_json(const ExportSummary& s) {
  return ojson{{"rows", s.rows}, {"tied_skipped", s.tied_skipped}, {"quarantined", s.quarantined}};
}

namespace {

EventRecord event(EventKind kind, Timestamp ts, ojson payload) {
  EventRecord e;
  e.kind = kind;
  e.timestamp = ts;
  e.payload = std::move(payload);
  return e;
}

ojson assigned_payload(const Assignment& a) {
  return ojson{{"worker_id", a.worker_id},
               {"assignment_id", a.assignment_id},
               {"review_id", a.review_id},
               {"is_gold", a.is_gold}};
}

ojson submission_payload(std::uint64_t id, const Submission& s) {
  ojson j{{"assignment_id", id}, {"class", to_string(s.label)}, {"spans", spans_to_json(s.spans)}};
  if (s.review_id) j["review_id"] = *s.review_id;
  return j;
}

Submission submission_from(const ojson& j) {
  Submission s;
  s.label = parse_label(j.at("class").get<std::string>());
  s.spans = spans_from_json(j.at("spans"));
  if (j.contains("review_id")) s.review_id = j["review_id"].get<std::string>();
  return s;
}

ojson expired_payload(std::chrono::milliseconds ttl, std::size_t count) {
  return ojson{{"ttl_ms", ttl.count()}, {"count", count}};
}

}  // namespace

Timestamp Service::system_now() {
  return std::chrono::duration_cast<Timestamp>(
      std::chrono::system_clock::now().time_since_epoch());
}

Service::Data Service::load_data(const CampaignConfig& config) {
  config.validate();
  auto reviews =
      std::make_shared<const ReviewSet>(load_reviews(config.corpus, format_for(config.corpus)));
  auto gold = std::make_shared<const GoldSet>(load_gold(config.gold, reviews.get()));
  return {std::move(reviews), std::move(gold)};
}

Service::Service(CampaignConfig config, Clock clock) : Service(config, load_data(config), std::move(clock)) {}

Service::Service(CampaignConfig config, Data data, Clock clock)
    : Service(std::move(config), std::move(data.first), std::move(data.second), std::move(clock)) {}

Service::Service(CampaignConfig config, std::shared_ptr<const ReviewSet> reviews,
                 std::shared_ptr<const GoldSet> gold, Clock clock)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      reviews_(std::move(reviews)),
      gold_(std::move(gold)) {
  config_.policy.validate();
  if (config_.ttl.count() <= 0) throw Error("ttl must be positive");
  campaign_ = std::make_unique<Campaign>(reviews_, gold_, config_.policy, config_.seed);
  replay();
}

void Service::replay() {
  const auto path = config_.event_log_path();
  LoadedLog loaded = read_event_log(path);
  if (loaded.warning) {
    warnings_.push_back(*loaded.warning);
  }
  auto& recs = loaded.records;
  std::vector<EventRecord> missing;
  std::size_t i = 0;
  while (i < recs.size()) {
    const EventRecord& rec = recs[i];
    if (!is_command(rec.kind)) {
      throw CorruptLogError(rec.seq, std::string(to_string(rec.kind)) + " without a command");
    }
    std::vector<EventRecord> produced;
    try {
      switch (rec.kind) {
        case EventKind::WorkerRegistered: {
          const auto id = rec.payload.at("worker_id").get<std::string>();
          campaign_->register_worker(id);
          produced.push_back(event(rec.kind, rec.timestamp, ojson{{"worker_id", id}}));
          break;
        }
        case EventKind::Assigned: {
          const auto worker = rec.payload.at("worker_id").get<std::string>();
          auto a = campaign_->next_task(worker, rec.timestamp);
          if (!a) throw CorruptLogError(rec.seq, "scheduler issued no task on replay");
          produced.push_back(event(rec.kind, rec.timestamp, assigned_payload(*a)));
          break;
        }
        case EventKind::Submitted: {
          const auto id = rec.payload.at("assignment_id").get<std::uint64_t>();
          produced = apply_submit(rec.timestamp, id, submission_from(rec.payload), nullptr);
          break;
        }
        case EventKind::Expired: {
          const std::chrono::milliseconds ttl(rec.payload.at("ttl_ms").get<std::int64_t>());
          const auto n = campaign_->expire_stale(rec.timestamp, ttl);
          produced.push_back(event(rec.kind, rec.timestamp, expired_payload(ttl, n)));
          break;
        }
        default:
          break;
      }
    } catch (const CorruptLogError&) {
      throw;
    } catch (const std::exception& e) {
      throw CorruptLogError(rec.seq, e.what());
    }
    if (produced.front().payload != rec.payload) {
      throw CorruptLogError(rec.seq, "replayed " + std::string(to_string(rec.kind)) +
                                         " differs: " + produced.front().payload.dump());
    }
    ++i;
    for (std::size_t d = 1; d < produced.size(); ++d) {
      if (i == recs.size()) {
        missing.push_back(produced[d]);
        continue;
      }
      const EventRecord& next = recs[i];
      if (next.kind != produced[d].kind || next.payload != produced[d].payload) {
        throw CorruptLogError(next.seq, "expected " + std::string(to_string(produced[d].kind)) +
                                            " " + produced[d].payload.dump());
      }
      ++i;
    }
  }
  replayed_ = recs.size();
  const std::uint64_t next = recs.empty() ? 1 : recs.back().seq + 1;
  log_ = std::make_unique<EventLog>(path, next, loaded.valid_bytes);
  if (!missing.empty()) {
    warnings_.push_back("re-appended " + std::to_string(missing.size()) + " derived event(s)");
    log_->append(missing);
  }
}

std::vector<EventRecord> Service::apply_submit(Timestamp ts, std::uint64_t id,
                                               const Submission& s, SubmitOutcome* outcome) {
  SubmitOutcome out = campaign_->submit(id, s, ts);
  std::vector<EventRecord> events;
  events.push_back(event(EventKind::Submitted, ts, submission_payload(id, s)));
  const Assignment& a = campaign_->assignment(id);
  if (out.verdict) {
    ojson v{{"assignment_id", id},
            {"worker_id", a.worker_id},
            {"class_match", out.verdict->class_match},
            {"span_ratio", out.verdict->span_score ? ojson(out.verdict->span_score->ratio)
                                                   : ojson(nullptr)},
            {"passed", out.verdict->passed}};
    events.push_back(event(EventKind::Verdict, ts, std::move(v)));
  }
  if (out.worker_excluded) {
    events.push_back(event(EventKind::Excluded, ts,
                           ojson{{"worker_id", a.worker_id},
                                 {"purged", out.purged},
                                 {"expired_open", out.expired_open}}));
  }
  if (outcome) *outcome = out;
  return events;
}

void Service::commit(std::vector<EventRecord>& events) {
  try {
    log_->append(events);
  } catch (...) {
    // Memory is ahead of the log now; refuse further work.
    failed_ = true;
    throw;
  }
}

void Service::check_usable() const {
  if (failed_) throw Error("service stopped after an event log write failure; restart to replay");
}

std::string Service::register_worker(std::optional<Timestamp> now) {
  std::unique_lock lock(mutex_);
  check_usable();
  const Timestamp ts = now.value_or(clock_());
  std::string id = campaign_->register_worker();
  std::vector<EventRecord> events{
      event(EventKind::WorkerRegistered, ts, ojson{{"worker_id", id}})};
  commit(events);
  return id;
}

std::optional<Assignment> Service::next_task(std::string_view worker_id,
                                             std::optional<Timestamp> now) {
  std::unique_lock lock(mutex_);
  check_usable();
  if (!campaign_->has_worker(worker_id)) {
    throw NotFoundError("unknown worker \"" + std::string(worker_id) + "\"");
  }
  const Timestamp ts = now.value_or(clock_());
  std::vector<EventRecord> events;
  if (const auto n = campaign_->expire_stale(ts, config_.ttl); n > 0) {
    events.push_back(event(EventKind::Expired, ts, expired_payload(config_.ttl, n)));
  }
  auto a = campaign_->next_task(worker_id, ts);
  if (a) events.push_back(event(EventKind::Assigned, ts, assigned_payload(*a)));
  commit(events);
  return a;
}

SubmitOutcome Service::label(std::uint64_t assignment_id, const Submission& submission,
                             std::optional<Timestamp> now) {
  std::unique_lock lock(mutex_);
  check_usable();
  const Timestamp ts = now.value_or(clock_());
  SubmitOutcome out;
  auto events = apply_submit(ts, assignment_id, submission, &out);
  commit(events);
  return out;
}

ProgressReport Service::progress() const {
  std::shared_lock lock(mutex_);
  return campaign_->progress();
}

std::vector<WorkerState> Service::workers() const {
  std::shared_lock lock(mutex_);
  return campaign_->workers();
}

Distribution Service::distribution() const {
  std::shared_lock lock(mutex_);
  return label_distribution(campaign_->store());
}

const Review& Service::review(const std::string& review_id) const {
  const auto i = reviews_->index_of(review_id);
  if (!i) throw NotFoundError("unknown review_id \"" + review_id + "\"");
  return (*reviews_)[*i];
}

ExportSummary Service::export_labels(ExportMode mode,
                                     std::optional<std::filesystem::path> path) const {
  AnnotationStore snapshot;
  {
    std::shared_lock lock(mutex_);
    snapshot = campaign_->store();
  }
  const auto out = path.value_or(default_export_path());
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  return export_dataset(snapshot, *reviews_, mode, out, config_.seed);
}

std::uint64_t Service::last_seq() const {
  std::shared_lock lock(mutex_);
  return log_->next_seq() - 1;
}

std::optional<TaskRef> ServiceBackend::next_task(const std::string& worker, Timestamp now) {
  now_ = now;
  auto a = service_->next_task(worker, now);
  if (!a) return std::nullopt;
  return TaskRef{a->assignment_id, a->review_id};
}

bool ServiceBackend::submit(std::uint64_t id, const Submission& s, Timestamp now) {
  now_ = now;
  try {
    return service_->label(id, s, now).accepted;
  } catch (const SubmitError&) {
    return false;
  }
}

}  // namespace crowdqc
