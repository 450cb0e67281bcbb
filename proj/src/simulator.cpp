#include "crowdqc/simulator.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>

#include "crowdqc/error.hpp"

namespace crowdqc {

void WorkerProfile::validate() const {
  if (!(class_accuracy >= 0.0 && class_accuracy <= 1.0) ||
      !(span_drop >= 0.0 && span_drop <= 1.0)) {
    throw Error("worker profile probabilities must lie in [0,1]");
  }
}

Submission simulate_annotation(const WorkerProfile& profile, std::u32string_view body,
                               std::span<const SentenceBound> sentences,
                               const TruthRecord& truth, Rng& rng) {
  Submission out;
  out.review_id = truth.review_id;
  if (rng.bernoulli(profile.class_accuracy)) {
    out.label = truth.true_class;
    if (!truth.cue) return out;
    const auto home = sentence_at(sentences, truth.cue->start);
    if (profile.span_drop > 0.0 && rng.bernoulli(profile.span_drop) && sentences.size() > 1) {
      std::size_t k = rng.below(sentences.size() - 1);
      if (home && k >= *home) ++k;
      out.spans.push_back(sentences[k].span());
      return out;
    }
    Span s = *truth.cue;
    if (profile.span_jitter > 0) {
      const auto j = static_cast<std::int64_t>(profile.span_jitter);
      const Span bound = home ? sentences[*home].span() : Span{0, body.size()};
      auto clip = [&](std::int64_t v) {
        return static_cast<std::size_t>(std::clamp<std::int64_t>(
            v, static_cast<std::int64_t>(bound.start), static_cast<std::int64_t>(bound.end)));
      };
      const std::size_t start = clip(static_cast<std::int64_t>(s.start) + rng.between(-j, j));
      const std::size_t end = clip(static_cast<std::int64_t>(s.end) + rng.between(-j, j));
      if (start < end) s = {start, end};
    }
    out.spans.push_back(s);
    return out;
  }
  std::size_t k = rng.below(kAllLabels.size() - 1);
  if (k >= index_of(truth.true_class)) ++k;
  out.label = kAllLabels[k];
  if (is_sentiment(out.label) && !sentences.empty()) {
    out.spans.push_back(sentences[rng.below(sentences.size())].span());
  }
  return out;
}

CampaignDriver::CampaignDriver(const ReviewSet& reviews, const std::vector<TruthRecord>& truth,
                               std::vector<WorkerProfile> profiles, std::uint64_t seed)
    : reviews_(&reviews), profiles_(std::move(profiles)), seed_(seed) {
  for (const auto& p : profiles_) p.validate();
  truth_.assign(reviews.size(), nullptr);
  for (const TruthRecord& t : truth) {
    if (auto i = reviews.index_of(t.review_id)) truth_[*i] = &t;
  }
  sentences_.reserve(reviews.size());
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    if (!truth_[i]) throw Error("no truth for review \"" + reviews[i].review_id + "\"");
    sentences_.push_back(segment_sentences(reviews.text(i)));
  }
}

Submission CampaignDriver::answer(std::size_t worker, const std::string& review_id) const {
  const std::size_t i = reviews_->require(review_id);
  Rng rng(derive_seed(derive_seed(seed_ ^ profiles_[worker].seed, worker + 1),
                      fnv1a64(review_id)));
  return simulate_annotation(profiles_[worker], reviews_->text(i), sentences_[i], *truth_[i],
                             rng);
}

std::optional<TaskRef> InProcessBackend::next_task(const std::string& worker, Timestamp now) {
  auto a = campaign_->next_task(worker, now);
  if (!a) return std::nullopt;
  return TaskRef{a->assignment_id, a->review_id};
}

bool InProcessBackend::submit(std::uint64_t id, const Submission& s, Timestamp now) {
  try {
    return campaign_->submit(id, s, now).accepted;
  } catch (const SubmitError&) {
    return false;
  }
}

CampaignReport make_report(const Campaign& campaign, const CampaignDriver& driver,
                           const std::vector<TruthRecord>& truth, std::uint64_t seed) {
  CampaignReport r;
  r.seed = seed;
  r.steps = driver.steps();
  r.transcript = "in-process (" + std::to_string(campaign.assignments().size()) + " assignments)";
  for (std::size_t i = 0; i < driver.worker_ids().size(); ++i) {
    WorkerOutcome w;
    w.worker_id = driver.worker_ids()[i];
    w.profile = driver.profiles()[i];
    w.accurate = w.profile.class_accuracy >= kAccurateCutoff;
    w.state = campaign.worker(w.worker_id);
    ++r.exclusion_confusion[w.accurate ? 0 : 1][w.state.phase == WorkerPhase::Excluded ? 1 : 0];
    r.workers.push_back(std::move(w));
  }
  std::map<std::string, ClassLabel, std::less<>> truth_by_id;
  for (const auto& t : truth) truth_by_id.emplace(t.review_id, t.true_class);

  const ReviewSet& reviews = campaign.reviews();
  const std::size_t redundancy = campaign.policy().redundancy;
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    if (campaign.is_gold_review(i)) continue;
    ++r.reviews;
    if (campaign.valid_labels(i) >= redundancy) {
      ++r.reviews_complete;
    } else {
      r.incomplete_reviews.push_back(reviews[i].review_id);
    }
  }
  for (const LabelBundle& b : make_bundles(campaign.store(), reviews)) {
    ++r.majority_evaluated;
    if (!b.majority) {
      ++r.majority_tied;
      continue;
    }
    auto it = truth_by_id.find(b.review_id);
    if (it != truth_by_id.end() && it->second == *b.majority) ++r.majority_correct;
  }
  r.majority_accuracy = r.majority_evaluated
                            ? static_cast<double>(r.majority_correct) /
                                  static_cast<double>(r.majority_evaluated)
                            : 0.0;
  r.distribution = label_distribution(campaign.store());
  r.assignments = campaign.assignments().size();
  r.annotations = campaign.store().size();
  return r;
}

nlohmann::ordered_json to_json(const CampaignReport& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["reviews"] = r.reviews;
  j["reviews_complete"] = r.reviews_complete;
  j["incomplete_reviews"] = r.incomplete_reviews;
  j["majority_evaluated"] = r.majority_evaluated;
  j["majority_correct"] = r.majority_correct;
  j["majority_tied"] = r.majority_tied;
  j["majority_accuracy"] = r.majority_accuracy;
  nlohmann::ordered_json conf;
  conf["accurate_kept"] = r.exclusion_confusion[0][0];
  conf["accurate_excluded"] = r.exclusion_confusion[0][1];
  conf["inaccurate_kept"] = r.exclusion_confusion[1][0];
  conf["inaccurate_excluded"] = r.exclusion_confusion[1][1];
  j["exclusion_confusion"] = conf;
  nlohmann::ordered_json dist;
  for (ClassLabel c : kAllLabels) dist[std::string(to_string(c))] = r.distribution[c];
  j["distribution"] = dist;
  nlohmann::ordered_json workers = nlohmann::ordered_json::array();
  for (const WorkerOutcome& w : r.workers) {
    workers.push_back({{"worker_id", w.worker_id},
                       {"class_accuracy", w.profile.class_accuracy},
                       {"accurate", w.accurate},
                       {"phase", to_string(w.state.phase)},
                       {"gold_seen", w.state.gold_seen},
                       {"gold_passed", w.state.gold_passed},
                       {"tasks_completed", w.state.tasks_completed}});
  }
  j["workers"] = workers;
  j["assignments"] = r.assignments;
  j["annotations"] = r.annotations;
  j["steps"] = r.steps;
  j["transcript"] = r.transcript;
  return j;
}

CampaignReport run_campaign(const SyntheticCorpus& corpus,
                            const std::vector<WorkerProfile>& profiles,
                            const QcPolicy& policy, std::uint64_t seed,
                            Campaign* final_state) {
  auto reviews = std::make_shared<const ReviewSet>(corpus.reviews);
  auto gold = std::make_shared<const GoldSet>(corpus.gold);
  Campaign campaign(reviews, gold, policy, seed);
  CampaignDriver driver(*reviews, corpus.truth, profiles, seed);
  InProcessBackend backend(campaign);
  driver.run(backend);
  CampaignReport report = make_report(campaign, driver, corpus.truth, seed);
  if (final_state) *final_state = std::move(campaign);
  return report;
}

std::vector<std::string> audit_campaign(const Campaign& campaign) {
  std::vector<std::string> v;
  const ReviewSet& reviews = campaign.reviews();
  const QcPolicy& policy = campaign.policy();
  const AnnotationStore& store = campaign.store();

  std::set<std::pair<std::string, std::string>> pairs;
  std::map<std::string, std::size_t> worked;
  for (const Assignment& a : campaign.assignments()) {
    if (!pairs.emplace(a.worker_id, a.review_id).second) {
      v.push_back("worker " + a.worker_id + " received review " + a.review_id + " twice");
    }
    if (a.status == AssignmentStatus::Submitted || a.status == AssignmentStatus::Invalidated ||
        a.status == AssignmentStatus::Open) {
      ++worked[a.worker_id];
    }
    if (a.is_gold != campaign.gold().contains(a.review_id)) {
      v.push_back("assignment " + std::to_string(a.assignment_id) + " has a wrong gold flag");
    }
  }
  for (const auto& [worker, n] : worked) {
    if (n > policy.worker_cap) {
      v.push_back("worker " + worker + " worked " + std::to_string(n) + " tasks over the cap");
    }
  }
  for (const WorkerState& w : campaign.workers()) {
    if (w.tasks_completed > policy.worker_cap) {
      v.push_back("worker " + w.worker_id + " completed more tasks than the cap");
    }
    if (!(w.gold_passed <= w.gold_seen && w.gold_seen <= w.tasks_completed)) {
      v.push_back("worker " + w.worker_id + " has inconsistent counters");
    }
  }
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    const auto labels = store.valid_labels(reviews[i].review_id);
    if (campaign.is_gold_review(i)) {
      if (!labels.empty()) v.push_back("gold review " + reviews[i].review_id + " has labels");
      continue;
    }
    if (labels.size() != campaign.valid_labels(i)) {
      v.push_back("label count cache mismatch for " + reviews[i].review_id);
    }
    if (labels.size() > policy.redundancy) {
      v.push_back("review " + reviews[i].review_id + " has " + std::to_string(labels.size()) +
                  " valid labels");
    }
    std::set<std::string> workers;
    for (const Annotation* a : labels) {
      workers.insert(a->worker_id);
      if (campaign.worker(a->worker_id).phase == WorkerPhase::Excluded) {
        v.push_back("excluded worker " + a->worker_id + " still holds a valid label on " +
                    reviews[i].review_id);
      }
    }
    if (workers.size() != labels.size()) {
      v.push_back("review " + reviews[i].review_id + " has duplicate workers");
    }
  }
  if (label_distribution(store).total() != store.valid_label_count()) {
    v.push_back("distribution total differs from valid label count");
  }
  return v;
}

std::vector<WorkerProfile> mixed_pool(std::size_t good, std::size_t bad, std::uint64_t seed) {
  std::vector<WorkerProfile> out;
  for (std::size_t i = 0; i < good; ++i) out.push_back({0.95, 2, 0.0, derive_seed(seed, i)});
  for (std::size_t i = 0; i < bad; ++i) out.push_back({0.4, 4, 0.2, derive_seed(seed, 1000 + i)});
  return out;
}

}  // namespace crowdqc
