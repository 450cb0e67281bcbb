#include <doctest.h>

#include <algorithm>
#include <random>

#include <json.hpp>

#include "crowdqc/aggregate.hpp"
#include "crowdqc/simulator.hpp"
#include "support.hpp"

using namespace crowdqc;

namespace {

Annotation ann(std::string worker, ClassLabel c, SpanList spans = {}, std::string review = "r00") {
  Annotation a;
  a.worker_id = std::move(worker);
  a.review_id = std::move(review);
  a.label = c;
  a.spans = std::move(spans);
  return a;
}

std::vector<Annotation> bundle_of(std::initializer_list<ClassLabel> labels) {
  std::vector<Annotation> v;
  int i = 0;
  for (auto c : labels) v.push_back(ann("w" + std::to_string(i++), c));
  return v;
}

}  // namespace

TEST_CASE("majority vote examples") {
  using enum ClassLabel;
  CHECK(majority_vote(bundle_of({Negative, Negative, Positive})) == Negative);
  CHECK_FALSE(majority_vote(bundle_of({Negative, Positive, Other})));
  CHECK_FALSE(majority_vote(bundle_of({Negative, Positive})));
  CHECK(majority_vote(bundle_of({Other})) == Other);
  CHECK_THROWS_AS(majority_vote(std::span<const Annotation>{}), Error);
}

TEST_CASE("majority vote is permutation invariant") {
  std::mt19937_64 g(1);
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<Annotation> v;
    const int n = 1 + static_cast<int>(g() % 6);
    for (int i = 0; i < n; ++i) v.push_back(ann("w" + std::to_string(i), kAllLabels[g() % 5]));
    const auto ref = majority_vote(v);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(v.begin(), v.end(), g);
      CHECK(majority_vote(v) == ref);
    }
  }
}

TEST_CASE("merged spans") {
  LabelBundle b;
  b.review_id = "r00";
  b.annotations = {ann("a", ClassLabel::Negative, {{2, 6}}), ann("b", ClassLabel::Negative, {{2, 6}})};
  CHECK(merge_spans(b, ClassLabel::Negative) == SpanList{{2, 6}});
  b.annotations = {ann("a", ClassLabel::Negative, {{0, 5}}), ann("b", ClassLabel::Negative, {{3, 9}}),
                   ann("c", ClassLabel::Positive, {{20, 22}})};
  CHECK(merge_spans(b, ClassLabel::Negative) == SpanList{{0, 9}});
  CHECK(merge_spans(b, ClassLabel::Positive) == SpanList{{20, 22}});
  CHECK(merge_spans(b, ClassLabel::Other).empty());
}

TEST_CASE("merged spans equal the character-set union on random bundles") {
  std::mt19937_64 g(77);
  for (int iter = 0; iter < 500; ++iter) {
    LabelBundle b;
    SpanList all;
    const std::size_t len = 50;
    for (int w = 0; w < 3; ++w) {
      SpanList s;
      for (std::size_t k = 0, n = g() % 3; k < n; ++k) {
        const std::size_t a = g() % (len - 1);
        s.push_back({a, a + 1 + g() % (len - a - 1 + 1)});
      }
      s = canonicalize(s, len);
      all.insert(all.end(), s.begin(), s.end());
      b.annotations.push_back(ann("w" + std::to_string(w), ClassLabel::Positive, s));
    }
    CHECK(merge_spans(b, ClassLabel::Positive) == testing::runs(testing::coverage(all, len)));
  }
}

TEST_CASE("label distribution") {
  AnnotationStore store;
  CHECK(label_distribution(store).total() == 0);
  for (auto c : kAllLabels) CHECK(label_distribution(store)[c] == 0);

  store.add(ann("a", ClassLabel::Positive));
  store.add(ann("b", ClassLabel::Positive));
  auto gold = ann("c", ClassLabel::Negative);
  gold.is_gold = true;
  store.add(gold);
  const auto idx = store.add(ann("d", ClassLabel::Other));
  store.invalidate(idx);
  const auto d = label_distribution(store);
  CHECK(d[ClassLabel::Positive] == 2);
  CHECK(d.total() == 2);
  CHECK(d.total() == store.valid_label_count());
}

TEST_CASE("the published distribution and its majority floor") {
  Distribution d;
  d.counts = {2194, 206, 3574, 6323, 0};  // positive, neutral, negative, other, data_error
  CHECK(d.total() == 12297);
  CHECK(d.majority_share() == doctest::Approx(6323.0 / 12297));
  CHECK(std::abs(d.majority_share() - 0.5142) <= 0.0001);
  CHECK(d.majority_share() > 0.51);
}

TEST_CASE("simulated campaign without exclusions yields redundancy times reviews") {
  SyntheticConfig cfg;
  cfg.n_reviews = 100;
  cfg.gold_fraction = 0.0;
  auto corpus = generate_synthetic_corpus(cfg, 2);
  // Add a separate gold block so qualification works but the 100 reviews stay regular.
  std::vector<Review> reviews(corpus.reviews.begin(), corpus.reviews.end());
  std::vector<GoldItem> gold;
  for (int i = 0; i < 6; ++i) {
    reviews.push_back(testing::review("gold" + std::to_string(i), "Just a plain text."));
    gold.push_back({reviews.back().review_id, ClassLabel::Other, {}});
    corpus.truth.push_back({reviews.back().review_id, ClassLabel::Other, std::nullopt, 0});
  }
  corpus.reviews = ReviewSet(std::move(reviews));
  corpus.gold = GoldSet(std::move(gold), &corpus.reviews);

  std::vector<WorkerProfile> perfect(5, WorkerProfile{});
  for (std::size_t i = 0; i < perfect.size(); ++i) perfect[i].seed = i;
  Campaign final_state(std::make_shared<ReviewSet>(), std::make_shared<GoldSet>(), QcPolicy{}, 0);
  const auto report = run_campaign(corpus, perfect, QcPolicy{}, 4, &final_state);
  CHECK(report.inaccurate_excluded() + report.accurate_excluded() == 0);
  CHECK(report.distribution.total() == 300);
  CHECK(label_distribution(final_state.store()).total() == final_state.store().valid_label_count());
}

TEST_CASE("majority labels of 0.9-accurate workers match the truth on at least 95% of reviews") {
  SyntheticConfig cfg;
  cfg.n_reviews = 600;
  const auto corpus = generate_synthetic_corpus(cfg, 21);
  std::vector<WorkerProfile> crowd;
  for (std::uint64_t i = 0; i < 12; ++i) crowd.push_back(WorkerProfile{0.9, 2, 0.0, i});
  const auto report = run_campaign(corpus, crowd, QcPolicy{}, 21);
  REQUIRE(report.majority_evaluated > 0);
  CHECK(report.majority_accuracy >= 0.95);
}

TEST_CASE("export modes, ties, quarantine and round-trip") {
  testing::TempDir dir;
  const auto reviews = testing::review_set({"Way too big. Sent back.", "Nice!", "Broken text", "Meh."});
  AnnotationStore store;
  for (auto w : {"a", "b", "c"}) store.add(ann(w, ClassLabel::Negative, {{0, 12}}, "r00"));
  store.add(ann("a", ClassLabel::Positive, {{0, 5}}, "r01"));
  store.add(ann("b", ClassLabel::Other, {}, "r01"));
  store.add(ann("a", ClassLabel::DataError, {}, "r02"));
  store.add(ann("b", ClassLabel::DataError, {}, "r02"));

  ExportSummary s;
  std::vector<LabeledRow> quarantine;
  const auto per = export_rows(store, reviews, ExportMode::PerAnnotation, &s, &quarantine);
  CHECK(per.size() == 5);  // 3 + 2, data errors removed
  CHECK(quarantine.size() == 2);
  CHECK(s.quarantined == 2);
  CHECK(std::count_if(per.begin(), per.end(), [](auto& r) { return r.review_id == "r00"; }) == 3);
  for (const auto& r : per) CHECK(r.worker_id.has_value());

  ExportSummary ms;
  const auto maj = export_rows(store, reviews, ExportMode::Majority, &ms);
  REQUIRE(maj.size() == 1);
  CHECK(maj[0].review_id == "r00");
  CHECK(maj[0].label == ClassLabel::Negative);
  CHECK(maj[0].spans == SpanList{{0, 12}});
  CHECK_FALSE(maj[0].worker_id);
  CHECK(ms.tied_skipped == 1);
  CHECK(ms.tied_reviews == std::vector<std::string>{"r01"});

  const auto path = dir / "labeled.jsonl";
  const auto written = export_dataset(store, reviews, ExportMode::PerAnnotation, path, 42);
  CHECK(written.rows == 5);
  CHECK(load_labeled(path) == per);
  CHECK(load_labeled(path.string() + ".quarantine.jsonl") == quarantine);
  const auto meta = nlohmann::json::parse(testing::slurp(path.string() + ".meta.json"));
  CHECK(meta["seed"] == 42);
  CHECK(meta["mode"] == "per_annotation");

  // Row schema.
  std::istringstream first(testing::slurp(path));
  std::string line;
  std::getline(first, line);
  const auto j = nlohmann::json::parse(line);
  for (auto key : {"review_id", "worker_id", "class", "spans", "body", "caption"}) CHECK(j.contains(key));
  CHECK(j["spans"][0]["end"] == 12);

  CHECK_THROWS_AS(export_dataset(AnnotationStore{}, reviews, ExportMode::Majority, dir / "e.jsonl", 1), Error);
  CHECK(parse_export_mode("majority") == ExportMode::Majority);
  CHECK_THROWS_AS(parse_export_mode("vote"), Error);
}

TEST_CASE("bundles are in corpus order with one annotation per worker") {
  const auto reviews = testing::review_set({"one", "two", "three"});
  AnnotationStore store;
  store.add(ann("b", ClassLabel::Other, {}, "r02"));
  store.add(ann("a", ClassLabel::Other, {}, "r02"));
  store.add(ann("a", ClassLabel::Other, {}, "r00"));
  const auto bundles = make_bundles(store, reviews);
  REQUIRE(bundles.size() == 2);
  CHECK(bundles[0].review_id == "r00");
  CHECK(bundles[1].annotations.front().worker_id == "a");
  CHECK(bundles[1].majority == ClassLabel::Other);
}

TEST_CASE("spans in exported rows survive ingest with multibyte text") {
  testing::TempDir dir;
  const auto reviews = testing::review_set({"Grö\xC3\x9F" "e passt \xF0\x9F\x91\x8D super."});
  AnnotationStore store;
  store.add(ann("a", ClassLabel::Positive, {{0, 5}, {14, 20}}, "r00"));
  export_dataset(store, reviews, ExportMode::PerAnnotation, dir / "l.jsonl", 1);
  const auto rows = load_labeled(dir / "l.jsonl");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].spans == SpanList{{0, 5}, {14, 20}});
  const auto text = unicode::decode(rows[0].body);
  CHECK(text.substr(0, 5) == U"Größe");
  CHECK(text.substr(14, 6) == U"super.");
}
