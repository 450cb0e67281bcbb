#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "crowdqc/baseline/classifier.hpp"
#include "crowdqc/baseline/datasets.hpp"
#include "crowdqc/baseline/metrics.hpp"
#include "crowdqc/rng.hpp"
#include "support.hpp"

using namespace crowdqc;
using namespace crowdqc::baseline;

namespace {

Example ex(std::string text, Target label, std::string group = "") {
  Example e;
  e.group = group.empty() ? text : std::move(group);
  e.text = std::move(text);
  e.label = label;
  return e;
}

// Two clusters of words; each row draws only from its class vocabulary.
std::vector<Example> separable_rows(std::size_t n, std::uint64_t seed) {
  const std::vector<std::string> pos = {"great", "love", "perfect", "comfy", "nice"};
  const std::vector<std::string> neg = {"broken", "tiny", "awful", "returned", "torn"};
  Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_pos = i % 2 == 0;
    const auto& words = is_pos ? pos : neg;
    std::string text;
    for (int k = 0; k < 4; ++k) text += words[rng.below(words.size())] + " ";
    out.push_back(ex(text, is_pos ? Target::Positive : Target::Negative, "g" + std::to_string(i)));
  }
  return out;
}

// Perceptron on bag-of-words indicators; true when it reaches zero training errors.
bool perceptron_separates(const std::vector<Example>& rows) {
  std::map<std::string, double> w;
  double bias = 0;
  for (int epoch = 0; epoch < 100; ++epoch) {
    std::size_t errors = 0;
    for (const auto& r : rows) {
      const double y = r.label == Target::Positive ? 1.0 : -1.0;
      double s = bias;
      for (const auto& t : preprocess(r.text)) s += w[t];
      if (y * s <= 0) {
        ++errors;
        for (const auto& t : preprocess(r.text)) w[t] += y;
        bias += y;
      }
    }
    if (errors == 0) return true;
  }
  return false;
}

ClassifierConfig small_config() {
  ClassifierConfig c;
  c.dim = 16;
  c.epochs = 10;
  c.word_ngrams = 2;
  c.hash_buckets = 1 << 16;
  c.learning_rate = 0.5;
  return c;
}

}  // namespace

TEST_CASE("preprocessing lowercases and strips punctuation") {
  CHECK(preprocess("Way too BIG!!") == std::vector<std::string>{"way", "too", "big"});
  const std::vector<std::pair<std::string, std::vector<std::string>>> table = {
      {"", {}},
      {"...!?", {}},
      {"don't", {"don", "t"}},
      {"Größe: 42,5", {"größe", "42", "5"}},
      {"  spaced\tout\n", {"spaced", "out"}},
      {"¿Qué?", {"qué"}},
      {"a-b/c", {"a", "b", "c"}},
  };
  for (const auto& [in, out] : table) {
    CAPTURE(in);
    CHECK(preprocess(in) == out);
  }
}

TEST_CASE("FNV-1a-64 test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(feature_bucket("foobar", 1000) == 0x85944171f73967e8ULL % 1000);
}

TEST_CASE("word n-gram feature counts") {
  FeatureConfig c{2, 1 << 20, std::nullopt};
  CHECK(featurize(std::vector<std::string>{"a", "b"}, c).size() == 3);
  c.word_ngrams = 1;
  CHECK(featurize(std::vector<std::string>{"a", "b", "c"}, c).size() == 3);
  c.word_ngrams = 3;
  CHECK(featurize(std::vector<std::string>{"too", "big"}, c).size() == 3);
  CHECK(featurize(std::vector<std::string>{}, c).empty());
}

TEST_CASE("hashed features equal the brute-force n-gram multiset") {
  Rng rng(4);
  const std::vector<std::string> vocab = {"a", "bb", "ö", "x", "yy", "</s>"};
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<std::string> tokens;
    for (std::size_t k = 0, n = rng.below(8); k < n; ++k) tokens.push_back(vocab[rng.below(vocab.size())]);
    const std::size_t ngrams = 1 + rng.below(4);
    const std::uint64_t buckets = 97;
    std::multiset<std::uint64_t> expected;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      for (std::size_t len = 1; len <= ngrams && i + len <= tokens.size(); ++len) {
        std::string key;
        for (std::size_t j = i; j < i + len; ++j) key += (j > i ? "\xE2\x96\x81" : "") + tokens[j];
        expected.insert(fnv1a64(key) % buckets);
      }
    }
    const auto got = featurize(tokens, FeatureConfig{ngrams, buckets, std::nullopt});
    CHECK(std::multiset<std::uint64_t>(got.begin(), got.end()) == expected);
  }
}

TEST_CASE("subword features") {
  FeatureConfig c{1, 1 << 20, SubwordRange{3, 3}};
  // "<ab>" has trigrams "<ab" and "ab>".
  const auto f = featurize(std::vector<std::string>{"ab"}, c);
  REQUIRE(f.size() == 3);
  CHECK(f[1] == feature_bucket("<ab", c.hash_buckets));
  CHECK(f[2] == feature_bucket("ab>", c.hash_buckets));
  // Multibyte letters count as one character each.
  CHECK(featurize(std::vector<std::string>{"öä"}, c).size() == 3);
  CHECK(featurize(std::vector<std::string>{"ö"}, c).size() == 1);  // "<ö>" is the whole word
  CHECK(featurize(std::vector<std::string>{"</s>"}, c).size() == 1);
}

TEST_CASE("example tokens put the caption before the separator") {
  Example e;
  e.caption = "Nice Shoes";
  e.text = "too small";
  CHECK(example_tokens(e) == std::vector<std::string>{"nice", "shoes", "</s>", "too", "small"});
  e.caption.clear();
  CHECK(example_tokens(e) == std::vector<std::string>{"too", "small"});
}

TEST_CASE("softmax sums to one and zeroes masked classes") {
  Rng rng(2);
  for (int iter = 0; iter < 200; ++iter) {
    ClassScores<double> logits;
    for (int c = 0; c < 4; ++c) logits(c) = (rng.uniform() - 0.5) * 60;
    ClassMask mask{true, rng.below(2) == 0, true, rng.below(2) == 0};
    const auto p = softmax(logits, mask);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
    for (int c = 0; c < 4; ++c) {
      if (!mask[static_cast<std::size_t>(c)]) CHECK(p(c) == 0.0);
      CHECK(p(c) >= 0.0);
    }
  }
}

TEST_CASE("analytic gradients match central differences") {
  CHECK(testing::gradient_check(1) <= 1e-4);
  CHECK(testing::gradient_check(2) <= 1e-4);
}

TEST_CASE("a single training class is always predicted") {
  std::vector<Example> rows = {ex("alpha beta", Target::Neutral), ex("gamma", Target::Neutral),
                               ex("delta epsilon", Target::Neutral)};
  TrainingLog log;
  const auto model = train(rows, small_config(), &log);
  CHECK(model.predict(ex("anything else entirely", Target::Other)) == Target::Neutral);
  CHECK(model.predict(ex("", Target::Other)) == Target::Neutral);
  CHECK(log.warnings.size() == 3);
}

TEST_CASE("a linearly separable toy set is fit perfectly") {
  const auto rows = separable_rows(200, 7);
  REQUIRE(perceptron_separates(rows));
  const auto model = train(rows, small_config());
  const auto report = evaluate(model, rows);
  CHECK(report.accuracy == 1.0);
}

TEST_CASE("training is deterministic and the epoch loss does not rise") {
  const auto rows = separable_rows(200, 8);
  TrainingLog la, lb;
  const auto a = train(rows, small_config(), &la);
  const auto b = train(rows, small_config(), &lb);
  CHECK(a == b);
  CHECK(la.epoch_loss == lb.epoch_loss);
  REQUIRE(la.epoch_loss.size() == 10);
  for (std::size_t i = 1; i < la.epoch_loss.size(); ++i) CHECK(la.epoch_loss[i] <= la.epoch_loss[i - 1] + 1e-6);
  auto other = small_config();
  other.seed = 99;
  CHECK_FALSE(train(rows, other) == a);
}

TEST_CASE("metrics from a confusion matrix") {
  SUBCASE("perfect predictions") {
    ConfusionMatrix m = ConfusionMatrix::Zero(3, 3);
    m(0, 0) = 4;
    m(1, 1) = 2;
    m(2, 2) = 9;
    const auto r = metrics_from_confusion(m);
    CHECK(r.accuracy == 1.0);
    CHECK(r.weighted.f1 == 1.0);
    CHECK(r.weighted.precision == 1.0);
  }
  SUBCASE("two classes") {
    ConfusionMatrix m(2, 2);
    m << 8, 2, 1, 9;
    const auto r = metrics_from_confusion(m);
    CHECK(r.per_class[0].precision == doctest::Approx(8.0 / 9));
    CHECK(r.per_class[0].recall == doctest::Approx(0.8));
    CHECK(r.per_class[0].f1 == doctest::Approx(2 * (8.0 / 9) * 0.8 / (8.0 / 9 + 0.8)));
    CHECK(r.per_class[0].f1 == doctest::Approx(0.842).epsilon(0.001));
    // Weighted average recomputed by hand.
    double wp = 0, wr = 0, wf = 0;
    for (const auto& c : r.per_class) {
      wp += c.precision * static_cast<double>(c.support) / 20;
      wr += c.recall * static_cast<double>(c.support) / 20;
      wf += c.f1 * static_cast<double>(c.support) / 20;
    }
    CHECK(r.weighted.precision == doctest::Approx(wp));
    CHECK(r.weighted.recall == doctest::Approx(wr));
    CHECK(r.weighted.f1 == doctest::Approx(wf));
    const auto w = weighted_average(r.per_class);
    CHECK(w.f1 == doctest::Approx(r.weighted.f1));
    CHECK(r.weighted.support == 20);
  }
  SUBCASE("predicting the majority on the published distribution") {
    // Classes: other, positive, neutral, negative; everything predicted as other.
    ConfusionMatrix m = ConfusionMatrix::Zero(4, 4);
    m(0, 0) = 6323;
    m(1, 0) = 2194;
    m(2, 0) = 206;
    m(3, 0) = 3574;
    const auto r = metrics_from_confusion(m);
    CHECK(r.accuracy == doctest::Approx(6323.0 / 12297));
    CHECK(std::abs(r.accuracy - 0.514) < 0.001);
    CHECK(r.weighted.recall == doctest::Approx(r.accuracy));
    CHECK(r.per_class[1].precision == 0.0);
    CHECK(r.per_class[1].f1 == 0.0);
  }
  SUBCASE("classes without support are left out of the average") {
    ConfusionMatrix m = ConfusionMatrix::Zero(3, 3);
    m(0, 0) = 5;
    m(1, 1) = 5;
    m(0, 2) = 0;
    const auto r = metrics_from_confusion(m);
    CHECK(r.per_class[2].support == 0);
    CHECK(r.weighted.f1 == 1.0);
  }
  CHECK_THROWS_AS(evaluate(Model(small_config()), std::vector<Example>{}), Error);
}

TEST_CASE("evaluation on examples uses all four targets") {
  std::vector<Example> rows = {ex("a", Target::Other), ex("b", Target::Positive)};
  const std::vector<Target> pred = {Target::Other, Target::Negative};
  const auto r = evaluate_predictions(rows, pred);
  CHECK(r.class_names == target_names());
  CHECK(r.accuracy == 0.5);
  CHECK(r.confusion(1, 3) == 1);
}

TEST_CASE("80/20 split of balanced rows") {
  std::vector<Example> rows;
  for (int i = 0; i < 100; ++i) {
    rows.push_back(ex("t" + std::to_string(i), static_cast<Target>(i % 4), "g" + std::to_string(i)));
  }
  const auto s = split_80_20(rows, 42);
  CHECK(s.train.size() + s.test.size() == 100);
  std::array<int, 4> test_per{};
  for (const auto& e : s.test) ++test_per[index_of(e.label)];
  for (int n : test_per) CHECK(std::abs(n - 5) <= 1);
  CHECK(std::abs(static_cast<int>(s.test.size()) - 20) <= 4);
  CHECK(s.warnings.empty());
  const auto again = split_80_20(rows, 42);
  CHECK(again.test.size() == s.test.size());
  for (std::size_t i = 0; i < s.test.size(); ++i) CHECK(again.test[i].text == s.test[i].text);
}

TEST_CASE("split keeps groups together and partitions the rows") {
  Rng rng(3);
  for (int iter = 0; iter < 30; ++iter) {
    std::vector<Example> rows;
    const std::size_t n = 20 + rng.below(80);
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back(ex("row" + std::to_string(i), static_cast<Target>(rng.below(4)),
                        "g" + std::to_string(rng.below(n / 3 + 1))));
    }
    const auto s = split_80_20(rows, static_cast<std::uint64_t>(iter));
    std::set<std::string> train_groups, test_groups, texts;
    for (const auto& e : s.train) train_groups.insert(e.group), texts.insert(e.text);
    for (const auto& e : s.test) test_groups.insert(e.group), texts.insert(e.text);
    for (const auto& g : test_groups) CHECK(train_groups.count(g) == 0);
    CHECK(texts.size() == n);
    CHECK(s.train.size() + s.test.size() == n);
  }
}

TEST_CASE("split edge cases") {
  std::vector<Example> rows;
  for (int i = 0; i < 10; ++i) rows.push_back(ex("o" + std::to_string(i), Target::Other));
  rows.push_back(ex("lonely", Target::Neutral));
  const auto s = split_80_20(rows, 1);
  CHECK(std::any_of(s.train.begin(), s.train.end(), [](auto& e) { return e.label == Target::Neutral; }));
  CHECK(std::none_of(s.test.begin(), s.test.end(), [](auto& e) { return e.label == Target::Neutral; }));
  CHECK(s.warnings.size() == 1);
  rows.resize(4);
  CHECK_THROWS_AS(split_80_20(rows, 1), Error);
}

TEST_CASE("span datasets") {
  LabeledRow full{"r1", "w", ClassLabel::Negative, {{0, 21}}, "Great fit. Too small!", "cap"};
  auto d = build_span_dataset(std::vector<LabeledRow>{full});
  REQUIRE(d.size() == 1);
  CHECK(d[0].text == "Great fit. Too small!");
  CHECK(d[0].label == Target::Negative);

  LabeledRow none{"r2", "w", ClassLabel::Other, {}, "Great fit. Too small!", "cap"};
  d = build_span_dataset(std::vector<LabeledRow>{none});
  REQUIRE(d.size() == 2);
  CHECK(d[0].text == "Great fit.");
  CHECK(d[1].text == "Too small!");
  for (const auto& e : d) CHECK(e.label == Target::Other);
  CHECK(d[1].extent == Span{11, 21});

  LabeledRow err{"r3", "w", ClassLabel::DataError, {}, "garbage", ""};
  CHECK(build_span_dataset(std::vector<LabeledRow>{err}).empty());
  CHECK(whole_review_examples(std::vector<LabeledRow>{full, err}).size() == 1);
  CHECK(parse_dataset_mode("spans") == DatasetMode::Spans);
  CHECK(parse_dataset_mode("whole") == DatasetMode::WholeReview);
  CHECK_THROWS_AS(parse_dataset_mode("paragraphs"), Error);
}

TEST_CASE("span rows and Other pieces partition the word characters of each review") {
  Rng rng(12);
  const std::string body = "One two. Three four five! Six? Seven eight nine ten. Eleven";
  const std::size_t len = unicode::length(body);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<LabeledRow> rows;
    SpanList all;
    for (int w = 0; w < 2; ++w) {
      SpanList s;
      for (std::size_t k = 0, n = rng.below(3); k < n; ++k) {
        const std::size_t a = rng.below(len - 1);
        s.push_back({a, a + 1 + rng.below(len - a - 1)});
      }
      s = canonicalize(s, len);
      all.insert(all.end(), s.begin(), s.end());
      rows.push_back({"r", "w" + std::to_string(w), ClassLabel::Positive, s, body, ""});
    }
    const auto d = build_span_dataset(rows);
    const auto highlighted = testing::coverage(all, len);
    std::vector<int> other_cover(len, 0);
    for (const auto& e : d) {
      REQUIRE(e.extent);
      if (e.label != Target::Other) continue;
      for (std::size_t i = e.extent->start; i < e.extent->end; ++i) ++other_cover[i];
    }
    const auto text = unicode::decode(body);
    for (std::size_t i = 0; i < len; ++i) {
      CHECK(other_cover[i] <= 1);
      if (other_cover[i]) CHECK_FALSE(highlighted[i]);
      if (!highlighted[i] && !unicode::is_whitespace(text[i]) && !unicode::is_punctuation(text[i])) {
        CHECK(other_cover[i] == 1);
      }
    }
  }
}

TEST_CASE("error length ratio") {
  std::vector<Example> rows = {ex(std::string(130, 'x'), Target::Other), ex(std::string(100, 'y'), Target::Positive)};
  CHECK(error_length_ratio(rows, std::vector<Target>{Target::Positive, Target::Positive}) == doctest::Approx(1.3));
  CHECK_FALSE(error_length_ratio(rows, std::vector<Target>{Target::Other, Target::Positive}));
  CHECK_FALSE(error_length_ratio(rows, std::vector<Target>{Target::Neutral, Target::Neutral}));
}

TEST_CASE("long diluted reviews are the ones misclassified") {
  // Short rows carry a strong cue; long rows bury the same cue in filler.
  std::vector<Example> train_rows, test_rows;
  const std::string filler = " the order came on a tuesday and was packed in a box with paper";
  for (int i = 0; i < 200; ++i) {
    const Target t = i % 2 ? Target::Positive : Target::Negative;
    const std::string cue = t == Target::Positive ? "great" : "awful";
    train_rows.push_back(ex(cue + " " + cue, t, "tr" + std::to_string(i)));
    train_rows.push_back(ex(filler, Target::Other, "tf" + std::to_string(i)));
    std::string long_text = cue;
    for (int k = 0; k < 6; ++k) long_text += filler;
    test_rows.push_back(ex(i % 4 < 2 ? cue + " " + cue : long_text, t, "te" + std::to_string(i)));
  }
  const auto model = train(train_rows, small_config());
  const auto ratio = error_length_analysis(model, test_rows);
  REQUIRE(ratio);
  CHECK(*ratio > 1.0);
}

TEST_CASE("model files round-trip") {
  testing::TempDir dir;
  auto cfg = small_config();
  cfg.subwords = SubwordRange{2, 4};
  auto model = train(separable_rows(60, 1), cfg);
  model.metadata()["mode"] = "spans";
  save_model(dir / "m.bin", model);
  const auto back = load_model<double>(dir / "m.bin");
  CHECK(back == model);
  CHECK(back.config().subwords->max == 4);
  CHECK(back.metadata().at("mode") == "spans");
  testing::spit(dir / "bad.bin", "not a model");
  CHECK_THROWS_AS(load_model<double>(dir / "bad.bin"), Error);
}

TEST_CASE("pretrained vectors seed the matching rows") {
  testing::TempDir dir;
  testing::spit(dir / "v.txt", "2 3\ngreat 0.5 0.25 -1\nzzz 1 1 1\n");
  const auto vectors = load_vectors(dir / "v.txt", 3);
  CHECK(vectors.at("great") == std::vector<double>{0.5, 0.25, -1});
  CHECK_THROWS_AS(load_vectors(dir / "v.txt", 4), Error);

  auto cfg = small_config();
  cfg.dim = 3;
  cfg.epochs = 0;
  cfg.pretrained_vectors = dir / "v.txt";
  CHECK_THROWS(train(std::vector<Example>{ex("great", Target::Positive)}, cfg));
  cfg.epochs = 1;
  cfg.learning_rate = 1e-12;
  const auto m = train(std::vector<Example>{ex("great", Target::Positive), ex("bad", Target::Negative)}, cfg);
  const auto row = m.input().row(feature_bucket("great", cfg.hash_buckets));
  CHECK(row(0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(row(2) == doctest::Approx(-1).epsilon(1e-6));
}

TEST_CASE("ungrouped rows may be split apart") {
  std::vector<Example> rows;
  for (int i = 0; i < 60; ++i) rows.push_back(ex("t" + std::to_string(i), static_cast<Target>(i % 2), "g" + std::to_string(i / 3)));
  const auto free = ungrouped(rows);
  std::set<std::string> groups;
  for (const auto& e : free) groups.insert(e.group);
  CHECK(groups.size() == 60);
  const auto s = split_80_20(free, 5);
  std::set<std::string> train_reviews;
  for (const auto& e : s.train) train_reviews.insert(rows[std::stoul(e.text.substr(1))].group);
  bool straddles = false;
  for (const auto& e : s.test) straddles |= train_reviews.count(rows[std::stoul(e.text.substr(1))].group) > 0;
  CHECK(straddles);
}
