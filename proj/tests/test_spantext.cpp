#include <doctest.h>

#include <random>

#include "crowdqc/spantext.hpp"
#include "crowdqc/unicode.hpp"
#include "support.hpp"

using namespace crowdqc;

namespace {

std::vector<std::pair<std::size_t, std::size_t>> pairs(const std::vector<SentenceBound>& v) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& s : v) out.emplace_back(s.start, s.end);
  return out;
}

SpanList random_spans(std::mt19937_64& g, std::size_t len, std::size_t max_n) {
  SpanList v;
  const std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_n)(g);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t a = std::uniform_int_distribution<std::size_t>(0, len - 1)(g);
    const std::size_t b = std::uniform_int_distribution<std::size_t>(a + 1, len)(g);
    v.push_back({a, b});
  }
  return v;
}

}  // namespace

TEST_CASE("segmentation examples") {
  // "Great fit." is 10 scalars; one space; "Too small!" is 11..21.
  const std::u32string body = U"Great fit. Too small!";
  const auto s = segment_sentences(body);
  CHECK(pairs(s) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 10}, {11, 21}});
  CHECK(pairs(s) == testing::naive_sentences(body));
  CHECK(s[1].index == 1);
  CHECK(pairs(segment_sentences(U"perfect")) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 7}});
  CHECK(segment_sentences(U"").empty());
  CHECK(segment_sentences(U"  \n\t ").empty());
}

TEST_CASE("segmentation handles terminator runs and newlines") {
  const std::u32string body = U"  Wow!!! really?!\nok  \n\nnice";
  const auto s = segment_sentences(body);
  CHECK(pairs(s) == testing::naive_sentences(body));
  REQUIRE(s.size() == 4);
  CHECK(body.substr(s[0].start, s[0].end - s[0].start) == U"Wow!!!");
  CHECK(body.substr(s[2].start, s[2].end - s[2].start) == U"ok");
}

TEST_CASE("segmentation fuzz: disjoint, trimmed, covering, and equal to the oracle") {
  std::mt19937_64 g(17);
  const std::u32string alphabet = U"ab .!?\n\tö\U0001F44D";
  for (int iter = 0; iter < 2000; ++iter) {
    std::u32string body(std::uniform_int_distribution<int>(0, 40)(g), U' ');
    for (auto& c : body) c = alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(g)];
    const auto s = segment_sentences(body);
    REQUIRE(pairs(s) == testing::naive_sentences(body));
    std::vector<bool> covered(body.size(), false);
    for (std::size_t k = 0; k < s.size(); ++k) {
      CHECK(s[k].index == k);
      CHECK(s[k].start < s[k].end);
      CHECK_FALSE(unicode::is_whitespace(body[s[k].start]));
      CHECK_FALSE(unicode::is_whitespace(body[s[k].end - 1]));
      if (k) CHECK(s[k - 1].end <= s[k].start);
      for (std::size_t i = s[k].start; i < s[k].end; ++i) covered[i] = true;
    }
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (!unicode::is_whitespace(body[i])) CHECK(covered[i]);
    }
  }
}

TEST_CASE("canonicalize examples") {
  CHECK(canonicalize({{5, 10}, {8, 14}}, 100) == SpanList{{5, 14}});
  CHECK(canonicalize({{3, 7}}, 100) == SpanList{{3, 7}});
  const SpanList in = {{0, 4}, {4, 9}, {20, 25}};
  const SpanList expected = {{0, 9}, {20, 25}};
  CHECK(canonicalize(in, 100) == expected);
  CHECK(testing::runs(testing::coverage(in, 100)) == expected);
}

TEST_CASE("canonicalize clips and rejects") {
  CHECK(canonicalize({{5, 50}}, 20) == SpanList{{5, 20}});
  CHECK(canonicalize({}, 20).empty());
  try {
    canonicalize({{0, 3}, {25, 30}}, 20);
    FAIL("expected SpanError");
  } catch (const SpanError& e) {
    CHECK(e.index() == 1);
  }
  CHECK_THROWS_AS(canonicalize({{4, 4}}, 20), SpanError);
  CHECK_THROWS_AS(canonicalize({{6, 2}}, 20), SpanError);
}

TEST_CASE("canonicalize equals the maximal-run oracle and is idempotent") {
  std::mt19937_64 g(3);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t len = std::uniform_int_distribution<std::size_t>(1, 60)(g);
    auto spans = random_spans(g, len, 6);
    const auto c = canonicalize(spans, len);
    CHECK(c == testing::runs(testing::coverage(spans, len)));
    CHECK(canonicalize(c, len) == c);
  }
}

TEST_CASE("char_iou examples") {
  auto r = char_iou(SpanList{{0, 10}}, SpanList{{0, 10}});
  CHECK(r.ratio == 1.0);
  r = char_iou(SpanList{{0, 10}}, SpanList{{20, 30}});
  CHECK(r.ratio == 0.0);
  CHECK(r.union_chars == 20);
  r = char_iou(SpanList{{0, 10}}, SpanList{{5, 15}});
  CHECK(r.intersection_chars == 5);
  CHECK(r.union_chars == 15);
  CHECK(r.ratio == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(testing::brute_iou({{0, 10}}, {{5, 15}}, 20) == std::pair<std::size_t, std::size_t>{5, 15});
}

TEST_CASE("interval IoU agrees with the character-set count on 1000 random pairs") {
  CHECK(testing::iou_mismatches(1000, 2718) == 0);
}

TEST_CASE("char_iou edge cases") {
  CHECK(char_iou(SpanList{}, SpanList{}).ratio == 1.0);
  CHECK(char_iou(SpanList{}, SpanList{{1, 2}}).ratio == 0.0);
  CHECK(char_iou(SpanList{{1, 2}}, SpanList{}).ratio == 0.0);
}

TEST_CASE("char_iou matches the character-set oracle, is symmetric, and is 1 only on equality") {
  std::mt19937_64 g(99);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t len = std::uniform_int_distribution<std::size_t>(1, 80)(g);
    const auto a = canonicalize(random_spans(g, len, 4), len);
    const auto b = canonicalize(random_spans(g, len, 4), len);
    const auto r = char_iou(a, b);
    const auto [inter, uni] = testing::brute_iou(a, b, len);
    CHECK(r.intersection_chars == inter);
    CHECK(r.union_chars == uni);
    if (uni > 0) CHECK(r.ratio == static_cast<double>(inter) / static_cast<double>(uni));
    const auto rb = char_iou(b, a);
    CHECK(rb.ratio == r.ratio);
    CHECK((r.ratio == 1.0) == (a == b));
  }
}

TEST_CASE("sentence-relative overlap examples") {
  const std::u32string body = U"Great fit. Too small!";
  const auto s = segment_sentences(body);
  const SpanList gold = {{11, 21}};

  auto r = sentence_relative_overlap(SpanList{{11, 16}}, gold, s);
  CHECK(r.ratio == 1.0);
  CHECK(expand_to_sentences(SpanList{{11, 16}}, s) == SpanList{{11, 21}});

  r = sentence_relative_overlap(SpanList{{0, 10}}, gold, s);
  CHECK(r.ratio == 0.0);

  // Two 10-character sentences against one of them: 10 / 20.
  const std::u32string even = U"Fits well. Too small!";
  const auto se = segment_sentences(even);
  REQUIRE(se[0].end - se[0].start == 10);
  REQUIRE(se[1].end - se[1].start == 10);
  r = sentence_relative_overlap(SpanList{{2, 14}}, SpanList{{11, 21}}, se);
  const auto expanded = expand_to_sentences(SpanList{{2, 14}}, se);
  CHECK(expanded == SpanList{{0, 10}, {11, 21}});
  CHECK(testing::brute_iou(expanded, {{11, 21}}, even.size()) == std::pair<std::size_t, std::size_t>{10, 20});
  CHECK(r.ratio == 0.5);
}

TEST_CASE("sentence-relative overlap of a set with itself is 1") {
  std::mt19937_64 g(5);
  const std::u32string body = U"One two. Three four five! Six? Seven eight nine ten.\nEleven";
  const auto s = segment_sentences(body);
  for (int iter = 0; iter < 300; ++iter) {
    auto x = canonicalize(random_spans(g, body.size(), 3), body.size());
    if (x.empty()) continue;
    CHECK(sentence_relative_overlap(x, x, s).ratio == 1.0);
  }
}

TEST_CASE("sentence_at and complement") {
  const auto s = segment_sentences(U"Great fit. Too small!");
  CHECK(sentence_at(s, 0) == 0);
  CHECK(sentence_at(s, 12) == 1);
  CHECK_FALSE(sentence_at(s, 10));
  CHECK(complement(SpanList{{2, 5}}, 10) == SpanList{{0, 2}, {5, 10}});
  CHECK(complement(SpanList{}, 4) == SpanList{{0, 4}});
  CHECK(complement(SpanList{{0, 4}}, 4).empty());
}
