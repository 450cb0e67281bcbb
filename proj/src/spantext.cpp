#include "crowdqc/spantext.hpp"

#include <algorithm>

#include "crowdqc/unicode.hpp"

namespace crowdqc {

namespace {

constexpr bool is_terminator(char32_t c) {
  return c == U'.' || c == U'!' || c == U'?' || c == U'\n';
}

}  // namespace

std::vector<SentenceBound> segment_sentences(std::u32string_view body) {
  std::vector<SentenceBound> out;
  const std::size_t n = body.size();
  std::size_t i = 0;
  while (i < n) {
    while (i < n && unicode::is_whitespace(body[i])) ++i;
    if (i == n) break;
    const std::size_t start = i;
    while (i < n && !is_terminator(body[i])) ++i;
    while (i < n && is_terminator(body[i])) ++i;
    std::size_t end = i;
    while (end > start && unicode::is_whitespace(body[end - 1])) --end;
    if (end > start) out.push_back({start, end, out.size()});
  }
  return out;
}

SpanList canonicalize(SpanList spans, std::size_t body_len) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    Span& s = spans[i];
    if (s.start >= s.end) {
      throw SpanError("span " + std::to_string(i) + " is empty or inverted", i);
    }
    if (s.start >= body_len) {
      throw SpanError("span " + std::to_string(i) + " lies outside the body", i);
    }
    s.end = std::min(s.end, body_len);
  }
  std::sort(spans.begin(), spans.end());
  SpanList merged;
  for (const Span& s : spans) {
    if (!merged.empty() && s.start <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, s.end);
    } else {
      merged.push_back(s);
    }
  }
  return merged;
}

OverlapScore char_iou(std::span<const Span> a, std::span<const Span> b) {
  std::size_t covered_a = 0, covered_b = 0, inter = 0;
  for (const Span& s : a) covered_a += s.length();
  for (const Span& s : b) covered_b += s.length();
  // Two-pointer sweep over sorted disjoint intervals.
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const std::size_t lo = std::max(a[i].start, b[j].start);
    const std::size_t hi = std::min(a[i].end, b[j].end);
    if (hi > lo) inter += hi - lo;
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  OverlapScore score;
  score.intersection_chars = inter;
  score.union_chars = covered_a + covered_b - inter;
  score.ratio = score.union_chars == 0
                    ? 1.0
                    : static_cast<double>(inter) / static_cast<double>(score.union_chars);
  return score;
}

SpanList expand_to_sentences(std::span<const Span> spans,
                             std::span<const SentenceBound> sentences) {
  SpanList out;
  for (const Span& s : spans) {
    // First sentence whose end lies past the span start.
    auto it = std::upper_bound(
        sentences.begin(), sentences.end(), s.start,
        [](std::size_t pos, const SentenceBound& b) { return pos < b.end; });
    for (; it != sentences.end() && it->start < s.end; ++it) {
      out.push_back(it->span());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

OverlapScore sentence_relative_overlap(std::span<const Span> worker,
                                       std::span<const Span> gold,
                                       std::span<const SentenceBound> sentences) {
  const SpanList w = expand_to_sentences(worker, sentences);
  const SpanList g = expand_to_sentences(gold, sentences);
  return char_iou(w, g);
}

std::optional<std::size_t> sentence_at(std::span<const SentenceBound> sentences,
                                       std::size_t pos) {
  auto it = std::upper_bound(
      sentences.begin(), sentences.end(), pos,
      [](std::size_t p, const SentenceBound& b) { return p < b.end; });
  if (it != sentences.end() && it->start <= pos) return it->index;
  return std::nullopt;
}

SpanList complement(std::span<const Span> spans, std::size_t body_len) {
  SpanList out;
  std::size_t cursor = 0;
  for (const Span& s : spans) {
    if (s.start > cursor) out.push_back({cursor, s.start});
    cursor = std::max(cursor, s.end);
  }
  if (cursor < body_len) out.push_back({cursor, body_len});
  return out;
}

}  // namespace crowdqc
