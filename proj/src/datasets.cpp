#include "crowdqc/baseline/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "crowdqc/baseline/classifier.hpp"
#include "crowdqc/error.hpp"
#include "crowdqc/rng.hpp"
#include "crowdqc/spantext.hpp"
#include "crowdqc/unicode.hpp"

namespace crowdqc::baseline {

std::string_view to_string(DatasetMode m) {
  return m == DatasetMode::Spans ? "spans" : "whole";
}

DatasetMode parse_dataset_mode(std::string_view s) {
  if (s == "spans" || s == "span") return DatasetMode::Spans;
  if (s == "whole" || s == "reviews" || s == "whole_review") return DatasetMode::WholeReview;
  throw Error("unknown dataset mode \"" + std::string(s) + "\"");
}

std::vector<Example> whole_review_examples(std::span<const LabeledRow> rows) {
  std::vector<Example> out;
  out.reserve(rows.size());
  for (const LabeledRow& r : rows) {
    auto target = to_target(r.label);
    if (!target) continue;
    out.push_back({r.review_id, r.caption, r.body, *target, std::nullopt});
  }
  return out;
}

std::vector<Example> build_span_dataset(std::span<const LabeledRow> rows) {
  std::vector<Example> out;
  // Reviews in first-appearance order with the union of their spans.
  std::vector<std::string> order;
  std::map<std::string, std::pair<const LabeledRow*, SpanList>> reviews;
  for (const LabeledRow& r : rows) {
    auto target = to_target(r.label);
    if (!target) continue;
    auto [it, inserted] = reviews.try_emplace(r.review_id, &r, SpanList{});
    if (inserted) order.push_back(r.review_id);
    const std::u32string body = unicode::decode(r.body);
    for (const Span& s : r.spans) {
      out.push_back({r.review_id, "", unicode::encode(body.substr(s.start, s.length())),
                     *target, s});
      it->second.second.push_back(s);
    }
  }
  for (const std::string& id : order) {
    const auto& [row, spans] = reviews[id];
    const std::u32string body = unicode::decode(row->body);
    const SpanList covered = spans.empty() ? SpanList{} : canonicalize(spans, body.size());
    const auto sentences = segment_sentences(body);
    for (const Span& gap : complement(covered, body.size())) {
      for (const SentenceBound& sb : sentences) {
        std::size_t lo = std::max(gap.start, sb.start);
        std::size_t hi = std::min(gap.end, sb.end);
        while (lo < hi && unicode::is_whitespace(body[lo])) ++lo;
        while (hi > lo && unicode::is_whitespace(body[hi - 1])) --hi;
        if (lo >= hi) continue;
        std::string text = unicode::encode(body.substr(lo, hi - lo));
        if (preprocess(text).empty()) continue;
        out.push_back({id, "", std::move(text), Target::Other, Span{lo, hi}});
      }
    }
  }
  return out;
}

std::vector<Example> build_dataset(std::span<const LabeledRow> rows, DatasetMode mode) {
  return mode == DatasetMode::Spans ? build_span_dataset(rows) : whole_review_examples(rows);
}

Split split_80_20(std::span<const Example> rows, std::uint64_t seed) {
  if (rows.size() < 5) throw Error("split needs at least 5 rows");
  // Groups in first-appearance order.
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto [it, inserted] = groups.try_emplace(rows[i].group);
    if (inserted) group_order.push_back(rows[i].group);
    it->second.push_back(i);
  }
  std::array<std::vector<std::string>, kNumTargets> strata;
  for (const std::string& g : group_order) {
    std::array<std::size_t, kNumTargets> votes{};
    for (std::size_t i : groups[g]) ++votes[index_of(rows[i].label)];
    const auto best = static_cast<std::size_t>(
        std::max_element(votes.begin(), votes.end()) - votes.begin());
    strata[best].push_back(g);
  }

  Split split;
  Rng rng(derive_seed(seed, 0x8020));
  std::vector<bool> in_test(rows.size(), false);
  for (std::size_t c = 0; c < kNumTargets; ++c) {
    auto& members = strata[c];
    if (members.empty()) continue;
    std::size_t n_rows = 0;
    for (const auto& g : members) n_rows += groups[g].size();
    if (n_rows < 2 || members.size() < 2) {
      split.warnings.push_back("class " + std::string(to_string(static_cast<Target>(c))) +
                               " has fewer than 2 rows/groups; kept in train");
      continue;
    }
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.below(i)]);
    }
    const auto n_test = static_cast<std::size_t>(
        std::llround(0.2 * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < n_test; ++k) {
      for (std::size_t i : groups[members[k]]) in_test[i] = true;
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    (in_test[i] ? split.test : split.train).push_back(rows[i]);
  }
  return split;
}

std::vector<Example> ungrouped(std::vector<Example> rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].group = "row:" + std::to_string(i);
  return rows;
}

}  // namespace crowdqc::baseline
