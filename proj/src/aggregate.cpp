#include "crowdqc/aggregate.hpp"

#include <algorithm>
#include <fstream>

#include "crowdqc/error.hpp"
#include "crowdqc/json_io.hpp"
#include "crowdqc/spantext.hpp"
#include "crowdqc/unicode.hpp"

namespace crowdqc {

using ordered_json = nlohmann::ordered_json;

std::optional<ClassLabel> majority_vote(std::span<const Annotation> annotations) {
  if (annotations.empty()) throw Error("majority vote over an empty bundle");
  std::array<std::size_t, 5> votes{};
  for (const Annotation& a : annotations) ++votes[index_of(a.label)];
  const auto best = std::max_element(votes.begin(), votes.end());
  if (std::count(votes.begin(), votes.end(), *best) > 1) return std::nullopt;
  return kAllLabels[static_cast<std::size_t>(best - votes.begin())];
}

std::optional<ClassLabel> majority_vote(const LabelBundle& bundle) {
  return majority_vote(bundle.annotations);
}

SpanList merge_spans(const LabelBundle& bundle, ClassLabel label) {
  SpanList all;
  for (const Annotation& a : bundle.annotations) {
    if (a.label == label) all.insert(all.end(), a.spans.begin(), a.spans.end());
  }
  if (all.empty()) return all;
  std::size_t end = 0;
  for (const Span& s : all) end = std::max(end, s.end);
  return canonicalize(std::move(all), end);
}

std::vector<LabelBundle> make_bundles(const AnnotationStore& store, const ReviewSet& reviews) {
  std::vector<LabelBundle> out;
  for (const Review& r : reviews) {
    auto labels = store.valid_labels(r.review_id);
    if (labels.empty()) continue;
    LabelBundle b;
    b.review_id = r.review_id;
    for (const Annotation* a : labels) b.annotations.push_back(*a);
    std::stable_sort(b.annotations.begin(), b.annotations.end(),
                     [](const Annotation& x, const Annotation& y) {
                       return x.worker_id < y.worker_id;
                     });
    b.majority = majority_vote(b);
    for (ClassLabel c : kAllLabels) {
      SpanList merged = merge_spans(b, c);
      if (!merged.empty()) b.merged_spans.emplace(c, std::move(merged));
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::size_t Distribution::total() const {
  std::size_t t = 0;
  for (std::size_t c : counts) t += c;
  return t;
}

double Distribution::majority_share() const {
  const std::size_t t = total();
  if (t == 0) return 0.0;
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(t);
}

Distribution label_distribution(const AnnotationStore& store) {
  Distribution d;
  for (const Annotation& a : store.all()) {
    if (a.valid && !a.is_gold) ++d.counts[index_of(a.label)];
  }
  return d;
}

std::string_view to_string(ExportMode m) {
  return m == ExportMode::Majority ? "majority" : "per_annotation";
}

ExportMode parse_export_mode(std::string_view s) {
  if (s == "majority") return ExportMode::Majority;
  if (s == "per_annotation") return ExportMode::PerAnnotation;
  throw Error("unknown export mode \"" + std::string(s) + "\"");
}

std::vector<LabeledRow> export_rows(const AnnotationStore& store, const ReviewSet& reviews,
                                    ExportMode mode, ExportSummary* summary,
                                    std::vector<LabeledRow>* quarantine) {
  ExportSummary local;
  ExportSummary& sum = summary ? *summary : local;
  std::vector<LabeledRow> rows;
  for (const LabelBundle& b : make_bundles(store, reviews)) {
    const Review& r = reviews[reviews.require(b.review_id)];
    auto emit = [&](LabeledRow row) {
      if (row.label == ClassLabel::DataError) {
        ++sum.quarantined;
        if (quarantine) quarantine->push_back(std::move(row));
      } else {
        ++sum.rows;
        rows.push_back(std::move(row));
      }
    };
    if (mode == ExportMode::PerAnnotation) {
      for (const Annotation& a : b.annotations) {
        emit({r.review_id, a.worker_id, a.label, a.spans, r.body, r.caption});
      }
    } else if (!b.majority) {
      ++sum.tied_skipped;
      sum.tied_reviews.push_back(b.review_id);
    } else {
      auto it = b.merged_spans.find(*b.majority);
      emit({r.review_id, std::nullopt, *b.majority,
            it == b.merged_spans.end() ? SpanList{} : it->second, r.body, r.caption});
    }
  }
  return rows;
}

ExportSummary export_dataset(const AnnotationStore& store, const ReviewSet& reviews,
                             ExportMode mode, const std::filesystem::path& path,
                             std::uint64_t seed) {
  if (store.valid_label_count() == 0) throw Error("nothing to export: no valid labels");
  ExportSummary summary;
  std::vector<LabeledRow> quarantine;
  const auto rows = export_rows(store, reviews, mode, &summary, &quarantine);
  auto write_file = [](const std::filesystem::path& p, auto&& fn) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    fn(out);
    out.flush();
    if (!out) throw Error("write failed: " + p.string());
  };
  write_file(path, [&](std::ostream& out) { write_labeled(out, rows); });
  write_file(path.string() + ".quarantine.jsonl",
             [&](std::ostream& out) { write_labeled(out, quarantine); });
  write_file(path.string() + ".meta.json", [&](std::ostream& out) {
    ordered_json meta;
    meta["mode"] = to_string(mode);
    meta["seed"] = seed;
    meta["rows"] = summary.rows;
    meta["tied_skipped"] = summary.tied_skipped;
    meta["quarantined"] = summary.quarantined;
    out << meta.dump(2) << '\n';
  });
  return summary;
}

void write_labeled(std::ostream& out, std::span<const LabeledRow> rows) {
  for (const LabeledRow& row : rows) {
    ordered_json j;
    j["review_id"] = row.review_id;
    if (row.worker_id) j["worker_id"] = *row.worker_id;
    j["class"] = to_string(row.label);
    j["spans"] = spans_to_json(row.spans);
    j["body"] = row.body;
    j["caption"] = row.caption;
    out << j.dump() << '\n';
  }
}

std::vector<LabeledRow> read_labeled(std::istream& in) {
  std::vector<LabeledRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    LabeledRow row;
    try {
      row.review_id = j.at("review_id").get<std::string>();
      if (j.contains("worker_id")) row.worker_id = j["worker_id"].get<std::string>();
      auto label = try_parse_label(j.at("class").get<std::string>());
      if (!label) throw ParseError("unknown class " + j["class"].dump(), lineno);
      row.label = *label;
      row.spans = spans_from_json(j.at("spans"), lineno);
      row.body = unicode::nfc(j.at("body").get<std::string>());
      row.caption = unicode::nfc(j.value("caption", std::string()));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), lineno);
    }
    const std::size_t len = unicode::length(row.body);
    for (const Span& s : row.spans) {
      if (!s.valid_for(len)) throw ParseError("span outside body", lineno);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<LabeledRow> load_labeled(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_labeled(in);
}

}  // namespace crowdqc
