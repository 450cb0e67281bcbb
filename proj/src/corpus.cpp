#include "crowdqc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "crowdqc/error.hpp"
#include "crowdqc/json_io.hpp"
#include "crowdqc/unicode.hpp"

namespace crowdqc {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 5> kLabelNames = {
    "positive", "neutral", "negative", "other", "data_error"};

constexpr std::array<std::string_view, 7> kReviewFields = {
    "review_id", "caption", "body", "image_ref", "language", "category",
    "product_id"};

std::string* field_ref(Review& r, std::size_t i) {
  switch (i) {
    case 0: return &r.review_id;
    case 1: return &r.caption;
    case 2: return &r.body;
    case 3: return &r.image_ref;
    case 4: return &r.language;
    case 5: return &r.category;
    default: return &r.product_id;
  }
}

const std::string& field_ref(const Review& r, std::size_t i) {
  return *field_ref(const_cast<Review&>(r), i);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

json parse_line(const std::string& line, std::size_t lineno) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ParseError("expected a JSON object", lineno);
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
  }
}

Review review_from_json(const json& j, std::size_t lineno) {
  Review r;
  for (std::size_t i = 0; i < kReviewFields.size(); ++i) {
    auto it = j.find(std::string(kReviewFields[i]));
    if (it == j.end() || !it->is_string()) {
      throw ParseError("missing or non-string field \"" +
                           std::string(kReviewFields[i]) + "\"",
                       lineno);
    }
    *field_ref(r, i) = it->get<std::string>();
  }
  for (const auto& [key, _] : j.items()) {
    if (std::find(kReviewFields.begin(), kReviewFields.end(), key) ==
        kReviewFields.end()) {
      throw ParseError("unknown field \"" + key + "\"", lineno);
    }
  }
  return r;
}

// RFC 4180 record reader. Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields,
                     std::size_t& lineno) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++lineno;
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && in.peek() == '\n') in.get(c);
      ++lineno;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", lineno + 1);
  if (!any) return false;
  ++lineno;
  fields.push_back(std::move(field));
  return true;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string_view to_string(ClassLabel c) { return kLabelNames[index_of(c)]; }

std::optional<ClassLabel> try_parse_label(std::string_view s) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == s) return kAllLabels[i];
  }
  return std::nullopt;
}

ClassLabel parse_label(std::string_view s) {
  if (auto c = try_parse_label(s)) return *c;
  throw Error("unknown class \"" + std::string(s) + "\"");
}

ReviewSet::ReviewSet(std::vector<Review> reviews,
                     const std::vector<std::size_t>& lines) {
  reviews_.reserve(reviews.size());
  scalars_.reserve(reviews.size());
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    const std::size_t line = i < lines.size() ? lines[i] : i + 1;
    Review& r = reviews[i];
    if (r.review_id.empty()) throw ParseError("empty review_id", line);
    try {
      r.caption = unicode::nfc(r.caption);
      r.body = unicode::nfc(r.body);
    } catch (const Error& e) {
      throw ParseError(e.what(), line);
    }
    std::u32string text = unicode::decode(r.body);
    if (std::all_of(text.begin(), text.end(), unicode::is_whitespace)) {
      throw ParseError("review \"" + r.review_id + "\" has an empty body", line);
    }
    if (!index_.emplace(r.review_id, reviews_.size()).second) {
      throw DuplicateIdError(r.review_id, line);
    }
    reviews_.push_back(std::move(r));
    scalars_.push_back(std::move(text));
  }
}

std::optional<std::size_t> ReviewSet::index_of(std::string_view review_id) const {
  auto it = index_.find(std::string(review_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ReviewSet::require(std::string_view review_id) const {
  if (auto i = index_of(review_id)) return *i;
  throw Error("unknown review_id \"" + std::string(review_id) + "\"");
}

ReviewSet read_reviews(std::istream& in, ReviewFormat format) {
  std::vector<Review> reviews;
  std::vector<std::size_t> lines;
  if (format == ReviewFormat::Jsonl) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (blank(line)) continue;
      reviews.push_back(review_from_json(parse_line(line, lineno), lineno));
      lines.push_back(lineno);
    }
  } else {
    std::vector<std::string> fields;
    std::size_t lineno = 0;
    if (!read_csv_record(in, fields, lineno)) {
      throw ParseError("CSV header row required", 1);
    }
    std::array<std::size_t, kReviewFields.size()> column{};
    if (fields.size() != kReviewFields.size()) {
      throw ParseError("CSV header must name exactly the review fields", 1);
    }
    for (std::size_t i = 0; i < kReviewFields.size(); ++i) {
      auto it = std::find(fields.begin(), fields.end(), kReviewFields[i]);
      if (it == fields.end()) {
        throw ParseError("CSV header lacks \"" + std::string(kReviewFields[i]) + "\"", 1);
      }
      column[i] = static_cast<std::size_t>(it - fields.begin());
    }
    std::size_t start_line = lineno + 1;
    while (read_csv_record(in, fields, lineno)) {
      if (fields.size() == 1 && fields[0].empty()) {
        start_line = lineno + 1;
        continue;
      }
      if (fields.size() != kReviewFields.size()) {
        throw ParseError("expected " + std::to_string(kReviewFields.size()) +
                             " fields, got " + std::to_string(fields.size()),
                         start_line);
      }
      Review r;
      for (std::size_t i = 0; i < kReviewFields.size(); ++i) {
        *field_ref(r, i) = fields[column[i]];
      }
      reviews.push_back(std::move(r));
      lines.push_back(start_line);
      start_line = lineno + 1;
    }
  }
  return ReviewSet(std::move(reviews), lines);
}

ReviewSet load_reviews(const std::filesystem::path& path, ReviewFormat format) {
  auto in = open_in(path);
  return read_reviews(in, format);
}

void write_reviews(std::ostream& out, const ReviewSet& reviews, ReviewFormat format) {
  if (format == ReviewFormat::Jsonl) {
    for (const Review& r : reviews) {
      ordered_json j;
      for (std::size_t i = 0; i < kReviewFields.size(); ++i) {
        j[std::string(kReviewFields[i])] = field_ref(r, i);
      }
      out << j.dump() << '\n';
    }
    return;
  }
  for (std::size_t i = 0; i < kReviewFields.size(); ++i) {
    out << (i ? "," : "") << kReviewFields[i];
  }
  out << '\n';
  for (const Review& r : reviews) {
    for (std::size_t i = 0; i < kReviewFields.size(); ++i) {
      out << (i ? "," : "") << csv_quote(field_ref(r, i));
    }
    out << '\n';
  }
}

void save_reviews(const std::filesystem::path& path, const ReviewSet& reviews,
                  ReviewFormat format) {
  auto out = open_out(path);
  write_reviews(out, reviews, format);
  if (!out) throw Error("write failed: " + path.string());
}

ReviewFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ReviewFormat::Csv : ReviewFormat::Jsonl;
}

GoldSet::GoldSet(std::vector<GoldItem> items, const ReviewSet* reviews) {
  items_.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    GoldItem& g = items[i];
    const std::size_t line = i + 1;
    if (is_sentiment(g.expert_class) && g.expert_spans.empty()) {
      throw ParseError("gold \"" + g.review_id + "\" (" +
                           std::string(to_string(g.expert_class)) +
                           ") needs at least one span",
                       line);
    }
    for (std::size_t k = 0; k < g.expert_spans.size(); ++k) {
      const Span& s = g.expert_spans[k];
      if (s.start >= s.end) throw ParseError("empty gold span", line);
      if (k > 0 && s.start < g.expert_spans[k - 1].end) {
        throw ParseError("gold spans must be sorted and disjoint", line);
      }
    }
    if (reviews) {
      auto idx = reviews->index_of(g.review_id);
      if (!idx) throw ParseError("gold names unknown review \"" + g.review_id + "\"", line);
      if (!g.expert_spans.empty() &&
          g.expert_spans.back().end > reviews->body_length(*idx)) {
        throw ParseError("gold span exceeds body of \"" + g.review_id + "\"", line);
      }
    }
    if (!index_.emplace(g.review_id, items_.size()).second) {
      throw DuplicateIdError(g.review_id, line);
    }
    items_.push_back(std::move(g));
  }
}

const GoldItem* GoldSet::find(std::string_view review_id) const {
  auto it = index_.find(std::string(review_id));
  return it == index_.end() ? nullptr : &items_[it->second];
}

GoldSet read_gold(std::istream& in, const ReviewSet* reviews) {
  std::vector<GoldItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const json j = parse_line(line, lineno);
    GoldItem g;
    if (!j.contains("review_id") || !j["review_id"].is_string() ||
        !j.contains("class") || !j["class"].is_string()) {
      throw ParseError("gold record needs string review_id and class", lineno);
    }
    g.review_id = j["review_id"].get<std::string>();
    auto label = try_parse_label(j["class"].get<std::string>());
    if (!label) throw ParseError("unknown class " + j["class"].dump(), lineno);
    g.expert_class = *label;
    if (j.contains("spans")) g.expert_spans = spans_from_json(j["spans"], lineno);
    items.push_back(std::move(g));
  }
  return GoldSet(std::move(items), reviews);
}

GoldSet load_gold(const std::filesystem::path& path, const ReviewSet* reviews) {
  auto in = open_in(path);
  return read_gold(in, reviews);
}

void write_gold(std::ostream& out, const GoldSet& gold) {
  for (const GoldItem& g : gold) {
    ordered_json j;
    j["review_id"] = g.review_id;
    j["class"] = to_string(g.expert_class);
    j["spans"] = spans_to_json(g.expert_spans);
    out << j.dump() << '\n';
  }
}

void save_gold(const std::filesystem::path& path, const GoldSet& gold) {
  auto out = open_out(path);
  write_gold(out, gold);
}

std::vector<TruthRecord> read_truth(std::istream& in) {
  std::vector<TruthRecord> truth;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const json j = parse_line(line, lineno);
    TruthRecord t;
    try {
      t.review_id = j.at("review_id").get<std::string>();
      t.true_class = parse_label(j.at("class").get<std::string>());
      t.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("cue") && !j["cue"].is_null()) {
        t.cue = Span{j["cue"].at("start").get<std::size_t>(),
                     j["cue"].at("end").get<std::size_t>()};
      }
    } catch (const json::exception& e) {
      throw ParseError(e.what(), lineno);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
    truth.push_back(std::move(t));
  }
  return truth;
}

void write_truth(std::ostream& out, const std::vector<TruthRecord>& truth) {
  for (const TruthRecord& t : truth) {
    ordered_json j;
    j["review_id"] = t.review_id;
    j["class"] = to_string(t.true_class);
    j["cue"] = t.cue ? ordered_json{{"start", t.cue->start}, {"end", t.cue->end}}
                     : ordered_json(nullptr);
    j["seed"] = t.seed;
    out << j.dump() << '\n';
  }
}

}  // namespace crowdqc
