#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace crowdqc {

enum class ClassLabel : std::uint8_t { Positive, Neutral, Negative, Other, DataError };

inline constexpr std::array<ClassLabel, 5> kAllLabels = {
    ClassLabel::Positive, ClassLabel::Neutral, ClassLabel::Negative,
    ClassLabel::Other, ClassLabel::DataError};

inline constexpr std::size_t index_of(ClassLabel c) {
  return static_cast<std::size_t>(c);
}

/// Wire name: "positive", "neutral", "negative", "other", "data_error".
std::string_view to_string(ClassLabel c);
std::optional<ClassLabel> try_parse_label(std::string_view s);
/// Throws crowdqc::Error on unknown names.
ClassLabel parse_label(std::string_view s);

/// Sentiment classes must be justified by at least one span.
constexpr bool is_sentiment(ClassLabel c) {
  return c == ClassLabel::Positive || c == ClassLabel::Neutral ||
         c == ClassLabel::Negative;
}

/// Half-open interval of scalar-value offsets into a normalized review body.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  constexpr std::size_t length() const { return end > start ? end - start : 0; }
  constexpr bool valid_for(std::size_t body_len) const {
    return start < end && end <= body_len;
  }
  friend constexpr auto operator<=>(const Span&, const Span&) = default;
};

using SpanList = std::vector<Span>;

struct Review {
  std::string review_id;
  std::string caption;
  std::string body;
  std::string image_ref;
  std::string language;
  std::string category;
  std::string product_id;

  friend bool operator==(const Review&, const Review&) = default;
};

/// Immutable, normalized collection of reviews in load order.
///
/// Construction applies NFC to caption and body, rejects empty bodies and
/// duplicate ids. The decoded scalar form of every body is cached so span
/// arithmetic never touches UTF-8.
class ReviewSet {
 public:
  ReviewSet() = default;
  /// `lines` optionally gives the source line of each review for errors.
  explicit ReviewSet(std::vector<Review> reviews,
                     const std::vector<std::size_t>& lines = {});

  std::size_t size() const { return reviews_.size(); }
  bool empty() const { return reviews_.empty(); }
  const Review& operator[](std::size_t i) const { return reviews_[i]; }
  auto begin() const { return reviews_.begin(); }
  auto end() const { return reviews_.end(); }

  std::optional<std::size_t> index_of(std::string_view review_id) const;
  /// Throws crowdqc::Error for unknown ids.
  std::size_t require(std::string_view review_id) const;
  std::u32string_view text(std::size_t i) const { return scalars_[i]; }
  std::size_t body_length(std::size_t i) const { return scalars_[i].size(); }

  friend bool operator==(const ReviewSet& a, const ReviewSet& b) {
    return a.reviews_ == b.reviews_;
  }

 private:
  std::vector<Review> reviews_;
  std::vector<std::u32string> scalars_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class ReviewFormat { Jsonl, Csv };

ReviewSet read_reviews(std::istream& in, ReviewFormat format);
ReviewSet load_reviews(const std::filesystem::path& path, ReviewFormat format);
void write_reviews(std::ostream& out, const ReviewSet& reviews, ReviewFormat format);
void save_reviews(const std::filesystem::path& path, const ReviewSet& reviews,
                  ReviewFormat format);
/// Picks the format from the file extension (".csv" or anything else = JSONL).
ReviewFormat format_for(const std::filesystem::path& path);

struct GoldItem {
  std::string review_id;
  ClassLabel expert_class = ClassLabel::Other;
  SpanList expert_spans;

  friend bool operator==(const GoldItem&, const GoldItem&) = default;
};

class GoldSet {
 public:
  GoldSet() = default;
  /// Validates span rules; when `reviews` is given also checks that every
  /// item names a known review and its spans fit the body.
  explicit GoldSet(std::vector<GoldItem> items, const ReviewSet* reviews = nullptr);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const GoldItem& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  const GoldItem* find(std::string_view review_id) const;
  bool contains(std::string_view review_id) const { return find(review_id) != nullptr; }

  friend bool operator==(const GoldSet& a, const GoldSet& b) {
    return a.items_ == b.items_;
  }

 private:
  std::vector<GoldItem> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

GoldSet read_gold(std::istream& in, const ReviewSet* reviews = nullptr);
GoldSet load_gold(const std::filesystem::path& path, const ReviewSet* reviews = nullptr);
void write_gold(std::ostream& out, const GoldSet& gold);
void save_gold(const std::filesystem::path& path, const GoldSet& gold);

// ---------------------------------------------------------------------------
// Synthetic corpus

struct TruthRecord {
  std::string review_id;
  ClassLabel true_class = ClassLabel::Other;
  std::optional<Span> cue;  // present for sentiment classes
  std::uint64_t seed = 0;

  friend bool operator==(const TruthRecord&, const TruthRecord&) = default;
};

struct SyntheticConfig {
  std::size_t n_reviews = 1000;
  /// Indexed by ClassLabel. Defaults follow the per-annotation distribution
  /// 6323 / 2194 / 206 / 3574 (Other / Positive / Neutral / Negative).
  std::array<double, 5> class_mix = {2194.0 / 12297, 206.0 / 12297,
                                     3574.0 / 12297, 6323.0 / 12297, 0.0};
  std::uint64_t vocab_seed = 0;
  /// Share of reviews promoted to the expert gold set (500 of 3759 by default).
  double gold_fraction = 500.0 / 3759;
  std::string language = "en";
  std::string category = "shoes";
};

struct SyntheticCorpus {
  ReviewSet reviews;
  GoldSet gold;
  std::vector<TruthRecord> truth;  // parallel to `reviews`
};

/// Pure function of (config, seed). Throws crowdqc::Error for an invalid mix.
SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config,
                                          std::uint64_t seed);

std::vector<TruthRecord> read_truth(std::istream& in);
void write_truth(std::ostream& out, const std::vector<TruthRecord>& truth);

}  // namespace crowdqc
