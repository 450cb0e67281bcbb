#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdqc/corpus.hpp"

namespace crowdqc::baseline {

/// Joins the tokens of a word n-gram before hashing ("a" "b" -> "a▁b").
inline constexpr std::string_view kNgramJoiner = "\xE2\x96\x81";
/// Placed between caption and body tokens. Cannot collide with a
/// preprocessed token because '/' is punctuation.
inline constexpr std::string_view kCaptionSeparator = "</s>";

/// Model output classes. DataError never reaches the classifier.
enum class Target : std::uint8_t { Other, Positive, Neutral, Negative };
inline constexpr std::size_t kNumTargets = 4;
inline constexpr std::size_t index_of(Target t) { return static_cast<std::size_t>(t); }

std::optional<Target> to_target(ClassLabel c);
ClassLabel to_label(Target t);
std::string_view to_string(Target t);

struct SubwordRange {
  std::size_t min = 3;
  std::size_t max = 6;
};

struct FeatureConfig {
  std::size_t word_ngrams = 3;
  std::uint64_t hash_buckets = std::uint64_t{1} << 20;
  std::optional<SubwordRange> subwords;
};

/// Lowercases, turns every punctuation character into a space and splits on
/// whitespace.
std::vector<std::string> preprocess(std::string_view text);

/// FNV-1a-64 of the UTF-8 key, reduced modulo `buckets`.
std::uint64_t feature_bucket(std::string_view key, std::uint64_t buckets);

/// Hashed ids of all word n-grams of length 1..word_ngrams, then, when
/// enabled, the character n-grams of each "<token>".
std::vector<std::uint64_t> featurize(std::span<const std::string> tokens,
                                     const FeatureConfig& config);

/// One classifier row. `group` keeps annotations of one review together in
/// splits; `extent` locates span-dataset rows inside the review body.
struct Example {
  std::string group;
  std::string caption;
  std::string text;
  Target label = Target::Other;
  std::optional<Span> extent;
};

/// Caption tokens, the separator and body tokens (caption part omitted when
/// the caption is empty).
std::vector<std::string> example_tokens(const Example& e);

}  // namespace crowdqc::baseline
