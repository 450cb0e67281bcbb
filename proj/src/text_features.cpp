#include "crowdqc/baseline/text_features.hpp"

#include "crowdqc/rng.hpp"
#include "crowdqc/unicode.hpp"

namespace crowdqc::baseline {

std::optional<Target> to_target(ClassLabel c) {
  switch (c) {
    case ClassLabel::Other: return Target::Other;
    case ClassLabel::Positive: return Target::Positive;
    case ClassLabel::Neutral: return Target::Neutral;
    case ClassLabel::Negative: return Target::Negative;
    case ClassLabel::DataError: return std::nullopt;
  }
  return std::nullopt;
}

ClassLabel to_label(Target t) {
  switch (t) {
    case Target::Other: return ClassLabel::Other;
    case Target::Positive: return ClassLabel::Positive;
    case Target::Neutral: return ClassLabel::Neutral;
    case Target::Negative: return ClassLabel::Negative;
  }
  return ClassLabel::Other;
}

std::string_view to_string(Target t) { return crowdqc::to_string(to_label(t)); }

std::vector<std::string> preprocess(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char32_t c : unicode::decode(text)) {
    if (unicode::is_punctuation(c) || unicode::is_whitespace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += unicode::encode(unicode::to_lower(c));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t feature_bucket(std::string_view key, std::uint64_t buckets) {
  return fnv1a64(key) % buckets;
}

std::vector<std::uint64_t> featurize(std::span<const std::string> tokens,
                                     const FeatureConfig& config) {
  std::vector<std::uint64_t> ids;
  const std::size_t n = tokens.size();
  const std::size_t max_n = std::max<std::size_t>(1, config.word_ngrams);
  for (std::size_t i = 0; i < n; ++i) {
    std::string key = tokens[i];
    ids.push_back(feature_bucket(key, config.hash_buckets));
    for (std::size_t len = 2; len <= max_n && i + len <= n; ++len) {
      key += kNgramJoiner;
      key += tokens[i + len - 1];
      ids.push_back(feature_bucket(key, config.hash_buckets));
    }
  }
  if (config.subwords) {
    for (const std::string& token : tokens) {
      if (token == kCaptionSeparator) continue;
      const std::u32string word = U"<" + unicode::decode(token) + U">";
      for (std::size_t len = config.subwords->min; len <= config.subwords->max; ++len) {
        if (len == 0 || len > word.size()) continue;
        for (std::size_t i = 0; i + len <= word.size(); ++i) {
          if (len == word.size()) continue;  // the whole word is already a unigram
          ids.push_back(feature_bucket(unicode::encode(word.substr(i, len)),
                                       config.hash_buckets));
        }
      }
    }
  }
  return ids;
}

std::vector<std::string> example_tokens(const Example& e) {
  std::vector<std::string> tokens;
  if (!e.caption.empty()) {
    tokens = preprocess(e.caption);
    tokens.emplace_back(kCaptionSeparator);
  }
  auto body = preprocess(e.text);
  tokens.insert(tokens.end(), std::make_move_iterator(body.begin()),
                std::make_move_iterator(body.end()));
  return tokens;
}

}  // namespace crowdqc::baseline
