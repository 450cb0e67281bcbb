#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowdqc/corpus.hpp"
#include "crowdqc/error.hpp"
#include "crowdqc/rng.hpp"
#include "crowdqc/unicode.hpp"

namespace crowdqc {

namespace {

using Words = std::vector<std::string_view>;

const Words kSubjects = {"the size", "the fit", "sizing", "these shoes", "they",
                         "the length", "the width", "my usual size",
                         "the toe box", "the heel"};

const Words kPositive = {"fits perfectly", "is true to size", "fit like a glove",
                         "is exactly right", "matches my normal size",
                         "fits really well", "is spot on", "fits as expected",
                         "is a perfect fit", "sits just right"};

const Words kNegative = {"runs way too small", "is way too big", "is too narrow",
                         "runs a full size large", "pinches at the toes",
                         "is far too tight", "forced me to return them for a bigger size",
                         "is much too wide", "slips off at every step",
                         "is two sizes off"};

const Words kNeutral = {"runs slightly large but it is ok",
                        "is a bit snug at first but fine",
                        "is neither big nor small", "could be half a size smaller",
                        "is fine with thick socks", "is about average",
                        "varies a little from my other pairs",
                        "is acceptable i suppose"};

const Words kLeadIns = {"", "", "", "honestly, ", "i must say ", "to be fair, ",
                        "after a week ", "as for sizing, "};

const Words kFiller = {
    "quick delivery", "the quality is good and the stitching is even",
    "looks fabulous with a lurex hat", "very nice", "perfect", "fabulous",
    "the colour is lovely", "delivery took two weeks", "the leather feels cheap",
    "great price", "the packaging was damaged", "would buy again",
    "my daughter loves them", "comfortable for long walks", "the sole is very soft",
    "nice design", "the laces broke after a month", "they look even better in person",
    "customer service was friendly", "not worth the money", "super schön 👍",
    "the material is breathable", "they squeak a little on tiles",
    "great for the office", "returned another pair but kept these",
    "the color differs from the photo", "got lots of compliments",
    "bought them as a gift", "the glue is visible at the seams", "love them"};

const Words kDataError = {"this is not a shoe", "i received a handbag instead",
                          "die schuhe sind sehr bequem", "wrong item in the box",
                          "the link shows a different product",
                          "este producto no es lo que pedí"};

const Words kCaptions = {"Review", "My new shoes", "Shoes", "Hmm", "Sneakers", "Boots",
                         "Sandals", "Summer shoes", "Ok", "Pumps", "Loafers", "Größe"};

const Words kTerminators = {".", ".", ".", "!", "!!", "...", "?"};

std::string_view pick(const Words& w, Rng& rng) { return w[rng.below(w.size())]; }

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = char(out[0] - 32);
  return out;
}

// Subset of subject x predicate combinations chosen by the vocabulary seed.
std::vector<std::string> cue_inventory(const Words& predicates, std::uint64_t vocab_seed,
                                       std::uint64_t salt) {
  std::vector<std::string> all;
  for (auto s : kSubjects) {
    for (auto p : predicates) all.push_back(std::string(s) + " " + std::string(p));
  }
  Rng rng(derive_seed(vocab_seed, salt));
  for (std::size_t i = all.size(); i > 1; --i) {
    std::swap(all[i - 1], all[rng.below(i)]);
  }
  all.resize(std::max<std::size_t>(1, all.size() * 3 / 4));
  return all;
}

// Largest-remainder apportionment of n items over the mix.
std::array<std::size_t, 5> apportion(const std::array<double, 5>& mix, std::size_t n) {
  std::array<std::size_t, 5> counts{};
  std::array<double, 5> rem{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < 5; ++c) {
    const double exact = mix[c] * static_cast<double>(n);
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    rem[c] = exact - std::floor(exact);
    assigned += counts[c];
  }
  std::array<std::size_t, 5> order = {0, 1, 2, 3, 4};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 5]];
  return counts;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config,
                                          std::uint64_t seed) {
  if (config.n_reviews < 1) throw Error("n_reviews must be at least 1");
  double total = 0;
  for (double m : config.class_mix) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw Error("class_mix entries must be >= 0");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw Error("class_mix must sum to 1 (got " + std::to_string(total) + ")");
  }
  if (config.gold_fraction < 0.0 || config.gold_fraction > 1.0) {
    throw Error("gold_fraction must lie in [0,1]");
  }

  const std::array<std::vector<std::string>, 3> cues = {
      cue_inventory(kPositive, config.vocab_seed, 1),
      cue_inventory(kNeutral, config.vocab_seed, 2),
      cue_inventory(kNegative, config.vocab_seed, 3)};

  Rng rng(derive_seed(seed, 0x5eed));
  const auto counts = apportion(config.class_mix, config.n_reviews);
  std::vector<ClassLabel> classes;
  for (std::size_t c = 0; c < 5; ++c) classes.insert(classes.end(), counts[c], kAllLabels[c]);
  for (std::size_t i = classes.size(); i > 1; --i) {
    std::swap(classes[i - 1], classes[rng.below(i)]);
  }

  std::vector<Review> reviews;
  std::vector<TruthRecord> truth;
  reviews.reserve(config.n_reviews);
  truth.reserve(config.n_reviews);
  const std::size_t id_width = std::max<std::size_t>(6, std::to_string(config.n_reviews).size());
  const std::size_t n_products = std::max<std::size_t>(1, config.n_reviews / 3);

  for (std::size_t i = 0; i < config.n_reviews; ++i) {
    const std::uint64_t review_seed = derive_seed(seed, i + 1);
    Rng r(review_seed);
    const ClassLabel label = classes[i];
    const std::size_t n_sentences = 1 + r.below(5);
    const std::size_t special =
        label == ClassLabel::Other ? n_sentences : r.below(n_sentences);

    std::string body;
    std::size_t body_len = 0;  // in scalars
    std::optional<Span> cue;
    for (std::size_t s = 0; s < n_sentences; ++s) {
      if (s > 0) {
        const std::string_view sep = r.bernoulli(0.15) ? "\n" : " ";
        body += sep;
        body_len += 1;
      }
      std::string sentence;
      std::size_t cue_off = 0, cue_len = 0;
      if (s == special && is_sentiment(label)) {
        const auto& inv = label == ClassLabel::Positive  ? cues[0]
                          : label == ClassLabel::Neutral ? cues[1]
                                                         : cues[2];
        const std::string lead(pick(kLeadIns, r));
        const std::string phrase = inv[r.below(inv.size())];
        sentence = lead + phrase;
        cue_off = unicode::length(lead);
        cue_len = unicode::length(phrase);
      } else if (s == special && label == ClassLabel::DataError) {
        sentence = std::string(pick(kDataError, r));
      } else {
        sentence = std::string(pick(kFiller, r));
      }
      if (r.bernoulli(0.7)) sentence = capitalize(sentence);
      if (cue_len > 0) cue = Span{body_len + cue_off, body_len + cue_off + cue_len};
      const bool last = s + 1 == n_sentences;
      if (!last || r.bernoulli(0.6)) sentence += std::string(pick(kTerminators, r));
      body += sentence;
      body_len += unicode::length(sentence);
    }

    Review rev;
    char id[32];
    std::snprintf(id, sizeof id, "r%0*zu", static_cast<int>(id_width), i + 1);
    rev.review_id = id;
    rev.caption = std::string(pick(kCaptions, r));
    rev.body = std::move(body);
    const std::size_t product = r.below(n_products);
    rev.product_id = "p" + std::to_string(product + 1);
    rev.image_ref = "img/" + rev.product_id + ".jpg";
    rev.language = config.language;
    rev.category = config.category;
    reviews.push_back(std::move(rev));
    truth.push_back({reviews.back().review_id, label, cue, review_seed});
  }

  // Gold subset: seeded choice, kept in corpus order.
  const auto n_gold = static_cast<std::size_t>(
      std::llround(config.gold_fraction * static_cast<double>(config.n_reviews)));
  std::vector<std::size_t> order(config.n_reviews);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  order.resize(n_gold);
  std::sort(order.begin(), order.end());
  std::vector<GoldItem> gold;
  gold.reserve(n_gold);
  for (std::size_t i : order) {
    GoldItem g{truth[i].review_id, truth[i].true_class, {}};
    if (truth[i].cue) g.expert_spans.push_back(*truth[i].cue);
    gold.push_back(std::move(g));
  }

  SyntheticCorpus out;
  out.reviews = ReviewSet(std::move(reviews));
  out.gold = GoldSet(std::move(gold), &out.reviews);
  out.truth = std::move(truth);
  return out;
}

}  // namespace crowdqc
