#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "crowdqc/corpus.hpp"
#include "crowdqc/unicode.hpp"

namespace testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("crowdqc-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  out << data;
}

inline crowdqc::Review review(std::string id, std::string body, std::string caption = "cap") {
  crowdqc::Review r;
  r.review_id = std::move(id);
  r.caption = std::move(caption);
  r.body = std::move(body);
  r.image_ref = "img/" + r.review_id + ".jpg";
  r.language = "en";
  r.category = "shoes";
  r.product_id = "p1";
  return r;
}

/// Reviews r00, r01, ... with the given bodies.
inline crowdqc::ReviewSet review_set(const std::vector<std::string>& bodies) {
  std::vector<crowdqc::Review> v;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "r%02zu", i);
    v.push_back(review(id, bodies[i]));
  }
  return crowdqc::ReviewSet(std::move(v));
}

/// Independent sentence splitter used as an oracle: one character at a time,
/// a sentence ends after a terminator run; whitespace is trimmed.
inline std::vector<std::pair<std::size_t, std::size_t>> naive_sentences(std::u32string_view s) {
  auto term = [](char32_t c) { return c == U'.' || c == U'!' || c == U'?' || c == U'\n'; };
  auto ws = [](char32_t c) { return crowdqc::unicode::is_whitespace(c); };
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    std::size_t j = i;
    while (j < n && !term(s[j])) ++j;
    while (j < n && term(s[j])) ++j;
    std::size_t a = i, b = j;
    while (a < b && ws(s[a])) ++a;
    while (b > a && ws(s[b - 1])) --b;
    if (a < b) out.emplace_back(a, b);
    i = j;
  }
  return out;
}

/// Character-set view of a span list.
inline std::vector<bool> coverage(const crowdqc::SpanList& spans, std::size_t len) {
  std::vector<bool> c(len, false);
  for (const auto& s : spans) {
    for (std::size_t i = s.start; i < s.end && i < len; ++i) c[i] = true;
  }
  return c;
}

/// Maximal runs of covered characters.
inline crowdqc::SpanList runs(const std::vector<bool>& c) {
  crowdqc::SpanList out;
  std::size_t i = 0;
  while (i < c.size()) {
    if (!c[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < c.size() && c[j]) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

}  // namespace testing

#include <Eigen/Dense>
#include <random>

#include "crowdqc/baseline/classifier.hpp"
#include "crowdqc/spantext.hpp"

namespace testing {

/// Intersection and union sizes by explicit character sets.
inline std::pair<std::size_t, std::size_t> brute_iou(const crowdqc::SpanList& a,
                                                     const crowdqc::SpanList& b, std::size_t len) {
  const auto ca = coverage(a, len), cb = coverage(b, len);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < len; ++i) {
    inter += ca[i] && cb[i];
    uni += ca[i] || cb[i];
  }
  return {inter, uni};
}

/// Random span-pair cases where interval IoU disagrees with the brute-force count.
inline std::size_t iou_mismatches(std::size_t cases, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  auto draw = [&](std::size_t len) {
    crowdqc::SpanList v;
    for (std::size_t k = 0, n = g() % 5; k < n; ++k) {
      const std::size_t a = g() % len;
      v.push_back({a, a + 1 + g() % (len - a)});
    }
    return crowdqc::canonicalize(v, len);
  };
  std::size_t bad = 0;
  for (std::size_t i = 0; i < cases; ++i) {
    const std::size_t len = 1 + g() % 200;
    const auto a = draw(len), b = draw(len);
    const auto r = crowdqc::char_iou(a, b);
    const auto [inter, uni] = brute_iou(a, b, len);
    const double ratio = uni ? static_cast<double>(inter) / static_cast<double>(uni)
                             : (a.empty() && b.empty() ? 1.0 : 0.0);
    if (r.intersection_chars != inter || r.union_chars != uni || r.ratio != ratio) ++bad;
  }
  return bad;
}

/// Largest relative deviation between analytic and central-difference
/// gradients of the loss. Covers the class weights, the hidden vector and the
/// input embedding rows of a toy model with `features` features.
inline double gradient_check(std::uint64_t seed, std::size_t features = 10, std::size_t dim = 6) {
  using namespace crowdqc::baseline;
  std::mt19937_64 g(seed);
  std::normal_distribution<double> normal(0.0, 0.7);
  const double h = 1e-5;
  double worst = 0.0;
  auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); };
  ClassMask mask;
  mask.fill(true);

  for (int trial = 0; trial < 5; ++trial) {
    OutputWeights<double> W(kNumTargets, static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < W.size(); ++i) W(i) = normal(g);
    Vector<double> hid(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < hid.size(); ++i) hid(i) = normal(g);
    const auto target = static_cast<Target>(g() % kNumTargets);
    const auto grad = cross_entropy_gradient(W, hid, target, mask);
    auto loss_at = [&](const OutputWeights<double>& w, const Vector<double>& x) {
      return cross_entropy_gradient(w, x, target, mask).loss;
    };
    for (Eigen::Index i = 0; i < W.size(); ++i) {
      auto wp = W, wm = W;
      wp(i) += h;
      wm(i) -= h;
      worst = std::max(worst, rel(grad.d_output(i), (loss_at(wp, hid) - loss_at(wm, hid)) / (2 * h)));
    }
    for (Eigen::Index i = 0; i < hid.size(); ++i) {
      auto xp = hid, xm = hid;
      xp(i) += h;
      xm(i) -= h;
      worst = std::max(worst, rel(grad.d_hidden(i), (loss_at(W, xp) - loss_at(W, xm)) / (2 * h)));
    }

    // Embedding rows: dL/dE_f = d_hidden / n for each of the n features.
    ClassifierConfig cfg;
    cfg.dim = dim;
    cfg.hash_buckets = 1 << 10;
    cfg.seed = seed + static_cast<std::uint64_t>(trial);
    Model model(cfg);
    model.output() = W;
    std::vector<std::uint64_t> f;
    for (std::size_t k = 0; k < features; ++k) f.push_back(g() % cfg.hash_buckets);
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
    const auto eg = cross_entropy_gradient(model.output(), model.hidden(f), target, model.active());
    for (std::uint64_t bucket : f) {
      for (std::size_t k = 0; k < dim; ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        const double orig = model.input().mutable_row(bucket)(idx);
        model.input().mutable_row(bucket)(idx) = orig + h;
        const double lp = model.loss(f, target);
        model.input().mutable_row(bucket)(idx) = orig - h;
        const double lm = model.loss(f, target);
        model.input().mutable_row(bucket)(idx) = orig;
        const double analytic = eg.d_hidden(idx) / static_cast<double>(f.size());
        worst = std::max(worst, rel(analytic, (lp - lm) / (2 * h)));
      }
    }
  }
  return worst;
}

}  // namespace testing
