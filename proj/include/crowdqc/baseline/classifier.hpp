#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "crowdqc/baseline/metrics.hpp"
#include "crowdqc/baseline/text_features.hpp"
#include "crowdqc/error.hpp"
#include "crowdqc/rng.hpp"
#include "crowdqc/unicode.hpp"

namespace crowdqc::baseline {

struct ClassifierConfig {
  std::size_t epochs = 25;
  std::size_t word_ngrams = 3;
  std::size_t dim = 50;
  std::uint64_t hash_buckets = std::uint64_t{1} << 20;
  double learning_rate = 0.1;  // decays linearly to 0 over all updates
  std::optional<SubwordRange> subwords;
  std::optional<std::filesystem::path> pretrained_vectors;
  std::uint64_t seed = 1;

  void validate() const;
  FeatureConfig features() const { return {word_ngrams, hash_buckets, subwords}; }
};

using ClassMask = std::array<bool, kNumTargets>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using OutputWeights = Eigen::Matrix<Scalar, static_cast<int>(kNumTargets), Eigen::Dynamic>;
template <typename Scalar>
using ClassScores = Eigen::Matrix<Scalar, static_cast<int>(kNumTargets), 1>;

/// Softmax over the unmasked classes; masked classes get probability 0.
template <typename Derived>
ClassScores<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits,
                                              const ClassMask& mask) {
  using S = typename Derived::Scalar;
  S max = -std::numeric_limits<S>::infinity();
  for (std::size_t c = 0; c < kNumTargets; ++c) {
    if (mask[c]) max = std::max(max, logits(static_cast<Eigen::Index>(c)));
  }
  ClassScores<S> p;
  S sum = 0;
  for (std::size_t c = 0; c < kNumTargets; ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    p(i) = mask[c] ? std::exp(logits(i) - max) : S(0);
    sum += p(i);
  }
  return p / sum;
}

template <typename Scalar>
struct LossGradient {
  Scalar loss = 0;
  OutputWeights<Scalar> d_output;  // dL/dW
  Vector<Scalar> d_hidden;         // dL/dh
};

/// Cross-entropy of softmax(W h) against `target`, with gradients.
template <typename Scalar>
LossGradient<Scalar> cross_entropy_gradient(const OutputWeights<Scalar>& output,
                                            const Vector<Scalar>& hidden, Target target,
                                            const ClassMask& mask) {
  const ClassScores<Scalar> p = softmax(output * hidden, mask);
  ClassScores<Scalar> g = p;
  const auto t = static_cast<Eigen::Index>(index_of(target));
  g(t) -= Scalar(1);
  LossGradient<Scalar> out;
  out.loss = -std::log(std::max(p(t), std::numeric_limits<Scalar>::min()));
  out.d_output = g * hidden.transpose();
  out.d_hidden = output.transpose() * g;
  return out;
}

/// Hashed input embeddings of shape buckets x dim, stored sparsely.
///
/// A row that was never written holds a fixed pseudo-random value in
/// [-1/dim, 1/dim] derived from (seed, bucket), so the table behaves like a
/// dense, fully initialized matrix while only touched rows use memory.
template <typename Scalar>
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::uint64_t buckets, std::size_t dim, std::uint64_t seed)
      : buckets_(buckets), dim_(dim), seed_(seed) {}

  std::uint64_t buckets() const { return buckets_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t materialized() const { return keys_.size(); }
  std::span<const std::uint64_t> keys() const { return keys_; }
  bool contains(std::uint64_t bucket) const { return slot_.count(bucket) > 0; }

  void add_row_to(std::uint64_t bucket, Eigen::Ref<Vector<Scalar>> acc) const {
    auto it = slot_.find(bucket);
    if (it != slot_.end()) {
      acc += Eigen::Map<const Vector<Scalar>>(data_.data() + it->second * dim_,
                                              static_cast<Eigen::Index>(dim_));
      return;
    }
    const std::uint64_t base = derive_seed(seed_, bucket);
    for (std::size_t k = 0; k < dim_; ++k) acc(static_cast<Eigen::Index>(k)) += initial(base, k);
  }

  Vector<Scalar> row(std::uint64_t bucket) const {
    Vector<Scalar> v = Vector<Scalar>::Zero(static_cast<Eigen::Index>(dim_));
    add_row_to(bucket, v);
    return v;
  }

  /// Writable view of a row; materializes it on first access. The view is
  /// invalidated by the next call that materializes another row.
  Eigen::Map<Vector<Scalar>> mutable_row(std::uint64_t bucket) {
    auto [it, inserted] = slot_.try_emplace(bucket, keys_.size());
    if (inserted) {
      keys_.push_back(bucket);
      const std::uint64_t base = derive_seed(seed_, bucket);
      for (std::size_t k = 0; k < dim_; ++k) data_.push_back(initial(base, k));
    }
    return Eigen::Map<Vector<Scalar>>(data_.data() + it->second * dim_,
                                      static_cast<Eigen::Index>(dim_));
  }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    if (a.buckets_ != b.buckets_ || a.dim_ != b.dim_ || a.seed_ != b.seed_ ||
        a.keys_.size() != b.keys_.size()) {
      return false;
    }
    for (std::uint64_t key : a.keys_) {
      if (!b.contains(key) || a.row(key) != b.row(key)) return false;
    }
    return true;
  }

 private:
  Scalar initial(std::uint64_t base, std::size_t k) const {
    const double u = static_cast<double>(mix64(base + k) >> 11) * 0x1.0p-53;
    const double bound = 1.0 / static_cast<double>(dim_);
    return static_cast<Scalar>((2.0 * u - 1.0) * bound);
  }

  std::uint64_t buckets_ = 1;
  std::size_t dim_ = 1;
  std::uint64_t seed_ = 0;
  std::unordered_map<std::uint64_t, std::size_t> slot_;
  std::vector<std::uint64_t> keys_;
  std::vector<Scalar> data_;
};

/// Bag-of-n-grams linear classifier: averaged hashed embeddings followed by
/// a softmax over the four target classes.
template <typename Scalar>
class BasicModel {
 public:
  BasicModel() = default;
  explicit BasicModel(ClassifierConfig config)
      : config_(std::move(config)),
        input_(config_.hash_buckets, config_.dim, derive_seed(config_.seed, 0x1a7e)),
        output_(OutputWeights<Scalar>::Zero(kNumTargets, static_cast<Eigen::Index>(config_.dim))) {
    active_.fill(true);
  }

  const ClassifierConfig& config() const { return config_; }
  EmbeddingTable<Scalar>& input() { return input_; }
  const EmbeddingTable<Scalar>& input() const { return input_; }
  OutputWeights<Scalar>& output() { return output_; }
  const OutputWeights<Scalar>& output() const { return output_; }
  ClassMask& active() { return active_; }
  const ClassMask& active() const { return active_; }
  std::set<std::string>& vocabulary() { return vocabulary_; }
  const std::set<std::string>& vocabulary() const { return vocabulary_; }
  /// Free-form key/value pairs persisted with the model (e.g. dataset mode).
  std::map<std::string, std::string>& metadata() { return metadata_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  std::vector<std::uint64_t> featurize(const Example& e) const {
    const auto tokens = example_tokens(e);
    return baseline::featurize(tokens, config_.features());
  }

  /// Mean of the feature embeddings; zero for an empty feature list.
  Vector<Scalar> hidden(std::span<const std::uint64_t> features) const {
    Vector<Scalar> h = Vector<Scalar>::Zero(static_cast<Eigen::Index>(config_.dim));
    if (features.empty()) return h;
    for (std::uint64_t f : features) input_.add_row_to(f, h);
    h /= static_cast<Scalar>(features.size());
    return h;
  }

  ClassScores<Scalar> probabilities(std::span<const std::uint64_t> features) const {
    return softmax(output_ * hidden(features), active_);
  }

  Scalar loss(std::span<const std::uint64_t> features, Target target) const {
    const auto p = probabilities(features);
    return -std::log(std::max(p(static_cast<Eigen::Index>(index_of(target))),
                              std::numeric_limits<Scalar>::min()));
  }

  /// Most probable active class; ties go to the lowest class index.
  Target predict(std::span<const std::uint64_t> features) const {
    const auto p = probabilities(features);
    std::size_t best = kNumTargets;
    for (std::size_t c = 0; c < kNumTargets; ++c) {
      if (!active_[c]) continue;
      if (best == kNumTargets || p(static_cast<Eigen::Index>(c)) > p(static_cast<Eigen::Index>(best))) {
        best = c;
      }
    }
    return static_cast<Target>(best);
  }

  Target predict(const Example& e) const { return predict(featurize(e)); }

  friend bool operator==(const BasicModel& a, const BasicModel& b) {
    return a.active_ == b.active_ && a.vocabulary_ == b.vocabulary_ &&
           a.metadata_ == b.metadata_ && a.output_ == b.output_ && a.input_ == b.input_;
  }

 private:
  ClassifierConfig config_;
  EmbeddingTable<Scalar> input_;
  OutputWeights<Scalar> output_;
  ClassMask active_{};
  std::set<std::string> vocabulary_;
  std::map<std::string, std::string> metadata_;
};

using Model = BasicModel<double>;

/// Plain-text vectors: "token v1 v2 ... vdim" per line. A leading
/// "count dim" header line is skipped. Throws on unreadable files or
/// dimension mismatch.
std::unordered_map<std::string, std::vector<double>> load_vectors(
    const std::filesystem::path& path, std::size_t dim);

struct TrainingLog {
  std::vector<double> epoch_loss;  // mean loss over the epoch's updates
  std::vector<std::string> warnings;
};

/// SGD on softmax cross-entropy, one shuffled pass per epoch.
template <typename Scalar = double>
BasicModel<Scalar> train(std::span<const Example> examples, const ClassifierConfig& config,
                         TrainingLog* log = nullptr) {
  config.validate();
  if (examples.empty()) throw Error("cannot train on an empty dataset");
  BasicModel<Scalar> model(config);
  TrainingLog local;
  TrainingLog& out = log ? *log : local;

  std::vector<std::vector<std::uint64_t>> features;
  features.reserve(examples.size());
  std::array<std::size_t, kNumTargets> per_class{};
  for (const Example& e : examples) {
    const auto tokens = example_tokens(e);
    for (const auto& t : tokens) {
      if (t != kCaptionSeparator) model.vocabulary().insert(t);
    }
    features.push_back(baseline::featurize(tokens, config.features()));
    ++per_class[index_of(e.label)];
  }
  for (std::size_t c = 0; c < kNumTargets; ++c) {
    model.active()[c] = per_class[c] > 0;
    if (!model.active()[c]) {
      out.warnings.push_back("class " + std::string(to_string(static_cast<Target>(c))) +
                             " has no training rows and is dropped");
    }
  }

  if (config.pretrained_vectors) {
    const auto vectors = load_vectors(*config.pretrained_vectors, config.dim);
    for (const std::string& token : model.vocabulary()) {
      auto it = vectors.find(token);
      if (it == vectors.end()) continue;
      auto row = model.input().mutable_row(feature_bucket(token, config.hash_buckets));
      for (std::size_t k = 0; k < config.dim; ++k) {
        row(static_cast<Eigen::Index>(k)) = static_cast<Scalar>(it->second[k]);
      }
    }
  }

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const double total_steps = static_cast<double>(config.epochs * examples.size());
  std::size_t step = 0;
  Rng rng(derive_seed(config.seed, 0x5f0f));
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    std::size_t updates = 0;
    for (std::size_t idx : order) {
      const auto lr = static_cast<Scalar>(
          config.learning_rate * (1.0 - static_cast<double>(step++) / total_steps));
      const auto& f = features[idx];
      if (f.empty()) continue;
      const Vector<Scalar> h = model.hidden(f);
      const auto grad = cross_entropy_gradient(model.output(), h, examples[idx].label,
                                               model.active());
      epoch_loss += static_cast<double>(grad.loss);
      ++updates;
      model.output().noalias() -= lr * grad.d_output;
      const Vector<Scalar> step_vec = (lr / static_cast<Scalar>(f.size())) * grad.d_hidden;
      for (std::uint64_t bucket : f) model.input().mutable_row(bucket) -= step_vec;
    }
    out.epoch_loss.push_back(updates ? epoch_loss / static_cast<double>(updates) : 0.0);
  }
  return model;
}

template <typename Scalar>
std::vector<Target> predict_all(const BasicModel<Scalar>& model,
                                std::span<const Example> examples) {
  std::vector<Target> out;
  out.reserve(examples.size());
  for (const Example& e : examples) out.push_back(model.predict(e));
  return out;
}

std::vector<std::string> target_names();

MetricsReport evaluate_predictions(std::span<const Example> examples,
                                   std::span<const Target> predicted);

template <typename Scalar>
MetricsReport evaluate(const BasicModel<Scalar>& model, std::span<const Example> examples) {
  if (examples.empty()) throw Error("cannot evaluate on an empty test set");
  const auto predicted = predict_all(model, examples);
  return evaluate_predictions(examples, predicted);
}

/// Mean scalar length of misclassified rows over that of correct rows.
/// Empty when either group is empty.
std::optional<double> error_length_ratio(std::span<const Example> examples,
                                         std::span<const Target> predicted);

template <typename Scalar>
std::optional<double> error_length_analysis(const BasicModel<Scalar>& model,
                                            std::span<const Example> examples) {
  const auto predicted = predict_all(model, examples);
  return error_length_ratio(examples, predicted);
}

// ---------------------------------------------------------------------------
// Model file: little-endian binary, magic "CQCM", version 1.

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error("truncated model file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const std::uint64_t n = get_u64(in);
  if (n > (std::uint64_t{1} << 32)) throw Error("corrupt model file");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw Error("truncated model file");
  return s;
}

template <typename Scalar>
void put_scalar(std::ostream& out, Scalar v) {
  if constexpr (sizeof(Scalar) == 8) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
  } else {
    put_u64(out, std::bit_cast<std::uint32_t>(v));
  }
}

template <typename Scalar>
Scalar get_scalar(std::istream& in) {
  const std::uint64_t v = get_u64(in);
  if constexpr (sizeof(Scalar) == 8) {
    return std::bit_cast<Scalar>(v);
  } else {
    return std::bit_cast<Scalar>(static_cast<std::uint32_t>(v));
  }
}

inline constexpr std::uint64_t kModelMagic = 0x4d435143;  // "CQCM"
inline constexpr std::uint64_t kModelVersion = 1;

}  // namespace detail

template <typename Scalar>
void write_model(std::ostream& out, const BasicModel<Scalar>& model) {
  using namespace detail;
  const ClassifierConfig& c = model.config();
  put_u64(out, kModelMagic);
  put_u64(out, kModelVersion);
  put_u64(out, sizeof(Scalar));
  put_u64(out, c.epochs);
  put_u64(out, c.word_ngrams);
  put_u64(out, c.dim);
  put_u64(out, c.hash_buckets);
  put_u64(out, std::bit_cast<std::uint64_t>(c.learning_rate));
  put_u64(out, c.subwords ? 1 : 0);
  put_u64(out, c.subwords ? c.subwords->min : 0);
  put_u64(out, c.subwords ? c.subwords->max : 0);
  put_u64(out, c.seed);
  for (bool a : model.active()) put_u64(out, a ? 1 : 0);
  put_u64(out, model.metadata().size());
  for (const auto& [k, v] : model.metadata()) {
    put_string(out, k);
    put_string(out, v);
  }
  put_u64(out, model.vocabulary().size());
  for (const auto& token : model.vocabulary()) put_string(out, token);
  for (Eigen::Index j = 0; j < model.output().cols(); ++j) {
    for (Eigen::Index i = 0; i < model.output().rows(); ++i) put_scalar(out, model.output()(i, j));
  }
  std::vector<std::uint64_t> keys(model.input().keys().begin(), model.input().keys().end());
  std::sort(keys.begin(), keys.end());
  put_u64(out, keys.size());
  for (std::uint64_t key : keys) {
    put_u64(out, key);
    const auto row = model.input().row(key);
    for (Eigen::Index k = 0; k < row.size(); ++k) put_scalar(out, row(k));
  }
  if (!out) throw Error("model write failed");
}

template <typename Scalar>
BasicModel<Scalar> read_model(std::istream& in) {
  using namespace detail;
  if (get_u64(in) != kModelMagic) throw Error("not a model file");
  if (get_u64(in) != kModelVersion) throw Error("unsupported model version");
  if (get_u64(in) != sizeof(Scalar)) throw Error("model scalar type mismatch");
  ClassifierConfig c;
  c.epochs = get_u64(in);
  c.word_ngrams = get_u64(in);
  c.dim = get_u64(in);
  c.hash_buckets = get_u64(in);
  c.learning_rate = std::bit_cast<double>(get_u64(in));
  const bool has_sub = get_u64(in) != 0;
  const std::size_t smin = get_u64(in), smax = get_u64(in);
  if (has_sub) c.subwords = SubwordRange{smin, smax};
  c.seed = get_u64(in);
  c.validate();
  BasicModel<Scalar> model(c);
  for (bool& a : model.active()) a = get_u64(in) != 0;
  const std::uint64_t n_meta = get_u64(in);
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string k = get_string(in);
    model.metadata()[k] = get_string(in);
  }
  const std::uint64_t n_vocab = get_u64(in);
  for (std::uint64_t i = 0; i < n_vocab; ++i) model.vocabulary().insert(get_string(in));
  for (Eigen::Index j = 0; j < model.output().cols(); ++j) {
    for (Eigen::Index i = 0; i < model.output().rows(); ++i) {
      model.output()(i, j) = get_scalar<Scalar>(in);
    }
  }
  const std::uint64_t n_rows = get_u64(in);
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    const std::uint64_t key = get_u64(in);
    if (key >= c.hash_buckets) throw Error("corrupt model file: bucket out of range");
    auto row = model.input().mutable_row(key);
    for (Eigen::Index k = 0; k < row.size(); ++k) row(k) = get_scalar<Scalar>(in);
  }
  for (const Scalar w : model.output().reshaped()) {
    if (!std::isfinite(w)) throw Error("corrupt model file: non-finite weight");
  }
  return model;
}

template <typename Scalar>
void save_model(const std::filesystem::path& path, const BasicModel<Scalar>& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_model(out, model);
}

template <typename Scalar = double>
BasicModel<Scalar> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_model<Scalar>(in);
}

}  // namespace crowdqc::baseline
