#include "crowdqc/baseline/metrics.hpp"

#include "crowdqc/error.hpp"

namespace crowdqc::baseline {

ClassMetrics weighted_average(const std::vector<ClassMetrics>& per_class) {
  ClassMetrics w;
  for (const ClassMetrics& c : per_class) {
    const auto s = static_cast<double>(c.support);
    w.precision += c.precision * s;
    w.recall += c.recall * s;
    w.f1 += c.f1 * s;
    w.support += c.support;
  }
  if (w.support > 0) {
    const auto total = static_cast<double>(w.support);
    w.precision /= total;
    w.recall /= total;
    w.f1 /= total;
  }
  return w;
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion,
                                     std::vector<std::string> class_names) {
  if (confusion.rows() != confusion.cols() || confusion.rows() == 0) {
    throw Error("confusion matrix must be square and non-empty");
  }
  if ((confusion.array() < 0).any()) throw Error("negative confusion count");
  const Eigen::Index k = confusion.rows();
  if (class_names.empty()) {
    for (Eigen::Index c = 0; c < k; ++c) class_names.push_back(std::to_string(c));
  }
  MetricsReport r;
  r.class_names = std::move(class_names);
  r.confusion = confusion;
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> truth = confusion.rowwise().sum();
  const Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic> predicted = confusion.colwise().sum();
  const std::int64_t total = confusion.sum();
  if (total == 0) throw Error("empty test set");
  for (Eigen::Index c = 0; c < k; ++c) {
    ClassMetrics m;
    const auto tp = static_cast<double>(confusion(c, c));
    m.support = static_cast<std::size_t>(truth(c));
    m.precision = predicted(c) > 0 ? tp / static_cast<double>(predicted(c)) : 0.0;
    m.recall = truth(c) > 0 ? tp / static_cast<double>(truth(c)) : 0.0;
    m.f1 = m.precision + m.recall > 0
               ? 2 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    r.per_class.push_back(m);
  }
  r.weighted = weighted_average(r.per_class);
  r.accuracy = static_cast<double>(confusion.trace()) / static_cast<double>(total);
  return r;
}

}  // namespace crowdqc::baseline
