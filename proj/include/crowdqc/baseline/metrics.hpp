#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace crowdqc::baseline {

using ConfusionMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  std::vector<std::string> class_names;
  std::vector<ClassMetrics> per_class;
  /// Support-weighted means over classes with support > 0; `support` is the
  /// total number of rows.
  ClassMetrics weighted;
  double accuracy = 0.0;
  ConfusionMatrix confusion;  // rows: true class, columns: predicted
};

/// Per-class and weighted precision/recall/F1. F1 is 0 when P + R = 0 and
/// precision is 0 for a class that is never predicted.
MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion,
                                     std::vector<std::string> class_names = {});

/// Recomputes the weighted average from per-class values and supports.
ClassMetrics weighted_average(const std::vector<ClassMetrics>& per_class);

}  // namespace crowdqc::baseline
