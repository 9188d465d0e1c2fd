#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "taxoseq/taxonomy.hpp"

namespace taxoseq {

/// Accuracy report over a prediction set. Counts are exact integers; the
/// reported accuracies are their ratios, so no float accumulation happens
/// across documents. Path accuracy (exact match over all levels) is the
/// primary number; per-level accuracies always accompany it.
struct EvalReport {
  std::size_t document_count = 0;
  std::vector<long> level_correct;                       // per level
  long path_correct = 0;
  std::vector<std::vector<std::vector<long>>> confusion;  // [level][gold][pred]

  double level_accuracy(int level) const;
  double path_accuracy() const;

  std::string to_text(const Taxonomy& taxonomy) const;
  /// Machine-readable summary (the same shape as a training-log record).
  nlohmann::json summary_json() const;
  nlohmann::json full_json(const Taxonomy& taxonomy) const;
};

/// Per-level and exact-path accuracy. Throws DataError on length mismatch;
/// every path is validated against the taxonomy's level structure.
EvalReport evaluate(const std::vector<LabelPath>& predictions,
                    const std::vector<LabelPath>& gold,
                    const Taxonomy& taxonomy);

}  // namespace taxoseq
