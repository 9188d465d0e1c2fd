#include "taxoseq/metrics.hpp"

#include <iomanip>
#include <sstream>

#include "taxoseq/errors.hpp"

namespace taxoseq {

double EvalReport::level_accuracy(int level) const {
  if (document_count == 0) return 0.0;
  return static_cast<double>(level_correct.at(level)) /
         static_cast<double>(document_count);
}

double EvalReport::path_accuracy() const {
  if (document_count == 0) return 0.0;
  return static_cast<double>(path_correct) /
         static_cast<double>(document_count);
}

std::string EvalReport::to_text(const Taxonomy& taxonomy) const {
  std::ostringstream out;
  out << "evaluation report\n";
  out << "  metric: path accuracy (exact match across all levels), with "
         "per-level accuracy alongside.\n";
  out << "  note: metric granularity is specific to this tool; numbers are "
         "not directly comparable to externally reported accuracies.\n";
  out << "  documents: " << document_count << '\n';
  out << std::fixed << std::setprecision(4);
  for (std::size_t level = 0; level < level_correct.size(); ++level) {
    out << "  level " << level << " (" << taxonomy.level_name((int)level)
        << ") accuracy: " << level_accuracy((int)level) << " ("
        << level_correct[level] << "/" << document_count << ")\n";
  }
  out << "  path accuracy: " << path_accuracy() << " (" << path_correct << "/"
      << document_count << ")\n";
  return out.str();
}

nlohmann::json EvalReport::summary_json() const {
  nlohmann::json level_acc = nlohmann::json::array();
  for (std::size_t level = 0; level < level_correct.size(); ++level) {
    level_acc.push_back(level_accuracy(static_cast<int>(level)));
  }
  return nlohmann::json{{"type", "eval"},
                        {"documents", document_count},
                        {"level_accuracy", level_acc},
                        {"level_correct", level_correct},
                        {"path_accuracy", path_accuracy()},
                        {"path_correct", path_correct}};
}

nlohmann::json EvalReport::full_json(const Taxonomy& taxonomy) const {
  auto doc = summary_json();
  nlohmann::json confusion_json = nlohmann::json::array();
  for (std::size_t level = 0; level < confusion.size(); ++level) {
    confusion_json.push_back(
        nlohmann::json{{"level", level},
                       {"classes", taxonomy.classes(static_cast<int>(level))},
                       {"counts", confusion[level]}});
  }
  doc["confusion"] = std::move(confusion_json);
  return doc;
}

EvalReport evaluate(const std::vector<LabelPath>& predictions,
                    const std::vector<LabelPath>& gold,
                    const Taxonomy& taxonomy) {
  if (predictions.size() != gold.size()) {
    throw DataError("evaluate: " + std::to_string(predictions.size()) +
                    " predictions vs " + std::to_string(gold.size()) +
                    " gold paths");
  }
  const int levels = taxonomy.num_levels();
  EvalReport report;
  report.document_count = predictions.size();
  report.level_correct.assign(levels, 0);
  report.confusion.resize(levels);
  for (int j = 0; j < levels; ++j) {
    report.confusion[j].assign(taxonomy.level_size(j),
                               std::vector<long>(taxonomy.level_size(j), 0));
  }

  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto check = [&](const LabelPath& path, const char* which) {
      if (static_cast<int>(path.size()) != levels) {
        throw DataError(std::string("evaluate: ") + which + " path " +
                        std::to_string(i) + " has wrong length");
      }
      for (int j = 0; j < levels; ++j) {
        if (path[j].level != j || path[j].index < 0 ||
            path[j].index >= taxonomy.level_size(j)) {
          throw DataError(std::string("evaluate: ") + which + " path " +
                          std::to_string(i) + " is invalid at level " +
                          std::to_string(j));
        }
      }
    };
    check(predictions[i], "predicted");
    check(gold[i], "gold");

    bool all_match = true;
    for (int j = 0; j < levels; ++j) {
      const bool match = predictions[i][j].index == gold[i][j].index;
      if (match) ++report.level_correct[j];
      all_match = all_match && match;
      ++report.confusion[j][gold[i][j].index][predictions[i][j].index];
    }
    if (all_match) ++report.path_correct;
  }
  return report;
}

}  // namespace taxoseq
