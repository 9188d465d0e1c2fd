#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "taxoseq/config.hpp"
#include "taxoseq/corpus.hpp"
#include "taxoseq/metrics.hpp"
#include "taxoseq/training.hpp"

namespace taxoseq {

/// Command implementations behind the CLI. Each prints a human-readable
/// report to `log` and returns its outcome for callers that want the data.
/// Errors surface as ConfigError / DataError / NumericError.

struct ValidationReport {
  std::size_t documents = 0;
  std::vector<RowRejection> rejections;
  std::vector<std::string> missing_definitions;  // "level/class"
  std::vector<std::string> definition_warnings;
  std::size_t distinct_tokens = 0;
  std::size_t distinct_tokens_in_vocabulary = 0;
  std::size_t token_occurrences = 0;
  std::size_t token_occurrences_in_vocabulary = 0;

  double oov_rate_types() const;
  double oov_rate_occurrences() const;
  nlohmann::json to_json() const;
};

ValidationReport cmd_data_validate(const RunConfig& config, std::ostream& log);

/// Builds the CDV store from definitions and writes it under out_dir.
/// Returns the written path.
std::string cmd_cdv_build(const RunConfig& config, std::ostream& log);

struct TrainOutcome {
  std::string checkpoint_path;
  std::string log_path;
  FitResult fit;
};

TrainOutcome cmd_train(const RunConfig& config, std::ostream& log);

EvalReport cmd_eval(const RunConfig& config, std::ostream& log);

struct PredictOutcome {
  std::string output_path;
  std::size_t records = 0;
  std::vector<RowRejection> rejected;
};

PredictOutcome cmd_predict(const RunConfig& config,
                           const std::string& input_path, std::ostream& log);

}  // namespace taxoseq
