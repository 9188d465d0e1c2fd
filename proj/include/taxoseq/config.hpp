#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "taxoseq/decode.hpp"
#include "taxoseq/embeddings.hpp"
#include "taxoseq/training.hpp"

namespace taxoseq {

/// One config file drives every command; command-line flags may override
/// any scalar field (the flag wins). Relative paths are resolved against
/// the config file's directory. Unknown keys are rejected.
struct RunConfig {
  int config_version = 1;
  std::uint64_t seed = 1;

  struct Paths {
    std::string taxonomy;
    std::string dataset;  // single file split by ratios; or use the three below
    std::string train;
    std::string validation;
    std::string test;
    std::string embeddings;
    std::string definitions;
    std::string cdv_store;   // optional prebuilt store
    std::string checkpoint;  // for eval / predict
    std::string out_dir = "out";
  } paths;

  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  std::optional<std::size_t> embedding_limit;
  MeanDenominator mean_denominator = MeanDenominator::kAll;

  TrainConfig train;
  DecodeConfig decode;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_json(const nlohmann::json& doc,
                             const std::string& base_dir);
  nlohmann::json to_json() const;
};

DecodeMode parse_decode_mode(const std::string& text);
const char* to_string(DecodeMode mode);
const char* to_string(CdSign sign);
const char* to_string(CdCarry carry);
const char* to_string(ClipMode mode);
const char* to_string(MeanDenominator denominator);

}  // namespace taxoseq
