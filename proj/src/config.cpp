#include "taxoseq/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "taxoseq/errors.hpp"

namespace taxoseq {

namespace {

template <typename T>
void read_field(const nlohmann::json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: field '") + key +
                      "' has the wrong type");
  }
}

void check_keys(const nlohmann::json& doc, const std::set<std::string>& known,
                const std::string& where) {
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

std::string read_enum(const nlohmann::json& doc, const char* key,
                      const std::string& fallback) {
  std::string out = fallback;
  read_field(doc, key, out);
  return out;
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

DecodeMode parse_decode_mode(const std::string& text) {
  if (text == "greedy") return DecodeMode::kGreedy;
  if (text == "beam") return DecodeMode::kBeam;
  if (text == "adapted_beam") return DecodeMode::kAdaptedBeam;
  throw ConfigError("config: unknown decode mode '" + text +
                    "' (expected greedy, beam or adapted_beam)");
}

const char* to_string(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kGreedy: return "greedy";
    case DecodeMode::kBeam: return "beam";
    case DecodeMode::kAdaptedBeam: return "adapted_beam";
  }
  return "?";
}

const char* to_string(CdSign sign) {
  return sign == CdSign::kSimilarity ? "similarity" : "negated";
}

const char* to_string(CdCarry carry) {
  return carry == CdCarry::kAccumulate ? "accumulate" : "step_only";
}

const char* to_string(ClipMode mode) {
  return mode == ClipMode::kNorm ? "norm" : "value";
}

const char* to_string(MeanDenominator denominator) {
  return denominator == MeanDenominator::kAll ? "all" : "known";
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: '" + path + "': " + e.what());
  }
  return from_json(doc, std::filesystem::path(path).parent_path().string());
}

RunConfig RunConfig::from_json(const nlohmann::json& doc,
                               const std::string& base_dir) {
  check_keys(doc,
             {"config_version", "seed", "paths", "split_ratios",
              "embedding_limit", "mean_denominator", "train", "decode"},
             "the top level");

  RunConfig config;
  read_field(doc, "config_version", config.config_version);
  if (config.config_version != 1) {
    throw ConfigError("config: unsupported config_version " +
                      std::to_string(config.config_version));
  }
  read_field(doc, "seed", config.seed);

  if (doc.contains("paths")) {
    const auto& paths = doc.at("paths");
    check_keys(paths,
               {"taxonomy", "dataset", "train", "validation", "test",
                "embeddings", "definitions", "cdv_store", "checkpoint",
                "out_dir"},
               "'paths'");
    read_field(paths, "taxonomy", config.paths.taxonomy);
    read_field(paths, "dataset", config.paths.dataset);
    read_field(paths, "train", config.paths.train);
    read_field(paths, "validation", config.paths.validation);
    read_field(paths, "test", config.paths.test);
    read_field(paths, "embeddings", config.paths.embeddings);
    read_field(paths, "definitions", config.paths.definitions);
    read_field(paths, "cdv_store", config.paths.cdv_store);
    read_field(paths, "checkpoint", config.paths.checkpoint);
    read_field(paths, "out_dir", config.paths.out_dir);
    for (auto* field :
         {&config.paths.taxonomy, &config.paths.dataset, &config.paths.train,
          &config.paths.validation, &config.paths.test,
          &config.paths.embeddings, &config.paths.definitions,
          &config.paths.cdv_store, &config.paths.checkpoint,
          &config.paths.out_dir}) {
      *field = resolve(base_dir, *field);
    }
  }

  if (doc.contains("split_ratios")) {
    const auto ratios = doc.at("split_ratios").get<std::vector<double>>();
    if (ratios.size() != 3) {
      throw ConfigError("config: split_ratios must have 3 entries");
    }
    config.split_ratios = {ratios[0], ratios[1], ratios[2]};
  }
  if (doc.contains("embedding_limit")) {
    const auto limit = doc.at("embedding_limit").get<std::size_t>();
    if (limit > 0) config.embedding_limit = limit;
  }
  const std::string denom = read_enum(doc, "mean_denominator", "all");
  if (denom == "all") {
    config.mean_denominator = MeanDenominator::kAll;
  } else if (denom == "known") {
    config.mean_denominator = MeanDenominator::kKnown;
  } else {
    throw ConfigError("config: mean_denominator must be 'all' or 'known'");
  }

  bool decode_pnc_given = false;
  if (doc.contains("train")) {
    const auto& train = doc.at("train");
    check_keys(train,
               {"hidden_units", "embedding_dim", "batch_size", "adam_beta1",
                "adam_beta2", "adam_epsilon", "learning_rate",
                "lr_decay_factor", "lr_patience_epochs", "dropout",
                "grad_clip", "max_epochs", "aux_interleave_period",
                "pnc_enabled", "aux_enabled", "clip_mode", "aux_start_task",
                "log_timings"},
               "'train'");
    read_field(train, "hidden_units", config.train.hidden_units);
    read_field(train, "embedding_dim", config.train.embedding_dim);
    read_field(train, "batch_size", config.train.batch_size);
    read_field(train, "adam_beta1", config.train.adam_beta1);
    read_field(train, "adam_beta2", config.train.adam_beta2);
    read_field(train, "adam_epsilon", config.train.adam_epsilon);
    read_field(train, "learning_rate", config.train.learning_rate);
    read_field(train, "lr_decay_factor", config.train.lr_decay_factor);
    read_field(train, "lr_patience_epochs", config.train.lr_patience_epochs);
    read_field(train, "dropout", config.train.dropout);
    read_field(train, "grad_clip", config.train.grad_clip);
    read_field(train, "max_epochs", config.train.max_epochs);
    read_field(train, "aux_interleave_period",
               config.train.aux_interleave_period);
    read_field(train, "pnc_enabled", config.train.pnc_enabled);
    read_field(train, "aux_enabled", config.train.aux_enabled);
    const std::string clip = read_enum(train, "clip_mode", "norm");
    if (clip == "norm") {
      config.train.clip_mode = ClipMode::kNorm;
    } else if (clip == "value") {
      config.train.clip_mode = ClipMode::kValue;
    } else {
      throw ConfigError("config: clip_mode must be 'norm' or 'value'");
    }
    const std::string start = read_enum(train, "aux_start_task", "main");
    if (start == "main") {
      config.train.aux_start_task = TrainTask::kMain;
    } else if (start == "aux") {
      config.train.aux_start_task = TrainTask::kAux;
    } else {
      throw ConfigError("config: aux_start_task must be 'main' or 'aux'");
    }
    read_field(train, "log_timings", config.train.log_timings);
  }
  config.train.seed = config.seed;

  if (doc.contains("decode")) {
    const auto& decode = doc.at("decode");
    check_keys(decode,
               {"mode", "beam_size", "lambda", "cd_sign", "cd_carry",
                "pnc_enabled"},
               "'decode'");
    config.decode.mode =
        parse_decode_mode(read_enum(decode, "mode", "greedy"));
    read_field(decode, "beam_size", config.decode.beam_size);
    read_field(decode, "lambda", config.decode.lambda);
    const std::string sign = read_enum(decode, "cd_sign", "similarity");
    if (sign == "similarity") {
      config.decode.cd_sign = CdSign::kSimilarity;
    } else if (sign == "negated") {
      config.decode.cd_sign = CdSign::kNegated;
    } else {
      throw ConfigError("config: cd_sign must be 'similarity' or 'negated'");
    }
    const std::string carry = read_enum(decode, "cd_carry", "accumulate");
    if (carry == "accumulate") {
      config.decode.cd_carry = CdCarry::kAccumulate;
    } else if (carry == "step_only") {
      config.decode.cd_carry = CdCarry::kStepOnly;
    } else {
      throw ConfigError("config: cd_carry must be 'accumulate' or 'step_only'");
    }
    if (decode.contains("pnc_enabled")) {
      decode_pnc_given = true;
      read_field(decode, "pnc_enabled", config.decode.pnc_enabled);
    }
  }
  if (!decode_pnc_given) {
    config.decode.pnc_enabled = config.train.pnc_enabled;
  }
  return config;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json limit = nullptr;
  if (embedding_limit) limit = *embedding_limit;
  return nlohmann::json{
      {"config_version", config_version},
      {"seed", seed},
      {"paths",
       {{"taxonomy", paths.taxonomy},
        {"dataset", paths.dataset},
        {"train", paths.train},
        {"validation", paths.validation},
        {"test", paths.test},
        {"embeddings", paths.embeddings},
        {"definitions", paths.definitions},
        {"cdv_store", paths.cdv_store},
        {"checkpoint", paths.checkpoint},
        {"out_dir", paths.out_dir}}},
      {"split_ratios", split_ratios},
      {"embedding_limit", limit},
      {"mean_denominator", to_string(mean_denominator)},
      {"train",
       {{"hidden_units", train.hidden_units},
        {"embedding_dim", train.embedding_dim},
        {"batch_size", train.batch_size},
        {"adam_beta1", train.adam_beta1},
        {"adam_beta2", train.adam_beta2},
        {"adam_epsilon", train.adam_epsilon},
        {"learning_rate", train.learning_rate},
        {"lr_decay_factor", train.lr_decay_factor},
        {"lr_patience_epochs", train.lr_patience_epochs},
        {"dropout", train.dropout},
        {"grad_clip", train.grad_clip},
        {"max_epochs", train.max_epochs},
        {"aux_interleave_period", train.aux_interleave_period},
        {"pnc_enabled", train.pnc_enabled},
        {"aux_enabled", train.aux_enabled},
        {"clip_mode", to_string(train.clip_mode)},
        {"aux_start_task", to_string(train.aux_start_task)},
        {"log_timings", train.log_timings}}},
      {"decode",
       {{"mode", to_string(decode.mode)},
        {"beam_size", decode.beam_size},
        {"lambda", decode.lambda},
        {"cd_sign", to_string(decode.cd_sign)},
        {"cd_carry", to_string(decode.cd_carry)},
        {"pnc_enabled", decode.pnc_enabled}}}};
}

}  // namespace taxoseq
