#include "taxoseq/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include "taxoseq/decode.hpp"
#include "taxoseq/errors.hpp"

namespace taxoseq {

namespace {

void require_path(const std::string& value, const char* field) {
  if (value.empty()) {
    throw ConfigError(std::string("config: paths.") + field + " is required");
  }
  if (!std::filesystem::exists(value)) {
    throw ConfigError(std::string("config: paths.") + field + " '" + value +
                      "' does not exist");
  }
}

std::string out_file(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.paths.out_dir);
  return (std::filesystem::path(config.paths.out_dir) / name).string();
}

EmbeddingTable load_table(const RunConfig& config) {
  require_path(config.paths.embeddings, "embeddings");
  return EmbeddingTable::load(config.paths.embeddings,
                              config.embedding_limit);
}

void report_rejections(const std::vector<RowRejection>& rejected,
                       const std::string& file, std::ostream& log) {
  for (const auto& row : rejected) {
    log << "  rejected " << file << ":" << row.line_number << ": "
        << row.reason << '\n';
  }
}

/// Train/validation/test documents, either from three files or from one
/// dataset split deterministically by the run seed.
SplitDataset load_splits(const RunConfig& config, const Taxonomy& taxonomy,
                         std::ostream& log) {
  if (!config.paths.dataset.empty()) {
    require_path(config.paths.dataset, "dataset");
    auto loaded = load_dataset(config.paths.dataset, taxonomy);
    report_rejections(loaded.rejected, config.paths.dataset, log);
    return split_dataset(loaded.documents, config.split_ratios,
                         derive_seed(config.seed, "split"));
  }
  SplitDataset splits;
  const auto load_one = [&](const std::string& path, const char* field,
                            std::vector<Document>& into) {
    require_path(path, field);
    auto loaded = load_dataset(path, taxonomy);
    report_rejections(loaded.rejected, path, log);
    into = std::move(loaded.documents);
  };
  load_one(config.paths.train, "train", splits.train);
  load_one(config.paths.validation, "validation", splits.validation);
  load_one(config.paths.test, "test", splits.test);
  return splits;
}

/// Loads a prebuilt store when paths.cdv_store is set, otherwise builds
/// one from the definitions file.
CdvStore obtain_cdv_store(const RunConfig& config, const Taxonomy& taxonomy,
                          const EmbeddingTable& table, std::ostream& log) {
  if (!config.paths.cdv_store.empty() &&
      std::filesystem::exists(config.paths.cdv_store)) {
    log << "loading CDV store from " << config.paths.cdv_store << '\n';
    return CdvStore::load(config.paths.cdv_store, taxonomy);
  }
  require_path(config.paths.definitions, "definitions");
  auto defs = load_definitions(config.paths.definitions, taxonomy);
  for (const auto& warning : defs.warnings) {
    log << "  definitions: " << warning << '\n';
  }
  if (!defs.missing.empty()) {
    log << "  definitions missing for " << defs.missing.size()
        << " classes (zero vectors used)\n";
  }
  return CdvStore::build(taxonomy, defs.store, table,
                         config.mean_denominator);
}

bool needs_cdv_for_decode(const DecodeConfig& decode) {
  return decode.pnc_enabled || decode.mode == DecodeMode::kAdaptedBeam;
}

}  // namespace

double ValidationReport::oov_rate_types() const {
  if (distinct_tokens == 0) return 0.0;
  return 1.0 - static_cast<double>(distinct_tokens_in_vocabulary) /
                   static_cast<double>(distinct_tokens);
}

double ValidationReport::oov_rate_occurrences() const {
  if (token_occurrences == 0) return 0.0;
  return 1.0 - static_cast<double>(token_occurrences_in_vocabulary) /
                   static_cast<double>(token_occurrences);
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json rejected = nlohmann::json::array();
  for (const auto& row : rejections) {
    rejected.push_back({{"line", row.line_number}, {"reason", row.reason}});
  }
  return nlohmann::json{
      {"type", "data_validate"},
      {"documents", documents},
      {"rejections", rejected},
      {"missing_definitions", missing_definitions},
      {"definition_warnings", definition_warnings},
      {"distinct_tokens", distinct_tokens},
      {"distinct_tokens_in_vocabulary", distinct_tokens_in_vocabulary},
      {"token_occurrences", token_occurrences},
      {"token_occurrences_in_vocabulary", token_occurrences_in_vocabulary},
      {"oov_rate_types", oov_rate_types()},
      {"oov_rate_occurrences", oov_rate_occurrences()}};
}

ValidationReport cmd_data_validate(const RunConfig& config,
                                   std::ostream& log) {
  require_path(config.paths.taxonomy, "taxonomy");
  const Taxonomy taxonomy = Taxonomy::from_file(config.paths.taxonomy);
  log << "taxonomy: " << taxonomy.num_levels() << " levels, "
      << taxonomy.union_size() << " classes in the union vocabulary\n";

  ValidationReport report;
  std::vector<Document> documents;
  const auto ingest = [&](const std::string& path) {
    auto loaded = load_dataset(path, taxonomy);
    report_rejections(loaded.rejected, path, log);
    for (auto& row : loaded.rejected) report.rejections.push_back(std::move(row));
    for (auto& doc : loaded.documents) documents.push_back(std::move(doc));
  };
  if (!config.paths.dataset.empty()) {
    require_path(config.paths.dataset, "dataset");
    ingest(config.paths.dataset);
  } else {
    for (const auto* path : {&config.paths.train, &config.paths.validation,
                             &config.paths.test}) {
      if (!path->empty()) {
        require_path(*path, "train/validation/test");
        ingest(*path);
      }
    }
  }
  report.documents = documents.size();
  log << "documents: " << report.documents << " loaded, "
      << report.rejections.size() << " rejected\n";

  if (!config.paths.definitions.empty()) {
    require_path(config.paths.definitions, "definitions");
    const auto defs = load_definitions(config.paths.definitions, taxonomy);
    report.definition_warnings = defs.warnings;
    for (const auto& id : defs.missing) {
      report.missing_definitions.push_back(taxonomy.level_name(id.level) +
                                           "/" + taxonomy.class_name(id));
    }
    log << "definitions: " << defs.store.size() << " entries, "
        << defs.missing.size() << " classes missing\n";
    for (const auto& name : report.missing_definitions) {
      log << "  missing definition: " << name << '\n';
    }
    for (const auto& warning : defs.warnings) {
      log << "  definitions: " << warning << '\n';
    }
  }

  if (!config.paths.embeddings.empty()) {
    const EmbeddingTable table = load_table(config);
    std::set<std::string> seen;
    for (const auto& doc : documents) {
      for (const auto& token : doc.tokens) {
        ++report.token_occurrences;
        if (table.contains(token)) ++report.token_occurrences_in_vocabulary;
        if (seen.insert(token).second) {
          ++report.distinct_tokens;
          if (table.contains(token)) ++report.distinct_tokens_in_vocabulary;
        }
      }
    }
    log << "embedding coverage: OOV rate " << report.oov_rate_types()
        << " over " << report.distinct_tokens << " distinct tokens, "
        << report.oov_rate_occurrences() << " over "
        << report.token_occurrences << " occurrences\n";
  }

  if (!config.paths.out_dir.empty()) {
    const std::string path = out_file(config, "validation_report.json");
    std::ofstream out(path);
    out << report.to_json().dump(2) << '\n';
    log << "wrote " << path << '\n';
  }
  return report;
}

std::string cmd_cdv_build(const RunConfig& config, std::ostream& log) {
  require_path(config.paths.taxonomy, "taxonomy");
  const Taxonomy taxonomy = Taxonomy::from_file(config.paths.taxonomy);
  const EmbeddingTable table = load_table(config);
  require_path(config.paths.definitions, "definitions");
  auto defs = load_definitions(config.paths.definitions, taxonomy);
  for (const auto& warning : defs.warnings) {
    log << "  definitions: " << warning << '\n';
  }
  const CdvStore store =
      CdvStore::build(taxonomy, defs.store, table, config.mean_denominator);
  const std::string path = out_file(config, "cdv_store.tsv");
  store.save(path, taxonomy);
  log << "cdv store: " << store.size() << " classes, dimension "
      << store.dimension() << ", " << defs.missing.size()
      << " without definitions\n";
  for (const auto& id : defs.missing) {
    log << "  no definition: " << taxonomy.level_name(id.level) << "/"
        << taxonomy.class_name(id) << '\n';
  }
  log << "wrote " << path << '\n';
  return path;
}

TrainOutcome cmd_train(const RunConfig& config, std::ostream& log) {
  config.train.validate();
  require_path(config.paths.taxonomy, "taxonomy");
  const Taxonomy taxonomy = Taxonomy::from_file(config.paths.taxonomy);
  const EmbeddingTable table = load_table(config);
  if (table.dimension() != config.train.embedding_dim) {
    throw ConfigError("config: train.embedding_dim " +
                      std::to_string(config.train.embedding_dim) +
                      " does not match the embedding file dimension " +
                      std::to_string(table.dimension()));
  }
  const SplitDataset splits = load_splits(config, taxonomy, log);
  log << "splits: " << splits.train.size() << " train, "
      << splits.validation.size() << " validation, " << splits.test.size()
      << " test\n";

  CdvStore cdv_store;
  TrainContext context{&taxonomy, &table, nullptr};
  if (config.train.pnc_enabled) {
    cdv_store = obtain_cdv_store(config, taxonomy, table, log);
    context.cdv_store = &cdv_store;
  }

  ModelConfig model_config;
  model_config.hidden_dim = config.train.hidden_units;
  model_config.embed_dim = config.train.embedding_dim;
  model_config.dropout_rate = config.train.dropout;
  model_config.pnc_enabled = config.train.pnc_enabled;
  Model model(taxonomy, model_config);
  model.initialize(config.seed);
  log << "model: " << model.parameter_count() << " trainable parameters\n";

  FitResult fit_result = fit(model, splits, config.train, context);
  for (const auto& record : fit_result.log) {
    log << "epoch " << record.epoch << " task=" << to_string(record.task)
        << " loss=" << record.train_loss
        << " val_path_acc=" << record.val_path_accuracy
        << " lr=" << record.learning_rate << '\n';
  }

  TrainOutcome outcome{out_file(config, "checkpoint.txt"),
                       out_file(config, "train_log.jsonl"),
                       std::move(fit_result)};
  save_checkpoint(outcome.fit.best_model, outcome.checkpoint_path);
  write_training_log(outcome.fit.log, outcome.log_path);
  log << "best epoch " << outcome.fit.best_epoch << " (val path accuracy "
      << outcome.fit.best_val_accuracy << ")\n";
  log << "wrote " << outcome.checkpoint_path << " and " << outcome.log_path
      << '\n';
  return outcome;
}

EvalReport cmd_eval(const RunConfig& config, std::ostream& log) {
  require_path(config.paths.taxonomy, "taxonomy");
  const Taxonomy taxonomy = Taxonomy::from_file(config.paths.taxonomy);
  const EmbeddingTable table = load_table(config);
  require_path(config.paths.checkpoint, "checkpoint");
  const Model model = load_checkpoint(config.paths.checkpoint, taxonomy);

  std::vector<Document> test_docs;
  if (!config.paths.dataset.empty()) {
    test_docs = load_splits(config, taxonomy, log).test;
  } else {
    require_path(config.paths.test, "test");
    auto loaded = load_dataset(config.paths.test, taxonomy);
    report_rejections(loaded.rejected, config.paths.test, log);
    test_docs = std::move(loaded.documents);
  }
  if (test_docs.empty()) throw DataError("eval: the test set is empty");

  CdvStore cdv_store;
  const CdvStore* cdv = nullptr;
  if (needs_cdv_for_decode(config.decode)) {
    cdv_store = obtain_cdv_store(config, taxonomy, table, log);
    cdv = &cdv_store;
  }

  std::vector<LabelPath> predictions;
  std::vector<LabelPath> gold;
  predictions.reserve(test_docs.size());
  for (const auto& doc : test_docs) {
    predictions.push_back(
        decode(model, doc.tokens, taxonomy, table, cdv, config.decode).path);
    gold.push_back(doc.labels);
  }
  const EvalReport report = evaluate(predictions, gold, taxonomy);
  log << report.to_text(taxonomy);
  log << "  decode mode: " << to_string(config.decode.mode) << '\n';

  const std::string path = out_file(config, "eval_report.json");
  std::ofstream out(path);
  auto doc = report.full_json(taxonomy);
  doc["decode_mode"] = to_string(config.decode.mode);
  out << doc.dump(2) << '\n';
  log << "wrote " << path << '\n';
  return report;
}

PredictOutcome cmd_predict(const RunConfig& config,
                           const std::string& input_path, std::ostream& log) {
  require_path(config.paths.taxonomy, "taxonomy");
  const Taxonomy taxonomy = Taxonomy::from_file(config.paths.taxonomy);
  const EmbeddingTable table = load_table(config);
  require_path(config.paths.checkpoint, "checkpoint");
  const Model model = load_checkpoint(config.paths.checkpoint, taxonomy);
  if (input_path.empty()) {
    throw ConfigError("predict: an input file is required");
  }
  std::ifstream in(input_path);
  if (!in) throw DataError("predict: cannot open '" + input_path + "'");

  CdvStore cdv_store;
  const CdvStore* cdv = nullptr;
  if (needs_cdv_for_decode(config.decode)) {
    cdv_store = obtain_cdv_store(config, taxonomy, table, log);
    cdv = &cdv_store;
  }

  PredictOutcome outcome;
  outcome.output_path = out_file(config, "predictions.jsonl");
  std::ofstream out(outcome.output_path);

  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      outcome.rejected.push_back({line_number, "expected id<TAB>text"});
      continue;
    }
    const std::string id = line.substr(0, tab);
    const auto text_end = line.find('\t', tab + 1);  // labels, if any, ignored
    const std::string text =
        line.substr(tab + 1, text_end == std::string::npos
                                 ? std::string::npos
                                 : text_end - tab - 1);
    const auto tokens = tokenize(text);
    if (tokens.empty()) {
      outcome.rejected.push_back({line_number, "empty text"});
      continue;
    }
    const DecodeResult result =
        decode(model, tokens, taxonomy, table, cdv, config.decode);
    nlohmann::json record{{"id", id}, {"log_prob", result.log_prob}};
    nlohmann::json names = nlohmann::json::array();
    for (const auto& class_id : result.path) {
      names.push_back(taxonomy.class_name(class_id));
    }
    record["path"] = std::move(names);
    record["log_probs"] = result.step_log_probs;
    if (config.decode.mode == DecodeMode::kAdaptedBeam) {
      record["cd_terms"] = result.step_cd_terms;
      record["fused_score"] = result.fused_score;
    }
    out << record.dump() << '\n';
    ++outcome.records;
  }
  report_rejections(outcome.rejected, input_path, log);
  log << "predictions: " << outcome.records << " records, "
      << outcome.rejected.size() << " rejected\n";
  log << "wrote " << outcome.output_path << '\n';
  return outcome;
}

}  // namespace taxoseq
