#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "taxoseq/commands.hpp"
#include "taxoseq/config.hpp"
#include "taxoseq/errors.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> checkpoint;
  std::optional<int> hidden_units, embedding_dim, batch_size, max_epochs;
  std::optional<int> lr_patience_epochs, aux_interleave_period, beam_size;
  std::optional<double> learning_rate, lr_decay_factor, dropout, grad_clip;
  std::optional<double> adam_beta1, adam_beta2, adam_epsilon, lambda;
  std::optional<bool> aux_enabled, pnc_enabled, log_timings, decode_pnc;
  std::optional<std::string> decode_mode, cd_sign, cd_carry, clip_mode;
  std::optional<std::string> aux_start_task, mean_denominator;
  std::optional<std::size_t> embedding_limit;
};

void add_override_flags(CLI::App& cmd, Overrides& ov) {
  cmd.add_option("--seed", ov.seed, "Run seed (all randomness derives from it)");
  cmd.add_option("--out", ov.out_dir, "Output directory");
  cmd.add_option("--checkpoint", ov.checkpoint, "Model checkpoint path");
  cmd.add_option("--hidden-units", ov.hidden_units);
  cmd.add_option("--embedding-dim", ov.embedding_dim);
  cmd.add_option("--batch-size", ov.batch_size);
  cmd.add_option("--max-epochs", ov.max_epochs);
  cmd.add_option("--learning-rate", ov.learning_rate);
  cmd.add_option("--lr-decay-factor", ov.lr_decay_factor);
  cmd.add_option("--lr-patience-epochs", ov.lr_patience_epochs);
  cmd.add_option("--dropout", ov.dropout);
  cmd.add_option("--grad-clip", ov.grad_clip);
  cmd.add_option("--adam-beta1", ov.adam_beta1);
  cmd.add_option("--adam-beta2", ov.adam_beta2);
  cmd.add_option("--adam-epsilon", ov.adam_epsilon);
  cmd.add_option("--aux-interleave-period", ov.aux_interleave_period);
  cmd.add_option("--aux-enabled", ov.aux_enabled,
                 "Train with the reversed-path auxiliary task");
  cmd.add_option("--pnc-enabled", ov.pnc_enabled,
                 "Condition attention on the parent class definition vector");
  cmd.add_option("--clip-mode", ov.clip_mode, "norm|value");
  cmd.add_option("--aux-start-task", ov.aux_start_task, "main|aux");
  cmd.add_option("--log-timings", ov.log_timings,
                 "Record real wall-clock seconds in the training log");
  cmd.add_option("--decode-mode", ov.decode_mode, "greedy|beam|adapted_beam");
  cmd.add_option("--beam-size", ov.beam_size);
  cmd.add_option("--lambda", ov.lambda,
                 "Weight of the definition-similarity term");
  cmd.add_option("--cd-sign", ov.cd_sign, "similarity|negated");
  cmd.add_option("--cd-carry", ov.cd_carry, "accumulate|step_only");
  cmd.add_option("--decode-pnc-enabled", ov.decode_pnc);
  cmd.add_option("--embedding-limit", ov.embedding_limit,
                 "Load at most this many vector rows (0 = all)");
  cmd.add_option("--mean-denominator", ov.mean_denominator, "all|known");
}

void apply(const Overrides& ov, taxoseq::RunConfig& config) {
  using taxoseq::ClipMode;
  using taxoseq::ConfigError;
  using taxoseq::MeanDenominator;
  using taxoseq::TrainTask;

  if (ov.seed) config.seed = *ov.seed, config.train.seed = *ov.seed;
  if (ov.out_dir) config.paths.out_dir = *ov.out_dir;
  if (ov.checkpoint) config.paths.checkpoint = *ov.checkpoint;
  if (ov.hidden_units) config.train.hidden_units = *ov.hidden_units;
  if (ov.embedding_dim) config.train.embedding_dim = *ov.embedding_dim;
  if (ov.batch_size) config.train.batch_size = *ov.batch_size;
  if (ov.max_epochs) config.train.max_epochs = *ov.max_epochs;
  if (ov.learning_rate) config.train.learning_rate = *ov.learning_rate;
  if (ov.lr_decay_factor) config.train.lr_decay_factor = *ov.lr_decay_factor;
  if (ov.lr_patience_epochs) {
    config.train.lr_patience_epochs = *ov.lr_patience_epochs;
  }
  if (ov.dropout) config.train.dropout = *ov.dropout;
  if (ov.grad_clip) config.train.grad_clip = *ov.grad_clip;
  if (ov.adam_beta1) config.train.adam_beta1 = *ov.adam_beta1;
  if (ov.adam_beta2) config.train.adam_beta2 = *ov.adam_beta2;
  if (ov.adam_epsilon) config.train.adam_epsilon = *ov.adam_epsilon;
  if (ov.aux_interleave_period) {
    config.train.aux_interleave_period = *ov.aux_interleave_period;
  }
  if (ov.aux_enabled) config.train.aux_enabled = *ov.aux_enabled;
  if (ov.pnc_enabled) {
    config.train.pnc_enabled = *ov.pnc_enabled;
    if (!ov.decode_pnc) config.decode.pnc_enabled = *ov.pnc_enabled;
  }
  if (ov.clip_mode) {
    if (*ov.clip_mode == "norm") config.train.clip_mode = ClipMode::kNorm;
    else if (*ov.clip_mode == "value") config.train.clip_mode = ClipMode::kValue;
    else throw ConfigError("--clip-mode must be 'norm' or 'value'");
  }
  if (ov.aux_start_task) {
    if (*ov.aux_start_task == "main") config.train.aux_start_task = TrainTask::kMain;
    else if (*ov.aux_start_task == "aux") config.train.aux_start_task = TrainTask::kAux;
    else throw ConfigError("--aux-start-task must be 'main' or 'aux'");
  }
  if (ov.log_timings) config.train.log_timings = *ov.log_timings;
  if (ov.decode_mode) config.decode.mode = taxoseq::parse_decode_mode(*ov.decode_mode);
  if (ov.beam_size) config.decode.beam_size = *ov.beam_size;
  if (ov.lambda) config.decode.lambda = *ov.lambda;
  if (ov.cd_sign) {
    if (*ov.cd_sign == "similarity") config.decode.cd_sign = taxoseq::CdSign::kSimilarity;
    else if (*ov.cd_sign == "negated") config.decode.cd_sign = taxoseq::CdSign::kNegated;
    else throw ConfigError("--cd-sign must be 'similarity' or 'negated'");
  }
  if (ov.cd_carry) {
    if (*ov.cd_carry == "accumulate") config.decode.cd_carry = taxoseq::CdCarry::kAccumulate;
    else if (*ov.cd_carry == "step_only") config.decode.cd_carry = taxoseq::CdCarry::kStepOnly;
    else throw ConfigError("--cd-carry must be 'accumulate' or 'step_only'");
  }
  if (ov.decode_pnc) config.decode.pnc_enabled = *ov.decode_pnc;
  if (ov.embedding_limit) {
    config.embedding_limit = *ov.embedding_limit == 0
                                 ? std::nullopt
                                 : std::make_optional(*ov.embedding_limit);
  }
  if (ov.mean_denominator) {
    if (*ov.mean_denominator == "all") config.mean_denominator = MeanDenominator::kAll;
    else if (*ov.mean_denominator == "known") config.mean_denominator = MeanDenominator::kKnown;
    else throw ConfigError("--mean-denominator must be 'all' or 'known'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"taxoseq: sequence-to-sequence hierarchical text classification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string predict_input;
  Overrides overrides;

  auto* validate_cmd = app.add_subcommand(
      "data-validate", "Check taxonomy, dataset, definitions and embeddings");
  auto* cdv_cmd = app.add_subcommand(
      "cdv-build", "Build and write the class definition vector store");
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  auto* predict_cmd =
      app.add_subcommand("predict", "Decode label paths for an input file");
  predict_cmd->add_option("--input", predict_input, "id<TAB>text file")
      ->required();

  for (auto* cmd : {validate_cmd, cdv_cmd, train_cmd, eval_cmd, predict_cmd}) {
    cmd->add_option("--config", config_path, "Path to the run config (JSON)")
        ->required();
    add_override_flags(*cmd, overrides);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Help and version are successes; anything else is a config error.
    return code == 0 ? 0 : 2;
  }

  try {
    taxoseq::RunConfig config = taxoseq::RunConfig::from_file(config_path);
    apply(overrides, config);
    if (validate_cmd->parsed()) {
      taxoseq::cmd_data_validate(config, std::cout);
    } else if (cdv_cmd->parsed()) {
      taxoseq::cmd_cdv_build(config, std::cout);
    } else if (train_cmd->parsed()) {
      taxoseq::cmd_train(config, std::cout);
    } else if (eval_cmd->parsed()) {
      taxoseq::cmd_eval(config, std::cout);
    } else if (predict_cmd->parsed()) {
      taxoseq::cmd_predict(config, predict_input, std::cout);
    }
    return 0;
  } catch (const taxoseq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const taxoseq::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const taxoseq::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
