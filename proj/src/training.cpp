#include "taxoseq/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "taxoseq/errors.hpp"
#include "taxoseq/metrics.hpp"

namespace taxoseq {

const char* to_string(TrainTask task) {
  return task == TrainTask::kMain ? "main" : "aux";
}

void TrainConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("train config: ") + what);
  };
  require(hidden_units > 0, "hidden_units must be positive");
  require(embedding_dim > 0, "embedding_dim must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(adam_beta1 > 0 && adam_beta1 < 1, "adam_beta1 must be in (0,1)");
  require(adam_beta2 > 0 && adam_beta2 < 1, "adam_beta2 must be in (0,1)");
  require(adam_epsilon > 0, "adam_epsilon must be positive");
  require(learning_rate > 0, "learning_rate must be positive");
  require(lr_decay_factor > 1, "lr_decay_factor must be > 1");
  require(lr_patience_epochs >= 1, "lr_patience_epochs must be >= 1");
  require(dropout >= 0 && dropout < 1, "dropout must be in [0,1)");
  require(grad_clip > 0, "grad_clip must be positive");
  require(max_epochs >= 0, "max_epochs must be >= 0");
  require(aux_interleave_period >= 1, "aux_interleave_period must be >= 1");
}

void AdamState::match_shapes(const std::vector<Tensor*>& tensors) {
  first_moment.clear();
  second_moment.clear();
  for (const auto* t : tensors) {
    first_moment.emplace_back(
        Eigen::MatrixXd::Zero(t->value.rows(), t->value.cols()));
    second_moment.emplace_back(
        Eigen::MatrixXd::Zero(t->value.rows(), t->value.cols()));
  }
  step = 0;
}

TrainTask task_for_epoch(const TrainConfig& config, int epoch) {
  if (!config.aux_enabled) return TrainTask::kMain;
  const int block = (epoch - 1) / config.aux_interleave_period;
  const bool first = block % 2 == 0;
  if (config.aux_start_task == TrainTask::kMain) {
    return first ? TrainTask::kMain : TrainTask::kAux;
  }
  return first ? TrainTask::kAux : TrainTask::kMain;
}

double global_grad_norm(const std::vector<Tensor*>& tensors) {
  double sum = 0.0;
  for (const auto* t : tensors) sum += t->grad.squaredNorm();
  return std::sqrt(sum);
}

void clip_gradients(std::vector<Tensor*> tensors, double max_norm,
                    ClipMode mode) {
  if (mode == ClipMode::kValue) {
    for (auto* t : tensors) {
      t->grad = t->grad.cwiseMax(-max_norm).cwiseMin(max_norm);
    }
    return;
  }
  const double norm = global_grad_norm(tensors);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto* t : tensors) t->grad *= scale;
  }
}

void adam_update(std::vector<Tensor*> tensors, AdamState& state,
                 const TrainConfig& config, double learning_rate) {
  if (state.first_moment.size() != tensors.size()) {
    state.match_shapes(tensors);
  }
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Tensor& t = *tensors[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = b1 * m + (1.0 - b1) * t.grad;
    v = b2 * v + (1.0 - b2) * t.grad.cwiseProduct(t.grad);
    const Eigen::MatrixXd m_hat = m / bias1;
    const Eigen::MatrixXd v_hat = v / bias2;
    t.value.array() -=
        learning_rate * m_hat.array() /
        (v_hat.array().sqrt() + config.adam_epsilon);
  }
}

void update_lr_schedule(TrainState& state, double val_accuracy,
                        const TrainConfig& config) {
  if (val_accuracy < 0.0 || val_accuracy > 1.0) {
    throw DataError("update_lr_schedule: accuracy must be in [0,1]");
  }
  if (val_accuracy > state.best_val_accuracy) {
    state.best_val_accuracy = val_accuracy;
    state.epochs_since_improvement = 0;
    return;
  }
  ++state.epochs_since_improvement;
  if (state.epochs_since_improvement >= config.lr_patience_epochs) {
    ++state.lr_decay_count;
    state.epochs_since_improvement = 0;
    state.learning_rate =
        config.learning_rate /
        std::pow(config.lr_decay_factor,
                 static_cast<double>(state.lr_decay_count));
  }
}

namespace {

std::vector<int> target_globals(const Taxonomy& taxonomy, const Document& doc,
                                TrainTask task) {
  const LabelPath path =
      task == TrainTask::kAux ? reverse_path(doc.labels) : doc.labels;
  std::vector<int> ids;
  ids.reserve(path.size());
  for (const auto& id : path) ids.push_back(taxonomy.global_index(id));
  return ids;
}

double validation_accuracy(const Model& model,
                           const std::vector<Document>& docs,
                           const TrainConfig& config,
                           const TrainContext& context,
                           std::vector<double>* level_accuracy) {
  DecodeConfig decode_config;
  decode_config.mode = DecodeMode::kGreedy;
  decode_config.pnc_enabled = config.pnc_enabled;
  std::vector<LabelPath> predictions;
  std::vector<LabelPath> gold;
  predictions.reserve(docs.size());
  gold.reserve(docs.size());
  for (const auto& doc : docs) {
    predictions.push_back(greedy_decode(model, doc.tokens, *context.taxonomy,
                                        *context.table, context.cdv_store,
                                        decode_config)
                              .path);
    gold.push_back(doc.labels);
  }
  const EvalReport report = evaluate(predictions, gold, *context.taxonomy);
  if (level_accuracy != nullptr) {
    level_accuracy->clear();
    for (int j = 0; j < context.taxonomy->num_levels(); ++j) {
      level_accuracy->push_back(report.level_accuracy(j));
    }
  }
  return report.path_accuracy();
}

}  // namespace

double train_epoch(Model& model, const std::vector<const Document*>& docs,
                   TrainTask task, const TrainConfig& config,
                   TrainState& state, const TrainContext& context,
                   Rng& dropout_rng, int epoch_for_diagnostics) {
  if (docs.empty()) throw DataError("train_epoch: no documents");
  if (config.pnc_enabled && context.cdv_store == nullptr) {
    throw ConfigError("train_epoch: PNC requires a CDV store");
  }

  const Taxonomy& taxonomy = *context.taxonomy;
  double total_loss = 0.0;
  std::size_t batch_index = 0;
  for (std::size_t begin = 0; begin < docs.size();
       begin += static_cast<std::size_t>(config.batch_size), ++batch_index) {
    const std::size_t end =
        std::min(docs.size(), begin + static_cast<std::size_t>(config.batch_size));
    const auto batch_count = static_cast<double>(end - begin);

    model.zero_grads();
    double batch_loss = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const Document& doc = *docs[i];
      const ForwardCache cache = forward_loss(
          model, doc.tokens, target_globals(taxonomy, doc, task), taxonomy,
          *context.table, config.pnc_enabled, context.cdv_store, true,
          dropout_rng);
      if (!std::isfinite(cache.loss)) {
        throw NumericError("train_epoch: non-finite loss (" +
                           std::to_string(cache.loss) + ") at epoch " +
                           std::to_string(epoch_for_diagnostics) + ", batch " +
                           std::to_string(batch_index) + ", document '" +
                           doc.id + "'");
      }
      batch_loss += cache.loss;
      backward(model, cache);
    }
    // Mean loss over the batch: scale the accumulated gradients once.
    const double inv = 1.0 / batch_count;
    for (auto* t : model.tensors()) t->grad *= inv;
    total_loss += batch_loss;

    clip_gradients(model.tensors(), config.grad_clip, config.clip_mode);
    adam_update(model.tensors(), state.adam, config, state.learning_rate);
  }
  state.active_task = task;
  return total_loss / static_cast<double>(docs.size());
}

nlohmann::json EpochRecord::to_json() const {
  return nlohmann::json{{"epoch", epoch},
                        {"task", to_string(task)},
                        {"train_loss", train_loss},
                        {"val_level_accuracy", val_level_accuracy},
                        {"val_path_accuracy", val_path_accuracy},
                        {"lr", learning_rate},
                        {"wall_seconds", wall_seconds}};
}

FitResult fit(Model& model, const SplitDataset& splits,
              const TrainConfig& config, const TrainContext& context,
              const FitOptions& options) {
  config.validate();
  if (context.taxonomy == nullptr || context.table == nullptr) {
    throw ConfigError("fit: taxonomy and embedding table are required");
  }
  if (config.max_epochs > 0 &&
      (splits.train.empty() || splits.validation.empty())) {
    throw DataError("fit: train and validation splits must be non-empty");
  }

  TrainState state;
  state.learning_rate = config.learning_rate;
  state.adam.match_shapes(model.tensors());

  FitResult result{model, {}, 0, 0.0};

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const TrainTask task = task_for_epoch(config, epoch);

    std::vector<const Document*> shuffled;
    shuffled.reserve(splits.train.size());
    for (const auto& doc : splits.train) shuffled.push_back(&doc);
    Rng shuffle_rng(derive_seed(config.seed, "shuffle", epoch));
    shuffle_rng.shuffle(shuffled);

    Rng dropout_rng(derive_seed(config.seed, "dropout", epoch));
    const double train_loss = train_epoch(model, shuffled, task, config,
                                          state, context, dropout_rng, epoch);

    // Validation is always the MAIN task (forward decode), whatever the
    // epoch trained on, so checkpoint selection has one coherent metric.
    EpochRecord record;
    record.epoch = epoch;
    record.task = task;
    record.train_loss = train_loss;
    record.learning_rate = state.learning_rate;
    double val_acc = validation_accuracy(model, splits.validation, config,
                                         context, &record.val_level_accuracy);
    if (options.val_accuracy_override) {
      val_acc = options.val_accuracy_override(epoch);
    }
    record.val_path_accuracy = val_acc;

    if (val_acc > result.best_val_accuracy || result.best_epoch == 0) {
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch;
      result.best_model = model;
    }
    update_lr_schedule(state, val_acc, config);
    state.epoch = epoch;

    record.wall_seconds =
        config.log_timings
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            started)
                  .count()
            : 0.0;
    result.log.push_back(std::move(record));
  }
  return result;
}

void write_training_log(const std::vector<EpochRecord>& log,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("training log: cannot write '" + path + "'");
  for (const auto& record : log) {
    out << record.to_json().dump() << '\n';
  }
}

}  // namespace taxoseq
