#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "taxoseq/cdv.hpp"
#include "taxoseq/corpus.hpp"
#include "taxoseq/decode.hpp"
#include "taxoseq/embeddings.hpp"
#include "taxoseq/neural.hpp"

namespace taxoseq {

enum class TrainTask { kMain, kAux };
enum class ClipMode { kNorm, kValue };

const char* to_string(TrainTask task);

struct TrainConfig {
  int hidden_units = 300;
  int embedding_dim = 300;
  int batch_size = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_epsilon = 1e-9;
  double learning_rate = 0.001;
  double lr_decay_factor = 10.0;
  int lr_patience_epochs = 4;
  double dropout = 0.3;
  double grad_clip = 0.5;
  int max_epochs = 30;
  int aux_interleave_period = 2;
  bool pnc_enabled = false;
  bool aux_enabled = false;
  std::uint64_t seed = 1;
  ClipMode clip_mode = ClipMode::kNorm;
  TrainTask aux_start_task = TrainTask::kMain;  // task of the first block
  bool log_timings = false;  // real wall-clock in the log breaks byte-identical reruns

  void validate() const;  // throws ConfigError
};

/// Adam moment estimates, one pair per model tensor (same order as
/// Model::tensors()).
struct AdamState {
  std::vector<Eigen::MatrixXd> first_moment;
  std::vector<Eigen::MatrixXd> second_moment;
  long step = 0;

  void match_shapes(const std::vector<Tensor*>& tensors);
};

struct TrainState {
  int epoch = 0;  // completed epochs
  int lr_decay_count = 0;
  double learning_rate = 0.0;  // always initial_lr / factor^decay_count
  AdamState adam;
  double best_val_accuracy = -1.0;
  int epochs_since_improvement = 0;
  TrainTask active_task = TrainTask::kMain;
};

/// Task of a 1-based epoch under the periodic interleave: blocks of
/// `aux_interleave_period` epochs alternate between the two tasks, the
/// first block given by aux_start_task. All epochs are main when the
/// auxiliary task is disabled.
TrainTask task_for_epoch(const TrainConfig& config, int epoch);

double global_grad_norm(const std::vector<Tensor*>& tensors);

/// Global-norm clipping: when the L2 norm over all gradients exceeds
/// max_norm, every gradient is scaled by max_norm / norm. kValue instead
/// clamps each component to [-max_norm, max_norm].
void clip_gradients(std::vector<Tensor*> tensors, double max_norm,
                    ClipMode mode = ClipMode::kNorm);

/// One Adam update with bias correction over all tensors' gradients.
void adam_update(std::vector<Tensor*> tensors, AdamState& state,
                 const TrainConfig& config, double learning_rate);

/// Plateau schedule: a strict improvement resets the counter; otherwise it
/// increments, and on reaching the patience the learning rate is divided
/// by the decay factor (recomputed from the initial rate, so repeated
/// decays cannot drift).
void update_lr_schedule(TrainState& state, double val_accuracy,
                        const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;  // 1-based
  TrainTask task = TrainTask::kMain;
  double train_loss = 0.0;
  std::vector<double> val_level_accuracy;
  double val_path_accuracy = 0.0;
  double learning_rate = 0.0;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

struct TrainContext {
  const Taxonomy* taxonomy = nullptr;
  const EmbeddingTable* table = nullptr;
  const CdvStore* cdv_store = nullptr;  // required when pnc_enabled
};

/// One pass over the (already shuffled) documents. For the auxiliary task
/// the targets are the reversed gold paths and the level masks follow the
/// reversed order. Per batch: mean loss, backward, clip, Adam step.
/// Returns the mean per-document loss. Throws NumericError (with epoch and
/// batch diagnostics) when a loss goes non-finite.
double train_epoch(Model& model, const std::vector<const Document*>& docs,
                   TrainTask task, const TrainConfig& config,
                   TrainState& state, const TrainContext& context,
                   Rng& dropout_rng, int epoch_for_diagnostics = 0);

struct FitOptions {
  /// Test hook: replaces the measured validation accuracy (per 1-based
  /// epoch) for checkpoint selection and the LR schedule.
  std::function<double(int)> val_accuracy_override;
};

struct FitResult {
  Model best_model;  // initialized model when no epoch ran
  std::vector<EpochRecord> log;
  int best_epoch = 0;  // 0 when no epoch improved on nothing (max_epochs=0)
  double best_val_accuracy = 0.0;
};

/// Full training run: per-epoch reshuffle (seed + epoch), interleaved
/// tasks, per-epoch greedy-decode validation on the MAIN task regardless
/// of the epoch's training task, plateau LR schedule, and best-checkpoint
/// selection by validation path accuracy. Deterministic given config.seed.
FitResult fit(Model& model, const SplitDataset& splits,
              const TrainConfig& config, const TrainContext& context,
              const FitOptions& options = {});

/// Line-delimited JSON, one record per epoch.
void write_training_log(const std::vector<EpochRecord>& log,
                        const std::string& path);

}  // namespace taxoseq
