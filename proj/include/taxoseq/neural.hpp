#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taxoseq/cdv.hpp"
#include "taxoseq/embeddings.hpp"
#include "taxoseq/rng.hpp"
#include "taxoseq/taxonomy.hpp"

namespace taxoseq {

/// One named trainable tensor with its gradient slot.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  void setup(std::string tensor_name, Eigen::Index rows, Eigen::Index cols) {
    name = std::move(tensor_name);
    value = Eigen::MatrixXd::Zero(rows, cols);
    grad = Eigen::MatrixXd::Zero(rows, cols);
  }
  Eigen::Index size() const { return value.size(); }
};

/// Gate parameters of one GRU cell. W* act on the input, U* on the previous
/// hidden state; z = update gate, r = reset gate, n = candidate state.
struct GruCellParams {
  Tensor Wz, Uz, bz, Wr, Ur, br, Wn, Un, bn;
  int input_dim = 0;
  int hidden_dim = 0;

  void setup(const std::string& prefix, int input, int hidden);
  std::vector<Tensor*> tensors();
};

/// Additive attention parameters. Wc projects the conditioning class
/// definition vector and is absent when parent-node conditioning is off;
/// the baseline is recovered exactly at Wc = 0.
struct AttentionParams {
  Tensor Wh;  // score_dim x 2H, encoder outputs
  Tensor Ws;  // score_dim x H, decoder state
  Tensor Wc;  // score_dim x d, conditioning vector (PNC only)
  Tensor v;   // score_dim x 1
  bool has_conditioning = false;

  void setup(int score_dim, int encoder_dim, int state_dim, int cond_dim,
             bool with_conditioning);
  std::vector<Tensor*> tensors();
};

struct ModelConfig {
  int hidden_dim = 300;
  int embed_dim = 300;
  double dropout_rate = 0.3;
  bool pnc_enabled = false;
};

/// All trainable parameters of the encoder-attention-decoder stack.
///
/// The word embedding table is referenced at the call sites, never owned,
/// and never receives gradients. Class embeddings (one learned d-vector per
/// union class plus a start symbol) are trained. A model is exclusive-write
/// during training; a copied snapshot is safe for concurrent inference.
class Model {
 public:
  Model(const Taxonomy& taxonomy, ModelConfig config);

  /// Uniform init in [-1/sqrt(H), 1/sqrt(H)]. Each tensor draws from its
  /// own seed derived from (seed, tensor name), so models that differ only
  /// in PNC share every common tensor's values.
  void initialize(std::uint64_t seed);

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  void zero_grads();
  std::int64_t parameter_count() const;

  const ModelConfig& config() const { return config_; }
  int union_size() const { return union_size_; }
  /// Class-embedding row fed to the decoder at step 0.
  int start_row() const { return union_size_; }
  std::uint64_t taxonomy_hash() const { return taxonomy_hash_; }

  Tensor class_embeddings;  // (union_size + 1) x d
  GruCellParams encoder_fwd, encoder_bwd, decoder;
  AttentionParams attention;
  Tensor Winit, binit;  // decoder initial state from final encoder states
  Tensor Wout, bout;    // (H + 2H) -> union-vocabulary logits

 private:
  ModelConfig config_;
  int union_size_ = 0;
  std::uint64_t taxonomy_hash_ = 0;
};

/// Encoder activations plus the caches backward() consumes. Column t of
/// every matrix corresponds to input position t.
struct EncoderState {
  Eigen::MatrixXd outputs;    // 2H x N, [forward_t ; backward_t]
  Eigen::MatrixXd inputs;     // d x N, word vectors after dropout
  Eigen::MatrixXd drop_mask;  // d x N, inverted-dropout factors
  struct DirectionCache {
    Eigen::MatrixXd h, z, r, n;  // H x N
  };
  DirectionCache fwd, bwd;

  int length() const { return static_cast<int>(outputs.cols()); }
  /// [last forward state ; last backward state], the input of the decoder
  /// initial-state projection.
  Eigen::VectorXd final_states() const;
};

/// Bidirectional GRU pass over the document tokens. Dropout (inverted
/// scaling) is applied to the GRU inputs only when dropout_active.
EncoderState encode(const Model& model, const std::vector<std::string>& tokens,
                    const EmbeddingTable& table, bool dropout_active, Rng& rng);

struct AttendResult {
  Eigen::VectorXd context;      // 2H
  Eigen::VectorXd weights;      // N, sums to 1
  Eigen::MatrixXd activations;  // score_dim x N, tanh'd energies (cache)
  bool conditioned = false;
  Eigen::VectorXd conditioning;  // the CDV used, when conditioned
};

/// Additive attention: energies v' tanh(Wh h_i + Ws s + Wc cv), the cv term
/// omitted when conditioning_cdv is null.
AttendResult attend(const Model& model, const EncoderState& encoder,
                    const Eigen::VectorXd& decoder_state,
                    const Eigen::VectorXd* conditioning_cdv);

struct MaskedSoftmax {
  Eigen::VectorXd log_probs;  // -inf outside the mask
  Eigen::VectorXd probs;      // exactly 0 outside the mask, sums to 1 inside
};

/// Softmax restricted to the masked classes. Throws std::invalid_argument
/// when the mask has no true entry.
MaskedSoftmax masked_log_softmax(const Eigen::VectorXd& logits,
                                 const std::vector<std::uint8_t>& mask);

struct DecodeStepResult {
  Eigen::VectorXd logits;     // union_size, unmasked scores
  Eigen::VectorXd log_probs;  // union_size, masked
  Eigen::VectorXd probs;      // union_size, masked
  Eigen::VectorXd hidden;     // H, post-update decoder state
  // caches for backward()
  AttendResult attend;
  Eigen::VectorXd x, x_drop_mask;  // (d + 2H) decoder input and its mask
  Eigen::VectorXd h_prev, z, r, n;
  int prev_row = -1;  // class-embedding row fed at this step
};

/// One autoregressive decoder step: input = previous class embedding
/// concatenated with the attention context, GRU update, output projection
/// on [state ; context], masked softmax over the level's classes.
/// prev_class is a global class index, or -1 for the start symbol.
DecodeStepResult decode_step(const Model& model, int prev_class,
                             const Eigen::VectorXd& hidden,
                             const EncoderState& encoder,
                             const std::vector<std::uint8_t>& level_mask,
                             const Eigen::VectorXd* conditioning_cdv,
                             bool dropout_active, Rng& rng);

struct ForwardCache {
  EncoderState encoder;
  Eigen::VectorXd enc_final;  // 2H
  Eigen::VectorXd s0;         // H
  std::vector<DecodeStepResult> steps;
  std::vector<int> target;             // gold global ids, in decode order
  std::vector<double> gold_log_probs;  // per step
  double loss = 0.0;
};

/// Teacher-forced forward pass. The target is the gold path in forward
/// (level 0..M-1) or reversed (M-1..0) order as global class indices; level
/// masks follow the target's own level sequence, so the same code serves
/// the main and the auxiliary task. Loss is the sum over steps of the
/// negative log-probability of the gold class. With pnc_enabled, step j>0
/// conditions attention on the gold class of step j-1 (step 0 is
/// unconditioned, which equals conditioning on the zero vector).
ForwardCache forward_loss(const Model& model,
                          const std::vector<std::string>& tokens,
                          const std::vector<int>& target_globals,
                          const Taxonomy& taxonomy,
                          const EmbeddingTable& table, bool pnc_enabled,
                          const CdvStore* cdv_store, bool dropout_active,
                          Rng& rng);

/// Exact reverse-mode gradients of cache.loss, accumulated into the
/// tensors' grad slots. Word embeddings receive none.
void backward(Model& model, const ForwardCache& cache);

/// Self-describing text checkpoint: taxonomy hash, config, named tensors.
/// Values round-trip bit-exact.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path, const Taxonomy& taxonomy);

}  // namespace taxoseq
