#include "taxoseq/neural.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "taxoseq/errors.hpp"

namespace taxoseq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double a) { return 1.0 / (1.0 + std::exp(-a)); });
}

void check_finite(const Eigen::VectorXd& state, const char* where) {
  if (!state.allFinite()) {
    throw NumericError(std::string("non-finite hidden state in ") + where);
  }
}

/// x after inverted dropout; mask holds the applied factors (1 when off).
Eigen::VectorXd apply_dropout(const Eigen::VectorXd& x, double rate,
                              bool active, Rng& rng,
                              Eigen::VectorXd& mask_out) {
  if (!active || rate <= 0.0) {
    mask_out = Eigen::VectorXd::Ones(x.size());
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  mask_out.resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    mask_out[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  return x.cwiseProduct(mask_out);
}

struct GruGates {
  Eigen::VectorXd z, r, n, h;
};

GruGates gru_forward(const GruCellParams& cell, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& h_prev) {
  GruGates g;
  g.z = sigmoid(cell.Wz.value * x + cell.Uz.value * h_prev + cell.bz.value);
  g.r = sigmoid(cell.Wr.value * x + cell.Ur.value * h_prev + cell.br.value);
  g.n = (cell.Wn.value * x + cell.Un.value * (g.r.cwiseProduct(h_prev)) +
         cell.bn.value)
            .array()
            .tanh();
  g.h = g.z.cwiseProduct(h_prev) +
        (Eigen::VectorXd::Ones(g.z.size()) - g.z).cwiseProduct(g.n);
  return g;
}

/// Reverse-mode step for one GRU cell application. Accumulates parameter
/// gradients and returns gradients w.r.t. the input and previous state.
void gru_backward(GruCellParams& cell, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& h_prev, const Eigen::VectorXd& z,
                  const Eigen::VectorXd& r, const Eigen::VectorXd& n,
                  const Eigen::VectorXd& dh, Eigen::VectorXd& dx,
                  Eigen::VectorXd& dh_prev) {
  const Eigen::VectorXd dz = dh.cwiseProduct(h_prev - n);
  const Eigen::VectorXd dn =
      dh.cwiseProduct(Eigen::VectorXd::Ones(z.size()) - z);
  dh_prev = dh.cwiseProduct(z);

  const Eigen::VectorXd dan =
      dn.cwiseProduct(Eigen::VectorXd::Ones(n.size()) - n.cwiseProduct(n));
  cell.Wn.grad.noalias() += dan * x.transpose();
  cell.Un.grad.noalias() += dan * (r.cwiseProduct(h_prev)).transpose();
  cell.bn.grad += dan;
  dx.noalias() = cell.Wn.value.transpose() * dan;
  const Eigen::VectorXd un_t_dan = cell.Un.value.transpose() * dan;
  const Eigen::VectorXd dr = un_t_dan.cwiseProduct(h_prev);
  dh_prev += un_t_dan.cwiseProduct(r);

  const Eigen::VectorXd daz = dz.cwiseProduct(z).cwiseProduct(
      Eigen::VectorXd::Ones(z.size()) - z);
  cell.Wz.grad.noalias() += daz * x.transpose();
  cell.Uz.grad.noalias() += daz * h_prev.transpose();
  cell.bz.grad += daz;
  dx.noalias() += cell.Wz.value.transpose() * daz;
  dh_prev.noalias() += cell.Uz.value.transpose() * daz;

  const Eigen::VectorXd dar = dr.cwiseProduct(r).cwiseProduct(
      Eigen::VectorXd::Ones(r.size()) - r);
  cell.Wr.grad.noalias() += dar * x.transpose();
  cell.Ur.grad.noalias() += dar * h_prev.transpose();
  cell.br.grad += dar;
  dx.noalias() += cell.Wr.value.transpose() * dar;
  dh_prev.noalias() += cell.Ur.value.transpose() * dar;
}

std::string format_double(double value) {
  char buffer[40];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

}  // namespace

void GruCellParams::setup(const std::string& prefix, int input, int hidden) {
  input_dim = input;
  hidden_dim = hidden;
  Wz.setup(prefix + ".Wz", hidden, input);
  Uz.setup(prefix + ".Uz", hidden, hidden);
  bz.setup(prefix + ".bz", hidden, 1);
  Wr.setup(prefix + ".Wr", hidden, input);
  Ur.setup(prefix + ".Ur", hidden, hidden);
  br.setup(prefix + ".br", hidden, 1);
  Wn.setup(prefix + ".Wn", hidden, input);
  Un.setup(prefix + ".Un", hidden, hidden);
  bn.setup(prefix + ".bn", hidden, 1);
}

std::vector<Tensor*> GruCellParams::tensors() {
  return {&Wz, &Uz, &bz, &Wr, &Ur, &br, &Wn, &Un, &bn};
}

void AttentionParams::setup(int score_dim, int encoder_dim, int state_dim,
                            int cond_dim, bool with_conditioning) {
  has_conditioning = with_conditioning;
  Wh.setup("attention.Wh", score_dim, encoder_dim);
  Ws.setup("attention.Ws", score_dim, state_dim);
  v.setup("attention.v", score_dim, 1);
  if (with_conditioning) {
    Wc.setup("attention.Wc", score_dim, cond_dim);
  } else {
    Wc.setup("attention.Wc", 0, 0);
  }
}

std::vector<Tensor*> AttentionParams::tensors() {
  std::vector<Tensor*> out{&Wh, &Ws, &v};
  if (has_conditioning) out.push_back(&Wc);
  return out;
}

Model::Model(const Taxonomy& taxonomy, ModelConfig config)
    : config_(config),
      union_size_(taxonomy.union_size()),
      taxonomy_hash_(taxonomy.content_hash()) {
  if (config_.hidden_dim <= 0 || config_.embed_dim <= 0) {
    throw ConfigError("model: hidden and embedding dimensions must be positive");
  }
  if (config_.dropout_rate < 0.0 || config_.dropout_rate >= 1.0) {
    throw ConfigError("model: dropout rate must be in [0, 1)");
  }
  const int h = config_.hidden_dim;
  const int d = config_.embed_dim;
  class_embeddings.setup("class_embeddings", union_size_ + 1, d);
  encoder_fwd.setup("encoder_fwd", d, h);
  encoder_bwd.setup("encoder_bwd", d, h);
  decoder.setup("decoder", d + 2 * h, h);
  attention.setup(h, 2 * h, h, d, config_.pnc_enabled);
  Winit.setup("Winit", h, 2 * h);
  binit.setup("binit", h, 1);
  Wout.setup("Wout", union_size_, 3 * h);
  bout.setup("bout", union_size_, 1);
}

std::vector<Tensor*> Model::tensors() {
  std::vector<Tensor*> out{&class_embeddings};
  for (auto* t : encoder_fwd.tensors()) out.push_back(t);
  for (auto* t : encoder_bwd.tensors()) out.push_back(t);
  for (auto* t : decoder.tensors()) out.push_back(t);
  for (auto* t : attention.tensors()) out.push_back(t);
  out.push_back(&Winit);
  out.push_back(&binit);
  out.push_back(&Wout);
  out.push_back(&bout);
  return out;
}

std::vector<const Tensor*> Model::tensors() const {
  auto mutable_list = const_cast<Model*>(this)->tensors();
  return {mutable_list.begin(), mutable_list.end()};
}

void Model::zero_grads() {
  for (auto* t : tensors()) t->grad.setZero();
}

std::int64_t Model::parameter_count() const {
  std::int64_t count = 0;
  for (const auto* t : tensors()) count += t->size();
  return count;
}

void Model::initialize(std::uint64_t seed) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(config_.hidden_dim));
  for (auto* t : tensors()) {
    Rng rng(derive_seed(seed, t->name));
    double* data = t->value.data();
    for (Eigen::Index i = 0; i < t->value.size(); ++i) {
      data[i] = rng.uniform(-bound, bound);
    }
    t->grad.setZero();
  }
}

Eigen::VectorXd EncoderState::final_states() const {
  const auto h = fwd.h.rows();
  Eigen::VectorXd out(2 * h);
  out.head(h) = fwd.h.col(fwd.h.cols() - 1);
  out.tail(h) = bwd.h.col(0);
  return out;
}

EncoderState encode(const Model& model, const std::vector<std::string>& tokens,
                    const EmbeddingTable& table, bool dropout_active,
                    Rng& rng) {
  const int n = static_cast<int>(tokens.size());
  if (n < 1) throw DataError("encode: empty token sequence");
  if (table.dimension() != model.config().embed_dim) {
    throw ConfigError("encode: embedding table dimension " +
                      std::to_string(table.dimension()) +
                      " does not match model embed_dim " +
                      std::to_string(model.config().embed_dim));
  }
  const int h = model.config().hidden_dim;
  const int d = model.config().embed_dim;

  EncoderState state;
  state.inputs.resize(d, n);
  state.drop_mask.resize(d, n);
  for (int t = 0; t < n; ++t) {
    Eigen::VectorXd mask;
    state.inputs.col(t) = apply_dropout(table.lookup(tokens[t]),
                                        model.config().dropout_rate,
                                        dropout_active, rng, mask);
    state.drop_mask.col(t) = mask;
  }

  for (auto* dir : {&state.fwd, &state.bwd}) {
    dir->h.resize(h, n);
    dir->z.resize(h, n);
    dir->r.resize(h, n);
    dir->n.resize(h, n);
  }

  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
  for (int t = 0; t < n; ++t) {
    const GruGates g = gru_forward(model.encoder_fwd, state.inputs.col(t), h_prev);
    state.fwd.h.col(t) = g.h;
    state.fwd.z.col(t) = g.z;
    state.fwd.r.col(t) = g.r;
    state.fwd.n.col(t) = g.n;
    check_finite(g.h, "encoder forward pass");
    h_prev = g.h;
  }
  h_prev.setZero();
  for (int t = n - 1; t >= 0; --t) {
    const GruGates g = gru_forward(model.encoder_bwd, state.inputs.col(t), h_prev);
    state.bwd.h.col(t) = g.h;
    state.bwd.z.col(t) = g.z;
    state.bwd.r.col(t) = g.r;
    state.bwd.n.col(t) = g.n;
    check_finite(g.h, "encoder backward pass");
    h_prev = g.h;
  }

  state.outputs.resize(2 * h, n);
  state.outputs.topRows(h) = state.fwd.h;
  state.outputs.bottomRows(h) = state.bwd.h;
  return state;
}

AttendResult attend(const Model& model, const EncoderState& encoder,
                    const Eigen::VectorXd& decoder_state,
                    const Eigen::VectorXd* conditioning_cdv) {
  const int n = encoder.length();
  AttendResult out;

  Eigen::VectorXd shift = model.attention.Ws.value * decoder_state;
  if (conditioning_cdv != nullptr) {
    if (!model.attention.has_conditioning) {
      throw ConfigError("attend: model was built without conditioning (PNC)");
    }
    shift += model.attention.Wc.value * (*conditioning_cdv);
    out.conditioned = true;
    out.conditioning = *conditioning_cdv;
  }

  out.activations =
      ((model.attention.Wh.value * encoder.outputs).colwise() + shift)
          .array()
          .tanh();
  Eigen::VectorXd energies = out.activations.transpose() * model.attention.v.value;

  const double max_energy = energies.maxCoeff();
  Eigen::VectorXd expd = (energies.array() - max_energy).exp();
  out.weights = expd / expd.sum();
  out.context = encoder.outputs * out.weights;
  return out;
}

MaskedSoftmax masked_log_softmax(const Eigen::VectorXd& logits,
                                 const std::vector<std::uint8_t>& mask) {
  if (static_cast<Eigen::Index>(mask.size()) != logits.size()) {
    throw std::invalid_argument("masked_log_softmax: mask size mismatch");
  }
  double max_logit = kNegInf;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[i] && logits[i] > max_logit) max_logit = logits[i];
  }
  if (max_logit == kNegInf) {
    throw std::invalid_argument("masked_log_softmax: mask has no true entry");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[i]) sum += std::exp(logits[i] - max_logit);
  }
  const double lse = max_logit + std::log(sum);

  MaskedSoftmax out;
  out.log_probs = Eigen::VectorXd::Constant(logits.size(), kNegInf);
  out.probs = Eigen::VectorXd::Zero(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[i]) {
      out.log_probs[i] = logits[i] - lse;
      out.probs[i] = std::exp(out.log_probs[i]);
    }
  }
  return out;
}

DecodeStepResult decode_step(const Model& model, int prev_class,
                             const Eigen::VectorXd& hidden,
                             const EncoderState& encoder,
                             const std::vector<std::uint8_t>& level_mask,
                             const Eigen::VectorXd* conditioning_cdv,
                             bool dropout_active, Rng& rng) {
  const int h = model.config().hidden_dim;
  const int d = model.config().embed_dim;
  if (prev_class < -1 || prev_class >= model.union_size()) {
    throw DataError("decode_step: previous class index out of range");
  }

  DecodeStepResult step;
  step.prev_row = prev_class < 0 ? model.start_row() : prev_class;
  step.h_prev = hidden;
  step.attend = attend(model, encoder, hidden, conditioning_cdv);

  Eigen::VectorXd x_raw(d + 2 * h);
  x_raw.head(d) = model.class_embeddings.value.row(step.prev_row).transpose();
  x_raw.tail(2 * h) = step.attend.context;
  step.x = apply_dropout(x_raw, model.config().dropout_rate, dropout_active,
                         rng, step.x_drop_mask);

  const GruGates g = gru_forward(model.decoder, step.x, hidden);
  step.z = g.z;
  step.r = g.r;
  step.n = g.n;
  step.hidden = g.h;
  check_finite(step.hidden, "decoder step");

  Eigen::VectorXd proj_in(3 * h);
  proj_in.head(h) = step.hidden;
  proj_in.tail(2 * h) = step.attend.context;
  step.logits = model.Wout.value * proj_in + model.bout.value;
  if (!step.logits.allFinite()) {
    throw NumericError("decode_step: non-finite logits");
  }

  const MaskedSoftmax soft = masked_log_softmax(step.logits, level_mask);
  step.log_probs = soft.log_probs;
  step.probs = soft.probs;
  return step;
}

ForwardCache forward_loss(const Model& model,
                          const std::vector<std::string>& tokens,
                          const std::vector<int>& target_globals,
                          const Taxonomy& taxonomy,
                          const EmbeddingTable& table, bool pnc_enabled,
                          const CdvStore* cdv_store, bool dropout_active,
                          Rng& rng) {
  const int m = taxonomy.num_levels();
  if (static_cast<int>(target_globals.size()) != m) {
    throw DataError("forward_loss: target length " +
                    std::to_string(target_globals.size()) +
                    " does not match the number of levels " +
                    std::to_string(m));
  }
  // The target must walk the levels strictly top-down or bottom-up.
  const int first_level = taxonomy.from_global(target_globals[0]).level;
  if (first_level != 0 && first_level != m - 1) {
    throw DataError("forward_loss: target must start at the top or bottom level");
  }
  const int direction_step = first_level == 0 ? 1 : -1;
  for (int t = 0; t < m; ++t) {
    if (taxonomy.from_global(target_globals[t]).level !=
        first_level + t * direction_step) {
      throw DataError("forward_loss: target does not follow the level order");
    }
  }
  if (pnc_enabled && cdv_store == nullptr) {
    throw ConfigError("forward_loss: PNC requires a CDV store");
  }

  ForwardCache cache;
  cache.target = target_globals;
  cache.encoder = encode(model, tokens, table, dropout_active, rng);
  cache.enc_final = cache.encoder.final_states();
  cache.s0 = (model.Winit.value * cache.enc_final + model.binit.value)
                 .array()
                 .tanh();
  check_finite(cache.s0, "decoder init projection");

  Eigen::VectorXd hidden = cache.s0;
  Eigen::VectorXd conditioning;
  for (int t = 0; t < m; ++t) {
    const int gold = target_globals[t];
    const int level = taxonomy.from_global(gold).level;
    const Eigen::VectorXd* cdv = nullptr;
    if (pnc_enabled && t > 0) {
      conditioning = cdv_store->vector_for(target_globals[t - 1]);
      cdv = &conditioning;
    }
    DecodeStepResult step = decode_step(
        model, t == 0 ? -1 : target_globals[t - 1], hidden, cache.encoder,
        taxonomy.mask_of_level(level), cdv, dropout_active, rng);
    hidden = step.hidden;
    const double gold_lp = step.log_probs[gold];
    if (!std::isfinite(gold_lp)) {
      throw NumericError("forward_loss: gold class has non-finite log-probability");
    }
    cache.gold_log_probs.push_back(gold_lp);
    cache.loss -= gold_lp;
    cache.steps.push_back(std::move(step));
  }
  return cache;
}

void backward(Model& model, const ForwardCache& cache) {
  const int h = model.config().hidden_dim;
  const int d = model.config().embed_dim;
  const int n = cache.encoder.length();
  const int m = static_cast<int>(cache.steps.size());

  Eigen::MatrixXd d_enc = Eigen::MatrixXd::Zero(2 * h, n);
  Eigen::VectorXd d_hidden = Eigen::VectorXd::Zero(h);  // w.r.t. s_t

  for (int t = m - 1; t >= 0; --t) {
    const DecodeStepResult& step = cache.steps[t];

    // d(loss)/d(logits) of the masked cross entropy: probs - onehot(gold);
    // exactly zero outside the level because masked probs are zero there.
    Eigen::VectorXd dlogits = step.probs;
    dlogits[cache.target[t]] -= 1.0;

    Eigen::VectorXd proj_in(3 * h);
    proj_in.head(h) = step.hidden;
    proj_in.tail(2 * h) = step.attend.context;
    model.Wout.grad.noalias() += dlogits * proj_in.transpose();
    model.bout.grad += dlogits;
    const Eigen::VectorXd d_proj = model.Wout.value.transpose() * dlogits;

    const Eigen::VectorXd dh = d_hidden + d_proj.head(h);
    Eigen::VectorXd d_context = d_proj.tail(2 * h);

    // Decoder GRU.
    Eigen::VectorXd dx, dh_prev;
    gru_backward(model.decoder, step.x, step.h_prev, step.z, step.r, step.n,
                 dh, dx, dh_prev);
    const Eigen::VectorXd dx_raw = dx.cwiseProduct(step.x_drop_mask);
    model.class_embeddings.grad.row(step.prev_row) +=
        dx_raw.head(d).transpose();
    d_context += dx_raw.tail(2 * h);

    // Attention: context = outputs * weights, weights = softmax(energies),
    // energies_i = v' tanh(Wh h_i + Ws s + Wc cv).
    const Eigen::VectorXd d_weights =
        cache.encoder.outputs.transpose() * d_context;
    const double weighted = step.attend.weights.dot(d_weights);
    const Eigen::VectorXd d_energies = step.attend.weights.cwiseProduct(
        d_weights - Eigen::VectorXd::Constant(n, weighted));

    model.attention.v.grad += step.attend.activations * d_energies;
    const Eigen::MatrixXd d_pre =
        (model.attention.v.value * d_energies.transpose())
            .cwiseProduct(Eigen::MatrixXd::Ones(step.attend.activations.rows(),
                                                n) -
                          step.attend.activations.cwiseProduct(
                              step.attend.activations));
    model.attention.Wh.grad.noalias() +=
        d_pre * cache.encoder.outputs.transpose();
    const Eigen::VectorXd d_pre_sum = d_pre.rowwise().sum();
    model.attention.Ws.grad.noalias() += d_pre_sum * step.h_prev.transpose();
    if (step.attend.conditioned) {
      model.attention.Wc.grad.noalias() +=
          d_pre_sum * step.attend.conditioning.transpose();
    }
    d_enc.noalias() += model.attention.Wh.value.transpose() * d_pre;
    d_enc.noalias() += d_context * step.attend.weights.transpose();

    // Carry to s_{t-1}: GRU previous-state path plus the attention query.
    d_hidden = dh_prev + model.attention.Ws.value.transpose() * d_pre_sum;
  }

  // Initial decoder state s0 = tanh(Winit [f_last ; b_last] + binit).
  const Eigen::VectorXd d_pre_init = d_hidden.cwiseProduct(
      Eigen::VectorXd::Ones(h) - cache.s0.cwiseProduct(cache.s0));
  model.Winit.grad.noalias() += d_pre_init * cache.enc_final.transpose();
  model.binit.grad += d_pre_init;
  const Eigen::VectorXd d_final = model.Winit.value.transpose() * d_pre_init;
  d_enc.col(n - 1).head(h) += d_final.head(h);
  d_enc.col(0).tail(h) += d_final.tail(h);

  // Encoder, forward direction: positions n-1 .. 0.
  Eigen::VectorXd carry = Eigen::VectorXd::Zero(h);
  for (int t = n - 1; t >= 0; --t) {
    const Eigen::VectorXd dh = d_enc.col(t).head(h) + carry;
    const Eigen::VectorXd h_prev =
        t == 0 ? Eigen::VectorXd::Zero(h)
               : Eigen::VectorXd(cache.encoder.fwd.h.col(t - 1));
    Eigen::VectorXd dx;
    gru_backward(model.encoder_fwd, cache.encoder.inputs.col(t), h_prev,
                 cache.encoder.fwd.z.col(t), cache.encoder.fwd.r.col(t),
                 cache.encoder.fwd.n.col(t), dh, dx, carry);
    // dx would flow into the frozen word vectors; dropped by contract.
  }

  // Encoder, backward direction: processed n-1 .. 0, so unwind 0 .. n-1.
  carry.setZero();
  for (int t = 0; t < n; ++t) {
    const Eigen::VectorXd dh = d_enc.col(t).tail(h) + carry;
    const Eigen::VectorXd h_prev =
        t == n - 1 ? Eigen::VectorXd::Zero(h)
                   : Eigen::VectorXd(cache.encoder.bwd.h.col(t + 1));
    Eigen::VectorXd dx;
    gru_backward(model.encoder_bwd, cache.encoder.inputs.col(t), h_prev,
                 cache.encoder.bwd.z.col(t), cache.encoder.bwd.r.col(t),
                 cache.encoder.bwd.n.col(t), dh, dx, carry);
  }
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("checkpoint: cannot write '" + path + "'");
  nlohmann::json config{{"hidden_dim", model.config().hidden_dim},
                        {"embed_dim", model.config().embed_dim},
                        {"dropout_rate", model.config().dropout_rate},
                        {"pnc_enabled", model.config().pnc_enabled}};
  out << "taxoseq-checkpoint v1\n";
  out << "taxonomy_hash " << model.taxonomy_hash() << '\n';
  out << "union_size " << model.union_size() << '\n';
  out << "config " << config.dump() << '\n';
  for (const auto* t : model.tensors()) {
    out << "tensor " << t->name << ' ' << t->value.rows() << ' '
        << t->value.cols() << '\n';
    for (Eigen::Index r = 0; r < t->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t->value.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_double(t->value(r, c));
      }
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw DataError("checkpoint: write to '" + path + "' failed");
}

Model load_checkpoint(const std::string& path, const Taxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint: cannot open '" + path + "'");
  const auto fail = [&path](const std::string& why) {
    return DataError("checkpoint: '" + path + "': " + why);
  };

  std::string line;
  if (!std::getline(in, line) || line != "taxoseq-checkpoint v1") {
    throw fail("bad magic line");
  }

  std::uint64_t hash = 0;
  int union_size = 0;
  ModelConfig config;
  {
    std::string key;
    if (!(in >> key >> hash) || key != "taxonomy_hash") throw fail("bad header");
    if (!(in >> key >> union_size) || key != "union_size") throw fail("bad header");
    if (!(in >> key) || key != "config") throw fail("bad header");
    std::getline(in, line);
    try {
      const auto doc = nlohmann::json::parse(line);
      config.hidden_dim = doc.at("hidden_dim").get<int>();
      config.embed_dim = doc.at("embed_dim").get<int>();
      config.dropout_rate = doc.at("dropout_rate").get<double>();
      config.pnc_enabled = doc.at("pnc_enabled").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw fail(std::string("bad config record: ") + e.what());
    }
  }
  if (hash != taxonomy.content_hash()) {
    throw fail("taxonomy hash mismatch: the checkpoint was trained against a "
               "different taxonomy");
  }
  if (union_size != taxonomy.union_size()) throw fail("union size mismatch");

  Model model(taxonomy, config);
  std::vector<Tensor*> tensors = model.tensors();
  std::size_t loaded = 0;
  std::string word;
  while (in >> word) {
    if (word == "end") break;
    if (word != "tensor") throw fail("expected tensor record, got '" + word + "'");
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols)) throw fail("bad tensor header");
    Tensor* target = nullptr;
    for (auto* t : tensors) {
      if (t->name == name) {
        target = t;
        break;
      }
    }
    if (target == nullptr) throw fail("unknown tensor '" + name + "'");
    if (target->value.rows() != rows || target->value.cols() != cols) {
      throw fail("shape mismatch for tensor '" + name + "'");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        std::string token;
        if (!(in >> token)) throw fail("truncated tensor '" + name + "'");
        double value = 0;
        const auto res = std::from_chars(token.data(),
                                         token.data() + token.size(), value);
        if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
          throw fail("non-numeric value in tensor '" + name + "'");
        }
        target->value(r, c) = value;
      }
    }
    ++loaded;
  }
  if (word != "end") throw fail("missing end marker");
  if (loaded != tensors.size()) {
    throw fail("expected " + std::to_string(tensors.size()) +
               " tensors, found " + std::to_string(loaded));
  }
  return model;
}

}  // namespace taxoseq
