#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taxoseq/cdv.hpp"
#include "taxoseq/embeddings.hpp"
#include "taxoseq/neural.hpp"
#include "taxoseq/taxonomy.hpp"

namespace taxoseq {

enum class DecodeMode { kGreedy, kBeam, kAdaptedBeam };

/// How the definition-similarity term enters the beam score. kAccumulate
/// folds it into the carried score (the summed form); kStepOnly uses it to
/// rank the current step's candidates and then discards it.
enum class CdCarry { kAccumulate, kStepOnly };

struct DecodeConfig {
  DecodeMode mode = DecodeMode::kGreedy;
  int beam_size = 5;
  double lambda = 1.0;
  CdSign cd_sign = CdSign::kSimilarity;
  CdCarry cd_carry = CdCarry::kAccumulate;
  bool pnc_enabled = false;
};

/// A partial or complete label path under search.
struct Hypothesis {
  std::vector<int> path;  // global class indices, one per completed step
  double cum_log_prob = 0.0;
  /// cum_log_prob plus the accumulated lambda-weighted CD terms; equal to
  /// cum_log_prob when lambda is 0.
  double cum_fused_score = 0.0;
  Eigen::VectorXd hidden;  // decoder state snapshot
  std::vector<double> step_log_probs;
  std::vector<double> step_cd_terms;
  /// PNC conditioning class used at each step (-1 when unconditioned);
  /// instrumentation for verifying per-hypothesis parent chaining.
  std::vector<int> conditioning_classes;
};

struct DecodeResult {
  LabelPath path;  // top-1
  std::vector<double> step_log_probs;
  std::vector<double> step_cd_terms;
  double log_prob = 0.0;
  double fused_score = 0.0;
  std::vector<Hypothesis> k_best;  // sorted by the mode's ranking score
};

/// Masked argmax at every step, top level first. With PNC, step j > 0
/// conditions attention on the CDV of the class predicted at j - 1. Ties
/// break toward the lowest class index.
DecodeResult greedy_decode(const Model& model,
                           const std::vector<std::string>& tokens,
                           const Taxonomy& taxonomy,
                           const EmbeddingTable& table,
                           const CdvStore* cdv_store,
                           const DecodeConfig& config);

/// Breadth-k search ranking hypotheses by cumulative log-probability.
/// Deterministic tie-breaking: score first, then lexicographically smaller
/// class-index sequence. beam_size 1 reproduces greedy_decode exactly.
DecodeResult beam_search(const Model& model,
                         const std::vector<std::string>& tokens,
                         const Taxonomy& taxonomy, const EmbeddingTable& table,
                         const CdvStore* cdv_store, const DecodeConfig& config);

/// Beam search whose ranking adds the lambda-weighted definition-similarity
/// term between each candidate's CDV and the document's mean word vector.
/// Identical to beam_search at lambda = 0, k-best order included.
DecodeResult adapted_beam_search(const Model& model,
                                 const std::vector<std::string>& tokens,
                                 const Taxonomy& taxonomy,
                                 const EmbeddingTable& table,
                                 const CdvStore* cdv_store,
                                 const DecodeConfig& config);

/// Dispatches on config.mode.
DecodeResult decode(const Model& model, const std::vector<std::string>& tokens,
                    const Taxonomy& taxonomy, const EmbeddingTable& table,
                    const CdvStore* cdv_store, const DecodeConfig& config);

}  // namespace taxoseq
