#include "taxoseq/decode.hpp"

#include <algorithm>

#include "taxoseq/errors.hpp"

namespace taxoseq {

namespace {

void check_decode_inputs(const Model& model, const Taxonomy& taxonomy,
                         const CdvStore* cdv_store,
                         const DecodeConfig& config) {
  if (model.taxonomy_hash() != taxonomy.content_hash()) {
    throw DataError("decode: model was trained against a different taxonomy");
  }
  if (config.beam_size < 1) {
    throw ConfigError("decode: beam size must be >= 1");
  }
  if (config.pnc_enabled) {
    if (!model.config().pnc_enabled) {
      throw ConfigError("decode: PNC requested but the model has no "
                        "conditioning projection");
    }
    if (cdv_store == nullptr) {
      throw ConfigError("decode: PNC requires a CDV store");
    }
  }
  if (config.mode == DecodeMode::kAdaptedBeam && cdv_store == nullptr) {
    throw ConfigError("decode: the adapted beam search requires a CDV store");
  }
  if (cdv_store != nullptr &&
      cdv_store->taxonomy_hash() != taxonomy.content_hash()) {
    throw DataError("decode: CDV store was built from a different taxonomy");
  }
}

LabelPath to_label_path(const Taxonomy& taxonomy, const std::vector<int>& globals) {
  LabelPath path;
  path.reserve(globals.size());
  for (const int g : globals) path.push_back(taxonomy.from_global(g));
  return path;
}

DecodeResult result_from_hypotheses(const Taxonomy& taxonomy,
                                    std::vector<Hypothesis> ranked) {
  DecodeResult out;
  const Hypothesis& best = ranked.front();
  out.path = to_label_path(taxonomy, best.path);
  out.step_log_probs = best.step_log_probs;
  out.step_cd_terms = best.step_cd_terms;
  out.log_prob = best.cum_log_prob;
  out.fused_score = best.cum_fused_score;
  out.k_best = std::move(ranked);
  return out;
}

/// Shared beam core. `fused` switches the CD term on; greedy is the k=1
/// special case of the plain ranking.
DecodeResult run_beam(const Model& model, const std::vector<std::string>& tokens,
                      const Taxonomy& taxonomy, const EmbeddingTable& table,
                      const CdvStore* cdv_store, const DecodeConfig& config,
                      bool fused) {
  check_decode_inputs(model, taxonomy, cdv_store, config);
  const int k = config.beam_size;
  const int m = taxonomy.num_levels();

  Rng rng(0);  // decoding never draws (dropout inactive)
  const EncoderState encoder = encode(model, tokens, table, false, rng);
  const Eigen::VectorXd s0 =
      (model.Winit.value * encoder.final_states() + model.binit.value)
          .array()
          .tanh();

  // Per-class CD terms for this document, fixed across steps.
  SentenceVector doc_vector;
  std::vector<double> cd_terms;
  if (fused) {
    doc_vector = mean_pool(table, tokens);
    cd_terms.resize(taxonomy.union_size());
    for (int g = 0; g < taxonomy.union_size(); ++g) {
      cd_terms[g] = cd_score(*cdv_store, taxonomy.from_global(g), doc_vector,
                             config.lambda, config.cd_sign);
    }
  }

  struct Candidate {
    double ranking_score;
    std::vector<int> path;
    double cum_log_prob;
    double cum_fused_score;
    int source;  // index of the expanded hypothesis
    double step_log_prob;
    double step_cd;
    int conditioning_class;
  };

  std::vector<Hypothesis> beam(1);
  beam[0].hidden = s0;

  for (int step = 0; step < m; ++step) {
    const auto& mask = taxonomy.level_mask(step, Direction::kForward);
    std::vector<Candidate> candidates;
    std::vector<DecodeStepResult> expansions(beam.size());

    for (std::size_t b = 0; b < beam.size(); ++b) {
      const Hypothesis& hyp = beam[b];
      const int prev = step == 0 ? -1 : hyp.path.back();
      Eigen::VectorXd conditioning;
      const Eigen::VectorXd* cdv = nullptr;
      int conditioning_class = -1;
      if (config.pnc_enabled && step > 0) {
        conditioning_class = hyp.path.back();
        conditioning = cdv_store->vector_for(conditioning_class);
        cdv = &conditioning;
      }
      expansions[b] = decode_step(model, prev, hyp.hidden, encoder, mask, cdv,
                                  false, rng);
      for (int g = 0; g < taxonomy.union_size(); ++g) {
        if (!mask[g]) continue;
        Candidate c;
        c.path = hyp.path;
        c.path.push_back(g);
        c.step_log_prob = expansions[b].log_probs[g];
        c.step_cd = fused ? cd_terms[g] : 0.0;
        c.cum_log_prob = hyp.cum_log_prob + c.step_log_prob;
        c.cum_fused_score =
            (fused && config.cd_carry == CdCarry::kAccumulate
                 ? hyp.cum_fused_score
                 : hyp.cum_log_prob) +
            c.step_log_prob + c.step_cd;
        c.ranking_score = fused ? c.cum_fused_score : c.cum_log_prob;
        c.source = static_cast<int>(b);
        c.conditioning_class = conditioning_class;
        candidates.push_back(std::move(c));
      }
    }

    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.ranking_score != b.ranking_score) {
                  return a.ranking_score > b.ranking_score;
                }
                return a.path < b.path;
              });
    if (static_cast<int>(candidates.size()) > k) candidates.resize(k);

    std::vector<Hypothesis> next;
    next.reserve(candidates.size());
    for (const Candidate& c : candidates) {
      const Hypothesis& parent = beam[c.source];
      Hypothesis hyp;
      hyp.path = c.path;
      hyp.cum_log_prob = c.cum_log_prob;
      // Under step-only carry the CD term influences ranking but is not
      // kept in the carried score; the field then holds the last ranking
      // score so the final ordering is reportable.
      hyp.cum_fused_score = fused && config.cd_carry == CdCarry::kStepOnly
                                ? c.ranking_score
                                : c.cum_fused_score;
      hyp.hidden = expansions[c.source].hidden;
      hyp.step_log_probs = parent.step_log_probs;
      hyp.step_log_probs.push_back(c.step_log_prob);
      hyp.step_cd_terms = parent.step_cd_terms;
      hyp.step_cd_terms.push_back(c.step_cd);
      hyp.conditioning_classes = parent.conditioning_classes;
      hyp.conditioning_classes.push_back(c.conditioning_class);
      next.push_back(std::move(hyp));
    }
    beam = std::move(next);
  }

  return result_from_hypotheses(taxonomy, std::move(beam));
}

}  // namespace

DecodeResult greedy_decode(const Model& model,
                           const std::vector<std::string>& tokens,
                           const Taxonomy& taxonomy,
                           const EmbeddingTable& table,
                           const CdvStore* cdv_store,
                           const DecodeConfig& config) {
  check_decode_inputs(model, taxonomy, cdv_store, config);
  const int m = taxonomy.num_levels();

  Rng rng(0);
  const EncoderState encoder = encode(model, tokens, table, false, rng);
  Eigen::VectorXd hidden =
      (model.Winit.value * encoder.final_states() + model.binit.value)
          .array()
          .tanh();

  Hypothesis hyp;
  for (int step = 0; step < m; ++step) {
    const auto& mask = taxonomy.level_mask(step, Direction::kForward);
    const int prev = step == 0 ? -1 : hyp.path.back();
    Eigen::VectorXd conditioning;
    const Eigen::VectorXd* cdv = nullptr;
    int conditioning_class = -1;
    if (config.pnc_enabled && step > 0) {
      conditioning_class = hyp.path.back();
      conditioning = cdv_store->vector_for(conditioning_class);
      cdv = &conditioning;
    }
    const DecodeStepResult out =
        decode_step(model, prev, hidden, encoder, mask, cdv, false, rng);
    // Masked argmax; ties break toward the lowest class index.
    int best = -1;
    for (int g = 0; g < taxonomy.union_size(); ++g) {
      if (!mask[g]) continue;
      if (best < 0 || out.log_probs[g] > out.log_probs[best]) best = g;
    }
    hyp.path.push_back(best);
    hyp.step_log_probs.push_back(out.log_probs[best]);
    hyp.step_cd_terms.push_back(0.0);
    hyp.conditioning_classes.push_back(conditioning_class);
    hyp.cum_log_prob += out.log_probs[best];
    hidden = out.hidden;
  }
  hyp.cum_fused_score = hyp.cum_log_prob;
  hyp.hidden = hidden;
  return result_from_hypotheses(taxonomy, {std::move(hyp)});
}

DecodeResult beam_search(const Model& model,
                         const std::vector<std::string>& tokens,
                         const Taxonomy& taxonomy, const EmbeddingTable& table,
                         const CdvStore* cdv_store,
                         const DecodeConfig& config) {
  return run_beam(model, tokens, taxonomy, table, cdv_store, config, false);
}

DecodeResult adapted_beam_search(const Model& model,
                                 const std::vector<std::string>& tokens,
                                 const Taxonomy& taxonomy,
                                 const EmbeddingTable& table,
                                 const CdvStore* cdv_store,
                                 const DecodeConfig& config) {
  return run_beam(model, tokens, taxonomy, table, cdv_store, config, true);
}

DecodeResult decode(const Model& model, const std::vector<std::string>& tokens,
                    const Taxonomy& taxonomy, const EmbeddingTable& table,
                    const CdvStore* cdv_store, const DecodeConfig& config) {
  switch (config.mode) {
    case DecodeMode::kGreedy:
      return greedy_decode(model, tokens, taxonomy, table, cdv_store, config);
    case DecodeMode::kBeam:
      return beam_search(model, tokens, taxonomy, table, cdv_store, config);
    case DecodeMode::kAdaptedBeam:
      return adapted_beam_search(model, tokens, taxonomy, table, cdv_store,
                                 config);
  }
  throw ConfigError("decode: unknown mode");
}

}  // namespace taxoseq
