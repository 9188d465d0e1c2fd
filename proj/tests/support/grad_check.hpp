#pragma once

// Central finite-difference oracle for the analytic gradients.

#include <algorithm>
#include <cmath>

#include "support/fixtures.hpp"
#include "taxoseq/neural.hpp"

namespace taxoseq::test {

struct ModelFixture {
  Taxonomy taxonomy;
  EmbeddingTable table;
  Model model;
};

inline ModelFixture random_model(const TempDir& dir, Rng& rng,
                                 const std::vector<int>& level_sizes,
                                 int hidden, int embed, bool pnc,
                                 const std::string& tag, int vocab = 10) {
  Taxonomy taxonomy = tiny_taxonomy(level_sizes);
  EmbeddingTable table = random_table(dir, rng, vocab, embed, tag + ".txt");
  ModelConfig config;
  config.hidden_dim = hidden;
  config.embed_dim = embed;
  config.dropout_rate = 0.3;
  config.pnc_enabled = pnc;
  Model model(taxonomy, config);
  model.initialize(rng.next_u64());
  return {std::move(taxonomy), std::move(table), std::move(model)};
}

inline CdvStore random_cdv_store(const Taxonomy& taxonomy,
                                 const EmbeddingTable& table, Rng& rng) {
  DefinitionStore defs;
  for (int level = 0; level < taxonomy.num_levels(); ++level) {
    for (int c = 0; c < taxonomy.level_size(level); ++c) {
      if (rng.below(8) == 0) continue;  // leave some classes undefined
      std::string text;
      const auto words = 1 + rng.below(4);
      for (std::uint64_t w = 0; w < words; ++w) {
        if (!text.empty()) text += ' ';
        text += "tok" + std::to_string(rng.below(table.size()));
      }
      defs.insert(level, taxonomy.classes(level)[c], text);
    }
  }
  return CdvStore::build(taxonomy, defs, table);
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  long checked = 0;
};

/// Guarded relative error: |a-n| / max(floor, |a|, |n|). The floor keeps
/// finite-difference roundoff on near-zero gradients from dominating.
inline double guarded_rel_error(double analytic, double numeric,
                                double floor = 1e-4) {
  return std::abs(analytic - numeric) /
         std::max({floor, std::abs(analytic), std::abs(numeric)});
}

/// Compares every analytic gradient against a central difference with the
/// given step, for one (document, target) pair. dropout stays off.
inline GradCheckResult finite_difference_check(
    Model& model, const std::vector<std::string>& tokens,
    const std::vector<int>& target, const Taxonomy& taxonomy,
    const EmbeddingTable& table, bool pnc, const CdvStore* cdv_store,
    double step = 1e-5) {
  Rng rng(0);
  model.zero_grads();
  const ForwardCache cache = forward_loss(model, tokens, target, taxonomy,
                                          table, pnc, cdv_store, false, rng);
  backward(model, cache);

  const auto loss_at = [&]() {
    Rng inner(0);
    return forward_loss(model, tokens, target, taxonomy, table, pnc,
                        cdv_store, false, inner)
        .loss;
  };

  GradCheckResult result;
  for (auto* tensor : model.tensors()) {
    for (Eigen::Index i = 0; i < tensor->value.size(); ++i) {
      double* coeff = tensor->value.data() + i;
      const double saved = *coeff;
      *coeff = saved + step;
      const double up = loss_at();
      *coeff = saved - step;
      const double down = loss_at();
      *coeff = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = tensor->grad.data()[i];
      result.max_rel_error =
          std::max(result.max_rel_error, guarded_rel_error(analytic, numeric));
      result.max_abs_error =
          std::max(result.max_abs_error, std::abs(analytic - numeric));
      ++result.checked;
    }
  }
  return result;
}

}  // namespace taxoseq::test
