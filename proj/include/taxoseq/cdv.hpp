#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taxoseq/corpus.hpp"
#include "taxoseq/embeddings.hpp"
#include "taxoseq/taxonomy.hpp"

namespace taxoseq {

/// Class definition vectors: one d-vector per class of the union
/// vocabulary, computed as the mean word vector of the tokenized
/// definition text. Classes without a definition carry the zero vector
/// and has_definition=false. Immutable after build.
class CdvStore {
 public:
  CdvStore() = default;  // empty placeholder; build() or load() make real ones

  static CdvStore build(const Taxonomy& taxonomy,
                        const DefinitionStore& definitions,
                        const EmbeddingTable& table,
                        MeanDenominator denominator = MeanDenominator::kAll);

  int dimension() const { return static_cast<int>(vectors_.cols()); }
  int size() const { return static_cast<int>(vectors_.rows()); }

  Eigen::VectorXd vector_for(int global_class) const;
  Eigen::VectorXd vector_for(ClassId id) const;
  bool has_definition(int global_class) const;
  bool has_definition(ClassId id) const;
  std::vector<ClassId> classes_without_definition() const;

  std::uint64_t taxonomy_hash() const { return taxonomy_hash_; }

  /// Text format, one row per class: level, class name, has_definition
  /// flag, then the vector components. Reload is bit-exact.
  void save(const std::string& path, const Taxonomy& taxonomy) const;
  static CdvStore load(const std::string& path, const Taxonomy& taxonomy);

 private:
  int to_global(ClassId id) const;

  Eigen::MatrixXd vectors_;  // union_size x d
  std::vector<std::uint8_t> has_definition_;
  std::vector<int> level_offsets_;
  std::vector<int> level_sizes_;
  std::uint64_t taxonomy_hash_ = 0;
};

/// dot(a,b) / (|a| |b|); returns 0 when either norm is below 1e-12, so
/// degenerate vectors are neutral rather than harmful.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

enum class CdSign { kSimilarity, kNegated };

/// The definition-similarity term fused into decoding scores:
/// lambda * cos(cdv(candidate), doc_vector), negated under kNegated.
/// Always within [-lambda, lambda].
double cd_score(const CdvStore& store, ClassId candidate,
                const SentenceVector& doc_vector, double lambda,
                CdSign sign = CdSign::kSimilarity);

}  // namespace taxoseq
