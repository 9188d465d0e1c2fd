#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace taxoseq {

/// Frozen pre-trained word vectors loaded from the plain-text format
/// `token v1 ... vd`, one row per line, optional `count dim` header.
/// Contents never change after load; lookups are safe from any number of
/// threads. Out-of-vocabulary tokens map to the zero vector.
class EmbeddingTable {
 public:
  /// Throws DataError on an inconsistent dimension or a non-numeric
  /// component, naming the line. With `limit`, keeps only the first rows.
  /// A repeated token keeps its first occurrence (warning recorded).
  static EmbeddingTable load(const std::string& path,
                             std::optional<std::size_t> limit = std::nullopt);

  int dimension() const { return static_cast<int>(matrix_.cols()); }
  std::size_t size() const { return tokens_.size(); }
  bool contains(const std::string& token) const;
  std::optional<std::size_t> row_of(const std::string& token) const;

  /// Stored row for in-vocabulary tokens, zero vector otherwise. Pure.
  Eigen::VectorXd lookup(const std::string& token) const;

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::string>& load_warnings() const { return warnings_; }

  /// Writes the same text format (with header); values round-trip exactly.
  void write(const std::string& path) const;

  /// Hash over all vector bytes; used to assert the frozen contract.
  std::uint64_t content_hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  Eigen::MatrixXd matrix_;  // |V| x d
  std::vector<std::string> warnings_;
};

enum class MeanDenominator { kAll, kKnown };

struct SentenceVector {
  Eigen::VectorXd values;
  std::size_t source_token_count = 0;
};

/// Arithmetic mean of per-token lookups. With kAll (default) the
/// denominator is the total token count, so OOV tokens pull the mean
/// toward zero; with kKnown only in-vocabulary tokens count. An empty
/// token list (or all-OOV under kKnown) yields the zero vector.
SentenceVector mean_pool(const EmbeddingTable& table,
                         const std::vector<std::string>& tokens,
                         MeanDenominator denominator = MeanDenominator::kAll);

}  // namespace taxoseq
