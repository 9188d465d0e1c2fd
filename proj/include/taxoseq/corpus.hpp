#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "taxoseq/taxonomy.hpp"

namespace taxoseq {

/// A tokenized input text with its gold label path.
struct Document {
  std::string id;
  std::vector<std::string> tokens;  // never empty after loading
  LabelPath labels;
};

/// Lowercases, splits on Unicode whitespace and separates ASCII punctuation
/// into standalone tokens. Case folding is ASCII-only. The same tokenizer is
/// used for documents and for class definitions so their vectors live in the
/// same space.
std::vector<std::string> tokenize(std::string_view text);

struct RowRejection {
  std::size_t line_number = 0;  // 1-based
  std::string reason;
};

struct DatasetLoadResult {
  std::vector<Document> documents;
  std::vector<RowRejection> rejected;
};

/// Reads a UTF-8 tab-separated dataset: id, text, then one label column per
/// level (top level first). Bad rows are rejected with their line numbers,
/// never turned into documents. Order-preserving and deterministic.
DatasetLoadResult load_dataset(const std::string& path,
                               const Taxonomy& taxonomy);

struct SplitDataset {
  std::vector<Document> train;
  std::vector<Document> validation;
  std::vector<Document> test;
};

/// Deterministic shuffled split. Ratios must sum to 1 (±1e-9); sizes are
/// within one document of exact proportions; throws DataError when any
/// split would be empty.
SplitDataset split_dataset(const std::vector<Document>& documents,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed);

/// Raw textual definitions keyed by (level, class name).
class DefinitionStore {
 public:
  /// Last insert for a key wins.
  void insert(int level, const std::string& class_name, std::string definition);
  const std::string* find(int level, const std::string& class_name) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<int, std::string>, std::string> entries_;
};

struct DefinitionLoadResult {
  DefinitionStore store;
  std::vector<ClassId> missing;        // taxonomy classes with no definition
  std::vector<std::string> warnings;   // duplicates, entries for unknown classes
};

/// Reads a UTF-8 tab-separated definition file: 0-based level index, class
/// name, definition text. Duplicate entries: last wins, with a warning.
/// Missing classes are reported, not fatal; malformed records are.
DefinitionLoadResult load_definitions(const std::string& path,
                                      const Taxonomy& taxonomy);

}  // namespace taxoseq
