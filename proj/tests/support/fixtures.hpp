#pragma once

// Shared test fixtures: temp dirs, tiny taxonomies, in-memory embedding
// tables and random model instances.

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "taxoseq/corpus.hpp"
#include "taxoseq/embeddings.hpp"
#include "taxoseq/neural.hpp"
#include "taxoseq/rng.hpp"
#include "taxoseq/taxonomy.hpp"

namespace taxoseq::test {

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("taxoseq_" + tag + "_" + std::to_string(++counter) + "_" +
            std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline std::string write_file(const std::string& path,
                              const std::string& content) {
  std::ofstream out(path);
  out << content;
  return path;
}

inline std::vector<std::string> numbered_names(const std::string& prefix,
                                               int count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (int i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

/// Two levels shaped like a large two-level benchmark taxonomy: 7 + 143.
inline Taxonomy wos_shaped_taxonomy() {
  return Taxonomy({"level1", "level2"},
                  {numbered_names("l1_c", 7), numbered_names("l2_c", 143)});
}

inline Taxonomy tiny_taxonomy(const std::vector<int>& level_sizes) {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> classes;
  for (std::size_t j = 0; j < level_sizes.size(); ++j) {
    names.push_back("level" + std::to_string(j + 1));
    classes.push_back(
        numbered_names("l" + std::to_string(j + 1) + "_c", level_sizes[j]));
  }
  return Taxonomy(std::move(names), std::move(classes));
}

inline Taxonomy random_taxonomy(Rng& rng, int max_levels = 3,
                                int max_classes = 5) {
  const int levels = 2 + static_cast<int>(rng.below(max_levels - 1));
  std::vector<int> sizes;
  for (int j = 0; j < levels; ++j) {
    sizes.push_back(1 + static_cast<int>(rng.below(max_classes)));
  }
  return tiny_taxonomy(sizes);
}

/// Builds a real EmbeddingTable by writing the text format to disk.
inline EmbeddingTable make_table(
    const TempDir& dir,
    const std::vector<std::pair<std::string, std::vector<double>>>& rows,
    const std::string& name = "vectors.txt") {
  std::ofstream out(dir.file(name));
  for (const auto& [token, values] : rows) {
    out << token;
    for (const double v : values) out << ' ' << v;
    out << '\n';
  }
  out.close();
  return EmbeddingTable::load(dir.file(name));
}

inline EmbeddingTable random_table(const TempDir& dir, Rng& rng, int vocab,
                                   int dim, const std::string& name) {
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (int i = 0; i < vocab; ++i) {
    std::vector<double> values;
    for (int k = 0; k < dim; ++k) values.push_back(rng.uniform(-1.0, 1.0));
    rows.emplace_back("tok" + std::to_string(i), std::move(values));
  }
  return make_table(dir, rows, name);
}

inline std::vector<std::string> random_tokens(Rng& rng,
                                              const EmbeddingTable& table,
                                              int max_len = 5) {
  const int n = 1 + static_cast<int>(rng.below(max_len));
  std::vector<std::string> tokens;
  for (int i = 0; i < n; ++i) {
    tokens.push_back("tok" + std::to_string(rng.below(table.size())));
  }
  return tokens;
}

inline std::vector<int> forward_target(const Taxonomy& taxonomy, Rng& rng) {
  std::vector<int> target;
  for (int j = 0; j < taxonomy.num_levels(); ++j) {
    target.push_back(taxonomy.global_index(
        {j, static_cast<int>(rng.below(taxonomy.level_size(j)))}));
  }
  return target;
}

/// A two-level dataset whose tokens deterministically encode the label
/// path: each document carries one marker token per level (plus filler),
/// over random frozen embeddings, so a working model can reach ~100%.
struct SyntheticDataset {
  Taxonomy taxonomy;
  EmbeddingTable table;
  std::vector<Document> documents;
  DefinitionStore definitions;  // each class defined by its marker token
};

inline SyntheticDataset separable_dataset(const TempDir& dir, int level1,
                                          int level2, int doc_count,
                                          int embed_dim, std::uint64_t seed,
                                          const std::string& tag = "syn") {
  Taxonomy taxonomy = tiny_taxonomy({level1, level2});
  Rng rng(seed);

  std::vector<std::pair<std::string, std::vector<double>>> rows;
  const auto add_token = [&](const std::string& token) {
    std::vector<double> values;
    for (int k = 0; k < embed_dim; ++k) values.push_back(rng.uniform(-1, 1));
    rows.emplace_back(token, std::move(values));
  };
  for (int i = 0; i < level1; ++i) add_token("m1_" + std::to_string(i));
  for (int j = 0; j < level2; ++j) add_token("m2_" + std::to_string(j));
  for (int f = 0; f < 20; ++f) add_token("f" + std::to_string(f));
  EmbeddingTable table = make_table(dir, rows, tag + "_vectors.txt");

  DefinitionStore definitions;
  for (int i = 0; i < level1; ++i) {
    definitions.insert(0, taxonomy.classes(0)[i], "m1_" + std::to_string(i));
  }
  for (int j = 0; j < level2; ++j) {
    definitions.insert(1, taxonomy.classes(1)[j], "m2_" + std::to_string(j));
  }

  std::vector<Document> documents;
  for (int n = 0; n < doc_count; ++n) {
    const int i = static_cast<int>(rng.below(level1));
    const int j = static_cast<int>(rng.below(level2));
    std::vector<std::string> tokens{"m1_" + std::to_string(i),
                                    "m2_" + std::to_string(j),
                                    "f" + std::to_string(rng.below(20)),
                                    "f" + std::to_string(rng.below(20))};
    rng.shuffle(tokens);
    documents.push_back(Document{"syn" + std::to_string(n), std::move(tokens),
                                 LabelPath{{0, i}, {1, j}}});
  }
  return {std::move(taxonomy), std::move(table), std::move(documents),
          std::move(definitions)};
}

inline SplitDataset fixed_split(const std::vector<Document>& documents,
                                double train_fraction, double val_fraction) {
  SplitDataset splits;
  const auto n = documents.size();
  const auto train_end = static_cast<std::size_t>(n * train_fraction);
  const auto val_end =
      train_end + static_cast<std::size_t>(n * val_fraction);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < train_end) splits.train.push_back(documents[i]);
    else if (i < val_end) splits.validation.push_back(documents[i]);
    else splits.test.push_back(documents[i]);
  }
  return splits;
}

}  // namespace taxoseq::test
