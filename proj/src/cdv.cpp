#include "taxoseq/cdv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "taxoseq/errors.hpp"

namespace taxoseq {

namespace {

std::string format_double(double value) {
  char buffer[40];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

}  // namespace

CdvStore CdvStore::build(const Taxonomy& taxonomy,
                         const DefinitionStore& definitions,
                         const EmbeddingTable& table,
                         MeanDenominator denominator) {
  CdvStore store;
  store.vectors_ = Eigen::MatrixXd::Zero(taxonomy.union_size(), table.dimension());
  store.has_definition_.assign(taxonomy.union_size(), 0);
  store.taxonomy_hash_ = taxonomy.content_hash();
  for (int level = 0; level < taxonomy.num_levels(); ++level) {
    store.level_offsets_.push_back(taxonomy.level_offset(level));
    store.level_sizes_.push_back(taxonomy.level_size(level));
    for (int i = 0; i < taxonomy.level_size(level); ++i) {
      const auto* text = definitions.find(level, taxonomy.classes(level)[i]);
      if (text == nullptr) continue;
      const int global = taxonomy.global_index({level, i});
      store.vectors_.row(global) =
          mean_pool(table, tokenize(*text), denominator).values.transpose();
      store.has_definition_[global] = 1;
    }
  }
  return store;
}

int CdvStore::to_global(ClassId id) const {
  if (id.level < 0 || id.level >= static_cast<int>(level_offsets_.size()) ||
      id.index < 0 || id.index >= level_sizes_[id.level]) {
    throw DataError("cdv: class (level " + std::to_string(id.level) +
                    ", index " + std::to_string(id.index) + ") out of range");
  }
  return level_offsets_[id.level] + id.index;
}

Eigen::VectorXd CdvStore::vector_for(int global_class) const {
  if (global_class < 0 || global_class >= size()) {
    throw DataError("cdv: global class index out of range");
  }
  return vectors_.row(global_class).transpose();
}

Eigen::VectorXd CdvStore::vector_for(ClassId id) const {
  return vector_for(to_global(id));
}

bool CdvStore::has_definition(int global_class) const {
  if (global_class < 0 || global_class >= size()) {
    throw DataError("cdv: global class index out of range");
  }
  return has_definition_[global_class] != 0;
}

bool CdvStore::has_definition(ClassId id) const {
  return has_definition(to_global(id));
}

std::vector<ClassId> CdvStore::classes_without_definition() const {
  std::vector<ClassId> out;
  for (std::size_t level = 0; level < level_offsets_.size(); ++level) {
    for (int i = 0; i < level_sizes_[level]; ++i) {
      if (!has_definition_[level_offsets_[level] + i]) {
        out.push_back(ClassId{static_cast<int>(level), i});
      }
    }
  }
  return out;
}

void CdvStore::save(const std::string& path, const Taxonomy& taxonomy) const {
  if (taxonomy.content_hash() != taxonomy_hash_) {
    throw DataError("cdv: store was built from a different taxonomy");
  }
  std::ofstream out(path);
  if (!out) throw DataError("cdv: cannot write '" + path + "'");
  for (int level = 0; level < taxonomy.num_levels(); ++level) {
    for (int i = 0; i < taxonomy.level_size(level); ++i) {
      const int global = taxonomy.global_index({level, i});
      out << level << '\t' << taxonomy.classes(level)[i] << '\t'
          << (has_definition_[global] ? 1 : 0) << '\t';
      for (int k = 0; k < dimension(); ++k) {
        if (k > 0) out << ' ';
        out << format_double(vectors_(global, k));
      }
      out << '\n';
    }
  }
}

CdvStore CdvStore::load(const std::string& path, const Taxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw DataError("cdv: cannot open '" + path + "'");

  CdvStore store;
  store.has_definition_.assign(taxonomy.union_size(), 0);
  store.taxonomy_hash_ = taxonomy.content_hash();
  for (int level = 0; level < taxonomy.num_levels(); ++level) {
    store.level_offsets_.push_back(taxonomy.level_offset(level));
    store.level_sizes_.push_back(taxonomy.level_size(level));
  }

  std::vector<std::uint8_t> seen(taxonomy.union_size(), 0);
  std::string line;
  std::size_t line_number = 0;
  long dim = -1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fail = [&](const std::string& why) {
      throw DataError("cdv: '" + path + "' line " +
                      std::to_string(line_number) + ": " + why);
    };
    std::size_t t1 = line.find('\t');
    std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    std::size_t t3 = t2 == std::string::npos ? t2 : line.find('\t', t2 + 1);
    if (t3 == std::string::npos) fail("expected 4 tab-separated fields");

    int level = -1;
    auto res = std::from_chars(line.data(), line.data() + t1, level);
    if (res.ec != std::errc{} || res.ptr != line.data() + t1) {
      fail("bad level index");
    }
    const std::string name = line.substr(t1 + 1, t2 - t1 - 1);
    if (level < 0 || level >= taxonomy.num_levels()) fail("level out of range");
    const auto id = taxonomy.find_class(level, name);
    if (!id) fail("unknown class '" + name + "'");
    const int flag_len = static_cast<int>(t3 - t2 - 1);
    if (flag_len != 1 || (line[t2 + 1] != '0' && line[t2 + 1] != '1')) {
      fail("has_definition flag must be 0 or 1");
    }

    std::vector<double> values;
    std::size_t pos = t3 + 1;
    while (pos <= line.size()) {
      std::size_t end = line.find(' ', pos);
      if (end == std::string::npos) end = line.size();
      double v = 0;
      const auto r = std::from_chars(line.data() + pos, line.data() + end, v);
      if (r.ec != std::errc{} || r.ptr != line.data() + end) {
        fail("non-numeric vector component");
      }
      values.push_back(v);
      pos = end + 1;
    }
    if (dim < 0) {
      dim = static_cast<long>(values.size());
      store.vectors_ = Eigen::MatrixXd::Zero(taxonomy.union_size(), dim);
    } else if (dim != static_cast<long>(values.size())) {
      fail("inconsistent vector dimension");
    }
    const int global = taxonomy.global_index(*id);
    if (seen[global]) fail("duplicate entry for '" + name + "'");
    seen[global] = 1;
    for (long k = 0; k < dim; ++k) store.vectors_(global, k) = values[k];
    store.has_definition_[global] = line[t2 + 1] == '1';
  }
  for (int g = 0; g < taxonomy.union_size(); ++g) {
    if (!seen[g]) {
      throw DataError("cdv: '" + path + "' is missing class '" +
                      taxonomy.class_name(taxonomy.from_global(g)) + "'");
    }
  }
  return store;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw DataError("cosine_similarity: dimension mismatch");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return a.dot(b) / (na * nb);
}

double cd_score(const CdvStore& store, ClassId candidate,
                const SentenceVector& doc_vector, double lambda, CdSign sign) {
  if (doc_vector.values.size() != store.dimension()) {
    throw DataError("cd_score: document vector dimension mismatch");
  }
  const double cos = cosine_similarity(store.vector_for(candidate),
                                       doc_vector.values);
  return lambda * (sign == CdSign::kSimilarity ? cos : -cos);
}

}  // namespace taxoseq
