#include "taxoseq/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "taxoseq/errors.hpp"

namespace taxoseq {

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool parse_double(std::string_view text, double& out) {
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

bool parse_size(std::string_view text, std::size_t& out) {
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string format_double(double value) {
  char buffer[40];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

}  // namespace

EmbeddingTable EmbeddingTable::load(const std::string& path,
                                    std::optional<std::size_t> limit) {
  std::ifstream in(path);
  if (!in) throw DataError("embeddings: cannot open '" + path + "'");

  EmbeddingTable table;
  std::vector<Eigen::VectorXd> rows;
  std::string line;
  std::size_t line_number = 0;
  long dim = -1;
  std::optional<std::size_t> declared_count;

  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_spaces(line);

    if (line_number == 1 && fields.size() == 2) {
      // Optional `count dim` header.
      std::size_t count = 0, header_dim = 0;
      if (parse_size(fields[0], count) && parse_size(fields[1], header_dim)) {
        declared_count = count;
        dim = static_cast<long>(header_dim);
        continue;
      }
    }
    if (fields.size() < 2) {
      throw DataError("embeddings: line " + std::to_string(line_number) +
                      ": expected token followed by vector components");
    }
    if (limit && rows.size() >= *limit) break;

    const long row_dim = static_cast<long>(fields.size()) - 1;
    if (dim < 0) dim = row_dim;
    if (row_dim != dim) {
      throw DataError("embeddings: line " + std::to_string(line_number) +
                      ": expected " + std::to_string(dim) +
                      " components, got " + std::to_string(row_dim));
    }
    Eigen::VectorXd row(dim);
    for (long k = 0; k < dim; ++k) {
      if (!parse_double(fields[k + 1], row[k])) {
        throw DataError("embeddings: line " + std::to_string(line_number) +
                        ": non-numeric component '" +
                        std::string(fields[k + 1]) + "'");
      }
    }
    std::string token(fields[0]);
    if (table.index_.contains(token)) {
      table.warnings_.push_back("line " + std::to_string(line_number) +
                                ": duplicate token '" + token +
                                "', first occurrence kept");
      continue;
    }
    table.index_.emplace(std::move(token), rows.size());
    table.tokens_.emplace_back(fields[0]);
    rows.push_back(std::move(row));
  }

  if (dim < 0) dim = 0;
  if (declared_count && !limit && rows.size() != *declared_count) {
    table.warnings_.push_back("header declared " +
                              std::to_string(*declared_count) +
                              " rows, file has " + std::to_string(rows.size()));
  }
  table.matrix_.resize(static_cast<long>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table.matrix_.row(static_cast<long>(i)) = rows[i].transpose();
  }
  return table;
}

bool EmbeddingTable::contains(const std::string& token) const {
  return index_.contains(token);
}

std::optional<std::size_t> EmbeddingTable::row_of(
    const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd EmbeddingTable::lookup(const std::string& token) const {
  const auto row = row_of(token);
  if (!row) return Eigen::VectorXd::Zero(dimension());
  return matrix_.row(static_cast<long>(*row)).transpose();
}

void EmbeddingTable::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("embeddings: cannot write '" + path + "'");
  out << size() << ' ' << dimension() << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i];
    for (int k = 0; k < dimension(); ++k) {
      out << ' ' << format_double(matrix_(static_cast<long>(i), k));
    }
    out << '\n';
  }
}

std::uint64_t EmbeddingTable::content_hash() const {
  std::uint64_t h = 14695981039346656037ull;
  const auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& token : tokens_) mix(token.data(), token.size());
  mix(matrix_.data(), sizeof(double) * static_cast<std::size_t>(matrix_.size()));
  return h;
}

SentenceVector mean_pool(const EmbeddingTable& table,
                         const std::vector<std::string>& tokens,
                         MeanDenominator denominator) {
  SentenceVector out;
  out.values = Eigen::VectorXd::Zero(table.dimension());
  out.source_token_count = tokens.size();
  std::size_t known = 0;
  for (const auto& token : tokens) {
    if (const auto row = table.row_of(token)) {
      out.values += table.matrix().row(static_cast<long>(*row)).transpose();
      ++known;
    }
  }
  const std::size_t denom =
      denominator == MeanDenominator::kAll ? tokens.size() : known;
  if (denom > 0) out.values /= static_cast<double>(denom);
  return out;
}

}  // namespace taxoseq
