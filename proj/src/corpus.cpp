#include "taxoseq/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>

#include "taxoseq/errors.hpp"
#include "taxoseq/rng.hpp"

namespace taxoseq {

namespace {

bool is_unicode_whitespace(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_ascii_punct(char32_t cp) {
  return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
         (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
}

/// Decodes one UTF-8 code point starting at `i`; advances `i`. Invalid
/// bytes are passed through as single code points.
char32_t next_code_point(std::string_view s, std::size_t& i,
                         std::size_t& byte_len) {
  const auto byte = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  char32_t cp = byte;
  if ((byte & 0xE0) == 0xC0) {
    len = 2;
    cp = byte & 0x1F;
  } else if ((byte & 0xF0) == 0xE0) {
    len = 3;
    cp = byte & 0x0F;
  } else if ((byte & 0xF8) == 0xF0) {
    len = 4;
    cp = byte & 0x07;
  }
  if (i + len > s.size()) len = 1, cp = byte;
  for (std::size_t k = 1; k < len; ++k) {
    const auto cont = static_cast<unsigned char>(s[i + k]);
    if ((cont & 0xC0) != 0x80) {
      len = 1;
      cp = byte;
      break;
    }
    cp = (cp << 6) | (cont & 0x3F);
  }
  byte_len = len;
  i += len;
  return cp;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    std::size_t byte_len = 0;
    const char32_t cp = next_code_point(text, i, byte_len);
    if (is_unicode_whitespace(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
    } else if (is_ascii_punct(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
      tokens.emplace_back(1, static_cast<char>(cp));
    } else if (cp < 0x80) {
      current.push_back(static_cast<char>(
          cp >= 'A' && cp <= 'Z' ? cp - 'A' + 'a' : cp));
    } else {
      current.append(text.substr(start, byte_len));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

DatasetLoadResult load_dataset(const std::string& path,
                               const Taxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset: cannot open '" + path + "'");

  DatasetLoadResult result;
  const int levels = taxonomy.num_levels();
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    const auto reject = [&](std::string reason) {
      result.rejected.push_back({line_number, std::move(reason)});
    };
    if (static_cast<int>(fields.size()) != 2 + levels) {
      reject("expected " + std::to_string(2 + levels) + " columns, got " +
             std::to_string(fields.size()));
      continue;
    }
    Document doc;
    doc.id = fields[0];
    doc.tokens = tokenize(fields[1]);
    if (doc.tokens.empty()) {
      reject("empty text");
      continue;
    }
    bool ok = true;
    for (int j = 0; j < levels && ok; ++j) {
      const auto id = taxonomy.find_class(j, fields[2 + j]);
      if (!id) {
        reject("unknown class '" + fields[2 + j] + "' in level '" +
               taxonomy.level_name(j) + "'");
        ok = false;
      } else {
        doc.labels.push_back(*id);
      }
    }
    if (!ok) continue;
    taxonomy.validate_path(doc.labels);  // covers edge checks when present
    result.documents.push_back(std::move(doc));
  }
  return result;
}

SplitDataset split_dataset(const std::vector<Document>& documents,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split: ratios must sum to 1, got " +
                      std::to_string(total));
  }
  const std::size_t n = documents.size();

  // Largest-remainder apportionment keeps every split within one document
  // of its exact proportion.
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> fractional{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(n) * ratios[k];
    sizes[k] = static_cast<std::size_t>(std::floor(exact));
    fractional[k] = exact - static_cast<double>(sizes[k]);
    assigned += sizes[k];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return fractional[a] > fractional[b]; });
  for (std::size_t r = 0; r < n - assigned; ++r) sizes[order[r % 3]] += 1;

  for (int k = 0; k < 3; ++k) {
    if (sizes[k] == 0) {
      throw DataError("split: the " +
                      std::string(k == 0 ? "train" : k == 1 ? "validation" : "test") +
                      " split would be empty");
    }
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);

  SplitDataset out;
  std::size_t cursor = 0;
  for (std::size_t r = 0; r < sizes[0]; ++r) out.train.push_back(documents[perm[cursor++]]);
  for (std::size_t r = 0; r < sizes[1]; ++r) out.validation.push_back(documents[perm[cursor++]]);
  for (std::size_t r = 0; r < sizes[2]; ++r) out.test.push_back(documents[perm[cursor++]]);
  return out;
}

void DefinitionStore::insert(int level, const std::string& class_name,
                             std::string definition) {
  entries_[{level, class_name}] = std::move(definition);
}

const std::string* DefinitionStore::find(int level,
                                         const std::string& class_name) const {
  const auto it = entries_.find({level, class_name});
  return it == entries_.end() ? nullptr : &it->second;
}

DefinitionLoadResult load_definitions(const std::string& path,
                                      const Taxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw DataError("definitions: cannot open '" + path + "'");

  DefinitionLoadResult result;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    const auto first_tab = line.find('\t');
    const auto second_tab =
        first_tab == std::string::npos ? std::string::npos
                                       : line.find('\t', first_tab + 1);
    if (second_tab == std::string::npos) {
      throw DataError("definitions: line " + std::to_string(line_number) +
                      ": expected level<TAB>class<TAB>definition");
    }
    int level = 0;
    try {
      std::size_t used = 0;
      level = std::stoi(line.substr(0, first_tab), &used);
      if (used != first_tab) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw DataError("definitions: line " + std::to_string(line_number) +
                      ": level index is not an integer");
    }
    if (level < 0 || level >= taxonomy.num_levels()) {
      throw DataError("definitions: line " + std::to_string(line_number) +
                      ": level index " + std::to_string(level) +
                      " out of range");
    }
    const std::string name =
        line.substr(first_tab + 1, second_tab - first_tab - 1);
    if (!taxonomy.find_class(level, name)) {
      result.warnings.push_back("line " + std::to_string(line_number) +
                                ": class '" + name + "' not in level " +
                                std::to_string(level) + ", skipped");
      continue;
    }
    if (result.store.find(level, name) != nullptr) {
      result.warnings.push_back("line " + std::to_string(line_number) +
                                ": duplicate definition for '" + name +
                                "', last occurrence wins");
    }
    result.store.insert(level, name, line.substr(second_tab + 1));
  }

  for (int level = 0; level < taxonomy.num_levels(); ++level) {
    for (int i = 0; i < taxonomy.level_size(level); ++i) {
      if (result.store.find(level, taxonomy.classes(level)[i]) == nullptr) {
        result.missing.push_back(ClassId{level, i});
      }
    }
  }
  return result;
}

}  // namespace taxoseq
