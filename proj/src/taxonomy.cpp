#include "taxoseq/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "taxoseq/errors.hpp"

namespace taxoseq {

namespace {

std::uint64_t edge_key(int parent_global, int child_global) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(parent_global))
          << 32) |
         static_cast<std::uint32_t>(child_global);
}

std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t h) {
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

Taxonomy::Taxonomy(
    std::vector<std::string> level_names,
    std::vector<std::vector<std::string>> classes_per_level,
    std::optional<std::vector<std::pair<std::string, std::string>>>
        edges_by_name)
    : level_names_(std::move(level_names)), classes_(std::move(classes_per_level)) {
  if (level_names_.size() != classes_.size()) {
    throw DataError("taxonomy: level name count does not match level count");
  }
  if (classes_.size() < 2) {
    throw DataError("taxonomy: at least two levels are required, got " +
                    std::to_string(classes_.size()));
  }

  offsets_.resize(classes_.size());
  index_by_name_.resize(classes_.size());
  for (std::size_t level = 0; level < classes_.size(); ++level) {
    if (classes_[level].empty()) {
      throw DataError("taxonomy: level '" + level_names_[level] + "' is empty");
    }
    offsets_[level] = union_size_;
    for (std::size_t i = 0; i < classes_[level].size(); ++i) {
      const auto [it, inserted] =
          index_by_name_[level].emplace(classes_[level][i], static_cast<int>(i));
      if (!inserted) {
        throw DataError("taxonomy: duplicate class '" + classes_[level][i] +
                        "' in level '" + level_names_[level] + "'");
      }
    }
    union_size_ += static_cast<int>(classes_[level].size());
  }

  masks_.resize(classes_.size());
  for (std::size_t level = 0; level < classes_.size(); ++level) {
    masks_[level].assign(union_size_, 0);
    for (std::size_t i = 0; i < classes_[level].size(); ++i) {
      masks_[level][offsets_[level] + i] = 1;
    }
  }

  if (edges_by_name.has_value()) {
    edges_.emplace();
    for (const auto& [parent_name, child_name] : *edges_by_name) {
      // Resolve names to adjacent-level positions. Names may repeat across
      // levels, so the pair must resolve to exactly one adjacent placement.
      std::vector<std::pair<ClassId, ClassId>> candidates;
      for (int level = 0; level + 1 < num_levels(); ++level) {
        const auto parent = find_class(level, parent_name);
        const auto child = find_class(level + 1, child_name);
        if (parent && child) candidates.emplace_back(*parent, *child);
      }
      if (candidates.empty()) {
        throw DataError("taxonomy: edge ['" + parent_name + "', '" +
                        child_name +
                        "'] does not connect classes of adjacent levels");
      }
      if (candidates.size() > 1) {
        throw DataError("taxonomy: edge ['" + parent_name + "', '" +
                        child_name + "'] is ambiguous across levels");
      }
      edges_->insert(edge_key(global_index(candidates[0].first),
                              global_index(candidates[0].second)));
    }
    // With edges present, every class below the top level needs a parent.
    for (int level = 1; level < num_levels(); ++level) {
      for (int i = 0; i < level_size(level); ++i) {
        bool has_parent = false;
        for (int p = 0; p < level_size(level - 1) && !has_parent; ++p) {
          has_parent = is_edge({level - 1, p}, {level, i});
        }
        if (!has_parent) {
          throw DataError("taxonomy: class '" + classes_[level][i] +
                          "' in level '" + level_names_[level] +
                          "' has no parent edge");
        }
      }
    }
  }

  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t level = 0; level < classes_.size(); ++level) {
    h = hash_bytes(level_names_[level], h);
    h = hash_bytes("\x1f", h);
    for (const auto& name : classes_[level]) {
      h = hash_bytes(name, h);
      h = hash_bytes("\x1e", h);
    }
  }
  if (edges_.has_value()) {
    std::vector<std::uint64_t> keys(edges_->begin(), edges_->end());
    std::sort(keys.begin(), keys.end());
    for (const auto key : keys) {
      h ^= key;
      h *= 1099511628211ull;
    }
  }
  content_hash_ = h;
}

Taxonomy Taxonomy::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("taxonomy: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str(), path);
}

Taxonomy Taxonomy::from_json_text(const std::string& text,
                                  const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("taxonomy: " + origin + ": " + e.what());
  }
  try {
    if (!doc.contains("levels") || !doc["levels"].is_array()) {
      throw DataError("taxonomy: " + origin + ": missing 'levels' array");
    }
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> classes;
    for (const auto& level : doc["levels"]) {
      names.push_back(level.at("name").get<std::string>());
      classes.push_back(level.at("classes").get<std::vector<std::string>>());
    }
    std::optional<std::vector<std::pair<std::string, std::string>>> edges;
    if (doc.contains("edges")) {
      edges.emplace();
      for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2) {
          throw DataError("taxonomy: " + origin +
                          ": each edge must be a [parent, child] pair");
        }
        edges->emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
      }
    }
    return Taxonomy(std::move(names), std::move(classes), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("taxonomy: " + origin + ": " + e.what());
  }
}

void Taxonomy::check_level(int level) const {
  if (level < 0 || level >= num_levels()) {
    throw DataError("taxonomy: level " + std::to_string(level) +
                    " out of range (M=" + std::to_string(num_levels()) + ")");
  }
}

int Taxonomy::level_size(int level) const {
  check_level(level);
  return static_cast<int>(classes_[level].size());
}

const std::string& Taxonomy::level_name(int level) const {
  check_level(level);
  return level_names_[level];
}

const std::vector<std::string>& Taxonomy::classes(int level) const {
  check_level(level);
  return classes_[level];
}

const std::string& Taxonomy::class_name(ClassId id) const {
  check_level(id.level);
  if (id.index < 0 || id.index >= level_size(id.level)) {
    throw DataError("taxonomy: class index " + std::to_string(id.index) +
                    " out of range in level " + std::to_string(id.level));
  }
  return classes_[id.level][id.index];
}

std::optional<ClassId> Taxonomy::find_class(int level,
                                            const std::string& name) const {
  check_level(level);
  const auto it = index_by_name_[level].find(name);
  if (it == index_by_name_[level].end()) return std::nullopt;
  return ClassId{level, it->second};
}

int Taxonomy::level_offset(int level) const {
  check_level(level);
  return offsets_[level];
}

int Taxonomy::global_index(ClassId id) const {
  class_name(id);  // range checks
  return offsets_[id.level] + id.index;
}

ClassId Taxonomy::from_global(int global) const {
  if (global < 0 || global >= union_size_) {
    throw DataError("taxonomy: global class index " + std::to_string(global) +
                    " out of range");
  }
  int level = num_levels() - 1;
  while (offsets_[level] > global) --level;
  return ClassId{level, global - offsets_[level]};
}

bool Taxonomy::is_edge(ClassId parent, ClassId child) const {
  if (!edges_.has_value()) return false;
  return edges_->count(edge_key(global_index(parent), global_index(child))) > 0;
}

const std::vector<std::uint8_t>& Taxonomy::level_mask(
    int step, Direction direction) const {
  check_level(step);
  const int level =
      direction == Direction::kForward ? step : num_levels() - 1 - step;
  return masks_[level];
}

const std::vector<std::uint8_t>& Taxonomy::mask_of_level(int level) const {
  check_level(level);
  return masks_[level];
}

bool Taxonomy::path_is_valid(const LabelPath& path, std::string* reason) const {
  const auto fail = [&](std::string why) {
    if (reason) *reason = std::move(why);
    return false;
  };
  if (static_cast<int>(path.size()) != num_levels()) {
    return fail("path length " + std::to_string(path.size()) +
                " != number of levels " + std::to_string(num_levels()));
  }
  for (int j = 0; j < num_levels(); ++j) {
    if (path[j].level != j) {
      return fail("element " + std::to_string(j) + " has level " +
                  std::to_string(path[j].level));
    }
    if (path[j].index < 0 || path[j].index >= level_size(j)) {
      return fail("element " + std::to_string(j) + " index out of range");
    }
  }
  if (edges_.has_value()) {
    for (int j = 0; j + 1 < num_levels(); ++j) {
      if (!is_edge(path[j], path[j + 1])) {
        return fail("no edge from '" + class_name(path[j]) + "' to '" +
                    class_name(path[j + 1]) + "'");
      }
    }
  }
  return true;
}

void Taxonomy::validate_path(const LabelPath& path) const {
  std::string reason;
  if (!path_is_valid(path, &reason)) {
    throw DataError("invalid label path: " + reason);
  }
}

LabelPath reverse_path(const LabelPath& path) {
  return LabelPath(path.rbegin(), path.rend());
}

}  // namespace taxoseq
