#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace taxoseq {

/// Position of a class in the hierarchy: 0-based level, 0-based index
/// within that level's inventory.
struct ClassId {
  int level = 0;
  int index = 0;

  friend bool operator==(const ClassId&, const ClassId&) = default;
  friend auto operator<=>(const ClassId&, const ClassId&) = default;
};

/// One class per level, element j at level j (or at level M-1-j after
/// reverse_path).
using LabelPath = std::vector<ClassId>;

enum class Direction { kForward, kReversed };

/// The class hierarchy: ordered levels, class inventories per level and
/// optional parent-child edges between adjacent levels.
///
/// The output space of the model is the union of all levels' classes,
/// indexed globally in level order; per-step level masks restrict the
/// decoder to one level at a time. Edges, when present, are used for
/// dataset validation only, never for masking.
///
/// Immutable after construction; safe to share across threads.
class Taxonomy {
 public:
  /// Builds and validates. Throws DataError when an invariant fails:
  /// fewer than two levels, an empty level, a duplicate class name within
  /// a level, an edge that does not connect adjacent levels, or (when
  /// edges are present) a non-top class with no parent.
  Taxonomy(std::vector<std::string> level_names,
           std::vector<std::vector<std::string>> classes_per_level,
           std::optional<std::vector<std::pair<std::string, std::string>>>
               edges_by_name = std::nullopt);

  /// Loads the structured taxonomy file (see README for the schema).
  static Taxonomy from_file(const std::string& path);
  static Taxonomy from_json_text(const std::string& text,
                                 const std::string& origin = "<json>");

  int num_levels() const { return static_cast<int>(classes_.size()); }
  int level_size(int level) const;
  const std::string& level_name(int level) const;
  const std::vector<std::string>& classes(int level) const;
  const std::string& class_name(ClassId id) const;
  std::optional<ClassId> find_class(int level, const std::string& name) const;

  /// Size of the union class vocabulary (all levels together).
  int union_size() const { return union_size_; }
  int level_offset(int level) const;
  int global_index(ClassId id) const;
  ClassId from_global(int global) const;

  bool has_edges() const { return edges_.has_value(); }
  bool is_edge(ClassId parent, ClassId child) const;

  /// Mask over the union vocabulary that is true exactly for the classes
  /// of the level decoded at `step`: level `step` when forward, level
  /// M-1-step when reversed. Throws DataError when step is out of range.
  const std::vector<std::uint8_t>& level_mask(int step,
                                              Direction direction) const;
  const std::vector<std::uint8_t>& mask_of_level(int level) const;

  bool path_is_valid(const LabelPath& path, std::string* reason = nullptr) const;
  /// Throws DataError with the failing check when the path is invalid.
  void validate_path(const LabelPath& path) const;

  /// Stable hash of the level names, class inventories and edges. Used to
  /// bind checkpoints and CDV stores to the taxonomy they were built from.
  std::uint64_t content_hash() const { return content_hash_; }

 private:
  void check_level(int level) const;

  std::vector<std::string> level_names_;
  std::vector<std::vector<std::string>> classes_;
  std::vector<std::unordered_map<std::string, int>> index_by_name_;
  std::vector<int> offsets_;
  int union_size_ = 0;
  std::optional<std::unordered_set<std::uint64_t>> edges_;  // parent<<32|child
  std::vector<std::vector<std::uint8_t>> masks_;            // per level
  std::uint64_t content_hash_ = 0;
};

/// Returns the classes in reverse level order (level M-1 first). Pure; an
/// involution. Used as the target of the bottom-up auxiliary task.
LabelPath reverse_path(const LabelPath& path);

}  // namespace taxoseq
