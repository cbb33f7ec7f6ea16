#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spineseg {

// Named classes with contiguous indices starting at 1; index 0 is background.
class LabelTaxonomy {
 public:
  struct Entry {
    std::string name;
    int index;
  };

  // Throws InvalidArgument when names repeat or indices are not 1..n.
  explicit LabelTaxonomy(std::vector<Entry> entries);

  // vertebra_lumbar=1, vertebra_sacral=2, cage=3, screw=4, instrumentation=5.
  static LabelTaxonomy standard();
  // Parses "name:index,name:index,...".
  static LabelTaxonomy parse(std::string_view text);

  std::optional<int> index_of(std::string_view name) const;
  // "background" for 0; throws ClassIndexOutOfRange for unknown indices.
  const std::string& name_of(int index) const;
  // Class count including background.
  int class_count() const { return static_cast<int>(entries_.size()) + 1; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::string to_string() const;

  int lumbar_index() const;
  int sacral_index() const;
  bool is_vertebra(int index) const;

 private:
  std::vector<Entry> entries_;
};

inline constexpr std::string_view kLumbarClass = "vertebra_lumbar";
inline constexpr std::string_view kSacralClass = "vertebra_sacral";

}  // namespace spineseg
