#include "spineseg/taxonomy.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "spineseg/error.hpp"

namespace spineseg {
namespace {

const std::string kBackground = "background";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

LabelTaxonomy::LabelTaxonomy(std::vector<Entry> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& a, const Entry& b) { return a.index < b.index; });
  std::set<std::string> names;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].index != static_cast<int>(i) + 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "class indices must be unique and contiguous from 1");
    }
    if (entries_[i].name.empty() || entries_[i].name == kBackground ||
        !names.insert(entries_[i].name).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "invalid or duplicate class name '" + entries_[i].name + "'");
    }
  }
  for (const char* required :
       {"vertebra_lumbar", "vertebra_sacral", "cage", "screw", "instrumentation"}) {
    if (!names.contains(required)) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("taxonomy lacks required class ") + required);
    }
  }
  if (entries_.size() > 254) {
    throw Error(ErrorCode::kInvalidArgument, "too many classes for 8-bit masks");
  }
}

LabelTaxonomy LabelTaxonomy::standard() {
  return LabelTaxonomy({{"vertebra_lumbar", 1},
                        {"vertebra_sacral", 2},
                        {"cage", 3},
                        {"screw", 4},
                        {"instrumentation", 5}});
}

LabelTaxonomy LabelTaxonomy::parse(std::string_view text) {
  std::vector<Entry> entries;
  while (!text.empty()) {
    auto comma = text.find(',');
    auto item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{}
                                           : text.substr(comma + 1);
    if (item.empty()) continue;
    auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "taxonomy entry '" + std::string(item) + "' lacks ':index'");
    }
    auto name = trim(item.substr(0, colon));
    auto num = trim(item.substr(colon + 1));
    int index = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), index);
    if (ec != std::errc{} || ptr != num.data() + num.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bad class index in '" + std::string(item) + "'");
    }
    entries.push_back({std::string(name), index});
  }
  return LabelTaxonomy(std::move(entries));
}

std::optional<int> LabelTaxonomy::index_of(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.index;
  }
  return std::nullopt;
}

const std::string& LabelTaxonomy::name_of(int index) const {
  if (index == 0) return kBackground;
  if (index < 0 || index > static_cast<int>(entries_.size())) {
    throw Error(ErrorCode::kClassIndexOutOfRange,
                "class index " + std::to_string(index));
  }
  return entries_[static_cast<std::size_t>(index) - 1].name;
}

std::string LabelTaxonomy::to_string() const {
  std::string out;
  for (const auto& e : entries_) {
    if (!out.empty()) out += ',';
    out += e.name + ':' + std::to_string(e.index);
  }
  return out;
}

int LabelTaxonomy::lumbar_index() const {
  auto idx = index_of(kLumbarClass);
  if (!idx) throw Error(ErrorCode::kUnknownClass, "taxonomy has no vertebra_lumbar");
  return *idx;
}

int LabelTaxonomy::sacral_index() const {
  auto idx = index_of(kSacralClass);
  if (!idx) throw Error(ErrorCode::kUnknownClass, "taxonomy has no vertebra_sacral");
  return *idx;
}

bool LabelTaxonomy::is_vertebra(int index) const {
  return index_of(kLumbarClass) == index || index_of(kSacralClass) == index;
}

}  // namespace spineseg
