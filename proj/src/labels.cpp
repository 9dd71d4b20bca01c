#include "gusnet/labels.hpp"

#include <bit>

#include "gusnet/error.hpp"

namespace gusnet {

std::string_view label_name(Label label) { return kLabelNames[static_cast<std::size_t>(label)]; }

std::optional<Label> parse_label(std::string_view name) {
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (kLabelNames[i] == name) return static_cast<Label>(i);
  }
  return std::nullopt;
}

std::string_view entity_code(EntityClass cls) {
  switch (cls) {
    case EntityClass::kGen: return "GEN";
    case EntityClass::kUnfair: return "UNFAIR";
    case EntityClass::kStereo: return "STEREO";
  }
  return "?";
}

std::string_view entity_display_name(EntityClass cls) {
  switch (cls) {
    case EntityClass::kGen: return "Generalizations";
    case EntityClass::kUnfair: return "Unfairness";
    case EntityClass::kStereo: return "Stereotypes";
  }
  return "?";
}

std::optional<EntityClass> parse_entity_class(std::string_view code) {
  for (EntityClass c : kEntityClasses) {
    if (entity_code(c) == code) return c;
  }
  return std::nullopt;
}

Label begin_label(EntityClass cls) {
  return static_cast<Label>(1 + 2 * static_cast<unsigned>(cls));
}

Label inside_label(EntityClass cls) {
  return static_cast<Label>(2 + 2 * static_cast<unsigned>(cls));
}

std::string tag_name(Tag tag, EntityClass cls) {
  switch (tag) {
    case Tag::kO: return "O";
    case Tag::kB: return std::string(label_name(begin_label(cls)));
    case Tag::kI: return std::string(label_name(inside_label(cls)));
  }
  return "O";
}

std::size_t LabelSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<Label> LabelSet::labels() const {
  std::vector<Label> out;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (contains(static_cast<Label>(i))) out.push_back(static_cast<Label>(i));
  }
  return out;
}

std::vector<std::string> LabelSet::names() const {
  std::vector<std::string> out;
  for (Label l : labels()) out.emplace_back(label_name(l));
  return out;
}

LabelSet label_set_from_names(const std::vector<std::string>& names) {
  LabelSet set;
  for (const auto& n : names) {
    auto l = parse_label(n);
    if (!l) throw ValidationError("unknown label '" + n + "'");
    set.insert(*l);
  }
  return set;
}

LabelRow encode_label_set(LabelSet labels) {
  if (labels.empty()) throw ValidationError("empty label set");
  if (labels.contains(Label::kO) && labels.has_entity()) {
    throw ValidationError("label O cannot be combined with an entity label");
  }
  LabelRow row{};
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    row[i] = labels.contains(static_cast<Label>(i)) ? 1 : 0;
  }
  return row;
}

LabelSet decode_label_row(const LabelRow& row) {
  LabelSet set;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (row[i] == 1) set.insert(static_cast<Label>(i));
  }
  return set;
}

bool is_ignore_row(const LabelRow& row) {
  for (auto v : row) {
    if (v != kIgnore) return false;
  }
  return true;
}

}  // namespace gusnet
