#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gusnet {

// The seven output labels, in the fixed order used by every label vector.
enum class Label : std::uint8_t {
  kO = 0,
  kBGen = 1,
  kIGen = 2,
  kBUnfair = 3,
  kIUnfair = 4,
  kBStereo = 5,
  kIStereo = 6,
};

inline constexpr std::size_t kNumLabels = 7;
inline constexpr std::string_view kLabelSpaceVersion = "gus-bio7/v1";
inline constexpr std::int8_t kIgnore = -100;

inline constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "O", "B-GEN", "I-GEN", "B-UNFAIR", "I-UNFAIR", "B-STEREO", "I-STEREO"};

std::string_view label_name(Label label);
std::optional<Label> parse_label(std::string_view name);

enum class EntityClass : std::uint8_t { kGen = 0, kUnfair = 1, kStereo = 2 };
inline constexpr std::array<EntityClass, 3> kEntityClasses = {
    EntityClass::kGen, EntityClass::kUnfair, EntityClass::kStereo};

// Short code ("GEN"), display name ("Generalizations").
std::string_view entity_code(EntityClass cls);
std::string_view entity_display_name(EntityClass cls);
std::optional<EntityClass> parse_entity_class(std::string_view code);
Label begin_label(EntityClass cls);
Label inside_label(EntityClass cls);

// Per-entity B/I/O tag.
enum class Tag : std::uint8_t { kO = 0, kB = 1, kI = 2 };

// "O", "B-GEN", "I-GEN", ...
std::string tag_name(Tag tag, EntityClass cls);

// A set of labels attached to one word or token, stored as a bitmask.
class LabelSet {
 public:
  constexpr LabelSet() = default;
  constexpr explicit LabelSet(std::uint8_t bits) : bits_(bits & 0x7f) {}
  LabelSet(std::initializer_list<Label> labels) {
    for (Label l : labels) insert(l);
  }

  static constexpr LabelSet outside() { return LabelSet(1); }

  void insert(Label l) { bits_ |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(l)); }
  void erase(Label l) { bits_ &= static_cast<std::uint8_t>(~(1u << static_cast<unsigned>(l))); }
  bool contains(Label l) const { return (bits_ >> static_cast<unsigned>(l)) & 1u; }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  std::uint8_t bits() const { return bits_; }
  bool has_entity() const { return (bits_ & 0x7e) != 0; }
  // True iff B-X or I-X is present.
  bool has(EntityClass cls) const {
    return contains(begin_label(cls)) || contains(inside_label(cls));
  }
  // Valid word label-set: non-empty, and O only when alone.
  bool well_formed() const { return !empty() && (contains(Label::kO) != has_entity()); }

  std::vector<Label> labels() const;
  std::vector<std::string> names() const;

  friend bool operator==(LabelSet a, LabelSet b) { return a.bits_ == b.bits_; }

 private:
  std::uint8_t bits_ = 0;
};

LabelSet label_set_from_names(const std::vector<std::string>& names);

using LabelRow = std::array<std::int8_t, kNumLabels>;

// Multi-hot vector in label order. Throws ValidationError on an empty set or
// when O is combined with an entity label.
LabelRow encode_label_set(LabelSet labels);
LabelSet decode_label_row(const LabelRow& row);
bool is_ignore_row(const LabelRow& row);
inline constexpr LabelRow kIgnoreRow = {kIgnore, kIgnore, kIgnore, kIgnore,
                                        kIgnore, kIgnore, kIgnore};

}  // namespace gusnet
