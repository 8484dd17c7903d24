#ifndef HISTRED_TAXONOMY_HPP
#define HISTRED_TAXONOMY_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace histred {

enum class EntityType : int {
  Person,
  Location,
  Organization,
  Number,
  Datetime,
  Product,
  Food,
  Clothes,
  Book,
  Other,
};

inline constexpr std::size_t kNumEntityTypes = 10;

inline constexpr std::array<std::string_view, kNumEntityTypes> kEntityTypeNames = {
    "Person", "Location", "Organization", "Number", "Datetime",
    "Product", "Food", "Clothes", "Book", "Other",
};

// Gold relation labels, in taxonomy order. Index kNoRelation is reserved for
// the model's candidate-pair classifier and never appears in corpus files.
enum class RelationType : int {
  Nearby,
  AlternateName,
  PositionHeld,
  WornBy,
  Friend,
  Enemy,
  Child,
  Sibling,
  OtherFamily,
  CountryOfCitizenship,
  PlaceOfResidence,
  PlaceOfBirth,
  PlaceOfDeath,
  DateOfBirth,
  DateOfDeath,
  FunctionsAs,
  FamousFor,
  ProvidedBy,
  MemberOf,
  Others,
  NoRelation,
};

inline constexpr std::size_t kNumGoldRelations = 20;
inline constexpr std::size_t kNumRelationClasses = kNumGoldRelations + 1;
inline constexpr int kNoRelation = static_cast<int>(RelationType::NoRelation);

inline constexpr std::array<std::string_view, kNumRelationClasses> kRelationTypeNames = {
    "nearby",
    "alternate_name",
    "per:position_held",
    "per:worn_by",
    "per:friend",
    "per:enemy",
    "per:child",
    "per:sibling",
    "per:other_family",
    "per:country_of_citizenship",
    "per:place_of_residence",
    "per:place_of_birth",
    "per:place_of_death",
    "per:date_of_birth",
    "per:date_of_death",
    "loc:functions_as",
    "loc:famous_for",
    "product:provided_by",
    "org:member_of",
    "others",
    "no_relation",
};

inline std::string_view to_string(EntityType t) { return kEntityTypeNames.at(static_cast<std::size_t>(t)); }
inline std::string_view to_string(RelationType t) { return kRelationTypeNames.at(static_cast<std::size_t>(t)); }

inline std::optional<EntityType> try_parse_entity_type(std::string_view s) {
  for (std::size_t i = 0; i < kNumEntityTypes; ++i)
    if (kEntityTypeNames[i] == s) return static_cast<EntityType>(i);
  // Some sources spell it "DateTime".
  if (s == "DateTime") return EntityType::Datetime;
  return std::nullopt;
}

inline EntityType parse_entity_type(std::string_view s) {
  if (auto t = try_parse_entity_type(s)) return *t;
  throw std::invalid_argument("unknown entity type: " + std::string(s));
}

/// Parses one of the 20 gold labels. no_relation is rejected unless allow_sentinel is set.
inline std::optional<RelationType> try_parse_relation_type(std::string_view s, bool allow_sentinel = false) {
  const std::size_t n = allow_sentinel ? kNumRelationClasses : kNumGoldRelations;
  for (std::size_t i = 0; i < n; ++i)
    if (kRelationTypeNames[i] == s) return static_cast<RelationType>(i);
  return std::nullopt;
}

inline RelationType parse_relation_type(std::string_view s, bool allow_sentinel = false) {
  if (auto t = try_parse_relation_type(s, allow_sentinel)) return *t;
  throw std::invalid_argument("unknown relation type: " + std::string(s));
}

}  // namespace histred

#endif  // HISTRED_TAXONOMY_HPP
