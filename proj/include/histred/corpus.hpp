#ifndef HISTRED_CORPUS_HPP
#define HISTRED_CORPUS_HPP

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "histred/taxonomy.hpp"
#include "histred/utf8.hpp"

namespace histred {

enum class Language { Kor, Han };

inline std::string_view to_string(Language l) { return l == Language::Kor ? "kor" : "han"; }

/// One annotated surface occurrence. Offsets are code points within the sentence, half-open.
struct Mention {
  Language language = Language::Kor;
  std::size_t sentence_index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string surface;

  bool operator==(const Mention&) const = default;
};

/// A coreference cluster of bilingual mentions.
struct Entity {
  std::string entity_id;
  EntityType entity_type = EntityType::Other;
  std::vector<Mention> mentions_kor;
  std::vector<Mention> mentions_han;

  bool operator==(const Entity&) const = default;

  const std::vector<Mention>& mentions(Language l) const { return l == Language::Kor ? mentions_kor : mentions_han; }
};

struct RelationInstance {
  std::string subject_id;
  std::string object_id;
  RelationType label = RelationType::Others;
  std::set<std::size_t> evidence_kor;
  std::set<std::size_t> evidence_han;

  bool operator==(const RelationInstance&) const = default;
};

struct Metadata {
  std::optional<std::string> book_title;
  std::optional<std::string> text_chapter;
  std::optional<std::string> title;
  std::optional<std::string> writer;
  std::optional<int> year;
  std::optional<std::string> book_volume;
  std::optional<std::string> copyright;

  bool operator==(const Metadata&) const = default;
};

/// Inclusive sentence interval [lo, hi].
struct SentenceRange {
  std::size_t lo = 0;
  std::size_t hi = 0;

  std::size_t size() const { return hi - lo + 1; }
  bool contains(std::size_t i) const { return lo <= i && i <= hi; }
  bool overlaps(const SentenceRange& o) const { return lo <= o.hi && o.lo <= hi; }
  bool operator==(const SentenceRange&) const = default;
};

/// Where a segmented document came from. Absent on source documents.
struct SubtextOrigin {
  std::string source_doc_id;
  SentenceRange range_kor;
  SentenceRange range_han;
  std::vector<std::size_t> provenance;  // relation indices in the source document

  bool operator==(const SubtextOrigin&) const = default;
};

struct Document {
  std::string doc_id;
  std::vector<std::string> sentences_kor;
  std::vector<std::string> sentences_han;
  std::vector<Entity> entities;
  std::vector<RelationInstance> relations;
  Metadata metadata;
  std::optional<SubtextOrigin> origin;

  bool operator==(const Document&) const = default;

  const std::vector<std::string>& sentences(Language l) const { return l == Language::Kor ? sentences_kor : sentences_han; }

  const Entity* find_entity(std::string_view id) const {
    for (const auto& e : entities)
      if (e.entity_id == id) return &e;
    return nullptr;
  }
};

class EmptyCorpus : public std::invalid_argument {
 public:
  EmptyCorpus() : std::invalid_argument("EmptyCorpus: operation needs at least one document") {}
};

/// Total Korean length in code points; the split sort key.
inline std::size_t korean_char_count(const Document& doc) {
  std::size_t n = 0;
  for (const auto& s : doc.sentences_kor) n += utf8::length(s);
  return n;
}

// ---------------------------------------------------------------------------
// Validation

namespace rule {
inline constexpr std::string_view kNonEmptyKor = "nonempty-kor";
inline constexpr std::string_view kNonEmptyHan = "nonempty-han";
inline constexpr std::string_view kSentenceBounds = "sentence-bounds";
inline constexpr std::string_view kSpanBounds = "span-bounds";
inline constexpr std::string_view kSurfaceMatch = "surface-match";
inline constexpr std::string_view kMentionLanguage = "mention-language";
inline constexpr std::string_view kKorMentionRequired = "kor-mention-required";
inline constexpr std::string_view kUniqueEntityId = "unique-entity-id";
inline constexpr std::string_view kDistinctPair = "distinct-pair";
inline constexpr std::string_view kEntityRef = "entity-ref";
inline constexpr std::string_view kEvidenceKorNonEmpty = "evidence-kor-nonempty";
inline constexpr std::string_view kEvidenceBounds = "evidence-bounds";
inline constexpr std::string_view kGoldLabel = "gold-label";
inline constexpr std::string_view kYearRange = "year-range";
}  // namespace rule

struct Violation {
  std::string field;  // dotted path, e.g. "entities[2].mentions_kor[0].char_end"
  std::string rule;
  std::size_t index = 0;  // offending element index within its list
  std::string detail;

  bool operator==(const Violation&) const = default;
};

inline constexpr int kMinYear = 1500;
inline constexpr int kMaxYear = 1900;

namespace detail {

inline std::string path(std::string_view list, std::size_t i) {
  return std::string(list) + "[" + std::to_string(i) + "]";
}

inline void check_mention(const Document& doc, const Mention& m, Language expected, const std::string& where,
                          std::size_t index, std::vector<Violation>& out) {
  if (m.language != expected) {
    out.push_back({where + ".language", std::string(rule::kMentionLanguage), index,
                   "mention stored under " + std::string(to_string(expected)) + " list"});
    return;
  }
  const auto& sents = doc.sentences(m.language);
  if (m.sentence_index >= sents.size()) {
    out.push_back({where + ".sentence_index", std::string(rule::kSentenceBounds), index,
                   std::to_string(m.sentence_index) + " >= " + std::to_string(sents.size())});
    return;
  }
  const auto text = utf8::decode(sents[m.sentence_index]);
  if (!(m.char_start < m.char_end && m.char_end <= text.size())) {
    out.push_back({where + ".char_end", std::string(rule::kSpanBounds), index,
                   "[" + std::to_string(m.char_start) + "," + std::to_string(m.char_end) + ") vs length " +
                       std::to_string(text.size())});
    return;
  }
  if (utf8::encode(std::u32string_view(text).substr(m.char_start, m.char_end - m.char_start)) != m.surface) {
    out.push_back({where + ".surface", std::string(rule::kSurfaceMatch), index, "surface differs from text span"});
  }
}

}  // namespace detail

/// Checks every corpus invariant. Returns an empty list iff the document is well formed.
inline std::vector<Violation> validate_document(const Document& doc) {
  std::vector<Violation> out;
  if (doc.sentences_kor.empty()) out.push_back({"sentences_kor", std::string(rule::kNonEmptyKor), 0, "n = 0"});
  if (doc.sentences_han.empty()) out.push_back({"sentences_han", std::string(rule::kNonEmptyHan), 0, "m = 0"});

  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < doc.entities.size(); ++i) {
    const auto& e = doc.entities[i];
    const auto where = detail::path("entities", i);
    if (!ids.insert(e.entity_id).second)
      out.push_back({where + ".entity_id", std::string(rule::kUniqueEntityId), i, "duplicate id " + e.entity_id});
    if (e.mentions_kor.empty())
      out.push_back({where + ".mentions_kor", std::string(rule::kKorMentionRequired), i, "no Korean mention"});
    for (std::size_t j = 0; j < e.mentions_kor.size(); ++j)
      detail::check_mention(doc, e.mentions_kor[j], Language::Kor, where + detail::path(".mentions_kor", j), j, out);
    for (std::size_t j = 0; j < e.mentions_han.size(); ++j)
      detail::check_mention(doc, e.mentions_han[j], Language::Han, where + detail::path(".mentions_han", j), j, out);
  }

  for (std::size_t i = 0; i < doc.relations.size(); ++i) {
    const auto& r = doc.relations[i];
    const auto where = detail::path("relations", i);
    if (r.subject_id == r.object_id)
      out.push_back({where + ".object_id", std::string(rule::kDistinctPair), i, "subject == object"});
    if (!ids.contains(r.subject_id))
      out.push_back({where + ".subject_id", std::string(rule::kEntityRef), i, "unknown entity " + r.subject_id});
    if (r.object_id != r.subject_id && !ids.contains(r.object_id))
      out.push_back({where + ".object_id", std::string(rule::kEntityRef), i, "unknown entity " + r.object_id});
    if (r.label == RelationType::NoRelation)
      out.push_back({where + ".label", std::string(rule::kGoldLabel), i, "no_relation is not a gold label"});
    if (r.evidence_kor.empty())
      out.push_back({where + ".evidence_kor", std::string(rule::kEvidenceKorNonEmpty), i, "empty"});
    for (auto s : r.evidence_kor)
      if (s >= doc.sentences_kor.size())
        out.push_back({where + ".evidence_kor", std::string(rule::kEvidenceBounds), i, std::to_string(s)});
    for (auto s : r.evidence_han)
      if (s >= doc.sentences_han.size())
        out.push_back({where + ".evidence_han", std::string(rule::kEvidenceBounds), i, std::to_string(s)});
  }

  if (doc.metadata.year && (*doc.metadata.year < kMinYear || *doc.metadata.year > kMaxYear))
    out.push_back({"metadata.year", std::string(rule::kYearRange), 0, std::to_string(*doc.metadata.year)});
  return out;
}

/// Entities lacking Hanja mentions are legal but reported.
inline std::vector<std::string> entities_without_hanja(const Document& doc) {
  std::vector<std::string> ids;
  for (const auto& e : doc.entities)
    if (e.mentions_han.empty()) ids.push_back(e.entity_id);
  return ids;
}

}  // namespace histred

#endif  // HISTRED_CORPUS_HPP
