#ifndef HISTRED_SEGMENTER_HPP
#define HISTRED_SEGMENTER_HPP

#include <algorithm>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "histred/corpus.hpp"

namespace histred {

class NoAnchor : public std::runtime_error {
 public:
  explicit NoAnchor(const std::string& what) : std::runtime_error("NoAnchor: " + what) {}
};

/// The sequence level k. Presets used for published variants are 0, 1, 2, 4 and 8.
struct SegmenterConfig {
  std::size_t k = 0;
};

inline constexpr std::size_t kSequenceLevelPresets[] = {0, 1, 2, 4, 8};

struct BaseWindow {
  std::size_t relation_ref = 0;
  std::size_t anchor = 0;
  std::set<std::size_t> window;  // Korean sentence indices
};

struct SubtextSkeleton {
  SentenceRange range_kor;
  std::vector<std::size_t> provenance;  // relation indices, in merge order
};

struct Subtext {
  std::string doc_id;  // source document
  std::size_t index = 0;  // position among the source document's subtexts
  SentenceRange range_kor;
  SentenceRange range_han;
  std::vector<std::string> sentences_kor;
  std::vector<std::string> sentences_han;
  std::vector<RelationInstance> relations;  // re-based
  std::vector<Entity> entities;  // re-based
  std::vector<std::size_t> provenance;  // source relation index of each entry in `relations`
  Metadata metadata;

  /// A standalone document carrying its origin; this is what `segment` writes.
  Document to_document() const {
    Document d;
    d.doc_id = doc_id + "#" + std::to_string(index);
    d.sentences_kor = sentences_kor;
    d.sentences_han = sentences_han;
    d.entities = entities;
    d.relations = relations;
    d.metadata = metadata;
    d.origin = SubtextOrigin{doc_id, range_kor, range_han, provenance};
    return d;
  }
};

namespace seg_detail {

inline void add_mention_sentences(const Entity* e, Language lang, std::set<std::size_t>& out) {
  if (e == nullptr) return;
  for (const auto& m : e->mentions(lang)) out.insert(m.sentence_index);
}

}  // namespace seg_detail

/// The relation's own sentence set: anchor, every subject/object Korean mention sentence, and Korean evidence.
inline BaseWindow base_window(const Document& doc, std::size_t relation_index) {
  const auto& rel = doc.relations.at(relation_index);
  const Entity* subject = doc.find_entity(rel.subject_id);
  if (subject == nullptr || subject->mentions_kor.empty())
    throw NoAnchor(doc.doc_id + " relation " + std::to_string(relation_index) + ": subject has no Korean mention");
  BaseWindow w;
  w.relation_ref = relation_index;
  w.anchor = subject->mentions_kor.front().sentence_index;
  for (const auto& m : subject->mentions_kor) w.anchor = std::min(w.anchor, m.sentence_index);
  w.window.insert(w.anchor);
  seg_detail::add_mention_sentences(subject, Language::Kor, w.window);
  seg_detail::add_mention_sentences(doc.find_entity(rel.object_id), Language::Kor, w.window);
  w.window.insert(rel.evidence_kor.begin(), rel.evidence_kor.end());
  return w;
}

/// Widens the window by k around its anchor and clamps to [0, n-1].
inline SentenceRange expand(const BaseWindow& w, std::size_t k, std::size_t n) {
  const std::size_t wmin = *w.window.begin();
  const std::size_t wmax = *w.window.rbegin();
  const std::size_t lo = std::min(w.anchor >= k ? w.anchor - k : 0, wmin);
  const std::size_t hi = std::min(n - 1, std::max(w.anchor + k, wmax));
  return {lo, hi};
}

/// Unions intervals that share at least one sentence until none do. Sweep over lo; output sorted and disjoint.
inline std::vector<SubtextSkeleton> merge_to_fixpoint(std::vector<SubtextSkeleton> intervals) {
  std::stable_sort(intervals.begin(), intervals.end(), [](const auto& a, const auto& b) {
    return a.range_kor.lo < b.range_kor.lo;
  });
  std::vector<SubtextSkeleton> out;
  for (auto& iv : intervals) {
    if (!out.empty() && iv.range_kor.lo <= out.back().range_kor.hi) {
      auto& cur = out.back();
      cur.range_kor.hi = std::max(cur.range_kor.hi, iv.range_kor.hi);
      cur.provenance.insert(cur.provenance.end(), iv.provenance.begin(), iv.provenance.end());
    } else {
      out.push_back(std::move(iv));
    }
  }
  return out;
}

/// Hanja window: every Hanja anchor of the subtext's relations, widened by k. Falls back to the whole
/// Hanja text (with a warning) when the relations carry no Hanja annotation.
inline SentenceRange align_hanja(const SubtextSkeleton& sk, const Document& doc, std::size_t k,
                                 std::vector<std::string>* warnings = nullptr) {
  const std::size_t m = doc.sentences_han.size();
  std::set<std::size_t> anchors;
  for (auto ri : sk.provenance) {
    const auto& rel = doc.relations.at(ri);
    anchors.insert(rel.evidence_han.begin(), rel.evidence_han.end());
    seg_detail::add_mention_sentences(doc.find_entity(rel.subject_id), Language::Han, anchors);
    seg_detail::add_mention_sentences(doc.find_entity(rel.object_id), Language::Han, anchors);
  }
  if (anchors.empty()) {
    if (warnings)
      warnings->push_back(doc.doc_id + " [" + std::to_string(sk.range_kor.lo) + "," + std::to_string(sk.range_kor.hi) +
                          "]: no Hanja annotations, using whole Hanja text");
    return {0, m - 1};
  }
  const std::size_t lo = *anchors.begin() >= k ? *anchors.begin() - k : 0;
  const std::size_t hi = std::min(m - 1, *anchors.rbegin() + k);
  return {lo, hi};
}

namespace seg_detail {

inline std::vector<Mention> slice_mentions(const std::vector<Mention>& ms, const SentenceRange& r) {
  std::vector<Mention> out;
  for (auto m : ms) {
    if (!r.contains(m.sentence_index)) continue;
    m.sentence_index -= r.lo;
    out.push_back(std::move(m));
  }
  return out;
}

inline std::set<std::size_t> slice_indices(const std::set<std::size_t>& s, const SentenceRange& r) {
  std::set<std::size_t> out;
  for (auto i : s)
    if (r.contains(i)) out.insert(i - r.lo);
  return out;
}

}  // namespace seg_detail

/// Cuts a document into self-contained subtexts at sequence level cfg.k.
inline std::vector<Subtext> build_subtexts(const Document& doc, const SegmenterConfig& cfg,
                                           std::vector<std::string>* warnings = nullptr) {
  const std::size_t n = doc.sentences_kor.size();
  std::vector<SubtextSkeleton> intervals;
  intervals.reserve(doc.relations.size());
  for (std::size_t r = 0; r < doc.relations.size(); ++r)
    intervals.push_back({expand(base_window(doc, r), cfg.k, n), {r}});
  const auto merged = merge_to_fixpoint(std::move(intervals));

  std::vector<Subtext> out;
  out.reserve(merged.size());
  for (std::size_t s = 0; s < merged.size(); ++s) {
    const auto& sk = merged[s];
    Subtext st;
    st.doc_id = doc.doc_id;
    st.index = s;
    st.range_kor = sk.range_kor;
    st.range_han = align_hanja(sk, doc, cfg.k, warnings);
    st.metadata = doc.metadata;
    st.sentences_kor.assign(doc.sentences_kor.begin() + st.range_kor.lo, doc.sentences_kor.begin() + st.range_kor.hi + 1);
    st.sentences_han.assign(doc.sentences_han.begin() + st.range_han.lo, doc.sentences_han.begin() + st.range_han.hi + 1);
    for (const auto& e : doc.entities) {
      auto kor = seg_detail::slice_mentions(e.mentions_kor, st.range_kor);
      if (kor.empty()) continue;
      st.entities.push_back({e.entity_id, e.entity_type, std::move(kor), seg_detail::slice_mentions(e.mentions_han, st.range_han)});
    }
    auto provenance = sk.provenance;
    std::sort(provenance.begin(), provenance.end());
    for (auto ri : provenance) {
      const auto& rel = doc.relations[ri];
      st.relations.push_back({rel.subject_id, rel.object_id, rel.label,
                              seg_detail::slice_indices(rel.evidence_kor, st.range_kor),
                              seg_detail::slice_indices(rel.evidence_han, st.range_han)});
    }
    st.provenance = std::move(provenance);
    out.push_back(std::move(st));
  }
  return out;
}

/// Segments a whole corpus; documents without relations are skipped.
inline std::vector<Document> segment_corpus(const std::vector<Document>& docs, const SegmenterConfig& cfg,
                                            std::vector<std::string>* warnings = nullptr) {
  std::vector<Document> out;
  for (const auto& d : docs) {
    if (d.relations.empty()) continue;
    for (const auto& st : build_subtexts(d, cfg, warnings)) out.push_back(st.to_document());
  }
  return out;
}

}  // namespace histred

#endif  // HISTRED_SEGMENTER_HPP
