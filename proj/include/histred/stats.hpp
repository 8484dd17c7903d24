#ifndef HISTRED_STATS_HPP
#define HISTRED_STATS_HPP

#include <algorithm>
#include <array>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histred/corpus.hpp"
#include "histred/tokenizer.hpp"

namespace histred {

struct Summary {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Summary of a gathered sample; the median of an even-sized sample averages the two middle values.
inline Summary summarize(std::vector<double> xs) {
  Summary s;
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.variance = ss / n;
  const std::size_t mid = xs.size() / 2;
  s.median = xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
  s.min = xs.front();
  s.max = xs.back();
  return s;
}

struct HistogramEntry {
  std::size_t count = 0;
  double ratio = 0.0;
};

struct StatsReport {
  std::string tokenizer;
  std::size_t num_docs = 0;
  std::size_t num_sentences_kor = 0;
  std::size_t num_sentences_han = 0;
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  Summary tokens_kor;
  Summary tokens_han;
  Summary sentences_per_doc_kor;
  Summary sentences_per_doc_han;
  Summary entities_per_doc;
  std::array<HistogramEntry, kNumEntityTypes> entity_histogram{};
  std::array<HistogramEntry, kNumGoldRelations> relation_histogram{};
};

/// Per-document partial statistics. merge() is associative and commutative on every count; the
/// distribution summaries are computed from the gathered multisets at report() time.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(TokenizerAdapter tok) : tok_(std::move(tok)) {}

  void add(const Document& doc) {
    ++num_docs_;
    sentences_kor_.push_back(static_cast<double>(doc.sentences_kor.size()));
    sentences_han_.push_back(static_cast<double>(doc.sentences_han.size()));
    tokens_kor_.push_back(static_cast<double>(count_tokens(doc.sentences_kor)));
    tokens_han_.push_back(static_cast<double>(count_tokens(doc.sentences_han)));
    entities_.push_back(static_cast<double>(doc.entities.size()));
    for (const auto& e : doc.entities) ++entity_counts_[static_cast<std::size_t>(e.entity_type)];
    for (const auto& r : doc.relations) {
      const auto i = static_cast<std::size_t>(r.label);
      if (i < kNumGoldRelations) ++relation_counts_[i];
    }
  }

  void merge(const StatsAccumulator& o) {
    num_docs_ += o.num_docs_;
    auto cat = [](std::vector<double>& a, const std::vector<double>& b) { a.insert(a.end(), b.begin(), b.end()); };
    cat(sentences_kor_, o.sentences_kor_);
    cat(sentences_han_, o.sentences_han_);
    cat(tokens_kor_, o.tokens_kor_);
    cat(tokens_han_, o.tokens_han_);
    cat(entities_, o.entities_);
    for (std::size_t i = 0; i < kNumEntityTypes; ++i) entity_counts_[i] += o.entity_counts_[i];
    for (std::size_t i = 0; i < kNumGoldRelations; ++i) relation_counts_[i] += o.relation_counts_[i];
  }

  StatsReport report() const {
    StatsReport r;
    r.tokenizer = tok_.name;
    r.num_docs = num_docs_;
    r.num_sentences_kor = static_cast<std::size_t>(std::accumulate(sentences_kor_.begin(), sentences_kor_.end(), 0.0));
    r.num_sentences_han = static_cast<std::size_t>(std::accumulate(sentences_han_.begin(), sentences_han_.end(), 0.0));
    r.tokens_kor = summarize(tokens_kor_);
    r.tokens_han = summarize(tokens_han_);
    r.sentences_per_doc_kor = summarize(sentences_kor_);
    r.sentences_per_doc_han = summarize(sentences_han_);
    r.entities_per_doc = summarize(entities_);
    r.num_entities = std::accumulate(entity_counts_.begin(), entity_counts_.end(), std::size_t{0});
    r.num_relations = std::accumulate(relation_counts_.begin(), relation_counts_.end(), std::size_t{0});
    for (std::size_t i = 0; i < kNumEntityTypes; ++i)
      r.entity_histogram[i] = {entity_counts_[i], r.num_entities ? double(entity_counts_[i]) / double(r.num_entities) : 0.0};
    for (std::size_t i = 0; i < kNumGoldRelations; ++i)
      r.relation_histogram[i] = {relation_counts_[i],
                                 r.num_relations ? double(relation_counts_[i]) / double(r.num_relations) : 0.0};
    return r;
  }

 private:
  std::size_t count_tokens(const std::vector<std::string>& sents) const {
    std::size_t n = 0;
    for (const auto& s : sents) n += checked_tokenize(tok_, s).size();
    return n;
  }

  TokenizerAdapter tok_;
  std::size_t num_docs_ = 0;
  std::vector<double> sentences_kor_, sentences_han_, tokens_kor_, tokens_han_, entities_;
  std::array<std::size_t, kNumEntityTypes> entity_counts_{};
  std::array<std::size_t, kNumGoldRelations> relation_counts_{};
};

inline StatsReport compute_stats(const std::vector<Document>& corpus, const TokenizerAdapter& tok) {
  if (corpus.empty()) throw EmptyCorpus();
  StatsAccumulator acc(tok);
  for (const auto& d : corpus) acc.add(d);
  return acc.report();
}

inline nlohmann::json to_json(const Summary& s) {
  return {{"mean", s.mean}, {"variance", s.variance}, {"median", s.median}, {"min", s.min}, {"max", s.max}};
}

inline nlohmann::json to_json(const StatsReport& r) {
  nlohmann::json j;
  j["tokenizer"] = r.tokenizer;
  j["entity_counting_unit"] = "entity cluster per document";
  j["num_docs"] = r.num_docs;
  j["num_sentences"] = {{"kor", r.num_sentences_kor}, {"han", r.num_sentences_han}};
  j["num_entities"] = r.num_entities;
  j["num_relations"] = r.num_relations;
  j["tokens_per_doc"] = {{"kor", to_json(r.tokens_kor)}, {"han", to_json(r.tokens_han)}};
  j["sentences_per_doc"] = {{"kor", to_json(r.sentences_per_doc_kor)}, {"han", to_json(r.sentences_per_doc_han)}};
  j["entities_per_doc"] = to_json(r.entities_per_doc);
  auto& eh = j["entity_histogram"] = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumEntityTypes; ++i)
    eh[std::string(kEntityTypeNames[i])] = {{"count", r.entity_histogram[i].count}, {"ratio", r.entity_histogram[i].ratio}};
  auto& rh = j["relation_histogram"] = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumGoldRelations; ++i)
    rh[std::string(kRelationTypeNames[i])] = {{"count", r.relation_histogram[i].count},
                                              {"ratio", r.relation_histogram[i].ratio}};
  return j;
}

/// Aligned-column rendering for terminals.
inline std::string render_table(const StatsReport& r) {
  std::ostringstream os;
  os << std::fixed;
  os << "tokenizer: " << r.tokenizer << "  (entity counts: one per entity cluster per document)\n";
  os << std::left << std::setw(28) << "documents" << r.num_docs << '\n';
  os << std::setw(28) << "sentences (kor / han)" << r.num_sentences_kor << " / " << r.num_sentences_han << '\n';
  os << std::setw(28) << "entities / relations" << r.num_entities << " / " << r.num_relations << '\n';
  os << '\n' << std::setw(12) << "language" << std::right << std::setw(12) << "mean" << std::setw(14) << "var."
     << std::setw(10) << "median" << std::setw(8) << "min" << std::setw(8) << "max" << '\n';
  auto row = [&](const char* name, const Summary& s) {
    os << std::left << std::setw(12) << name << std::right << std::setprecision(2) << std::setw(12) << s.mean
       << std::setw(14) << s.variance << std::setprecision(1) << std::setw(10) << s.median << std::setprecision(0)
       << std::setw(8) << s.min << std::setw(8) << s.max << '\n';
  };
  row("Korean", r.tokens_kor);
  row("Hanja", r.tokens_han);
  os << '\n' << std::left << std::setw(30) << "entity type" << std::right << std::setw(10) << "count" << std::setw(10)
     << "ratio%" << '\n';
  for (std::size_t i = 0; i < kNumEntityTypes; ++i)
    os << std::left << std::setw(30) << kEntityTypeNames[i] << std::right << std::setw(10) << r.entity_histogram[i].count
       << std::setw(10) << std::setprecision(2) << 100.0 * r.entity_histogram[i].ratio << '\n';
  os << '\n' << std::left << std::setw(30) << "relation type" << std::right << std::setw(10) << "count" << std::setw(10)
     << "ratio%" << '\n';
  for (std::size_t i = 0; i < kNumGoldRelations; ++i)
    os << std::left << std::setw(30) << kRelationTypeNames[i] << std::right << std::setw(10)
       << r.relation_histogram[i].count << std::setw(10) << std::setprecision(2)
       << 100.0 * r.relation_histogram[i].ratio << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Entity-centric fact query

struct FactFilter {
  std::optional<int> from_year;
  std::optional<int> to_year;
  std::set<RelationType> relations;  // empty = any
};

struct Fact {
  std::string doc_id;
  std::size_t relation_index = 0;
  RelationInstance relation;
  std::string subject_surface;
  std::string object_surface;
  Metadata metadata;
};

inline bool entity_matches(const Entity& e, const std::string& query) {
  if (e.entity_id == query) return true;
  for (const auto& m : e.mentions_kor)
    if (m.surface == query) return true;
  for (const auto& m : e.mentions_han)
    if (m.surface == query) return true;
  return false;
}

/// Every relation touching an entity that matches `query` (surface in either language, or entity id),
/// ordered by metadata year; undated documents sort last. A year filter excludes undated documents.
inline std::vector<Fact> query_entity_facts(const std::vector<Document>& corpus, const std::string& query,
                                            const FactFilter& filter = {}) {
  std::vector<Fact> out;
  for (const auto& doc : corpus) {
    const auto& year = doc.metadata.year;
    if ((filter.from_year || filter.to_year) && !year) continue;
    if (filter.from_year && *year < *filter.from_year) continue;
    if (filter.to_year && *year > *filter.to_year) continue;
    for (std::size_t i = 0; i < doc.relations.size(); ++i) {
      const auto& r = doc.relations[i];
      if (!filter.relations.empty() && !filter.relations.contains(r.label)) continue;
      const Entity* s = doc.find_entity(r.subject_id);
      const Entity* o = doc.find_entity(r.object_id);
      if (!((s && entity_matches(*s, query)) || (o && entity_matches(*o, query)))) continue;
      out.push_back({doc.doc_id, i, r, s && !s->mentions_kor.empty() ? s->mentions_kor.front().surface : r.subject_id,
                     o && !o->mentions_kor.empty() ? o->mentions_kor.front().surface : r.object_id, doc.metadata});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Fact& a, const Fact& b) {
    const auto& ya = a.metadata.year;
    const auto& yb = b.metadata.year;
    if (ya && yb) return *ya < *yb;
    return ya.has_value() && !yb.has_value();
  });
  return out;
}

}  // namespace histred

#endif  // HISTRED_STATS_HPP
