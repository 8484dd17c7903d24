#ifndef HISTRED_CORPUS_IO_HPP
#define HISTRED_CORPUS_IO_HPP

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histred/corpus.hpp"

namespace histred {

using Json = nlohmann::json;

class CorpusFormatError : public std::runtime_error {
 public:
  CorpusFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LoadedDocument {
  Document doc;
  std::vector<std::string> warnings;
};

namespace io_detail {

inline std::size_t count_occurrences(const std::u32string& text, const std::u32string& needle, std::size_t& first) {
  std::size_t n = 0;
  first = std::u32string::npos;
  if (needle.empty()) return 0;
  for (auto pos = text.find(needle); pos != std::u32string::npos; pos = text.find(needle, pos + 1)) {
    if (n == 0) first = pos;
    ++n;
  }
  return n;
}

inline Mention parse_mention(const Json& j, Language lang, const Document& doc, const std::string& where,
                             std::vector<std::string>& warnings) {
  Mention m;
  m.language = lang;
  m.sentence_index = j.at("sent").get<std::size_t>();
  m.surface = j.at("surface").get<std::string>();
  if (j.contains("start") && j.contains("end")) {
    m.char_start = j.at("start").get<std::size_t>();
    m.char_end = j.at("end").get<std::size_t>();
    return m;
  }
  // Surface-only mention: resolve to the earliest exact occurrence.
  const auto& sents = doc.sentences(lang);
  if (m.sentence_index >= sents.size()) return m;  // left for validation to report
  const auto text = utf8::decode(sents[m.sentence_index]);
  const auto needle = utf8::decode(m.surface);
  std::size_t first = 0;
  const auto n = count_occurrences(text, needle, first);
  if (n == 0) {
    warnings.push_back(where + ": surface '" + m.surface + "' not found in sentence " +
                       std::to_string(m.sentence_index));
    return m;  // zero-width span; validation reports span-bounds
  }
  if (n > 1)
    warnings.push_back(where + ": surface '" + m.surface + "' occurs " + std::to_string(n) +
                       " times; using earliest");
  m.char_start = first;
  m.char_end = first + needle.size();
  return m;
}

inline std::string resolve_by_surface(const Document& doc, const Json& rel, const char* kor_key,
                                      const char* han_key) {
  if (rel.contains(kor_key)) {
    const auto s = rel.at(kor_key).get<std::string>();
    for (const auto& e : doc.entities)
      for (const auto& m : e.mentions_kor)
        if (m.surface == s) return e.entity_id;
  }
  if (rel.contains(han_key)) {
    const auto s = rel.at(han_key).get<std::string>();
    for (const auto& e : doc.entities)
      for (const auto& m : e.mentions_han)
        if (m.surface == s) return e.entity_id;
  }
  return {};
}

template <class T>
std::optional<T> opt(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

inline Json range_json(const SentenceRange& r) { return Json::array({r.lo, r.hi}); }
inline SentenceRange range_from(const Json& j) { return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()}; }

inline Json mention_json(const Mention& m) {
  return Json{{"sent", m.sentence_index}, {"start", m.char_start}, {"end", m.char_end}, {"surface", m.surface}};
}

inline std::string first_surface(const std::vector<Mention>& ms) { return ms.empty() ? std::string() : ms.front().surface; }

}  // namespace io_detail

/// Parses one corpus record. Throws CorpusFormatError (line 0) on structural problems;
/// semantic problems are left for validate_document.
inline LoadedDocument document_from_json(const Json& j) {
  using namespace io_detail;
  LoadedDocument out;
  auto& doc = out.doc;
  try {
    doc.doc_id = j.at("doc_id").get<std::string>();
    doc.sentences_kor = j.at("text_kor").get<std::vector<std::string>>();
    doc.sentences_han = j.at("text_han").get<std::vector<std::string>>();
    if (j.contains("entities")) {
      for (std::size_t i = 0; i < j.at("entities").size(); ++i) {
        const auto& je = j.at("entities").at(i);
        Entity e;
        e.entity_id = je.at("id").get<std::string>();
        e.entity_type = parse_entity_type(je.at("type").get<std::string>());
        const auto where = doc.doc_id + ":entities[" + std::to_string(i) + "]";
        if (je.contains("mentions_kor"))
          for (const auto& jm : je.at("mentions_kor"))
            e.mentions_kor.push_back(parse_mention(jm, Language::Kor, doc, where, out.warnings));
        if (je.contains("mentions_han"))
          for (const auto& jm : je.at("mentions_han"))
            e.mentions_han.push_back(parse_mention(jm, Language::Han, doc, where, out.warnings));
        doc.entities.push_back(std::move(e));
      }
    }
    if (j.contains("relations")) {
      for (const auto& jr : j.at("relations")) {
        RelationInstance r;
        r.subject_id = jr.contains("sbj_id") ? jr.at("sbj_id").get<std::string>()
                                             : resolve_by_surface(doc, jr, "sbj_kor", "sbj_han");
        r.object_id = jr.contains("obj_id") ? jr.at("obj_id").get<std::string>()
                                            : resolve_by_surface(doc, jr, "obj_kor", "obj_han");
        r.label = parse_relation_type(jr.at("label").get<std::string>());
        for (auto s : jr.value("evidence_kor", Json::array())) r.evidence_kor.insert(s.get<std::size_t>());
        for (auto s : jr.value("evidence_han", Json::array())) r.evidence_han.insert(s.get<std::size_t>());
        doc.relations.push_back(std::move(r));
      }
    }
    if (j.contains("metadata")) {
      const auto& jm = j.at("metadata");
      auto& md = doc.metadata;
      md.book_title = opt<std::string>(jm, "book_title");
      md.text_chapter = opt<std::string>(jm, "text_chapter");
      md.title = opt<std::string>(jm, "title");
      md.writer = opt<std::string>(jm, "writer");
      md.year = opt<int>(jm, "year");
      md.book_volume = opt<std::string>(jm, "book_volume");
      md.copyright = opt<std::string>(jm, "copyright");
    }
    if (j.contains("origin")) {
      const auto& jo = j.at("origin");
      SubtextOrigin o;
      o.source_doc_id = jo.at("source_doc_id").get<std::string>();
      o.range_kor = range_from(jo.at("range_kor"));
      o.range_han = range_from(jo.at("range_han"));
      o.provenance = jo.at("provenance").get<std::vector<std::size_t>>();
      doc.origin = std::move(o);
    }
  } catch (const Json::exception& e) {
    throw CorpusFormatError(0, e.what());
  } catch (const std::invalid_argument& e) {
    throw CorpusFormatError(0, e.what());
  }
  return out;
}

inline Json document_to_json(const Document& doc) {
  using namespace io_detail;
  Json j;
  j["doc_id"] = doc.doc_id;
  j["text_kor"] = doc.sentences_kor;
  j["text_han"] = doc.sentences_han;
  Json ents = Json::array();
  for (const auto& e : doc.entities) {
    Json je{{"id", e.entity_id}, {"type", std::string(to_string(e.entity_type))}};
    je["mentions_kor"] = Json::array();
    je["mentions_han"] = Json::array();
    for (const auto& m : e.mentions_kor) je["mentions_kor"].push_back(mention_json(m));
    for (const auto& m : e.mentions_han) je["mentions_han"].push_back(mention_json(m));
    ents.push_back(std::move(je));
  }
  j["entities"] = std::move(ents);
  Json rels = Json::array();
  for (const auto& r : doc.relations) {
    Json jr;
    const Entity* s = doc.find_entity(r.subject_id);
    const Entity* o = doc.find_entity(r.object_id);
    jr["sbj_id"] = r.subject_id;
    jr["obj_id"] = r.object_id;
    jr["sbj_kor"] = s ? first_surface(s->mentions_kor) : "";
    jr["sbj_han"] = s ? first_surface(s->mentions_han) : "";
    jr["obj_kor"] = o ? first_surface(o->mentions_kor) : "";
    jr["obj_han"] = o ? first_surface(o->mentions_han) : "";
    jr["label"] = std::string(to_string(r.label));
    jr["evidence_kor"] = r.evidence_kor;
    jr["evidence_han"] = r.evidence_han;
    rels.push_back(std::move(jr));
  }
  j["relations"] = std::move(rels);
  Json md = Json::object();
  const auto& m = doc.metadata;
  auto put = [&md](const char* k, const auto& v) {
    if (v) md[k] = *v;
  };
  put("book_title", m.book_title);
  put("text_chapter", m.text_chapter);
  put("title", m.title);
  put("writer", m.writer);
  put("year", m.year);
  put("book_volume", m.book_volume);
  put("copyright", m.copyright);
  j["metadata"] = std::move(md);
  if (doc.origin) {
    const auto& o = *doc.origin;
    j["origin"] = Json{{"source_doc_id", o.source_doc_id},
                       {"range_kor", range_json(o.range_kor)},
                       {"range_han", range_json(o.range_han)},
                       {"provenance", o.provenance}};
  }
  return j;
}

struct LoadedCorpus {
  std::vector<Document> docs;
  std::vector<std::string> warnings;
};

/// Reads a line-delimited corpus; blank lines are skipped.
inline LoadedCorpus read_corpus(std::istream& in) {
  LoadedCorpus out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw CorpusFormatError(lineno, e.what());
    }
    try {
      auto loaded = document_from_json(j);
      out.docs.push_back(std::move(loaded.doc));
      for (auto& w : loaded.warnings) out.warnings.push_back(std::move(w));
    } catch (const CorpusFormatError& e) {
      throw CorpusFormatError(lineno, e.what());
    }
  }
  return out;
}

inline LoadedCorpus read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return read_corpus(in);
}

/// Writes one compact record per line. `extra` fields, when given, are merged into every record.
inline void write_corpus(std::ostream& out, const std::vector<Document>& docs, const Json& extra = Json()) {
  for (const auto& d : docs) {
    auto j = document_to_json(d);
    if (extra.is_object())
      for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    out << j.dump() << '\n';
  }
}

inline void write_corpus_file(const std::string& path, const std::vector<Document>& docs, const Json& extra = Json()) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  write_corpus(out, docs, extra);
}

}  // namespace histred

#endif  // HISTRED_CORPUS_IO_HPP
