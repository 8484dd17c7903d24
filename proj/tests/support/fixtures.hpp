#ifndef HISTRED_TESTS_FIXTURES_HPP
#define HISTRED_TESTS_FIXTURES_HPP

#include "histred/corpus.hpp"

namespace histred::synth {

/// A small hand-annotated document: three Korean sentences, two Hanja sentences, three entities.
inline Document fixture_document() {
  Document d;
  d.doc_id = "fixture-1";
  d.sentences_kor = {"정사신이 압록강을 건넜다", "의주에 도착하였다", "부사가 말하였다"};
  d.sentences_han = {"正使渡鴨綠江", "至義州"};
  d.entities = {
      {"E0", EntityType::Person, {{Language::Kor, 0, 0, 3, "정사신"}}, {{Language::Han, 0, 0, 2, "正使"}}},
      {"E1", EntityType::Location, {{Language::Kor, 0, 5, 8, "압록강"}}, {{Language::Han, 0, 3, 6, "鴨綠江"}}},
      {"E2", EntityType::Location, {{Language::Kor, 1, 0, 2, "의주"}}, {{Language::Han, 1, 1, 3, "義州"}}},
  };
  d.relations = {
      {"E0", "E1", RelationType::Nearby, {0}, {0}},
      {"E1", "E2", RelationType::Nearby, {0, 1}, {1}},
  };
  d.metadata.book_title = "연행록";
  d.metadata.writer = "미상";
  d.metadata.year = 1712;
  return d;
}

/// Two Korean and two Hanja sentences, three entities, two relations; the smallest full model input.
inline Document toy_subtext() {
  Document d;
  d.doc_id = "toy";
  d.sentences_kor = {"정사 압록강 건넜다", "의주 도착"};
  d.sentences_han = {"正使渡鴨綠江", "至義州"};
  d.entities = {
      {"E0", EntityType::Person, {{Language::Kor, 0, 0, 2, "정사"}}, {{Language::Han, 0, 0, 2, "正使"}}},
      {"E1", EntityType::Location, {{Language::Kor, 0, 3, 6, "압록강"}}, {{Language::Han, 0, 3, 6, "鴨綠江"}}},
      {"E2", EntityType::Location, {{Language::Kor, 1, 0, 2, "의주"}}, {{Language::Han, 1, 1, 3, "義州"}}},
  };
  d.relations = {
      {"E0", "E1", RelationType::Nearby, {0}, {0}},
      {"E1", "E2", RelationType::Nearby, {0, 1}, {0, 1}},
  };
  return d;
}

}  // namespace histred::synth

#endif  // HISTRED_TESTS_FIXTURES_HPP
