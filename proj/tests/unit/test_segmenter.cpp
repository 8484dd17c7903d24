#include <gtest/gtest.h>

#include <random>

#include "histred/corpus_io.hpp"
#include "histred/segmenter.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace histred;

namespace {

// A document with n Korean and m Hanja sentences of filler and no annotations yet.
Document blank(std::size_t n, std::size_t m) {
  Document d;
  d.doc_id = "blank";
  for (std::size_t i = 0; i < n; ++i) d.sentences_kor.push_back("가나 다라 " + std::to_string(i));
  for (std::size_t i = 0; i < m; ++i) d.sentences_han.push_back("甲乙" + std::to_string(i));
  return d;
}

// Adds an entity with one Korean mention (on the first two characters) per listed sentence.
void add_entity(Document& d, const std::string& id, std::vector<std::size_t> kor, std::vector<std::size_t> han = {}) {
  Entity e{id, EntityType::Person, {}, {}};
  for (auto s : kor) e.mentions_kor.push_back({Language::Kor, s, 0, 2, "가나"});
  for (auto s : han) e.mentions_han.push_back({Language::Han, s, 0, 2, "甲乙"});
  d.entities.push_back(std::move(e));
}

SubtextSkeleton sk(std::size_t lo, std::size_t hi, std::size_t id) { return {{lo, hi}, {id}}; }

}  // namespace

TEST(BaseWindow, CoLocatedRelation) {
  auto d = blank(3, 1);
  add_entity(d, "S", {1});
  add_entity(d, "O", {1});
  d.relations.push_back({"S", "O", RelationType::Nearby, {1}, {}});
  const auto w = base_window(d, 0);
  EXPECT_EQ(w.anchor, 1u);
  EXPECT_EQ(w.window, (std::set<std::size_t>{1}));
}

TEST(BaseWindow, EvidenceInNextSentence) {
  auto d = blank(10, 1);
  add_entity(d, "S", {4});
  add_entity(d, "O", {4});
  d.relations.push_back({"S", "O", RelationType::Nearby, {5}, {}});
  const auto w = base_window(d, 0);
  EXPECT_EQ(w.anchor, 4u);
  EXPECT_EQ(w.window, (std::set<std::size_t>{4, 5}));
  EXPECT_EQ(expand(w, 0, 10), (SentenceRange{4, 5}));
}

TEST(BaseWindow, UnionOfMentionsAndEvidence) {
  auto d = blank(8, 1);
  add_entity(d, "S", {2});
  add_entity(d, "O", {5});
  d.relations.push_back({"S", "O", RelationType::Nearby, {3}, {}});
  const auto w = base_window(d, 0);
  // oracle: {subject sentences} ∪ {object sentences} ∪ evidence
  std::set<std::size_t> oracle = {2};
  oracle.insert(5);
  oracle.insert(3);
  EXPECT_EQ(w.window, oracle);
  EXPECT_EQ(w.anchor, 2u);
}

TEST(BaseWindow, AnchorIsEarliestSubjectMention) {
  auto d = blank(8, 1);
  add_entity(d, "S", {6, 3});
  add_entity(d, "O", {1});
  d.relations.push_back({"S", "O", RelationType::Nearby, {6}, {}});
  EXPECT_EQ(base_window(d, 0).anchor, 3u);
}

TEST(BaseWindow, SubjectWithoutKoreanMentionHasNoAnchor) {
  auto d = blank(3, 1);
  add_entity(d, "S", {});
  add_entity(d, "O", {1});
  d.relations.push_back({"S", "O", RelationType::Nearby, {1}, {}});
  EXPECT_THROW(base_window(d, 0), NoAnchor);
  EXPECT_THROW(build_subtexts(d, {0}), NoAnchor);
}

TEST(Expand, SymmetricWindowInsideDocument) {
  EXPECT_EQ(expand({0, 5, {5, 6}}, 2, 20), (SentenceRange{3, 7}));
}

TEST(Expand, ClampsAtDocumentBoundaries) {
  EXPECT_EQ(expand({0, 0, {0}}, 8, 3), (SentenceRange{0, 2}));
}

TEST(Expand, MatchesMinMaxFormula) {
  auto oracle = [](long anchor, std::set<std::size_t> w, long k, long n) {
    const long lo = std::max(0L, std::min(anchor - k, static_cast<long>(*w.begin())));
    const long hi = std::min(n - 1, std::max(anchor + k, static_cast<long>(*w.rbegin())));
    return SentenceRange{static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
  };
  EXPECT_EQ(expand({0, 4, {4, 9}}, 1, 12), (SentenceRange{3, 9}));
  EXPECT_EQ(expand({0, 4, {4, 9}}, 1, 12), oracle(4, {4, 9}, 1, 12));
  std::mt19937_64 rng(1);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 1 + rng() % 40;
    BaseWindow w;
    w.anchor = rng() % n;
    w.window = {w.anchor};
    for (std::size_t extra = rng() % 4; extra > 0; --extra) w.window.insert(rng() % n);
    const std::size_t k = rng() % 10;
    EXPECT_EQ(expand(w, k, n), oracle(static_cast<long>(w.anchor), w.window, static_cast<long>(k), static_cast<long>(n)));
  }
}

TEST(Merge, SharedEndpointMerges) {
  const auto out = merge_to_fixpoint({sk(1, 3, 0), sk(3, 5, 1)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].range_kor, (SentenceRange{1, 5}));
  EXPECT_EQ(out[0].provenance, (std::vector<std::size_t>{0, 1}));
}

TEST(Merge, DisjointIntervalsStaySeparate) {
  const auto out = merge_to_fixpoint({sk(3, 4, 1), sk(0, 1, 0)});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].range_kor, (SentenceRange{0, 1}));
  EXPECT_EQ(out[1].range_kor, (SentenceRange{3, 4}));
}

TEST(Merge, AdjacentButNotSharingStaysSeparate) {
  EXPECT_EQ(merge_to_fixpoint({sk(0, 2, 0), sk(3, 4, 1)}).size(), 2u);
}

TEST(Merge, ChainsTransitively) {
  // [0,2] and [5,7] only join through [2,5].
  const auto out = merge_to_fixpoint({sk(0, 2, 0), sk(5, 7, 1), sk(2, 5, 2)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].range_kor, (SentenceRange{0, 7}));
}

TEST(Merge, MatchesBruteForceOracleOnRandomInstances) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 3000; ++t) {
    const std::size_t count = 1 + rng() % 100;
    const std::size_t span = 5 + rng() % 300;
    std::vector<SubtextSkeleton> ivs;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t lo = rng() % span;
      ivs.push_back(sk(lo, lo + rng() % 6, i));
    }
    ASSERT_TRUE(synth::merge_matches_oracle(ivs)) << "trial " << t;
  }
}

TEST(BuildSubtexts, SingleSentenceRelation) {
  auto d = blank(4, 2);
  add_entity(d, "S", {0});
  add_entity(d, "O", {0});
  d.relations.push_back({"S", "O", RelationType::Nearby, {0}, {}});
  const auto subs = build_subtexts(d, {0});
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].sentences_kor.size(), 1u);
  EXPECT_EQ(subs[0].range_kor, (SentenceRange{0, 0}));
}

TEST(BuildSubtexts, NearbyRelationsMergeAtK1) {
  auto d = blank(6, 2);
  add_entity(d, "A", {2});
  add_entity(d, "B", {2});
  add_entity(d, "C", {4});
  add_entity(d, "D", {4});
  d.relations.push_back({"A", "B", RelationType::Nearby, {2}, {}});
  d.relations.push_back({"C", "D", RelationType::Nearby, {4}, {}});
  auto subs = build_subtexts(d, {1});
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].range_kor, (SentenceRange{1, 5}));
  EXPECT_EQ(subs[0].relations.size(), 2u);
  // At k=0 the two windows are disjoint.
  EXPECT_EQ(build_subtexts(d, {0}).size(), 2u);
}

TEST(BuildSubtexts, RebasesAnnotationsAndRecordsOrigin) {
  const auto d = synth::fixture_document();
  const auto subs = build_subtexts(d, {0});
  ASSERT_EQ(subs.size(), 1u);  // [0,0] and [0,1] overlap
  const auto local = subs[0].to_document();
  EXPECT_EQ(local.doc_id, "fixture-1#0");
  ASSERT_TRUE(local.origin.has_value());
  EXPECT_EQ(local.origin->source_doc_id, "fixture-1");
  EXPECT_EQ(local.origin->range_kor, (SentenceRange{0, 1}));
  EXPECT_EQ(local.origin->provenance, (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(validate_document(local).empty());
  EXPECT_EQ(synth::check_segmentation(d, 0), "");
}

TEST(BuildSubtexts, EntitiesOutsideTheRangeAreDropped) {
  auto d = blank(10, 2);
  add_entity(d, "S", {1});
  add_entity(d, "O", {1});
  add_entity(d, "far", {8});
  d.relations.push_back({"S", "O", RelationType::Nearby, {1}, {}});
  const auto subs = build_subtexts(d, {0});
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].entities.size(), 2u);
}

TEST(AlignHanja, SingleSentenceAnnotations) {
  auto d = blank(3, 6);
  add_entity(d, "S", {0}, {4});
  add_entity(d, "O", {0}, {4});
  d.relations.push_back({"S", "O", RelationType::Nearby, {0}, {4}});
  EXPECT_EQ(align_hanja({{0, 0}, {0}}, d, 0), (SentenceRange{4, 4}));
}

TEST(AlignHanja, MinMaxFormula) {
  auto d = blank(3, 12);
  add_entity(d, "S", {0}, {2});
  add_entity(d, "O", {0}, {7});
  d.relations.push_back({"S", "O", RelationType::Nearby, {0}, {}});
  EXPECT_EQ(align_hanja({{0, 0}, {0}}, d, 1), (SentenceRange{1, 8}));
  // oracle: [max(0, min H - k), min(m-1, max H + k)]
  EXPECT_EQ(align_hanja({{0, 0}, {0}}, d, 3), (SentenceRange{0, 10}));
  EXPECT_EQ(align_hanja({{0, 0}, {0}}, d, 8), (SentenceRange{0, 11}));
}

TEST(AlignHanja, NoAnnotationsFallsBackToWholeTextWithWarning) {
  auto d = blank(3, 5);
  add_entity(d, "S", {0});
  add_entity(d, "O", {0});
  d.relations.push_back({"S", "O", RelationType::Nearby, {0}, {}});
  std::vector<std::string> warnings;
  EXPECT_EQ(align_hanja({{0, 0}, {0}}, d, 0, &warnings), (SentenceRange{0, 4}));
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(SegmenterProperties, HoldOnRandomDocuments) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 300; ++t) {
    const auto d = synth::random_document(rng, "p" + std::to_string(t));
    std::size_t prev = SIZE_MAX;
    for (auto k : kSequenceLevelPresets) {
      ASSERT_EQ(synth::check_segmentation(d, k), "") << "doc " << t << " k=" << k;
      const auto count = build_subtexts(d, {k}).size();
      EXPECT_LE(count, prev) << "doc " << t << " k=" << k;
      prev = count;
    }
  }
}

TEST(SegmentCorpus, SkipsRelationFreeDocumentsAndRoundTrips) {
  auto d = synth::fixture_document();
  auto empty = d;
  empty.doc_id = "no-relations";
  empty.relations.clear();
  const auto out = segment_corpus({d, empty}, {2});
  ASSERT_EQ(out.size(), 1u);
  std::stringstream ss;
  write_corpus(ss, out);
  EXPECT_EQ(read_corpus(ss).docs, out);
}
