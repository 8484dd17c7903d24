#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "histred/model/encoder.hpp"
#include "histred/model/re_model.hpp"
#include "support/fixtures.hpp"
#include "support/numerics.hpp"

using namespace histred;
using namespace histred::model;
using synth::bitwise_equal;
using synth::randn;

namespace {

EncoderSpec small_spec(int d, int vocab) {
  EncoderSpec s;
  s.hidden_dim = d;
  s.num_layers = 2;
  s.num_heads = 2;
  s.ffn_dim = 2 * d;
  s.max_tokens = 32;
  s.vocab_size = vocab;
  return s;
}

ModelConfig small_config(int d) {
  ModelConfig c;
  c.kor = small_spec(d, 1);
  c.han = small_spec(d, 1);
  c.cross_heads = 2;
  c.seed = 7;
  return c;
}

// Replaces every parameter with larger random values so gradients are not dominated by the small init.
void randomize(ParamStore& s, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  for (auto& [name, m] : s) {
    const bool gain = name.size() > 2 && name.compare(name.size() - 2, 2, ".g") == 0;
    m = randn(m.rows(), m.cols(), rng, scale);
    if (gain) m.array() += 1.0;
  }
}

ReModel toy_model(ModelConfig cfg) { return ReModel::for_corpus(cfg, {synth::toy_subtext()}); }

}  // namespace

// ---------------------------------------------------------------------------
// Encoder

TEST(Encoder, OutputShapeAndDeterminism) {
  std::mt19937_64 rng(1);
  ParamStore s;
  const auto spec = small_spec(8, 10);
  init_encoder(s, "enc", spec, rng);
  auto run = [&](const std::vector<int>& ids) {
    Tape t;
    Binder p(t, s, false);
    return Matrix(t.value(encode(p, "enc", spec, ids)));
  };
  const auto h = run({1, 4, 2, 9, 0});
  EXPECT_EQ(h.rows(), 5);
  EXPECT_EQ(h.cols(), 8);
  EXPECT_TRUE(h.allFinite());
  EXPECT_TRUE(bitwise_equal(h, run({1, 4, 2, 9, 0})));
}

TEST(Encoder, OverlongInputIsRejected) {
  std::mt19937_64 rng(1);
  ParamStore s;
  const auto spec = small_spec(8, 4);
  init_encoder(s, "enc", spec, rng);
  Tape t;
  Binder p(t, s, false);
  EXPECT_THROW(encode(p, "enc", spec, std::vector<int>(33, 1)), SequenceTooLong);
  EXPECT_THROW(encode(p, "enc", spec, {}), std::invalid_argument);
}

TEST(Encoder, SpecValidation) {
  auto s = small_spec(8, 4);
  s.num_heads = 3;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small_spec(8, 4);
  s.max_tokens = 7;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Encoder, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(2);
  ParamStore s;
  const auto spec = small_spec(8, 6);
  init_encoder(s, "enc", spec, rng);
  randomize(s, 3);
  const std::vector<int> ids = {1, 5, 2, 2, 0};
  const auto f = synth::probe([&](Binder& p) { return encode(p, "enc", spec, ids); }, 5, 8, 4);
  EXPECT_LT(max_relative_error(check_gradients(s, f, {}, 1e-5, 30, 5)), 1e-4);
}

// ---------------------------------------------------------------------------
// Cross-attention and residual projection

TEST(CrossAttention, SingleKeyCopiesTheValue) {
  std::mt19937_64 rng(3);
  ParamStore s;
  init_attention(s, "x", 8, rng);
  Tape t;
  Binder p(t, s, false);
  const Matrix mem = randn(1, 8, rng);
  const auto r = cross_attend(p, "x", t.constant(randn(4, 8, rng)), t.constant(mem), 2);
  const Matrix value = mem * s["x.wv"];
  const auto& pre = t.value(r.pre_projection);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_LT((pre.row(i) - value.row(0)).norm(), 1e-12);
}

TEST(CrossAttention, RowsAreProbabilityVectors) {
  const auto r = synth::attention_rows(4, 200);
  EXPECT_LE(r.max_sum_deviation, 1e-6);
  EXPECT_GE(r.min_entry, 0.0);
}

TEST(CrossAttention, GradientsMatchCentralDifferences) {
  for (Eigen::Index d : {8, 16, 32}) EXPECT_LT(synth::cross_attention_gradient_error(d, 10 + d), 1e-4) << "d=" << d;
}

TEST(CrossAttention, DimensionMismatchIsShapeError) {
  std::mt19937_64 rng(5);
  ParamStore s;
  init_attention(s, "x", 8, rng);
  Tape t;
  Binder p(t, s, false);
  EXPECT_THROW(cross_attend(p, "x", t.constant(randn(2, 8, rng)), t.constant(randn(3, 6, rng)), 2), ad::ShapeError);
  EXPECT_THROW(cross_attend(p, "x", t.constant(randn(2, 8, rng)), t.constant(randn(3, 8, rng)), 3), ad::ShapeError);
  EXPECT_THROW(cross_attend(p, "x", t.constant(randn(2, 6, rng)), t.constant(randn(3, 6, rng)), 2), ad::ShapeError);
}

TEST(Residual, IdentityWeightsReturnHidden) {
  std::mt19937_64 rng(6);
  ParamStore s{{"r.w", Matrix::Identity(5, 5)}, {"r.b", Matrix::Zero(1, 5)}};
  Tape t;
  Binder p(t, s, false);
  const Matrix h = randn(3, 5, rng);
  EXPECT_TRUE(bitwise_equal(t.value(residual_project(p, "r", t.constant(h), t.constant(Matrix::Zero(3, 5)))), h));
}

TEST(Residual, ZeroInputsGiveBroadcastBias) {
  std::mt19937_64 rng(7);
  ParamStore s{{"r.w", randn(5, 5, rng)}, {"r.b", randn(1, 5, rng)}};
  Tape t;
  Binder p(t, s, false);
  const auto z = t.value(residual_project(p, "r", t.constant(Matrix::Zero(4, 5)), t.constant(Matrix::Zero(4, 5))));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(z.row(i), s["r.b"].row(0));
}

TEST(Residual, MatchesDenseArithmetic) {
  std::mt19937_64 rng(8);
  const Eigen::Index n = 4, d = 6;
  ParamStore s{{"r.w", randn(d, d, rng)}, {"r.b", randn(1, d, rng)}};
  const Matrix h = randn(n, d, rng), hp = randn(n, d, rng);
  Tape t;
  Binder p(t, s, false);
  const auto z = t.value(residual_project(p, "r", t.constant(h), t.constant(hp)));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      double acc = s["r.b"](0, j);
      for (Eigen::Index k = 0; k < d; ++k) acc += (h(i, k) + hp(i, k)) * s["r.w"](k, j);
      EXPECT_NEAR(z(i, j), acc, 1e-12);
    }
  for (Eigen::Index dd : {8, 16, 32}) EXPECT_LT(synth::residual_gradient_error(dd, dd), 1e-4);
}

// ---------------------------------------------------------------------------
// Pooling and heads

TEST(Pooling, SingleRowAndMeanOfTwo) {
  std::mt19937_64 rng(9);
  const Matrix z = randn(5, 4, rng);
  Tape t;
  const auto zv = t.constant(z);
  EXPECT_TRUE(bitwise_equal(t.value(pool_entity(t, zv, {2}, "e")), z.row(2)));
  EXPECT_LT((t.value(pool_entity(t, zv, {1, 3}, "e")) - (z.row(1) + z.row(3)) / 2.0).norm(), 1e-15);
  EXPECT_THROW(pool_entity(t, zv, {}, "e"), EntityTruncated);
}

TEST(Pooling, MatchesEnumerationOracle) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 10), d = 4;
    const Matrix z = randn(n, d, rng);
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n; ++i)
      if (rng() % 2) rows.push_back(i);
    if (rows.empty()) rows.push_back(n - 1);
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d), lse(d);
    for (auto r : rows) mean += z.row(r);
    mean /= double(rows.size());
    for (Eigen::Index j = 0; j < d; ++j) {
      double acc = 0.0;
      for (auto r : rows) acc += std::exp(z(r, j));
      lse(j) = std::log(acc);
    }
    Tape t;
    const auto zv = t.constant(z);
    EXPECT_LT((t.value(pool_entity(t, zv, rows, "e")) - mean).norm(), 1e-12);
    EXPECT_LT((t.value(pool_entity(t, zv, rows, "e", Pooling::LogSumExp)) - lse).norm(), 1e-12);
  }
  for (Eigen::Index d : {8, 16, 32}) EXPECT_LT(synth::pooling_gradient_error(d, d), 1e-4);
}

TEST(Bilinear, ZeroWeightsGiveBias) {
  ParamStore s{{"b.w", Matrix::Zero(21 * 4, 4)}, {"b.b", Matrix::Constant(1, 21, 0.75)}};
  std::mt19937_64 rng(11);
  Tape t;
  Binder p(t, s, false);
  const auto out = t.value(pair_logits(p, "b", t.constant(randn(3, 4, rng)), all_ordered_pairs(3)));
  EXPECT_EQ(out.rows(), 6);
  EXPECT_TRUE((out.array() == 0.75).all());
}

TEST(Bilinear, MatchesDenseBilinearForm) {
  std::mt19937_64 rng(12);
  const Eigen::Index d = 5, c = 21;
  ParamStore s;
  init_bilinear(s, "b", d, c, 0, rng);
  s["b.w"] = randn(c * d, d, rng);
  s["b.b"] = randn(1, c, rng);
  const Matrix e = randn(4, d, rng);
  const auto pairs = all_ordered_pairs(4);
  Tape t;
  Binder p(t, s, false);
  const auto out = t.value(pair_logits(p, "b", t.constant(e), pairs));
  for (std::size_t k = 0; k < pairs.size(); ++k)
    for (Eigen::Index r = 0; r < c; ++r) {
      double acc = s["b.b"](0, r);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) acc += e(pairs[k].first, i) * s["b.w"](r * d + i, j) * e(pairs[k].second, j);
      EXPECT_NEAR(out(static_cast<Eigen::Index>(k), r), acc, 1e-12);
    }
}

TEST(Bilinear, LowRankEqualsDenseWithProductWeights) {
  std::mt19937_64 rng(13);
  const Eigen::Index d = 6, c = 21;
  const int rank = 2;
  ParamStore lr;
  init_bilinear(lr, "b", d, c, rank, rng);
  lr["b.b"] = randn(1, c, rng);
  ParamStore dense{{"b.b", lr["b.b"]}, {"b.w", Matrix(c * d, d)}};
  for (Eigen::Index r = 0; r < c; ++r)
    dense["b.w"].middleRows(r * d, d) = lr["b.u"].middleCols(r * rank, rank) * lr["b.v"].middleCols(r * rank, rank).transpose();
  const Matrix e = randn(3, d, rng);
  Tape t;
  Binder pl(t, lr, false), pd(t, dense, false);
  const auto a = t.value(pair_logits(pl, "b", t.constant(e), all_ordered_pairs(3), rank));
  const auto b = t.value(pair_logits(pd, "b", t.constant(e), all_ordered_pairs(3), 0));
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bilinear, GradientsAndErrors) {
  for (Eigen::Index d : {8, 16, 32}) EXPECT_LT(synth::bilinear_gradient_error(d, d), 1e-4) << "d=" << d;
  ParamStore s{{"b.w", Matrix::Zero(21 * 4, 4)}, {"b.b", Matrix::Zero(1, 21)}};
  Tape t;
  Binder p(t, s, false);
  EXPECT_THROW(pair_logits(p, "b", t.constant(Matrix::Zero(1, 4)), {}), NoPairs);
  EXPECT_EQ(all_ordered_pairs(3).size(), 6u);
}

TEST(Fusion, EndpointsAndArithmetic) {
  std::mt19937_64 rng(14);
  PairLogits han{randn(6, 21, rng), {}}, kor{randn(6, 21, rng), {}};
  for (auto [s, o] : all_ordered_pairs(3)) {
    han.pairs.emplace_back(std::to_string(s), std::to_string(o));
    kor.pairs.emplace_back(std::to_string(s), std::to_string(o));
  }
  EXPECT_TRUE(bitwise_equal(fuse_logits(han, kor, {1.0}).scores, han.scores));
  EXPECT_TRUE(bitwise_equal(fuse_logits(han, kor, {0.0}).scores, kor.scores));
  PairLogits a{Matrix(1, 2), {{"s", "o"}}}, b{Matrix(1, 2), {{"s", "o"}}};
  a.scores << 2, 0;
  b.scores << 0, 2;
  EXPECT_EQ(fuse_logits(a, b, {0.5}).scores, (Matrix(1, 2) << 1, 1).finished());
  EXPECT_DOUBLE_EQ(default_alpha_for_sl(2), 0.6);
  EXPECT_DOUBLE_EQ(default_alpha_for_sl(4), 0.6);
  EXPECT_DOUBLE_EQ(default_alpha_for_sl(8), 0.6);
  EXPECT_DOUBLE_EQ(default_alpha_for_sl(1), 0.5);
  b.pairs = {{"o", "s"}};
  EXPECT_THROW(fuse_logits(a, b, {0.5}), PairMisalignment);
  EXPECT_THROW(fuse_logits(a, a, {1.5}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Loss

TEST(Loss, UniformLogitsGiveLogC) {
  PairLogits l{Matrix::Constant(6, 21, 0.3), {}};
  for (auto [s, o] : all_ordered_pairs(3)) l.pairs.emplace_back("E" + std::to_string(s), "E" + std::to_string(o));
  EXPECT_NEAR(loss(l, {{"E0", "E1", 0}}), std::log(21.0), 1e-12);
}

TEST(Loss, HugeMarginGoesToZero) {
  PairLogits l{Matrix::Zero(1, 21), {{"a", "b"}}};
  l.scores(0, 3) = 200.0;
  EXPECT_LT(loss(l, {{"a", "b", 3}}), 1e-60);
  // Unlabeled pairs are trained toward no_relation.
  l.scores.setZero();
  l.scores(0, kNoRelation) = 200.0;
  EXPECT_LT(loss(l, {}), 1e-60);
}

TEST(Loss, MatchesLogSoftmaxOracle) {
  std::mt19937_64 rng(15);
  PairLogits l{randn(6, 21, rng, 2.0), {}};
  for (auto [s, o] : all_ordered_pairs(3)) l.pairs.emplace_back("E" + std::to_string(s), "E" + std::to_string(o));
  const std::vector<std::tuple<std::string, std::string, int>> gold = {{"E0", "E2", 4}, {"E2", "E1", 19}};
  double oracle = 0.0;
  for (Eigen::Index i = 0; i < 6; ++i) {
    int y = kNoRelation;
    for (const auto& [s, o, lab] : gold)
      if (l.pairs[static_cast<std::size_t>(i)] == std::pair<std::string, std::string>{s, o}) y = lab;
    const double mx = l.scores.row(i).maxCoeff();
    const double lse = mx + std::log((l.scores.row(i).array() - mx).exp().sum());
    oracle += lse - l.scores(i, y);
  }
  EXPECT_NEAR(loss(l, gold), oracle / 6.0, 1e-12);
  EXPECT_THROW(loss(l, {{"E0", "E9", 1}}), GoldPairMissing);
}

// ---------------------------------------------------------------------------
// Full model

TEST(ReModel, ForwardShapeIsPairsByClasses) {
  const auto model = toy_model(small_config(8));
  const auto in = model.featurize(synth::toy_subtext());
  EXPECT_EQ(in.entities.size(), 3u);
  EXPECT_EQ(in.gold.size(), 2u);
  const auto logits = model.predict_logits(in);
  EXPECT_EQ(logits.scores.rows(), 6);
  EXPECT_EQ(logits.scores.cols(), 21);
  EXPECT_TRUE(logits.scores.allFinite());
  EXPECT_GE(logits.find("E1", "E2"), 0);
}

TEST(ReModel, KoreanOnlyEqualsBilingualWithZeroAlphaAndZeroValues) {
  auto cfg = small_config(8);
  cfg.fusion.alpha = 0.0;
  auto bi = toy_model(cfg);
  randomize(bi.params(), 16);
  bi.params()["cross_kor.wv"].setZero();
  auto kor_cfg = cfg;
  kor_cfg.mode = Mode::KoreanOnly;
  auto mono = toy_model(kor_cfg);
  mono.params() = bi.params();
  const auto in = bi.featurize(synth::toy_subtext());
  EXPECT_TRUE(bitwise_equal(bi.predict_logits(in).scores, mono.predict_logits(in).scores));
}

TEST(ReModel, FusionEndpointsReproduceBranchLogitsBitwise) {
  for (double alpha : {0.0, 1.0}) {
    auto cfg = small_config(8);
    cfg.fusion.alpha = alpha;
    auto model = toy_model(cfg);
    randomize(model.params(), 17);
    const auto in = model.featurize(synth::toy_subtext());
    Tape t;
    Binder p(t, model.params(), false);
    const auto r = model.forward(p, in);
    const auto& branch = alpha == 1.0 ? *r.logits_han : *r.logits_kor;
    EXPECT_TRUE(bitwise_equal(t.value(r.logits), t.value(branch))) << "alpha=" << alpha;
  }
}

TEST(ReModel, MissingHanjaScoresWithKoreanBranchOnly) {
  auto doc = synth::toy_subtext();
  doc.entities[2].mentions_han.clear();
  doc.relations[1].evidence_han.clear();
  auto cfg = small_config(8);
  cfg.fusion.alpha = 0.6;
  auto model = toy_model(cfg);
  randomize(model.params(), 18);
  const auto in = model.featurize(doc);
  Tape t;
  Binder p(t, model.params(), false);
  const auto r = model.forward(p, in);
  const auto& fused = t.value(r.logits);
  const auto& kor = t.value(*r.logits_kor);
  for (std::size_t i = 0; i < in.pairs.size(); ++i) {
    const bool touches_e2 = in.pair_ids[i].first == "E2" || in.pair_ids[i].second == "E2";
    EXPECT_DOUBLE_EQ(r.alpha(static_cast<Eigen::Index>(i)), touches_e2 ? 0.0 : 0.6);
    if (touches_e2) {
      EXPECT_TRUE(bitwise_equal(fused.row(static_cast<Eigen::Index>(i)), kor.row(static_cast<Eigen::Index>(i))));
    }
  }
  // The Hanja-only mode still runs, with a zero vector for the unannotated entity.
  auto han_cfg = cfg;
  han_cfg.mode = Mode::HanjaOnly;
  auto han = toy_model(han_cfg);
  EXPECT_TRUE(han.predict_logits(han.featurize(doc)).scores.allFinite());
}

TEST(ReModel, EndToEndGradientMatchesCentralDifferences) {
  auto cfg = small_config(16);
  auto model = toy_model(cfg);
  randomize(model.params(), 19);
  const auto in = model.featurize(synth::toy_subtext());
  const auto targets = pair_targets(in.pair_ids, in.gold);
  const Objective f = [&](Binder& p) { return ad::cross_entropy(p.tape(), model.forward(p, in).logits, targets); };
  const auto report = check_gradients(model.params(), f, {}, 1e-5, 12, 20);
  for (const auto& e : report) EXPECT_LT(e.relative_error, 1e-4) << e.name;
}

TEST(ReModel, PermutingEntitiesPermutesPairRows) {
  auto model = toy_model(small_config(8));
  randomize(model.params(), 21);
  auto doc = synth::toy_subtext();
  const auto a = model.predict_logits(model.featurize(doc));
  std::swap(doc.entities[0], doc.entities[2]);
  std::swap(doc.entities[1], doc.entities[2]);
  const auto b = model.predict_logits(model.featurize(doc));
  ASSERT_EQ(a.pairs.size(), b.pairs.size());
  EXPECT_NE(a.pairs, b.pairs);
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    const auto j = b.find(a.pairs[i].first, a.pairs[i].second);
    ASSERT_GE(j, 0);
    EXPECT_LT((a.scores.row(static_cast<Eigen::Index>(i)) - b.scores.row(j)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ReModel, SameSeedSameParametersAndOutputs) {
  const auto a = toy_model(small_config(8));
  const auto b = toy_model(small_config(8));
  ASSERT_EQ(a.params().size(), b.params().size());
  for (const auto& [name, m] : a.params()) EXPECT_TRUE(bitwise_equal(m, b.params().at(name))) << name;
  const auto in = a.featurize(synth::toy_subtext());
  EXPECT_TRUE(bitwise_equal(a.predict_logits(in).scores, b.predict_logits(in).scores));
  auto cfg = small_config(8);
  cfg.seed = 8;
  EXPECT_FALSE(bitwise_equal(toy_model(cfg).params().at("bil_kor.w"), a.params().at("bil_kor.w")));
}

TEST(ReModel, InitializationFollowsConvention) {
  const auto m = toy_model(small_config(32));
  for (const auto& [name, w] : m.params()) {
    if (name.ends_with(".b") || name.ends_with(".b1") || name.ends_with(".b2")) {
      EXPECT_TRUE(w.isZero()) << name;
    } else if (name.ends_with(".g")) {
      EXPECT_TRUE((w.array() == 1.0).all()) << name;
    } else if (name.ends_with(".pos_emb")) {
      // Independent evaluation of the sinusoid table at a few cells.
      EXPECT_NEAR(w(0, 0), 0.0, 1e-15) << name;
      EXPECT_NEAR(w(0, 1), 0.1, 1e-15) << name;
      EXPECT_NEAR(w(3, 0), 0.1 * std::sin(3.0), 1e-15) << name;
      EXPECT_NEAR(w(5, 3), 0.1 * std::cos(5.0 * std::pow(10000.0, -2.0 / double(w.cols()))), 1e-15) << name;
    } else if (w.size() > 200) {
      const double mean = w.mean();
      const double sd = std::sqrt((w.array() - mean).square().mean());
      EXPECT_NEAR(sd, kInitStddev, 0.005) << name;
    }
  }
}

TEST(ReModel, ArgmaxIsInvariantToRowShifts) {
  std::mt19937_64 rng(22);
  Matrix l = randn(10, 21, rng);
  Matrix shifted = l;
  for (Eigen::Index i = 0; i < l.rows(); ++i) shifted.row(i).array() += double(i) * 3.7 - 11.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    Eigen::Index a, b;
    l.row(i).maxCoeff(&a);
    shifted.row(i).maxCoeff(&b);
    EXPECT_EQ(a, b);
  }
}

TEST(ReModel, TruncationDropsEntitiesAndCountsThem) {
  auto doc = synth::toy_subtext();
  // Push E2 past the token budget with a long first sentence.
  std::string longer;
  for (int i = 0; i < 40; ++i) longer += "말 ";
  doc.sentences_kor[0] = longer + doc.sentences_kor[0];
  for (auto* e : {&doc.entities[0], &doc.entities[1]}) {
    e->mentions_kor[0].char_start += 80;
    e->mentions_kor[0].char_end += 80;
  }
  ASSERT_TRUE(validate_document(doc).empty());
  auto cfg = small_config(8);
  cfg.kor.max_tokens = 16;
  const auto model = toy_model(cfg);
  const auto in = model.featurize(doc);
  EXPECT_EQ(in.kor_ids.size(), 16u);
  EXPECT_EQ(in.truncated_entities, 3u);
  EXPECT_EQ(in.dropped_gold, 2u);
  EXPECT_THROW(model.predict_logits(in), NoPairs);
}
