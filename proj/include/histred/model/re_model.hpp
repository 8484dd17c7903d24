#ifndef HISTRED_MODEL_RE_MODEL_HPP
#define HISTRED_MODEL_RE_MODEL_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "histred/corpus.hpp"
#include "histred/model/cross_attention.hpp"
#include "histred/model/encoder.hpp"
#include "histred/model/heads.hpp"
#include "histred/tokenizer.hpp"

namespace histred::model {

enum class Mode { Bilingual, KoreanOnly, HanjaOnly };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Bilingual: return "bilingual";
    case Mode::KoreanOnly: return "kor";
    case Mode::HanjaOnly: return "han";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "bilingual") return Mode::Bilingual;
  if (s == "kor") return Mode::KoreanOnly;
  if (s == "han") return Mode::HanjaOnly;
  throw std::invalid_argument("unknown model mode: " + std::string(s));
}

inline constexpr std::string_view kAllOrderedPairs = "all-ordered-pairs";

struct ModelConfig {
  EncoderSpec kor;
  EncoderSpec han;
  FusionConfig fusion;
  int cross_heads = 4;
  Pooling pooling = Pooling::Mean;
  Mode mode = Mode::Bilingual;
  std::string candidate_policy{kAllOrderedPairs};
  int bilinear_rank = 0;  // 0 = full d x d per relation
  std::uint64_t seed = 0;
  std::string tokenizer_kor = "whitespace";
  std::string tokenizer_han = "char";
  std::size_t vocab_max_size = 20000;
  std::size_t vocab_min_count = 1;

  void validate() const {
    kor.validate();
    han.validate();
    fusion.validate();
    if (kor.hidden_dim != han.hidden_dim) throw std::invalid_argument("ModelConfig: encoders must share hidden_dim");
    if (cross_heads <= 0 || kor.hidden_dim % cross_heads != 0)
      throw std::invalid_argument("ModelConfig: cross_heads must divide hidden_dim");
    if (candidate_policy != kAllOrderedPairs) throw std::invalid_argument("unsupported candidate policy: " + candidate_policy);
    if (bilinear_rank < 0) throw std::invalid_argument("ModelConfig: bilinear_rank must be >= 0");
  }
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"encoder_kor", to_json(c.kor)},
          {"encoder_han", to_json(c.han)},
          {"alpha", c.fusion.alpha},
          {"cross_heads", c.cross_heads},
          {"pooling", std::string(to_string(c.pooling))},
          {"mode", std::string(to_string(c.mode))},
          {"candidate_policy", c.candidate_policy},
          {"bilinear_rank", c.bilinear_rank},
          {"seed", c.seed},
          {"tokenizer_kor", c.tokenizer_kor},
          {"tokenizer_han", c.tokenizer_han},
          {"vocab_max_size", c.vocab_max_size},
          {"vocab_min_count", c.vocab_min_count}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  if (j.contains("encoder_kor")) c.kor = encoder_spec_from_json(j.at("encoder_kor"));
  if (j.contains("encoder_han")) c.han = encoder_spec_from_json(j.at("encoder_han"));
  c.fusion.alpha = j.value("alpha", c.fusion.alpha);
  c.cross_heads = j.value("cross_heads", c.cross_heads);
  c.pooling = parse_pooling(j.value("pooling", std::string("mean")));
  c.mode = parse_mode(j.value("mode", std::string("bilingual")));
  c.candidate_policy = j.value("candidate_policy", std::string(kAllOrderedPairs));
  c.bilinear_rank = j.value("bilinear_rank", c.bilinear_rank);
  c.seed = j.value("seed", c.seed);
  c.tokenizer_kor = j.value("tokenizer_kor", c.tokenizer_kor);
  c.tokenizer_han = j.value("tokenizer_han", c.tokenizer_han);
  c.vocab_max_size = j.value("vocab_max_size", c.vocab_max_size);
  c.vocab_min_count = j.value("vocab_min_count", c.vocab_min_count);
  return c;
}

/// Token inventory; id 0 is the unknown token.
class Vocab {
 public:
  static constexpr std::string_view kUnk = "[UNK]";

  Vocab() : tokens_{std::string(kUnk)} { index_.emplace(tokens_[0], 0); }
  explicit Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.empty() || tokens_[0] != kUnk) tokens_.insert(tokens_.begin(), std::string(kUnk));
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<int>(i));
  }

  int id(const std::string& tok) const {
    auto it = index_.find(tok);
    return it == index_.end() ? 0 : it->second;
  }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Most frequent tokens first (ties by token text), capped at max_size entries including [UNK].
  static Vocab build(const std::vector<Document>& docs, Language lang, const TokenizerAdapter& tok,
                     std::size_t max_size, std::size_t min_count = 1) {
    std::map<std::string, std::size_t> counts;
    for (const auto& d : docs)
      for (const auto& s : d.sentences(lang))
        for (const auto& t : checked_tokenize(tok, s)) ++counts[t.text];
    std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out{std::string(kUnk)};
    for (const auto& [tok_text, n] : items) {
      if (out.size() >= max_size) break;
      if (n < min_count || tok_text == kUnk) continue;
      out.push_back(tok_text);
    }
    return Vocab(std::move(out));
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct EntitySlot {
  std::string id;
  std::vector<Eigen::Index> kor_rows;
  std::vector<Eigen::Index> han_rows;
};

/// Everything forward() needs for one subtext.
struct ModelInput {
  std::string doc_id;
  std::vector<int> kor_ids;
  std::vector<int> han_ids;
  std::vector<EntitySlot> entities;  // entities with at least one surviving Korean token
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::pair<std::string, std::string>> pair_ids;
  std::vector<std::tuple<std::string, std::string, int>> gold;  // gold relations whose pair survived
  std::size_t truncated_entities = 0;
  std::size_t dropped_gold = 0;
  std::size_t duplicate_gold = 0;
};

namespace model_detail {

struct TokenizedText {
  std::vector<int> ids;
  // per sentence: (char_start, char_end, row) of surviving tokens
  std::vector<std::vector<std::tuple<std::size_t, std::size_t, Eigen::Index>>> spans;
};

inline TokenizedText tokenize_text(const std::vector<std::string>& sents, const TokenizerAdapter& tok,
                                   const Vocab& vocab, std::size_t max_tokens) {
  TokenizedText out;
  out.spans.resize(sents.size());
  for (std::size_t s = 0; s < sents.size(); ++s) {
    for (const auto& t : checked_tokenize(tok, sents[s])) {
      if (out.ids.size() >= max_tokens) return out;
      out.spans[s].emplace_back(t.char_start, t.char_end, static_cast<Eigen::Index>(out.ids.size()));
      out.ids.push_back(vocab.id(t.text));
    }
  }
  return out;
}

inline std::vector<Eigen::Index> mention_rows(const std::vector<Mention>& ms, const TokenizedText& text) {
  std::vector<Eigen::Index> rows;
  for (const auto& m : ms) {
    if (m.sentence_index >= text.spans.size()) continue;
    for (const auto& [cs, ce, row] : text.spans[m.sentence_index])
      if (cs < m.char_end && m.char_start < ce) rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

}  // namespace model_detail

struct ForwardResult {
  Var logits;                 // k x c, fused (or the single branch in monolingual modes)
  std::optional<Var> logits_kor;
  std::optional<Var> logits_han;
  Eigen::VectorXd alpha;      // per-row fusion weight actually applied
  std::vector<AttentionResult> cross;  // [han<-kor, kor<-han] in bilingual mode
};

/// The bilingual relation extractor: two encoders, two cross-attention directions with residual
/// projections, cluster pooling, per-language bilinear heads and alpha-weighted fusion.
class ReModel {
 public:
  ReModel(ModelConfig cfg, Vocab vocab_kor, Vocab vocab_han)
      : cfg_(std::move(cfg)), vocab_kor_(std::move(vocab_kor)), vocab_han_(std::move(vocab_han)) {
    cfg_.kor.vocab_size = static_cast<int>(vocab_kor_.size());
    cfg_.han.vocab_size = static_cast<int>(vocab_han_.size());
    cfg_.validate();
    tok_kor_ = make_tokenizer(cfg_.tokenizer_kor);
    tok_han_ = make_tokenizer(cfg_.tokenizer_han);
    init_parameters();
  }

  /// Builds vocabularies from `train` and initializes parameters from cfg.seed.
  static ReModel for_corpus(const ModelConfig& cfg, const std::vector<Document>& train) {
    const auto tk = make_tokenizer(cfg.tokenizer_kor);
    const auto th = make_tokenizer(cfg.tokenizer_han);
    return ReModel(cfg, Vocab::build(train, Language::Kor, tk, cfg.vocab_max_size, cfg.vocab_min_count),
                   Vocab::build(train, Language::Han, th, cfg.vocab_max_size, cfg.vocab_min_count));
  }

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& mutable_config() { return cfg_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }
  const Vocab& vocab_kor() const { return vocab_kor_; }
  const Vocab& vocab_han() const { return vocab_han_; }

  ModelInput featurize(const Document& doc) const {
    using namespace model_detail;
    ModelInput in;
    in.doc_id = doc.doc_id;
    const auto kor = tokenize_text(doc.sentences_kor, tok_kor_, vocab_kor_, static_cast<std::size_t>(cfg_.kor.max_tokens));
    const auto han = tokenize_text(doc.sentences_han, tok_han_, vocab_han_, static_cast<std::size_t>(cfg_.han.max_tokens));
    in.kor_ids = kor.ids;
    in.han_ids = han.ids;
    if (in.kor_ids.empty()) in.kor_ids.push_back(0);
    if (in.han_ids.empty()) in.han_ids.push_back(0);
    std::map<std::string, int> slot;
    for (const auto& e : doc.entities) {
      auto kr = mention_rows(e.mentions_kor, kor);
      if (kr.empty()) {
        ++in.truncated_entities;
        continue;
      }
      slot.emplace(e.entity_id, static_cast<int>(in.entities.size()));
      in.entities.push_back({e.entity_id, std::move(kr), mention_rows(e.mentions_han, han)});
    }
    in.pairs = all_ordered_pairs(static_cast<int>(in.entities.size()));
    for (auto [h, t] : in.pairs) in.pair_ids.emplace_back(in.entities[h].id, in.entities[t].id);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : doc.relations) {
      if (!slot.contains(r.subject_id) || !slot.contains(r.object_id) || r.subject_id == r.object_id) {
        ++in.dropped_gold;
        continue;
      }
      if (!seen.insert({r.subject_id, r.object_id}).second) {
        ++in.duplicate_gold;
        continue;
      }
      in.gold.emplace_back(r.subject_id, r.object_id, static_cast<int>(r.label));
    }
    return in;
  }

  /// Builds the forward graph on binder's tape. Requires at least two entities.
  ForwardResult forward(Binder& p, const ModelInput& in) const {
    Tape& t = p.tape();
    if (in.entities.size() < 2) throw NoPairs();
    const int rank = cfg_.bilinear_rank;
    const Eigen::Index d = cfg_.kor.hidden_dim;
    ForwardResult r;

    auto pool_all = [&](Var z, bool hanja) {
      std::vector<Var> rows;
      for (const auto& e : in.entities) {
        const auto& tok_rows = hanja ? e.han_rows : e.kor_rows;
        if (hanja && tok_rows.empty())
          rows.push_back(t.constant(Matrix::Zero(1, d)));
        else
          rows.push_back(pool_entity(t, z, tok_rows, e.id, cfg_.pooling));
      }
      return ad::stack_rows(t, rows);
    };

    if (cfg_.mode == Mode::KoreanOnly) {
      const Var h = encode(p, "enc_kor", cfg_.kor, in.kor_ids);
      const Var z = project(p, "res_kor", h);
      r.logits = pair_logits(p, "bil_kor", pool_all(z, false), in.pairs, rank);
      r.logits_kor = r.logits;
      r.alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(in.pairs.size()));
      return r;
    }
    if (cfg_.mode == Mode::HanjaOnly) {
      const Var h = encode(p, "enc_han", cfg_.han, in.han_ids);
      const Var z = project(p, "res_han", h);
      r.logits = pair_logits(p, "bil_han", pool_all(z, true), in.pairs, rank);
      r.logits_han = r.logits;
      r.alpha = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(in.pairs.size()));
      return r;
    }

    const Var h_kor = encode(p, "enc_kor", cfg_.kor, in.kor_ids);
    const Var h_han = encode(p, "enc_han", cfg_.han, in.han_ids);
    r.cross.push_back(cross_attend(p, "cross_han", h_han, h_kor, cfg_.cross_heads));
    r.cross.push_back(cross_attend(p, "cross_kor", h_kor, h_han, cfg_.cross_heads));
    const Var z_han = residual_project(p, "res_han", h_han, r.cross[0].output);
    const Var z_kor = residual_project(p, "res_kor", h_kor, r.cross[1].output);
    const Var lk = pair_logits(p, "bil_kor", pool_all(z_kor, false), in.pairs, rank);
    const Var lh = pair_logits(p, "bil_han", pool_all(z_han, true), in.pairs, rank);
    r.logits_kor = lk;
    r.logits_han = lh;
    // Pairs with an entity lacking Hanja tokens are scored by the Korean branch alone.
    r.alpha.resize(static_cast<Eigen::Index>(in.pairs.size()));
    for (std::size_t i = 0; i < in.pairs.size(); ++i) {
      const bool has_han = !in.entities[in.pairs[i].first].han_rows.empty() && !in.entities[in.pairs[i].second].han_rows.empty();
      r.alpha(static_cast<Eigen::Index>(i)) = has_han ? cfg_.fusion.alpha : 0.0;
    }
    r.logits = ad::mix_rows(t, lh, lk, r.alpha);
    return r;
  }

  /// Inference-only logits for one subtext.
  PairLogits predict_logits(const ModelInput& in) const {
    Tape t;
    Binder p(t, params_, false);
    const auto r = forward(p, in);
    return {t.value(r.logits), in.pair_ids};
  }

 private:
  void init_parameters() {
    std::mt19937_64 rng(cfg_.seed);
    const Eigen::Index d = cfg_.kor.hidden_dim;
    const Eigen::Index c = static_cast<Eigen::Index>(kNumRelationClasses);
    init_encoder(params_, "enc_kor", cfg_.kor, rng);
    init_encoder(params_, "enc_han", cfg_.han, rng);
    init_attention(params_, "cross_han", d, rng);
    init_attention(params_, "cross_kor", d, rng);
    init_residual(params_, "res_han", d, rng);
    init_residual(params_, "res_kor", d, rng);
    init_bilinear(params_, "bil_han", d, c, cfg_.bilinear_rank, rng);
    init_bilinear(params_, "bil_kor", d, c, cfg_.bilinear_rank, rng);
  }

  ModelConfig cfg_;
  Vocab vocab_kor_;
  Vocab vocab_han_;
  TokenizerAdapter tok_kor_;
  TokenizerAdapter tok_han_;
  ParamStore params_;
};

}  // namespace histred::model

#endif  // HISTRED_MODEL_RE_MODEL_HPP
