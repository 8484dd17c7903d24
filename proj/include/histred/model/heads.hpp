#ifndef HISTRED_MODEL_HEADS_HPP
#define HISTRED_MODEL_HEADS_HPP

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "histred/model/params.hpp"
#include "histred/taxonomy.hpp"

namespace histred::model {

class EntityTruncated : public std::runtime_error {
 public:
  explicit EntityTruncated(const std::string& id)
      : std::runtime_error("EntityTruncated: entity " + id + " has no surviving tokens") {}
};

class NoPairs : public std::invalid_argument {
 public:
  NoPairs() : std::invalid_argument("NoPairs: need at least two entities") {}
};

class PairMisalignment : public std::invalid_argument {
 public:
  PairMisalignment() : std::invalid_argument("PairMisalignment: branch pair tables differ") {}
};

class GoldPairMissing : public std::invalid_argument {
 public:
  GoldPairMissing(const std::string& s, const std::string& o)
      : std::invalid_argument("GoldPairMissing: (" + s + ", " + o + ") not in pair table") {}
};

enum class Pooling { Mean, LogSumExp };

inline std::string_view to_string(Pooling p) { return p == Pooling::Mean ? "mean" : "logsumexp"; }
inline Pooling parse_pooling(std::string_view s) {
  if (s == "mean") return Pooling::Mean;
  if (s == "logsumexp") return Pooling::LogSumExp;
  throw std::invalid_argument("unknown pooling: " + std::string(s));
}

/// Cluster-level entity vector: pools every token row of every mention of the entity. Returns 1 x d.
inline Var pool_entity(Tape& t, Var z, const std::vector<Eigen::Index>& token_rows, const std::string& entity_id,
                       Pooling pooling = Pooling::Mean) {
  if (token_rows.empty()) throw EntityTruncated(entity_id);
  return pooling == Pooling::Mean ? ad::mean_rows(t, z, token_rows) : ad::logsumexp_rows(t, z, token_rows);
}

/// Scores with row -> (subject_id, object_id).
struct PairLogits {
  Matrix scores;  // k x c
  std::vector<std::pair<std::string, std::string>> pairs;

  Eigen::Index find(const std::string& s, const std::string& o) const {
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (pairs[i].first == s && pairs[i].second == o) return static_cast<Eigen::Index>(i);
    return -1;
  }
};

/// Every ordered pair of distinct entity positions.
inline std::vector<std::pair<int, int>> all_ordered_pairs(int num_entities) {
  std::vector<std::pair<int, int>> out;
  for (int h = 0; h < num_entities; ++h)
    for (int t = 0; t < num_entities; ++t)
      if (h != t) out.emplace_back(h, t);
  return out;
}

/// Bilinear relation classifier parameters: <prefix>.w stacks c matrices of d x d ((c*d) x d) and
/// <prefix>.b is 1 x c. With rank > 0 the matrices are factored as U_r V_r^T: <prefix>.u and <prefix>.v
/// are d x (c*rank).
inline void init_bilinear(ParamStore& store, const std::string& prefix, Eigen::Index d, Eigen::Index classes,
                          int rank, std::mt19937_64& rng) {
  if (rank > 0) {
    store[prefix + ".u"] = normal_matrix(d, classes * rank, kInitStddev * 5.0, rng);
    store[prefix + ".v"] = normal_matrix(d, classes * rank, kInitStddev * 5.0, rng);
  } else {
    store[prefix + ".w"] = normal_matrix(classes * d, d, kInitStddev, rng);
  }
  store[prefix + ".b"] = Matrix::Zero(1, classes);
}

/// Scores every candidate pair against every class: score_r = e_h W_r e_t^T + b_r. `entities` is num_entities x d.
inline Var pair_logits(Binder& p, const std::string& prefix, Var entities, const std::vector<std::pair<int, int>>& pairs,
                       int rank = 0) {
  Tape& t = p.tape();
  if (t.value(entities).rows() < 2) throw NoPairs();
  if (pairs.empty()) throw NoPairs();
  std::vector<Eigen::Index> hi, ti;
  for (auto [h, tt] : pairs) {
    hi.push_back(h);
    ti.push_back(tt);
  }
  const Var heads = ad::gather_rows(t, entities, std::move(hi));
  const Var tails = ad::gather_rows(t, entities, std::move(ti));
  if (rank > 0) {
    const Var hu = ad::matmul(t, heads, p(prefix + ".u"));
    const Var tv = ad::matmul(t, tails, p(prefix + ".v"));
    return ad::add_row(t, ad::sum_col_groups(t, ad::mul(t, hu, tv), rank), p(prefix + ".b"));
  }
  return ad::bilinear(t, heads, tails, p(prefix + ".w"), p(prefix + ".b"));
}

struct FusionConfig {
  double alpha = 0.5;  // 0.6 for SL >= 2 runs

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("FusionConfig: alpha must be in [0,1]");
  }
};

/// The reference alpha for a given sequence level.
inline double default_alpha_for_sl(std::size_t sl) { return sl >= 2 ? 0.6 : 0.5; }

/// alpha * han + (1 - alpha) * kor, elementwise. Pair tables must be identical.
inline PairLogits fuse_logits(const PairLogits& han, const PairLogits& kor, const FusionConfig& cfg) {
  cfg.validate();
  if (han.pairs != kor.pairs) throw PairMisalignment();
  if (han.scores.rows() != kor.scores.rows() || han.scores.cols() != kor.scores.cols()) throw ad::ShapeError("fuse_logits");
  return {(cfg.alpha * han.scores.array() + (1.0 - cfg.alpha) * kor.scores.array()).matrix(), han.pairs};
}

/// Class targets per row: the gold label of the pair, or no_relation.
inline std::vector<int> pair_targets(const std::vector<std::pair<std::string, std::string>>& pairs,
                                     const std::vector<std::tuple<std::string, std::string, int>>& gold) {
  std::vector<int> y(pairs.size(), kNoRelation);
  std::map<std::pair<std::string, std::string>, std::size_t> row;
  for (std::size_t i = 0; i < pairs.size(); ++i) row.emplace(pairs[i], i);
  for (const auto& [s, o, label] : gold) {
    auto it = row.find({s, o});
    if (it == row.end()) throw GoldPairMissing(s, o);
    y[it->second] = label;
  }
  return y;
}

/// Mean softmax cross-entropy over all candidate pairs.
inline double loss(const PairLogits& logits, const std::vector<std::tuple<std::string, std::string, int>>& gold) {
  Tape t;
  const Var l = t.constant(logits.scores);
  return t.value(ad::cross_entropy(t, l, pair_targets(logits.pairs, gold)))(0, 0);
}

}  // namespace histred::model

#endif  // HISTRED_MODEL_HEADS_HPP
