#ifndef HISTRED_MODEL_ATTENTION_HPP
#define HISTRED_MODEL_ATTENTION_HPP

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "histred/model/params.hpp"

namespace histred::model {

struct AttentionResult {
  Var output;                   // after output projection, n x d
  Var pre_projection;           // concatenated heads, n x d
  std::vector<Var> attention;   // one n x m probability matrix per head
};

/// Scaled dot-product multi-head attention. Queries come from `queries`, keys and values from `memory`.
/// Parameters <prefix>.wq/.wk/.wv/.wo are d x d, applied on the right (row convention).
inline AttentionResult multi_head_attention(Binder& p, const std::string& prefix, Var queries, Var memory,
                                            int num_heads) {
  Tape& t = p.tape();
  const auto d = t.value(queries).cols();
  if (t.value(memory).cols() != d) throw ad::ShapeError("attention width mismatch");
  if (num_heads <= 0 || d % num_heads != 0) throw ad::ShapeError("num_heads must divide d");
  const Var wq = p(prefix + ".wq");
  if (t.value(wq).rows() != d) throw ad::ShapeError("attention parameters do not match input width");
  const Var q = ad::matmul(t, queries, wq);
  const Var k = ad::matmul(t, memory, p(prefix + ".wk"));
  const Var v = ad::matmul(t, memory, p(prefix + ".wv"));
  const auto dh = d / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  AttentionResult r;
  std::vector<Var> heads;
  for (int h = 0; h < num_heads; ++h) {
    const Var qh = ad::slice_cols(t, q, h * dh, dh);
    const Var kh = ad::slice_cols(t, k, h * dh, dh);
    const Var vh = ad::slice_cols(t, v, h * dh, dh);
    const Var probs = ad::softmax_rows(t, ad::scale(t, ad::matmul_nt(t, qh, kh), scale));
    r.attention.push_back(probs);
    heads.push_back(ad::matmul(t, probs, vh));
  }
  r.pre_projection = num_heads == 1 ? heads[0] : ad::concat_cols(t, heads);
  r.output = ad::matmul(t, r.pre_projection, p(prefix + ".wo"));
  return r;
}

inline void init_attention(ParamStore& store, const std::string& prefix, Eigen::Index d, std::mt19937_64& rng) {
  for (const char* w : {".wq", ".wk", ".wv", ".wo"}) store[prefix + w] = normal_matrix(d, d, kInitStddev, rng);
}

}  // namespace histred::model

#endif  // HISTRED_MODEL_ATTENTION_HPP
