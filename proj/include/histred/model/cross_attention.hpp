#ifndef HISTRED_MODEL_CROSS_ATTENTION_HPP
#define HISTRED_MODEL_CROSS_ATTENTION_HPP

#include <random>
#include <string>

#include "histred/model/attention.hpp"

namespace histred::model {

/// Full-size configs use 8 heads; desk configs usually use 4.
inline constexpr int kDefaultCrossHeads = 8;

/// One cross-attention direction: queries from one language, keys/values from the other.
/// Parameters: <prefix>.wq/.wk/.wv/.wo (d x d, no biases).
inline AttentionResult cross_attend(Binder& p, const std::string& prefix, Var queries, Var memory, int num_heads) {
  return multi_head_attention(p, prefix, queries, memory, num_heads);
}

/// Z = (H + H') W_res + b_res. Parameters <prefix>.w (d x d) and <prefix>.b (1 x d).
inline Var residual_project(Binder& p, const std::string& prefix, Var hidden, Var attended) {
  Tape& t = p.tape();
  return ad::add_row(t, ad::matmul(t, ad::add(t, hidden, attended), p(prefix + ".w")), p(prefix + ".b"));
}

/// The residual projection without a cross-attended term, used by monolingual branches: Z = H W_res + b_res.
inline Var project(Binder& p, const std::string& prefix, Var hidden) {
  Tape& t = p.tape();
  return ad::add_row(t, ad::matmul(t, hidden, p(prefix + ".w")), p(prefix + ".b"));
}

inline void init_residual(ParamStore& store, const std::string& prefix, Eigen::Index d, std::mt19937_64& rng) {
  store[prefix + ".w"] = normal_matrix(d, d, kInitStddev, rng);
  store[prefix + ".b"] = Matrix::Zero(1, d);
}

}  // namespace histred::model

#endif  // HISTRED_MODEL_CROSS_ATTENTION_HPP
