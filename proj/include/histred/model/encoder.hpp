#ifndef HISTRED_MODEL_ENCODER_HPP
#define HISTRED_MODEL_ENCODER_HPP

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histred/model/attention.hpp"

namespace histred::model {

class SequenceTooLong : public std::length_error {
 public:
  SequenceTooLong(std::size_t len, std::size_t max)
      : std::length_error("SequenceTooLong: " + std::to_string(len) + " tokens > max_tokens " + std::to_string(max)) {}
};

/// Shape of one contextual encoder. Full size is d=768, 12 layers, 12 heads, ffn 3072, 512 tokens.
struct EncoderSpec {
  int hidden_dim = 32;
  int num_layers = 2;
  int num_heads = 4;
  int ffn_dim = 64;
  int max_tokens = 128;
  int vocab_size = 1;

  void validate() const {
    if (hidden_dim <= 0 || num_layers <= 0 || num_heads <= 0 || ffn_dim <= 0 || vocab_size <= 0)
      throw std::invalid_argument("EncoderSpec: sizes must be positive");
    if (hidden_dim % num_heads != 0) throw std::invalid_argument("EncoderSpec: hidden_dim not divisible by num_heads");
    if (max_tokens < 8) throw std::invalid_argument("EncoderSpec: max_tokens must be >= 8");
  }
};

inline nlohmann::json to_json(const EncoderSpec& s) {
  return {{"hidden_dim", s.hidden_dim}, {"num_layers", s.num_layers}, {"num_heads", s.num_heads},
          {"ffn_dim", s.ffn_dim},       {"max_tokens", s.max_tokens}, {"vocab_size", s.vocab_size}};
}

inline EncoderSpec encoder_spec_from_json(const nlohmann::json& j) {
  EncoderSpec s;
  s.hidden_dim = j.value("hidden_dim", s.hidden_dim);
  s.num_layers = j.value("num_layers", s.num_layers);
  s.num_heads = j.value("num_heads", s.num_heads);
  s.ffn_dim = j.value("ffn_dim", s.ffn_dim);
  s.max_tokens = j.value("max_tokens", s.max_tokens);
  s.vocab_size = j.value("vocab_size", s.vocab_size);
  return s;
}

inline constexpr double kPositionScale = 0.1;

/// Learnable position table seeded with scaled sinusoids so nearby offsets start out similar.
inline Matrix sinusoid_positions(Eigen::Index len, Eigen::Index d, double scale = kPositionScale) {
  Matrix m(len, d);
  for (Eigen::Index i = 0; i < len; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double f = std::pow(10000.0, -static_cast<double>(2 * (j / 2)) / static_cast<double>(d));
      m(i, j) = scale * (j % 2 ? std::cos(static_cast<double>(i) * f) : std::sin(static_cast<double>(i) * f));
    }
  return m;
}

inline void init_encoder(ParamStore& store, const std::string& prefix, const EncoderSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  const Eigen::Index d = spec.hidden_dim;
  store[prefix + ".tok_emb"] = normal_matrix(spec.vocab_size, d, kInitStddev, rng);
  store[prefix + ".pos_emb"] = sinusoid_positions(spec.max_tokens, d);
  store[prefix + ".emb_ln.g"] = Matrix::Ones(1, d);
  store[prefix + ".emb_ln.b"] = Matrix::Zero(1, d);
  for (int l = 0; l < spec.num_layers; ++l) {
    const auto lp = prefix + ".l" + std::to_string(l);
    init_attention(store, lp + ".attn", d, rng);
    store[lp + ".ln1.g"] = Matrix::Ones(1, d);
    store[lp + ".ln1.b"] = Matrix::Zero(1, d);
    store[lp + ".ffn.w1"] = normal_matrix(d, spec.ffn_dim, kInitStddev, rng);
    store[lp + ".ffn.b1"] = Matrix::Zero(1, spec.ffn_dim);
    store[lp + ".ffn.w2"] = normal_matrix(spec.ffn_dim, d, kInitStddev, rng);
    store[lp + ".ffn.b2"] = Matrix::Zero(1, d);
    store[lp + ".ln2.g"] = Matrix::Ones(1, d);
    store[lp + ".ln2.b"] = Matrix::Zero(1, d);
  }
}

/// Post-norm transformer encoder: token + position embedding, then per layer
/// x = LN(x + SelfAttn(x)); x = LN(x + FFN(x)). Returns H, len x d.
inline Var encode(Binder& p, const std::string& prefix, const EncoderSpec& spec, const std::vector<int>& token_ids) {
  if (token_ids.empty()) throw std::invalid_argument("encode: empty token sequence");
  if (token_ids.size() > static_cast<std::size_t>(spec.max_tokens))
    throw SequenceTooLong(token_ids.size(), static_cast<std::size_t>(spec.max_tokens));
  Tape& t = p.tape();
  std::vector<Eigen::Index> ids(token_ids.begin(), token_ids.end());
  std::vector<Eigen::Index> positions(token_ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<Eigen::Index>(i);
  for (auto id : ids)
    if (id < 0 || id >= spec.vocab_size) throw std::out_of_range("encode: token id outside vocabulary");
  Var x = ad::add(t, ad::gather_rows(t, p(prefix + ".tok_emb"), std::move(ids)),
                  ad::gather_rows(t, p(prefix + ".pos_emb"), std::move(positions)));
  x = ad::layer_norm_rows(t, x, p(prefix + ".emb_ln.g"), p(prefix + ".emb_ln.b"));
  for (int l = 0; l < spec.num_layers; ++l) {
    const auto lp = prefix + ".l" + std::to_string(l);
    const auto attn = multi_head_attention(p, lp + ".attn", x, x, spec.num_heads);
    x = ad::layer_norm_rows(t, ad::add(t, x, attn.output), p(lp + ".ln1.g"), p(lp + ".ln1.b"));
    Var h = ad::gelu(t, ad::add_row(t, ad::matmul(t, x, p(lp + ".ffn.w1")), p(lp + ".ffn.b1")));
    h = ad::add_row(t, ad::matmul(t, h, p(lp + ".ffn.w2")), p(lp + ".ffn.b2"));
    x = ad::layer_norm_rows(t, ad::add(t, x, h), p(lp + ".ln2.g"), p(lp + ".ln2.b"));
  }
  return x;
}

}  // namespace histred::model

#endif  // HISTRED_MODEL_ENCODER_HPP
