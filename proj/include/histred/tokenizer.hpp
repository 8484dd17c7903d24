#ifndef HISTRED_TOKENIZER_HPP
#define HISTRED_TOKENIZER_HPP

#include <cstddef>
#include <fstream>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "histred/utf8.hpp"

namespace histred {

struct Token {
  std::string text;
  std::size_t char_start = 0;  // code points, half-open
  std::size_t char_end = 0;
};

class BadTokenizer : public std::runtime_error {
 public:
  explicit BadTokenizer(const std::string& what) : std::runtime_error("BadTokenizer: " + what) {}
};

/// A named sentence tokenizer. Offsets must be non-decreasing and inside the sentence.
struct TokenizerAdapter {
  std::string name;
  std::function<std::vector<Token>(std::string_view)> tokenize;
};

/// Throws BadTokenizer if the adapter's offsets break the contract on `sentence`.
inline std::vector<Token> checked_tokenize(const TokenizerAdapter& tok, std::string_view sentence) {
  auto tokens = tok.tokenize(sentence);
  const auto len = utf8::length(sentence);
  std::size_t prev = 0;
  for (const auto& t : tokens) {
    if (t.char_start > t.char_end || t.char_end > len || t.char_start < prev)
      throw BadTokenizer(tok.name + ": token '" + t.text + "' at [" + std::to_string(t.char_start) + "," +
                         std::to_string(t.char_end) + ") in sentence of length " + std::to_string(len));
    prev = t.char_start;
  }
  return tokens;
}

inline TokenizerAdapter whitespace_tokenizer() {
  return {"whitespace", [](std::string_view s) {
            std::vector<Token> out;
            const auto cps = utf8::decode(s);
            std::size_t i = 0;
            while (i < cps.size()) {
              while (i < cps.size() && utf8::is_space(cps[i])) ++i;
              const std::size_t start = i;
              while (i < cps.size() && !utf8::is_space(cps[i])) ++i;
              if (i > start)
                out.push_back({utf8::encode(std::u32string_view(cps).substr(start, i - start)), start, i});
            }
            return out;
          }};
}

/// One token per non-space code point; the natural unit for Hanja.
inline TokenizerAdapter char_tokenizer() {
  return {"char", [](std::string_view s) {
            std::vector<Token> out;
            const auto cps = utf8::decode(s);
            for (std::size_t i = 0; i < cps.size(); ++i)
              if (!utf8::is_space(cps[i])) out.push_back({utf8::encode(std::u32string_view(&cps[i], 1)), i, i + 1});
            return out;
          }};
}

namespace tok_detail {

inline bool is_cjk(char32_t c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) || (c >= 0x20000 && c <= 0x2A6DF) ||
         (c >= 0x2A700 && c <= 0x2B73F) || (c >= 0x2B740 && c <= 0x2B81F) || (c >= 0x2B820 && c <= 0x2CEAF) ||
         (c >= 0xF900 && c <= 0xFAFF) || (c >= 0x2F800 && c <= 0x2FA1F);
}

// ASCII punctuation plus the common Unicode punctuation blocks. Not a full category-P table.
inline bool is_punct(char32_t c) {
  if ((c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126)) return true;
  if ((c >= 0x00A1 && c <= 0x00BF) && c != 0x00AA && c != 0x00B2 && c != 0x00B3 && c != 0x00B5 && c != 0x00B9 &&
      c != 0x00BA && c != 0x00BC && c != 0x00BD && c != 0x00BE)
    return true;
  if (c >= 0x2010 && c <= 0x2027) return true;
  if (c >= 0x2030 && c <= 0x205E) return true;
  if (c >= 0x3001 && c <= 0x3003) return true;
  if (c >= 0x3008 && c <= 0x3011) return true;
  if (c >= 0x3014 && c <= 0x301F) return true;
  if (c == 0x30FB) return true;  // katakana middle dot, used as a list separator
  if (c >= 0xFF01 && c <= 0xFF0F) return true;
  if (c >= 0xFF1A && c <= 0xFF20) return true;
  if (c >= 0xFF3B && c <= 0xFF40) return true;
  if (c >= 0xFF5B && c <= 0xFF65) return true;
  return false;
}

inline bool is_control(char32_t c) {
  if (c == U'\t' || c == U'\n' || c == U'\r') return false;
  return c < 0x20 || c == 0x7F || (c >= 0x80 && c < 0xA0) || c == 0xFFFD || c == 0x200B || c == 0xFEFF;
}

}  // namespace tok_detail

/// BERT-style cased basic tokenization followed by greedy longest-match WordPiece over `vocab`.
class WordPieceTokenizer {
 public:
  explicit WordPieceTokenizer(std::vector<std::string> vocab, std::string unk = "[UNK]", std::size_t max_chars = 100)
      : unk_(std::move(unk)), max_chars_(max_chars) {
    for (std::size_t i = 0; i < vocab.size(); ++i) vocab_.emplace(std::move(vocab[i]), i);
  }

  static WordPieceTokenizer from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocab file: " + path);
    std::vector<std::string> v;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      v.push_back(line);
    }
    return WordPieceTokenizer(std::move(v));
  }

  std::size_t vocab_size() const { return vocab_.size(); }

  std::vector<Token> operator()(std::string_view sentence) const {
    using namespace tok_detail;
    const auto cps = utf8::decode(sentence);
    // Basic tokenization: split on whitespace, isolate punctuation and CJK ideographs, drop controls.
    std::vector<std::pair<std::size_t, std::size_t>> words;
    std::size_t i = 0;
    auto flush = [&](std::size_t start, std::size_t end) {
      if (end > start) words.emplace_back(start, end);
    };
    std::size_t start = 0;
    for (i = 0; i < cps.size(); ++i) {
      const char32_t c = cps[i];
      if (utf8::is_space(c) || is_control(c)) {
        flush(start, i);
        start = i + 1;
      } else if (is_punct(c) || is_cjk(c)) {
        flush(start, i);
        words.emplace_back(i, i + 1);
        start = i + 1;
      }
    }
    flush(start, cps.size());

    std::vector<Token> out;
    for (auto [ws, we] : words) {
      if (we - ws > max_chars_) {
        out.push_back({unk_, ws, we});
        continue;
      }
      std::vector<Token> pieces;
      std::size_t pos = ws;
      bool bad = false;
      while (pos < we) {
        std::size_t end = we;
        bool found = false;
        while (end > pos) {
          std::string piece = pos > ws ? "##" : "";
          piece += utf8::encode(std::u32string_view(cps).substr(pos, end - pos));
          if (vocab_.contains(piece)) {
            pieces.push_back({std::move(piece), pos, end});
            found = true;
            break;
          }
          --end;
        }
        if (!found) {
          bad = true;
          break;
        }
        pos = end;
      }
      if (bad)
        out.push_back({unk_, ws, we});
      else
        out.insert(out.end(), pieces.begin(), pieces.end());
    }
    return out;
  }

 private:
  std::unordered_map<std::string, std::size_t> vocab_;
  std::string unk_;
  std::size_t max_chars_;
};

inline TokenizerAdapter wordpiece_tokenizer(const std::string& vocab_path) {
  auto wp = std::make_shared<WordPieceTokenizer>(WordPieceTokenizer::from_file(vocab_path));
  return {"wordpiece:" + vocab_path, [wp](std::string_view s) { return (*wp)(s); }};
}

/// "whitespace", "char", or "wordpiece:<vocab path>".
inline TokenizerAdapter make_tokenizer(const std::string& spec) {
  if (spec == "whitespace") return whitespace_tokenizer();
  if (spec == "char") return char_tokenizer();
  if (spec.rfind("wordpiece:", 0) == 0) return wordpiece_tokenizer(spec.substr(10));
  throw std::invalid_argument("unknown tokenizer: " + spec);
}

}  // namespace histred

#endif  // HISTRED_TOKENIZER_HPP
