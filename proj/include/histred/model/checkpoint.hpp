#ifndef HISTRED_MODEL_CHECKPOINT_HPP
#define HISTRED_MODEL_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "histred/model/re_model.hpp"
#include "histred/version.hpp"

namespace histred::model {

// Layout: 8-byte magic, u32 format version, u64 header length, JSON header, then every tensor as
// row-major little-endian f64 at the offset recorded in the header's manifest.
inline constexpr char kCheckpointMagic[8] = {'H', 'R', 'E', 'D', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error("checkpoint: " + what) {}
};

namespace ckpt_detail {

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw CheckpointError("truncated file");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& out, double x) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

}  // namespace ckpt_detail

struct LoadedCheckpoint {
  ReModel model;
  nlohmann::json header;
};

/// `extra` lands under header["extra"] (training config, config hash, metrics summary).
inline void save_checkpoint(const std::string& path, const ReModel& model, const nlohmann::json& extra = {}) {
  using namespace ckpt_detail;
  nlohmann::json header;
  header["format"] = "histred-checkpoint";
  header["tool_version"] = std::string(kToolVersion);
  header["config"] = to_json(model.config());
  header["config_hash"] = config_hash(header["config"]);
  header["extra"] = extra.is_null() ? nlohmann::json::object() : extra;
  header["vocab_kor"] = model.vocab_kor().tokens();
  header["vocab_han"] = model.vocab_han().tokens();
  auto& manifest = header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : model.params()) {
    manifest.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"dtype", "f64"}, {"order", "row-major"},
                        {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * 8;
  }
  const auto text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [_, m] : model.params())
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
  if (!out) throw CheckpointError("write failed: " + path);
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  using namespace ckpt_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw CheckpointError("bad magic in " + path);
  if (get_le<std::uint32_t>(in) != kCheckpointVersion) throw CheckpointError("unsupported version");
  const auto len = get_le<std::uint64_t>(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw CheckpointError("truncated header");
  auto header = nlohmann::json::parse(text);
  ReModel model(model_config_from_json(header.at("config")), Vocab(header.at("vocab_kor").get<std::vector<std::string>>()),
                Vocab(header.at("vocab_han").get<std::vector<std::string>>()));
  auto& params = model.params();
  if (header.at("tensors").size() != params.size()) throw CheckpointError("tensor count does not match config");
  for (const auto& t : header.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    auto it = params.find(name);
    if (it == params.end()) throw CheckpointError("unexpected tensor " + name);
    const auto rows = t.at("shape").at(0).get<Eigen::Index>();
    const auto cols = t.at("shape").at(1).get<Eigen::Index>();
    if (rows != it->second.rows() || cols != it->second.cols()) throw CheckpointError("shape mismatch for " + name);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) it->second(i, j) = get_f64(in);
  }
  return {std::move(model), std::move(header)};
}

}  // namespace histred::model

#endif  // HISTRED_MODEL_CHECKPOINT_HPP
