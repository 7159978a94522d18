#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hstitch/error.hpp"
#include "hstitch/nn/model.hpp"
#include "hstitch/vocabulary.hpp"

namespace hstitch::nn {

// File layout:
//   8 bytes   magic "HSTITCH1"
//   u32 LE    header length
//   header    JSON: format version, config, vocabulary words, parameter specs
//   payload   float32 LE parameters in layout order
inline constexpr char kCheckpointMagic[8] = {'H', 'S', 'T', 'I', 'T', 'C', 'H', '1'};
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json config_to_json(const StitcherConfig& c) {
  return {{"variant", std::string(variant_name(c.variant))},
          {"enc_layers", c.enc_layers},
          {"dec_layers", c.dec_layers},
          {"model_dim", c.model_dim},
          {"heads", c.heads},
          {"ff_dim", c.ff_dim},
          {"dropout", c.dropout},
          {"label_smoothing", c.label_smoothing},
          {"lr", c.lr},
          {"warmup_steps", c.warmup_steps},
          {"max_src_len", c.max_src_len},
          {"max_tgt_len", c.max_tgt_len},
          {"vocab_size", c.vocab_size},
          {"share_embeddings", c.share_embeddings}};
}

inline StitcherConfig config_from_json(const nlohmann::json& j) {
  try {
    StitcherConfig c;
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.enc_layers = j.at("enc_layers").get<std::int32_t>();
    c.dec_layers = j.at("dec_layers").get<std::int32_t>();
    c.model_dim = j.at("model_dim").get<std::int32_t>();
    c.heads = j.at("heads").get<std::int32_t>();
    c.ff_dim = j.at("ff_dim").get<std::int32_t>();
    c.dropout = j.at("dropout").get<double>();
    c.label_smoothing = j.at("label_smoothing").get<double>();
    c.lr = j.at("lr").get<double>();
    c.warmup_steps = j.at("warmup_steps").get<std::int32_t>();
    c.max_src_len = j.at("max_src_len").get<std::int32_t>();
    c.max_tgt_len = j.at("max_tgt_len").get<std::int32_t>();
    c.vocab_size = j.at("vocab_size").get<std::int32_t>();
    c.share_embeddings = j.at("share_embeddings").get<bool>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad stitcher config: ") + e.what());
  }
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace detail

template <typename T>
std::string serialize_checkpoint(const StitcherModel<T>& m, const Vocabulary& vocab) {
  require(vocab.size() == m.config.vocab_size, "vocabulary does not match the model");
  nlohmann::json specs = nlohmann::json::array();
  for (const auto& p : m.layout.named)
    specs.push_back({{"name", p.name}, {"rows", p.slot.rows}, {"cols", p.slot.cols}});
  const nlohmann::json header = {{"version", kCheckpointVersion},
                                 {"config", config_to_json(m.config)},
                                 {"vocabulary", vocab.words()},
                                 {"params", specs}};
  const auto text = header.dump();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + 4 * m.params.size());
  for (T v : m.params) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

template <typename T = float>
struct LoadedCheckpoint {
  StitcherModel<T> model;
  Vocabulary vocab;
};

namespace detail {

template <typename T>
LoadedCheckpoint<T> checkpoint_from_header(const nlohmann::json& header, const std::string& bytes,
                                           std::size_t body) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto hlen = get_u32(p + sizeof kCheckpointMagic);
  LoadedCheckpoint<T> out;
  const auto cfg = config_from_json(header.at("config"));
  out.vocab = build_vocabulary(header.at("vocabulary").get<std::vector<std::string>>());
  if (out.vocab.size() != cfg.vocab_size)
    throw Error(ErrorKind::Format, "checkpoint vocabulary size does not match its config");
  out.model.config = cfg;
  out.model.layout = make_layout(cfg);
  const auto& specs = header.at("params");
  const auto& named = out.model.layout.named;
  if (!specs.is_array() || specs.size() != named.size())
    throw Error(ErrorKind::Format, "checkpoint parameter list does not match the config");
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& s = specs[i];
    if (s.value("name", "") != named[i].name || s.value("rows", -1) != named[i].slot.rows ||
        s.value("cols", -1) != named[i].slot.cols)
      throw Error(ErrorKind::Format, "checkpoint parameter spec mismatch at " + named[i].name);
  }
  const auto n = out.model.layout.total;
  if (bytes.size() != body + hlen + 4 * n)
    throw Error(ErrorKind::Format, "checkpoint payload has the wrong size");
  out.model.params.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.model.params[i] =
        static_cast<T>(std::bit_cast<float>(get_u32(p + body + hlen + 4 * i)));
  return out;
}

}  // namespace detail

template <typename T = float>
LoadedCheckpoint<T> deserialize_checkpoint(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < sizeof kCheckpointMagic + 4 ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw Error(ErrorKind::Format, "not a stitcher checkpoint");
  const auto hlen = detail::get_u32(p + sizeof kCheckpointMagic);
  const std::size_t body = sizeof kCheckpointMagic + 4;
  if (bytes.size() < body + hlen) throw Error(ErrorKind::Format, "truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(body, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad checkpoint header: ") + e.what());
  }
  if (!header.contains("version") || header["version"] != kCheckpointVersion)
    throw Error(ErrorKind::Format, "unsupported checkpoint version");

  try {
    return detail::checkpoint_from_header<T>(header, bytes, body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad checkpoint header: ") + e.what());
  } catch (const Error& e) {
    // an invalid config or vocabulary is a property of the file
    if (e.kind() != ErrorKind::InvalidArgument) throw;
    throw Error(ErrorKind::Format, std::string("bad checkpoint header: ") + e.what());
  }
}

template <typename T>
void save_checkpoint(const std::string& path, const StitcherModel<T>& m, const Vocabulary& vocab) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
  const auto bytes = serialize_checkpoint(m, vocab);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorKind::Io, "failed writing " + path);
}

template <typename T = float>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::MissingModel, "cannot open model " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint<T>(bytes);
}

}  // namespace hstitch::nn
