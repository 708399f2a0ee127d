// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "reflex/errors.hpp"
#include "reflex/model.hpp"

namespace reflex {
namespace {

using json = nlohmann::json;
constexpr std::array<char, 8> kMagic = {'R', 'F', 'X', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw CheckpointError(CheckpointError::Kind::kTruncated, fmt::format("checkpoint truncated while reading {}", what));
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

json vocab_json(const Vocabulary& v) {
  json out = json::array();
  for (std::size_t i = v.has_reserved() ? 3 : 0; i < v.size(); ++i) out.push_back(v.symbol(static_cast<SegmentId>(i)));
  return out;
}

Vocabulary vocab_from(const json& symbols, bool reserved) {
  Vocabulary v = reserved ? Vocabulary::with_reserved() : Vocabulary{};
  for (const auto& s : symbols) v.intern(s.get<std::string>());
  return v;
}

}  // namespace

void save_model(const TransducerModel& model, const std::filesystem::path& path) {
  const auto& c = model.config();
  json header;
  header["config"] = {{"lang_dim", c.lang_dim},     {"emb_dim", c.emb_dim},
                      {"hidden_dim", c.hidden_dim}, {"mode", std::string(to_string(c.mode))},
                      {"max_decode_len", c.max_decode_len}, {"seed", c.seed}};
  header["input_vocab"] = vocab_json(model.input_vocab());
  header["output_vocab"] = vocab_json(model.output_vocab());
  header["languages"] = model.languages();
  json manifest = json::array();
  std::uint64_t offset = 0;
  const auto named = model.params().named();
  for (const auto& [name, t] : named) {
    manifest.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size();
  }
  header["tensors"] = manifest;
  header["payload_values"] = offset;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : named) {
    for (double v : t.values()) put_le<double>(out, v);
  }
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

TransducerModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open checkpoint '{}'", path.string()));
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != static_cast<std::streamsize>(magic.size())) {
    throw CheckpointError(CheckpointError::Kind::kTruncated, "checkpoint truncated inside the magic bytes");
  }
  if (magic != kMagic) throw CheckpointError(CheckpointError::Kind::kCorrupt, "not a reflex checkpoint (bad magic)");
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::kVersionMismatch,
                          fmt::format("checkpoint version {} is not supported (expected {})", version,
                                      kCheckpointVersion));
  }
  const auto length = get_le<std::uint64_t>(in, "header length");
  if (length > (1ULL << 32)) throw CheckpointError(CheckpointError::Kind::kCorrupt, "implausible header length");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (in.gcount() != static_cast<std::streamsize>(length)) {
    throw CheckpointError(CheckpointError::Kind::kTruncated, "checkpoint truncated inside the header");
  }

  try {
    const json header = json::parse(text);
    const auto& jc = header.at("config");
    ModelConfig config;
    config.lang_dim = jc.at("lang_dim").get<std::size_t>();
    config.emb_dim = jc.at("emb_dim").get<std::size_t>();
    config.hidden_dim = jc.at("hidden_dim").get<std::size_t>();
    config.mode = parse_embedding_mode(jc.at("mode").get<std::string>());
    config.max_decode_len = jc.at("max_decode_len").get<std::size_t>();
    config.seed = jc.at("seed").get<std::uint64_t>();
    TransducerModel model(config, vocab_from(header.at("input_vocab"), false),
                          vocab_from(header.at("output_vocab"), true),
                          header.at("languages").get<std::vector<std::string>>());

    const auto& manifest = header.at("tensors");
    auto named = model.params().named();
    if (manifest.size() != named.size()) {
      throw CheckpointError(CheckpointError::Kind::kCorrupt, "tensor manifest does not match the model layout");
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
      auto& [name, tensor] = named[i];
      const auto& entry = manifest[i];
      if (entry.at("name").get<std::string>() != name || entry.at("shape").get<ad::Shape>() != tensor.shape()) {
        throw CheckpointError(CheckpointError::Kind::kCorrupt, fmt::format("tensor '{}' has the wrong name or shape", name));
      }
      for (double& v : tensor.mutable_values()) v = get_le<double>(in, "tensor payload");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw CheckpointError(CheckpointError::Kind::kCorrupt, "trailing bytes after the tensor payload");
    }
    return model;
  } catch (const json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt, fmt::format("bad checkpoint header: {}", e.what()));
  } catch (const ArgumentError& e) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt, fmt::format("bad checkpoint header: {}", e.what()));
  }
}

}  // namespace reflex
