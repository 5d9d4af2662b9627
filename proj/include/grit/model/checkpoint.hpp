#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "grit/model/params.hpp"
#include "grit/model/vocab.hpp"

namespace grit {

// Binary checkpoint: magic + version header, the JSON-encoded config, the
// vocabulary in id order, then every tensor with a name/shape header.
// Loading validates every shape against the config.

namespace ckpt_detail {

inline constexpr char kMagic[8] = {'G', 'R', 'I', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kVersion = 1;

inline void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
  std::string s(read_u64(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}

}  // namespace ckpt_detail

inline void save_checkpoint(const ModelParams& params, const Vocabulary& vocab,
                            const std::string& path) {
  namespace d = ckpt_detail;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(d::kMagic, sizeof(d::kMagic));
    std::uint32_t version = d::kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));

    nlohmann::ordered_json cfg = params.config;
    d::write_string(out, cfg.dump());

    d::write_u64(out, vocab.tokens().size());
    for (const std::string& t : vocab.tokens()) d::write_string(out, t);

    auto tensors = params.tensors();
    d::write_u64(out, tensors.size());
    for (const auto& [name, mat] : tensors) {
      d::write_string(out, name);
      d::write_u64(out, static_cast<std::uint64_t>(mat->rows()));
      d::write_u64(out, static_cast<std::uint64_t>(mat->cols()));
      std::vector<double> buf(static_cast<std::size_t>(mat->size()));
      for (Eigen::Index r = 0; r < mat->rows(); ++r)
        for (Eigen::Index c = 0; c < mat->cols(); ++c)
          buf[static_cast<std::size_t>(r) * mat->cols() + c] = (*mat)(r, c);
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(sizeof(double) * buf.size()));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
  }
  std::filesystem::rename(tmp, path);
}

struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  namespace d = ckpt_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != std::string(d::kMagic, 8))
    throw ValidationError("not a checkpoint file: " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != d::kVersion)
    throw ValidationError("unsupported checkpoint version: " + std::to_string(version));

  ModelConfig config;
  auto cfg_json = nlohmann::json::parse(d::read_string(in), nullptr, false);
  if (cfg_json.is_discarded()) throw ValidationError("corrupt checkpoint config");
  config_from_json(cfg_json, config);
  config.validate();

  std::vector<std::string> tokens(d::read_u64(in));
  for (std::string& t : tokens) t = d::read_string(in);
  if (static_cast<int>(tokens.size()) != config.vocab_size)
    throw ValidationError("checkpoint vocabulary does not match config vocab_size");

  Checkpoint ckpt{ModelParams::shaped(config), Vocabulary::from_tokens(std::move(tokens))};
  auto tensors = ckpt.params.tensors();
  std::uint64_t count = d::read_u64(in);
  if (count != tensors.size())
    throw ValidationError("checkpoint/config shape mismatch: tensor count");
  for (auto& [name, mat] : tensors) {
    std::string stored = d::read_string(in);
    std::uint64_t rows = d::read_u64(in), cols = d::read_u64(in);
    if (stored != name || rows != static_cast<std::uint64_t>(mat->rows()) ||
        cols != static_cast<std::uint64_t>(mat->cols()))
      throw ValidationError("checkpoint/config shape mismatch at tensor " + stored);
    std::vector<double> buf(rows * cols);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(sizeof(double) * buf.size()));
    for (std::uint64_t r = 0; r < rows; ++r)
      for (std::uint64_t c = 0; c < cols; ++c)
        (*mat)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            buf[r * cols + c];
  }
  if (!in) throw ValidationError("checkpoint truncated: " + path);
  return ckpt;
}

}  // namespace grit
