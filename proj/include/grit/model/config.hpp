#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "grit/types.hpp"

namespace grit {

struct ModelConfig {
  int vocab_size = 0;  // filled in from the training vocabulary
  int hidden_dim = 64;
  int num_layers = 2;
  int num_heads = 4;
  int feedforward_dim = 256;
  int max_source_len = 512;
  double sep_downweigh_factor = 0.01;
  std::uint64_t seed = 42;

  void validate() const {
    if (vocab_size <= 0 || hidden_dim <= 0 || num_layers <= 0 || num_heads <= 0 ||
        feedforward_dim <= 0 || max_source_len <= 2)
      throw ValidationError("model dimensions must be positive");
    if (hidden_dim % num_heads != 0)
      throw ValidationError("hidden_dim must be divisible by num_heads");
    if (!(sep_downweigh_factor > 0.0 && sep_downweigh_factor <= 1.0))
      throw ValidationError("sep_downweigh_factor must be in (0, 1]");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline void to_json(nlohmann::ordered_json& j, const ModelConfig& c) {
  j = {{"vocab_size", c.vocab_size},
       {"hidden_dim", c.hidden_dim},
       {"num_layers", c.num_layers},
       {"num_heads", c.num_heads},
       {"feedforward_dim", c.feedforward_dim},
       {"max_source_len", c.max_source_len},
       {"sep_downweigh_factor", c.sep_downweigh_factor},
       {"seed", c.seed}};
}

template <class Json>
void config_from_json(const Json& j, ModelConfig& c) {
  if (j.contains("vocab_size")) j.at("vocab_size").get_to(c.vocab_size);
  if (j.contains("hidden_dim")) j.at("hidden_dim").get_to(c.hidden_dim);
  if (j.contains("num_layers")) j.at("num_layers").get_to(c.num_layers);
  if (j.contains("num_heads")) j.at("num_heads").get_to(c.num_heads);
  if (j.contains("feedforward_dim")) j.at("feedforward_dim").get_to(c.feedforward_dim);
  if (j.contains("max_source_len")) j.at("max_source_len").get_to(c.max_source_len);
  if (j.contains("sep_downweigh_factor"))
    j.at("sep_downweigh_factor").get_to(c.sep_downweigh_factor);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
}

}  // namespace grit
