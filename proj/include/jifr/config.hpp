#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "error.hpp"

namespace jifr {

enum class VisualMode { kOff, kAvg, kAtt };
enum class FusionMode { kSum, kAtt };
enum class Activation { kRelu };

inline std::string_view to_string(VisualMode m) {
  switch (m) {
    case VisualMode::kOff: return "off";
    case VisualMode::kAvg: return "avg";
    case VisualMode::kAtt: return "att";
  }
  return "?";
}

inline std::string_view to_string(FusionMode m) { return m == FusionMode::kSum ? "sum" : "att"; }
inline std::string_view to_string(Activation) { return "relu"; }

inline VisualMode parse_visual_mode(std::string_view s) {
  if (s == "off") return VisualMode::kOff;
  if (s == "avg") return VisualMode::kAvg;
  if (s == "att") return VisualMode::kAtt;
  throw ConfigError("unknown visual mode '" + std::string(s) + "' (expected off|avg|att)");
}

inline FusionMode parse_fusion_mode(std::string_view s) {
  if (s == "sum" || s == "avg") return FusionMode::kSum;
  if (s == "att") return FusionMode::kAtt;
  throw ConfigError("unknown fusion mode '" + std::string(s) + "' (expected sum|att)");
}

inline Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

struct ModelConfig {
  std::size_t collab_dim = 32;          // d1
  std::size_t visual_dim = 32;          // d2
  std::size_t frame_attn_hidden = 32;   // h_c
  std::size_t rating_attn_hidden = 32;  // h_r
  std::size_t key_dim = 32;             // d0, output of the attention key projection
  VisualMode visual_mode = VisualMode::kAtt;
  FusionMode fusion_mode = FusionMode::kAtt;
  Activation activation = Activation::kRelu;
  double lambda1 = 0.001;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  bool share_visual_projection = false;  // attention keys use the value projection
  bool attention_bias = false;
};

inline void validate(const ModelConfig& c) {
  if (c.collab_dim < 1) throw ConfigError("collab_dim must be >= 1");
  if (c.visual_mode != VisualMode::kOff && c.visual_dim < 1) throw ConfigError("visual_dim must be >= 1");
  if (c.visual_mode == VisualMode::kAtt) {
    if (c.frame_attn_hidden < 1) throw ConfigError("frame_attn_hidden must be >= 1");
    if (c.share_visual_projection) {
      if (c.key_dim != c.visual_dim) throw ConfigError("share_visual_projection requires key_dim == visual_dim");
    } else if (c.key_dim < 1) {
      throw ConfigError("key_dim must be >= 1");
    }
  }
  // With visual off there is a single branch and fusion att reduces to it.
  if (c.fusion_mode == FusionMode::kAtt && c.visual_mode != VisualMode::kOff) {
    if (c.collab_dim != c.visual_dim) {
      throw ConfigError("fusion att shares one attention network across both branches and needs collab_dim == visual_dim");
    }
    if (c.rating_attn_hidden < 1) throw ConfigError("rating_attn_hidden must be >= 1");
  }
  if (!(c.lambda1 >= 0.0)) throw ConfigError("lambda1 must be >= 0");
  if (!(c.init_scale >= 0.0)) throw ConfigError("init_scale must be >= 0");
}

}  // namespace jifr
