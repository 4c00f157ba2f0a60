#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>

#include "json.hpp"

#include "config.hpp"
#include "error.hpp"
#include "params.hpp"

namespace jifr {

using json = nlohmann::json;

inline json to_json(const ModelConfig& c) {
  return {
      {"collab_dim", c.collab_dim},
      {"visual_dim", c.visual_dim},
      {"frame_attn_hidden", c.frame_attn_hidden},
      {"rating_attn_hidden", c.rating_attn_hidden},
      {"key_dim", c.key_dim},
      {"visual_mode", std::string(to_string(c.visual_mode))},
      {"fusion_mode", std::string(to_string(c.fusion_mode))},
      {"activation", std::string(to_string(c.activation))},
      {"lambda1", c.lambda1},
      {"init_scale", c.init_scale},
      {"seed", c.seed},
      {"share_visual_projection", c.share_visual_projection},
      {"attention_bias", c.attention_bias},
  };
}

inline ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.collab_dim = j.at("collab_dim").get<std::size_t>();
  c.visual_dim = j.at("visual_dim").get<std::size_t>();
  c.frame_attn_hidden = j.at("frame_attn_hidden").get<std::size_t>();
  c.rating_attn_hidden = j.at("rating_attn_hidden").get<std::size_t>();
  c.key_dim = j.at("key_dim").get<std::size_t>();
  c.visual_mode = parse_visual_mode(j.at("visual_mode").get<std::string>());
  c.fusion_mode = parse_fusion_mode(j.at("fusion_mode").get<std::string>());
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.lambda1 = j.at("lambda1").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.share_visual_projection = j.at("share_visual_projection").get<bool>();
  c.attention_bias = j.at("attention_bias").get<bool>();
  return c;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

template <class Real>
constexpr const char* precision_name() {
  return std::is_same_v<Real, float> ? "f32" : "f64";
}

template <class Real>
struct Checkpoint {
  ModelConfig config;
  ModelShape shape;
  std::uint64_t id_digest = 0;
  std::string precision;
  ParamTensors<Real> params;
};

/// Checkpoint as a JSON document. Numbers are written with shortest
/// round-trip formatting, so a save/load cycle is bit-exact.
template <class Real>
json checkpoint_json(const ParamTensors<Real>& p, const ModelConfig& cfg, const ModelShape& shape,
                     std::uint64_t id_digest) {
  json tensors = json::object();
  for (std::size_t k = 0; k < kNumTensors; ++k) {
    const auto& m = p.t[k];
    json data = json::array();
    for (Real v : m.data()) data.push_back(static_cast<double>(v));
    tensors[std::string(kTensorNames[k])] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
  }
  return {
      {"format", "jifr-checkpoint"},
      {"version", 1},
      {"precision", precision_name<Real>()},
      {"config", to_json(cfg)},
      {"shape", {{"num_users", shape.num_users}, {"num_items", shape.num_items}, {"feature_dim", shape.feature_dim}}},
      {"id_digest", hex64(id_digest)},
      {"tensors", std::move(tensors)},
  };
}

template <class Real>
void save_checkpoint(const std::filesystem::path& path, const ParamTensors<Real>& p, const ModelConfig& cfg,
                     const ModelShape& shape, std::uint64_t id_digest) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << checkpoint_json(p, cfg, shape, id_digest).dump(1) << '\n';
}

template <class Real>
Checkpoint<Real> checkpoint_from_json(const json& j) {
  if (j.value("format", "") != "jifr-checkpoint") throw IntegrityError("not a jifr checkpoint");
  Checkpoint<Real> ck;
  ck.config = model_config_from_json(j.at("config"));
  const auto& sh = j.at("shape");
  ck.shape = {sh.at("num_users").get<std::size_t>(), sh.at("num_items").get<std::size_t>(),
              sh.at("feature_dim").get<std::size_t>()};
  ck.id_digest = std::stoull(j.at("id_digest").get<std::string>(), nullptr, 16);
  ck.precision = j.at("precision").get<std::string>();
  ck.params = zero_params<Real>(ck.config, ck.shape);
  const auto& tensors = j.at("tensors");
  for (std::size_t k = 0; k < kNumTensors; ++k) {
    const std::string name(kTensorNames[k]);
    const auto& t = tensors.at(name);
    auto& m = ck.params.t[k];
    if (t.at("rows").get<std::size_t>() != m.rows() || t.at("cols").get<std::size_t>() != m.cols()) {
      throw IntegrityError("checkpoint tensor " + name + " has the wrong shape for its config");
    }
    const auto& data = t.at("data");
    if (data.size() != m.size()) throw IntegrityError("checkpoint tensor " + name + " has the wrong length");
    for (std::size_t q = 0; q < m.size(); ++q) m.data()[q] = static_cast<Real>(data[q].get<double>());
  }
  return ck;
}

template <class Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  }
  try {
    return checkpoint_from_json<Real>(j);
  } catch (const json::exception& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  }
}

/// Precision recorded in a checkpoint file without parsing the tensors into
/// a typed container.
inline std::string checkpoint_precision(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return json::parse(in).at("precision").get<std::string>();
}

}  // namespace jifr
