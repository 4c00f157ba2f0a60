#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string_view>

#include "config.hpp"
#include "data.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace jifr {

enum class TensorId : std::size_t {
  kUserLatent,    // U, one row per user
  kItemLatent,    // V, one row per item
  kUserVisual,    // W, one row per user
  kVisualProj,    // P, visual_dim x feature_dim
  kKeyProj,       // W0, key_dim x feature_dim
  kFrameHidden,   // W1, h_c x (collab_dim + key_dim)
  kFrameOut,      // w1, 1 x h_c
  kFrameBias,     // 1 x h_c, only with attention_bias
  kRatingHidden,  // W2, h_r x (2 * collab_dim)
  kRatingOut,     // w2, 1 x h_r
  kRatingBias,    // 1 x h_r, only with attention_bias
};

inline constexpr std::size_t kNumTensors = 11;

inline constexpr std::array<std::string_view, kNumTensors> kTensorNames = {
    "user_latent", "item_latent",  "user_visual", "visual_proj", "key_proj",    "frame_hidden",
    "frame_out",   "frame_bias",   "rating_hidden", "rating_out", "rating_bias",
};

/// Every trainable tensor of the model. The same layout doubles as the
/// gradient container and as Adam's moment storage.
template <class Real>
struct ParamTensors {
  std::array<Matrix<Real>, kNumTensors> t;

  Matrix<Real>& operator[](TensorId id) { return t[static_cast<std::size_t>(id)]; }
  const Matrix<Real>& operator[](TensorId id) const { return t[static_cast<std::size_t>(id)]; }

  Matrix<Real>& user_latent() { return (*this)[TensorId::kUserLatent]; }
  const Matrix<Real>& user_latent() const { return (*this)[TensorId::kUserLatent]; }
  Matrix<Real>& item_latent() { return (*this)[TensorId::kItemLatent]; }
  const Matrix<Real>& item_latent() const { return (*this)[TensorId::kItemLatent]; }
  Matrix<Real>& user_visual() { return (*this)[TensorId::kUserVisual]; }
  const Matrix<Real>& user_visual() const { return (*this)[TensorId::kUserVisual]; }
  Matrix<Real>& visual_proj() { return (*this)[TensorId::kVisualProj]; }
  const Matrix<Real>& visual_proj() const { return (*this)[TensorId::kVisualProj]; }
  Matrix<Real>& key_proj() { return (*this)[TensorId::kKeyProj]; }
  const Matrix<Real>& key_proj() const { return (*this)[TensorId::kKeyProj]; }
  Matrix<Real>& frame_hidden() { return (*this)[TensorId::kFrameHidden]; }
  const Matrix<Real>& frame_hidden() const { return (*this)[TensorId::kFrameHidden]; }
  Matrix<Real>& frame_out() { return (*this)[TensorId::kFrameOut]; }
  const Matrix<Real>& frame_out() const { return (*this)[TensorId::kFrameOut]; }
  Matrix<Real>& frame_bias() { return (*this)[TensorId::kFrameBias]; }
  const Matrix<Real>& frame_bias() const { return (*this)[TensorId::kFrameBias]; }
  Matrix<Real>& rating_hidden() { return (*this)[TensorId::kRatingHidden]; }
  const Matrix<Real>& rating_hidden() const { return (*this)[TensorId::kRatingHidden]; }
  Matrix<Real>& rating_out() { return (*this)[TensorId::kRatingOut]; }
  const Matrix<Real>& rating_out() const { return (*this)[TensorId::kRatingOut]; }
  Matrix<Real>& rating_bias() { return (*this)[TensorId::kRatingBias]; }
  const Matrix<Real>& rating_bias() const { return (*this)[TensorId::kRatingBias]; }

  void zero() {
    for (auto& m : t) m.fill(Real(0));
  }

  /// Same shapes, all zeros.
  ParamTensors zeros_like() const {
    ParamTensors z;
    for (std::size_t k = 0; k < kNumTensors; ++k) z.t[k] = Matrix<Real>(t[k].rows(), t[k].cols());
    return z;
  }

  bool operator==(const ParamTensors&) const = default;
};

template <class Real>
using JifrParams = ParamTensors<Real>;

template <class Real>
using GradientSet = ParamTensors<Real>;

/// Entity counts the parameter shapes depend on.
struct ModelShape {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t feature_dim = 0;

  static ModelShape of(const Dataset& d) { return {d.num_users(), d.num_items(), d.feature_dim}; }
  bool operator==(const ModelShape&) const = default;
};

/// Which tensors take part in scoring (and therefore train) under `cfg`.
inline std::array<bool, kNumTensors> active_tensors(const ModelConfig& cfg) {
  std::array<bool, kNumTensors> a{};
  auto set = [&a](TensorId id) { a[static_cast<std::size_t>(id)] = true; };
  set(TensorId::kUserLatent);
  set(TensorId::kItemLatent);
  if (cfg.visual_mode != VisualMode::kOff) {
    set(TensorId::kUserVisual);
    set(TensorId::kVisualProj);
  }
  if (cfg.visual_mode == VisualMode::kAtt) {
    if (!cfg.share_visual_projection) set(TensorId::kKeyProj);
    set(TensorId::kFrameHidden);
    set(TensorId::kFrameOut);
    if (cfg.attention_bias) set(TensorId::kFrameBias);
  }
  if (cfg.fusion_mode == FusionMode::kAtt && cfg.visual_mode != VisualMode::kOff) {
    set(TensorId::kRatingHidden);
    set(TensorId::kRatingOut);
    if (cfg.attention_bias) set(TensorId::kRatingBias);
  }
  return a;
}

inline bool is_active(const ModelConfig& cfg, TensorId id) { return active_tensors(cfg)[static_cast<std::size_t>(id)]; }

template <class Real>
ParamTensors<Real> zero_params(const ModelConfig& cfg, const ModelShape& shape) {
  const std::size_t d1 = cfg.collab_dim, d2 = cfg.visual_dim, f = shape.feature_dim;
  const std::size_t d0 = cfg.share_visual_projection ? d2 : cfg.key_dim;
  const std::size_t bias_c = cfg.attention_bias ? cfg.frame_attn_hidden : 0;
  const std::size_t bias_r = cfg.attention_bias ? cfg.rating_attn_hidden : 0;
  ParamTensors<Real> p;
  p.user_latent() = Matrix<Real>(shape.num_users, d1);
  p.item_latent() = Matrix<Real>(shape.num_items, d1);
  p.user_visual() = Matrix<Real>(shape.num_users, d2);
  p.visual_proj() = Matrix<Real>(d2, f);
  p.key_proj() = Matrix<Real>(cfg.share_visual_projection ? 0 : d0, cfg.share_visual_projection ? 0 : f);
  p.frame_hidden() = Matrix<Real>(cfg.frame_attn_hidden, d1 + d0);
  p.frame_out() = Matrix<Real>(1, cfg.frame_attn_hidden);
  p.frame_bias() = Matrix<Real>(bias_c ? 1 : 0, bias_c);
  p.rating_hidden() = Matrix<Real>(cfg.rating_attn_hidden, 2 * d1);
  p.rating_out() = Matrix<Real>(1, cfg.rating_attn_hidden);
  p.rating_bias() = Matrix<Real>(bias_r ? 1 : 0, bias_r);
  return p;
}

/// Active tensors drawn i.i.d. from N(0, init_scale^2); inactive ones stay
/// zero. Biases start at zero. Deterministic in cfg.seed.
template <class Real>
ParamTensors<Real> init_params(const ModelConfig& cfg, const ModelShape& shape) {
  validate(cfg);
  ParamTensors<Real> p = zero_params<Real>(cfg, shape);
  const auto active = active_tensors(cfg);
  for (std::size_t k = 0; k < kNumTensors; ++k) {
    const auto id = static_cast<TensorId>(k);
    if (!active[k] || id == TensorId::kFrameBias || id == TensorId::kRatingBias) continue;
    Rng rng(derive_seed(cfg.seed, std::string("init/") + std::string(kTensorNames[k])));
    Normal normal(cfg.init_scale);
    for (auto& v : p.t[k].data()) v = static_cast<Real>(normal(rng));
  }
  return p;
}

template <class Real>
bool all_finite(const ParamTensors<Real>& p) {
  for (const auto& m : p.t) {
    for (Real v : m.data()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace jifr
