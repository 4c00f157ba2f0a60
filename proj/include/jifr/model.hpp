#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "params.hpp"
#include "tensor.hpp"

namespace jifr {

template <class Real>
Real activate(Activation, Real z) {
  return z > Real(0) ? z : Real(0);
}

template <class Real>
Real activate_grad(Activation, Real z) {
  return z > Real(0) ? Real(1) : Real(0);
}

/// Numerically stable softmax (max subtracted before exponentiation).
template <class Real>
std::vector<Real> softmax(std::span<const Real> logits) {
  std::vector<Real> out(logits.size());
  if (logits.empty()) return out;
  const Real mx = *std::max_element(logits.begin(), logits.end());
  Real sum = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - mx);
    sum += out[k];
  }
  for (auto& v : out) v /= sum;
  return out;
}

namespace detail {

inline void require_frames(const Dataset& d, ItemIndex item) {
  if (item >= d.num_items()) throw ArgumentError("item index out of range");
  if (d.item_frames[item].empty()) throw MissingFramesError("item " + d.item_ids[item] + " has no frames");
}

}  // namespace detail

/// Projected frame embeddings P c_k for each frame of `item`, one row each.
template <class Real>
Matrix<Real> frame_embeddings(ItemIndex item, const ParamTensors<Real>& p, const Dataset& d) {
  detail::require_frames(d, item);
  const auto frames = d.frames_of(item);
  const auto& proj = p.visual_proj();
  Matrix<Real> e(frames.size(), proj.rows());
  for (std::size_t j = 0; j < frames.size(); ++j) matvec(proj, d.feature(frames[j]), e.row(j));
  return e;
}

/// Mean of P c_k over the item's frames.
template <class Real>
std::vector<Real> item_visual_avg(ItemIndex item, const ParamTensors<Real>& p, const Dataset& d) {
  const Matrix<Real> e = frame_embeddings(item, p, d);
  std::vector<Real> x(e.cols(), Real(0));
  const Real inv = Real(1) / static_cast<Real>(e.rows());
  for (std::size_t j = 0; j < e.rows(); ++j) axpy(inv, e.row(j), std::span<Real>(x));
  return x;
}

/// Intermediates of the frame attention network for one item, kept for
/// backpropagation.
template <class Real>
struct FrameAttentionForward {
  Matrix<Real> values;  // P c_j, frames x visual_dim
  Matrix<Real> keys;    // W0 c_j, frames x key_dim
  Matrix<Real> pre;     // W1 [v_i, key_j] (+ bias), frames x h_c
  Matrix<Real> hidden;  // f(pre)
  std::vector<Real> logits;
  std::vector<Real> weights;
  std::vector<Real> visual;  // x_i
};

template <class Real>
FrameAttentionForward<Real> frame_attention_forward(ItemIndex item, const ParamTensors<Real>& p, const ModelConfig& cfg,
                                                    const Dataset& d) {
  if (cfg.visual_mode != VisualMode::kAtt) throw ConfigError("frame attention requires visual mode att");
  FrameAttentionForward<Real> f;
  f.values = frame_embeddings(item, p, d);
  const auto frames = d.frames_of(item);
  const std::size_t n = frames.size();
  const auto& key_proj = cfg.share_visual_projection ? p.visual_proj() : p.key_proj();
  const auto& hid = p.frame_hidden();
  const auto v = p.item_latent().row(item);
  const auto w_out = p.frame_out().row(0);

  f.keys = Matrix<Real>(n, key_proj.rows());
  f.pre = Matrix<Real>(n, hid.rows());
  f.hidden = Matrix<Real>(n, hid.rows());
  f.logits.assign(n, Real(0));
  for (std::size_t j = 0; j < n; ++j) {
    if (cfg.share_visual_projection) {
      std::copy(f.values.row(j).begin(), f.values.row(j).end(), f.keys.row(j).begin());
    } else {
      matvec(key_proj, d.feature(frames[j]), f.keys.row(j));
    }
    auto pre = f.pre.row(j);
    matvec_concat(hid, v, std::span<const Real>(f.keys.row(j)), pre);
    if (cfg.attention_bias) axpy(Real(1), p.frame_bias().row(0), pre);
    auto h = f.hidden.row(j);
    for (std::size_t c = 0; c < h.size(); ++c) h[c] = activate(cfg.activation, pre[c]);
    f.logits[j] = dot<Real>(w_out, std::span<const Real>(h));
  }
  f.weights = softmax<Real>(f.logits);
  f.visual.assign(f.values.cols(), Real(0));
  for (std::size_t j = 0; j < n; ++j) axpy(f.weights[j], f.values.row(j), std::span<Real>(f.visual));
  return f;
}

/// Unnormalized attention score of each frame of `item`, in the item's
/// frame order.
template <class Real>
std::vector<Real> frame_attention_logits(ItemIndex item, const ParamTensors<Real>& p, const ModelConfig& cfg,
                                         const Dataset& d) {
  return frame_attention_forward(item, p, cfg, d).logits;
}

template <class Real>
std::vector<Real> frame_attention_weights(ItemIndex item, const ParamTensors<Real>& p, const ModelConfig& cfg,
                                          const Dataset& d) {
  return frame_attention_forward(item, p, cfg, d).weights;
}

template <class Real>
std::vector<Real> item_visual_att(ItemIndex item, const ParamTensors<Real>& p, const ModelConfig& cfg,
                                  const Dataset& d) {
  return frame_attention_forward(item, p, cfg, d).visual;
}

/// x_i under the configured visual mode; empty when the visual branch is off.
template <class Real>
std::vector<Real> item_visual(ItemIndex item, const ParamTensors<Real>& p, const ModelConfig& cfg, const Dataset& d) {
  switch (cfg.visual_mode) {
    case VisualMode::kOff: return {};
    case VisualMode::kAvg: return item_visual_avg(item, p, d);
    case VisualMode::kAtt: return item_visual_att(item, p, cfg, d);
  }
  return {};
}

template <class Real>
struct RatingAttentionForward {
  std::vector<Real> pre_collab, hidden_collab;  // branch over [u_a, v_i]
  std::vector<Real> pre_visual, hidden_visual;  // branch over [w_a, x_i]
  Real logit_collab = 0;
  Real logit_visual = 0;
  Real beta_collab = Real(0.5);
  Real beta_visual = Real(0.5);
};

template <class Real>
RatingAttentionForward<Real> rating_attention_forward(UserIndex user, ItemIndex item, std::span<const Real> visual,
                                                      const ParamTensors<Real>& p, const ModelConfig& cfg) {
  if (cfg.fusion_mode != FusionMode::kAtt) throw ConfigError("rating attention requires fusion mode att");
  if (cfg.collab_dim != cfg.visual_dim || visual.size() != cfg.visual_dim) {
    throw ConfigError("rating attention needs collab_dim == visual_dim == |x_i|");
  }
  const auto& hid = p.rating_hidden();
  const auto w_out = p.rating_out().row(0);
  RatingAttentionForward<Real> r;
  auto branch = [&](std::span<const Real> a, std::span<const Real> b, std::vector<Real>& pre, std::vector<Real>& h) {
    pre.assign(hid.rows(), Real(0));
    h.assign(hid.rows(), Real(0));
    matvec_concat(hid, a, b, std::span<Real>(pre));
    if (cfg.attention_bias) axpy(Real(1), p.rating_bias().row(0), std::span<Real>(pre));
    for (std::size_t c = 0; c < h.size(); ++c) h[c] = activate(cfg.activation, pre[c]);
    return dot<Real>(w_out, std::span<const Real>(h));
  };
  r.logit_collab = branch(p.user_latent().row(user), p.item_latent().row(item), r.pre_collab, r.hidden_collab);
  r.logit_visual = branch(p.user_visual().row(user), visual, r.pre_visual, r.hidden_visual);
  // Two-way softmax written as a logistic of the logit gap.
  const Real gap = r.logit_visual - r.logit_collab;
  if (gap >= Real(0)) {
    const Real e = std::exp(-gap);
    r.beta_collab = e / (Real(1) + e);
    r.beta_visual = Real(1) / (Real(1) + e);
  } else {
    const Real e = std::exp(gap);
    r.beta_collab = Real(1) / (Real(1) + e);
    r.beta_visual = e / (Real(1) + e);
  }
  return r;
}

/// (beta_collab, beta_visual): normalized weights of the collaborative and
/// visual preference for one user/item decision.
template <class Real>
std::pair<Real, Real> rating_attention(UserIndex user, ItemIndex item, std::span<const Real> visual,
                                       const ParamTensors<Real>& p, const ModelConfig& cfg) {
  if (cfg.visual_mode == VisualMode::kOff) return {Real(1), Real(0)};
  const auto r = rating_attention_forward(user, item, visual, p, cfg);
  return {r.beta_collab, r.beta_visual};
}

/// Item score given a precomputed x_i (empty when the visual branch is off).
template <class Real>
Real item_score_with_visual(UserIndex user, ItemIndex item, std::span<const Real> visual, const ParamTensors<Real>& p,
                            const ModelConfig& cfg) {
  const Real collab = dot<Real>(p.user_latent().row(user), p.item_latent().row(item));
  if (cfg.visual_mode == VisualMode::kOff) return collab;
  const Real vis = dot<Real>(p.user_visual().row(user), visual);
  if (cfg.fusion_mode == FusionMode::kSum) return collab + vis;
  const auto r = rating_attention_forward(user, item, visual, p, cfg);
  return r.beta_collab * collab + r.beta_visual * vis;
}

template <class Real>
Real predict_item_score(UserIndex user, ItemIndex item, const ParamTensors<Real>& p, const ModelConfig& cfg,
                        const Dataset& d) {
  if (user >= d.num_users() || item >= d.num_items()) throw ArgumentError("user or item index out of range");
  const std::vector<Real> x = item_visual(item, p, cfg, d);
  return item_score_with_visual<Real>(user, item, x, p, cfg);
}

/// w_a . (P c_k); needs only the user's visual profile and the projection.
template <class Real>
Real predict_frame_score(UserIndex user, FrameIndex frame, const ParamTensors<Real>& p, const ModelConfig& cfg,
                         const Dataset& d) {
  if (cfg.visual_mode == VisualMode::kOff) throw UnsupportedTaskError("frame scoring needs a visual branch");
  if (user >= d.num_users() || frame >= d.num_frames()) throw ArgumentError("user or frame index out of range");
  const auto& proj = p.visual_proj();
  const auto w = p.user_visual().row(user);
  const auto c = d.feature(frame);
  Real s = 0;
  for (std::size_t r = 0; r < proj.rows(); ++r) s += w[r] * dot<Real>(proj.row(r), c);
  return s;
}

/// Read-only scorer with every x_i precomputed; scoring is then cheap enough
/// for exhaustive candidate ranking.
template <class Real>
class Scorer {
 public:
  Scorer(const ParamTensors<Real>& p, const ModelConfig& cfg, const Dataset& d) : p_(p), cfg_(cfg), d_(d) {
    if (cfg.visual_mode != VisualMode::kOff) {
      visual_ = Matrix<Real>(d.num_items(), cfg.visual_dim);
      for (ItemIndex i = 0; i < d.num_items(); ++i) {
        if (d.item_frames[i].empty()) {
          has_visual_.push_back(false);
          continue;
        }
        has_visual_.push_back(true);
        const auto x = item_visual(i, p, cfg, d);
        std::copy(x.begin(), x.end(), visual_.row(i).begin());
      }
    }
  }

  Real item(UserIndex user, ItemIndex item) const {
    if (cfg_.visual_mode == VisualMode::kOff) return item_score_with_visual<Real>(user, item, {}, p_, cfg_);
    if (!has_visual_[item]) throw MissingFramesError("item " + d_.item_ids[item] + " has no frames");
    return item_score_with_visual<Real>(user, item, visual_.row(item), p_, cfg_);
  }

  Real frame(UserIndex user, FrameIndex frame) const { return predict_frame_score(user, frame, p_, cfg_, d_); }

  const ModelConfig& config() const { return cfg_; }
  const Dataset& dataset() const { return d_; }

 private:
  const ParamTensors<Real>& p_;
  const ModelConfig& cfg_;
  const Dataset& d_;
  Matrix<Real> visual_;
  std::vector<bool> has_visual_;
};

}  // namespace jifr
