#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "model.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace jifr {

struct SynthConfig {
  std::size_t num_users = 200;
  std::size_t num_items = 300;
  std::size_t frames_per_item = 5;
  std::size_t feature_dim = 16;
  std::size_t planted_dim = 4;
  std::size_t ratings_per_user = 20;
  std::size_t likes_per_pair = 1;  // frame likes per rated (user, item)
  std::uint64_t seed = 0;

  // Shape of the planted world.
  double salient_shift = 3.0;      // norm of the salient cluster centre
  double attention_gain = 2.0;     // sharpness of the planted frame attention
};

inline void validate(const SynthConfig& c) {
  if (c.num_users < 1 || c.num_items < 1 || c.frames_per_item < 1 || c.feature_dim < 1 || c.planted_dim < 1 ||
      c.ratings_per_user < 1 || c.likes_per_pair < 1) {
    throw ArgumentError("synthetic config counts must all be >= 1");
  }
  if (c.ratings_per_user > c.num_items) throw ArgumentError("ratings_per_user must be <= num_items");
  if (c.likes_per_pair > c.frames_per_item) throw ArgumentError("likes_per_pair must be <= frames_per_item");
}

/// Ground-truth parameters the synthetic ratings were generated from. The
/// planted model is itself a JIFR model (visual att, fusion att).
struct PlantedModel {
  ModelConfig config;
  ParamTensors<double> params;
  std::vector<std::vector<bool>> salient;  // per item, per frame position
};

namespace detail {

inline std::string padded_id(char prefix, std::size_t i, std::size_t n) {
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  std::string s = std::to_string(i);
  return std::string(1, prefix) + std::string(width - s.size(), '0') + s;
}

/// Indices of the `k` largest scores; ties go to the smaller index.
inline std::vector<std::size_t> top_k(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(k, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

struct SynthResult {
  Dataset dataset;
  PlantedModel planted;
};

/// Samples a planted JIFR world and the data it implies. Each item has a
/// random minority of "salient" frames drawn around a shared cluster centre;
/// the planted frame attention keys on that cluster. Each user's positives are
/// the top ratings_per_user items under the planted item score, and the frame
/// likes of every rated pair are its top likes_per_pair frames under the
/// planted frame score.
inline SynthResult generate_synthetic(const SynthConfig& c) {
  validate(c);
  const std::size_t m = c.num_users, n = c.num_items, lpi = c.frames_per_item, f = c.feature_dim,
                    d = c.planted_dim;

  SynthResult out;
  Dataset& ds = out.dataset;
  PlantedModel& pm = out.planted;

  for (std::size_t u = 0; u < m; ++u) ds.user_ids.push_back(detail::padded_id('u', u, m));
  for (std::size_t i = 0; i < n; ++i) ds.item_ids.push_back(detail::padded_id('i', i, n));
  for (std::size_t k = 0; k < n * lpi; ++k) ds.frame_ids.push_back(detail::padded_id('f', k, n * lpi));
  ds.feature_dim = f;
  ds.item_frames.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < lpi; ++j) {
      const auto k = static_cast<FrameIndex>(i * lpi + j);
      ds.item_frames[i].push_back(k);
      ds.frame_item.push_back(static_cast<ItemIndex>(i));
    }
  }

  // Salient cluster centre.
  Rng feat_rng(derive_seed(c.seed, "synth/features"));
  Normal unit(1.0);
  std::vector<double> centre(f);
  for (auto& v : centre) v = unit(feat_rng);
  const double cn = std::sqrt(std::inner_product(centre.begin(), centre.end(), centre.begin(), 0.0));
  for (auto& v : centre) v *= c.salient_shift / cn;

  // Salient frames: a random non-empty minority per item (none for 1-frame items).
  pm.salient.assign(n, std::vector<bool>(lpi, false));
  ds.features.assign(n * lpi * f, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    if (lpi >= 2) {
      const std::size_t most = std::max<std::size_t>(1, (lpi - 1) / 2);
      count = 1 + uniform_index(feat_rng, most);
    }
    std::vector<std::size_t> pos(lpi);
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    shuffle(pos, feat_rng);
    for (std::size_t q = 0; q < count; ++q) pm.salient[i][pos[q]] = true;
    for (std::size_t j = 0; j < lpi; ++j) {
      double* row = ds.features.data() + (i * lpi + j) * f;
      for (std::size_t q = 0; q < f; ++q) row[q] = unit(feat_rng) + (pm.salient[i][j] ? centre[q] : 0.0);
    }
  }

  // Planted parameters.
  ModelConfig& pc = pm.config;
  pc.collab_dim = d;
  pc.visual_dim = d;
  pc.key_dim = 1;
  pc.frame_attn_hidden = 1;
  pc.rating_attn_hidden = 4;
  pc.visual_mode = VisualMode::kAtt;
  pc.fusion_mode = FusionMode::kAtt;
  pc.attention_bias = true;
  pc.lambda1 = 0.0;
  pc.init_scale = 0.0;
  pc.seed = c.seed;
  pm.params = zero_params<double>(pc, ModelShape{m, n, f});
  auto& p = pm.params;

  Rng prng(derive_seed(c.seed, "synth/params"));
  auto fill = [&prng](Matrix<double>& mat, double scale) {
    Normal g(scale);
    for (auto& v : mat.data()) v = g(prng);
  };
  fill(p.user_latent(), 1.0);
  fill(p.item_latent(), 1.0);
  fill(p.user_visual(), 1.0);
  fill(p.visual_proj(), 1.0 / std::sqrt(static_cast<double>(f)));
  for (std::size_t q = 0; q < f; ++q) p.key_proj()(0, q) = c.attention_gain * centre[q] / c.salient_shift;
  p.frame_hidden()(0, d) = 1.0;
  p.frame_out()(0, 0) = 1.0;
  fill(p.rating_hidden(), 1.0 / std::sqrt(static_cast<double>(2 * d)));
  fill(p.rating_out(), 1.0);
  // Positive hidden biases keep both branches alive under ReLU.
  for (auto& v : p.rating_bias().data()) v = 1.0;

  // Ratings: top items per user under the planted item score.
  const Scorer<double> scorer(p, pc, ds);
  std::vector<double> scores(n);
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = scorer.item(static_cast<UserIndex>(u), static_cast<ItemIndex>(i));
    }
    for (std::size_t i : detail::top_k(scores, c.ratings_per_user)) {
      ds.ratings.push_back({static_cast<UserIndex>(u), static_cast<ItemIndex>(i)});
    }
  }

  // Frame likes for every rated pair; only the test part ever reaches eval.
  std::vector<double> fs(lpi);
  for (const auto& r : ds.ratings) {
    const auto frames = ds.frames_of(r.item);
    for (std::size_t j = 0; j < frames.size(); ++j) fs[j] = scorer.frame(r.user, frames[j]);
    for (std::size_t j : detail::top_k(fs, c.likes_per_pair)) ds.frame_likes.push_back({r.user, frames[j]});
  }
  std::sort(ds.frame_likes.begin(), ds.frame_likes.end());
  validate(ds);
  return out;
}

/// Small unstructured instance: random features, every item has at least one
/// frame, each user rates `ratings_per_user` random items. Used by the
/// gradient checks.
inline Dataset random_dataset(std::size_t users, std::size_t items, std::size_t frames, std::size_t feature_dim,
                              std::size_t ratings_per_user, std::uint64_t seed) {
  if (frames < items) throw ArgumentError("random_dataset: need at least one frame per item");
  if (ratings_per_user >= items) throw ArgumentError("random_dataset: ratings_per_user must be < items");
  Rng rng(derive_seed(seed, "random_dataset"));
  Normal unit(1.0);
  Dataset d;
  for (std::size_t u = 0; u < users; ++u) d.user_ids.push_back(detail::padded_id('u', u, users));
  for (std::size_t i = 0; i < items; ++i) d.item_ids.push_back(detail::padded_id('i', i, items));
  for (std::size_t k = 0; k < frames; ++k) d.frame_ids.push_back(detail::padded_id('f', k, frames));
  d.feature_dim = feature_dim;
  d.item_frames.assign(items, {});
  for (std::size_t k = 0; k < frames; ++k) {
    const auto item = static_cast<ItemIndex>(k < items ? k : uniform_index(rng, items));
    d.frame_item.push_back(item);
    d.item_frames[item].push_back(static_cast<FrameIndex>(k));
  }
  d.features.resize(frames * feature_dim);
  for (auto& v : d.features) v = unit(rng);
  std::vector<std::size_t> all(items);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t u = 0; u < users; ++u) {
    shuffle(all, rng);
    for (std::size_t q = 0; q < ratings_per_user; ++q) {
      d.ratings.push_back({static_cast<UserIndex>(u), static_cast<ItemIndex>(all[q])});
    }
  }
  std::sort(d.ratings.begin(), d.ratings.end());
  validate(d);
  return d;
}

}  // namespace jifr
