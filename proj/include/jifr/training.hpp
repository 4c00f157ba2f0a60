#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "model.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace jifr {

struct TrainTriple {
  UserIndex user;
  ItemIndex positive;
  ItemIndex negative;
  bool operator==(const TrainTriple&) const = default;
};

enum class LossReduction { kMean, kSum };

struct OptimizerHyper {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 512;
  std::size_t epochs = 50;
  std::size_t neg_ratio = 10;
  std::size_t early_stop_patience = 10;
  LossReduction loss_reduction = LossReduction::kMean;
  std::size_t valid_k = 10;
  std::size_t valid_negatives = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

inline void validate(const OptimizerHyper& h) {
  if (!(h.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(h.beta1 >= 0.0 && h.beta1 < 1.0) || !(h.beta2 >= 0.0 && h.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(h.epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (h.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (h.neg_ratio < 1) throw ConfigError("neg_ratio must be >= 1");
  if (h.early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
  if (h.valid_k < 1) throw ConfigError("valid_k must be >= 1");
}

// ---- sampling ---------------------------------------------------------------

/// neg_ratio triples per training positive, negatives uniform over the
/// user's items outside `positives` (with replacement), shuffled.
inline std::vector<TrainTriple> sample_epoch(std::span<const Rating> train, const UserItems& positives,
                                             std::size_t num_items, std::size_t neg_ratio, Rng& rng) {
  if (neg_ratio < 1) throw ArgumentError("neg_ratio must be >= 1");
  std::vector<TrainTriple> out;
  out.reserve(train.size() * neg_ratio);
  std::vector<ItemIndex> complement;
  UserIndex complement_user = std::numeric_limits<UserIndex>::max();
  for (const auto& r : train) {
    const auto rated = positives.of(r.user);
    if (rated.size() >= num_items) {
      throw SamplingError(r.user, "user " + std::to_string(r.user) + " has rated every item; no negative to sample");
    }
    // Dense users sample from an explicit complement; sparse ones by rejection.
    const bool dense = 2 * rated.size() > num_items;
    if (dense && complement_user != r.user) {
      complement.clear();
      for (ItemIndex i = 0; i < num_items; ++i) {
        if (!std::binary_search(rated.begin(), rated.end(), i)) complement.push_back(i);
      }
      complement_user = r.user;
    }
    for (std::size_t k = 0; k < neg_ratio; ++k) {
      ItemIndex j;
      if (dense) {
        j = complement[uniform_index(rng, complement.size())];
      } else {
        do {
          j = static_cast<ItemIndex>(uniform_index(rng, num_items));
        } while (std::binary_search(rated.begin(), rated.end(), j));
      }
      out.push_back({r.user, r.item, j});
    }
  }
  shuffle(out, rng);
  return out;
}

// ---- loss -------------------------------------------------------------------

/// -ln sigma(pos - neg), evaluated as softplus(-(pos - neg)).
inline double bpr_pair_loss(double score_pos, double score_neg) {
  const double x = score_pos - score_neg;
  return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct BatchLoss {
  double pairwise = 0.0;     // reduced BPR term
  double reg_touched = 0.0;  // lambda1 * squared norms of rows the batch touches
  double reg_full = 0.0;     // lambda1 * (|U|^2 + |V|^2 + |W|^2)

  /// The quantity batch_gradients differentiates.
  double objective() const { return pairwise + reg_touched; }
  /// The value reported in training logs.
  double readout() const { return pairwise + reg_full; }
};

namespace detail {

template <class Real>
struct ItemState {
  FrameAttentionForward<Real> att;  // visual att
  Matrix<Real> values;              // visual avg
  std::vector<Real> visual;
  std::vector<Real> grad_visual;
};

template <class Real>
void rating_branch_backward(Real g_logit, std::span<const Real> pre, std::span<const Real> hidden,
                            std::span<const Real> a, std::span<const Real> b, const ParamTensors<Real>& p,
                            const ModelConfig& cfg, ParamTensors<Real>& g, std::span<Real> g_a, std::span<Real> g_b) {
  if (g_logit == Real(0)) return;
  const auto w_out = p.rating_out().row(0);
  axpy(g_logit, hidden, g.rating_out().row(0));
  std::vector<Real> g_pre(pre.size());
  for (std::size_t c = 0; c < pre.size(); ++c) g_pre[c] = g_logit * w_out[c] * activate_grad(cfg.activation, pre[c]);
  const std::span<const Real> gp(g_pre);
  add_outer_concat(g.rating_hidden(), gp, a, b);
  if (cfg.attention_bias) axpy(Real(1), gp, g.rating_bias().row(0));
  std::vector<Real> g_in(a.size() + b.size(), Real(0));
  add_matvec_transposed(p.rating_hidden(), gp, std::span<Real>(g_in));
  for (std::size_t c = 0; c < a.size(); ++c) g_a[c] += g_in[c];
  for (std::size_t c = 0; c < b.size(); ++c) g_b[c] += g_in[a.size() + c];
}

/// Adds d(score)/d(theta) * upstream into g, and d(score)/d(x_i) * upstream
/// into g_visual.
template <class Real>
void score_backward(UserIndex u, ItemIndex i, std::span<const Real> visual, Real upstream,
                    const RatingAttentionForward<Real>* ratt, const ParamTensors<Real>& p, const ModelConfig& cfg,
                    ParamTensors<Real>& g, std::span<Real> g_visual) {
  const auto uu = p.user_latent().row(u);
  const auto vv = p.item_latent().row(i);
  auto gu = g.user_latent().row(u);
  auto gv = g.item_latent().row(i);
  if (cfg.visual_mode == VisualMode::kOff) {
    axpy(upstream, vv, gu);
    axpy(upstream, uu, gv);
    return;
  }
  const auto ww = p.user_visual().row(u);
  auto gw = g.user_visual().row(u);
  Real g_collab = upstream, g_vis = upstream;
  if (cfg.fusion_mode == FusionMode::kAtt) {
    const Real collab = dot<Real>(uu, vv);
    const Real vis = dot<Real>(ww, visual);
    g_collab = upstream * ratt->beta_collab;
    g_vis = upstream * ratt->beta_visual;
    const Real g_logit_collab = upstream * ratt->beta_collab * ratt->beta_visual * (collab - vis);
    rating_branch_backward<Real>(g_logit_collab, ratt->pre_collab, ratt->hidden_collab, uu, vv, p, cfg, g, gu, gv);
    rating_branch_backward<Real>(-g_logit_collab, ratt->pre_visual, ratt->hidden_visual, ww, visual, p, cfg, g, gw,
                                 g_visual);
  }
  axpy(g_collab, vv, gu);
  axpy(g_collab, uu, gv);
  axpy(g_vis, visual, gw);
  axpy(g_vis, ww, g_visual);
}

/// Backpropagates d(loss)/d(x_i) through the frame attention network.
template <class Real>
void item_backward(ItemIndex i, const ItemState<Real>& st, const ParamTensors<Real>& p, const ModelConfig& cfg,
                   const Dataset& d, ParamTensors<Real>& g) {
  const auto frames = d.frames_of(i);
  const std::span<const Real> gx(st.grad_visual);
  if (cfg.visual_mode == VisualMode::kAvg) {
    std::vector<Real> scaled(gx.begin(), gx.end());
    for (auto& v : scaled) v /= static_cast<Real>(frames.size());
    for (FrameIndex k : frames) add_outer(g.visual_proj(), std::span<const Real>(scaled), d.feature(k));
    return;
  }
  const auto& f = st.att;
  const std::size_t n = frames.size();
  std::vector<Real> g_weight(n);
  Real mean = 0;
  for (std::size_t j = 0; j < n; ++j) {
    g_weight[j] = dot<Real>(gx, f.values.row(j));
    mean += f.weights[j] * g_weight[j];
  }
  const std::size_t d1 = cfg.collab_dim;
  const auto v = p.item_latent().row(i);
  const auto w_out = p.frame_out().row(0);
  auto gv = g.item_latent().row(i);
  std::vector<Real> g_pre(p.frame_hidden().rows()), g_in(p.frame_hidden().cols()), g_val(gx.size());
  for (std::size_t j = 0; j < n; ++j) {
    const auto c = d.feature(frames[j]);
    const Real g_logit = f.weights[j] * (g_weight[j] - mean);
    for (std::size_t q = 0; q < g_val.size(); ++q) g_val[q] = f.weights[j] * gx[q];

    axpy(g_logit, f.hidden.row(j), g.frame_out().row(0));
    const auto pre = f.pre.row(j);
    for (std::size_t q = 0; q < g_pre.size(); ++q) {
      g_pre[q] = g_logit * w_out[q] * activate_grad(cfg.activation, pre[q]);
    }
    const std::span<const Real> gp(g_pre);
    add_outer_concat(g.frame_hidden(), gp, v, f.keys.row(j));
    if (cfg.attention_bias) axpy(Real(1), gp, g.frame_bias().row(0));
    std::fill(g_in.begin(), g_in.end(), Real(0));
    add_matvec_transposed(p.frame_hidden(), gp, std::span<Real>(g_in));
    for (std::size_t q = 0; q < d1; ++q) gv[q] += g_in[q];
    const std::span<const Real> g_key(g_in.data() + d1, g_in.size() - d1);
    if (cfg.share_visual_projection) {
      for (std::size_t q = 0; q < g_val.size(); ++q) g_val[q] += g_key[q];
    } else {
      add_outer(g.key_proj(), g_key, c);
    }
    add_outer(g.visual_proj(), std::span<const Real>(g_val), c);
  }
}

/// Loss of a batch and, when `grads` is non-null, its exact gradient with
/// respect to every active tensor (grads must be zero-initialized).
template <class Real>
BatchLoss forward_backward(std::span<const TrainTriple> batch, const ParamTensors<Real>& p, const ModelConfig& cfg,
                           const Dataset& d, LossReduction reduction, ParamTensors<Real>* grads) {
  if (batch.empty()) throw ArgumentError("empty batch");
  const bool visual = cfg.visual_mode != VisualMode::kOff;

  // One forward pass per distinct item; x_i does not depend on the user.
  std::vector<ItemIndex> items;
  items.reserve(2 * batch.size());
  for (const auto& t : batch) {
    items.push_back(t.positive);
    items.push_back(t.negative);
  }
  sort_unique(items);
  std::vector<ItemState<Real>> states(visual ? items.size() : 0);
  auto slot = [&items](ItemIndex i) {
    return static_cast<std::size_t>(std::lower_bound(items.begin(), items.end(), i) - items.begin());
  };
  if (visual) {
    for (std::size_t s = 0; s < items.size(); ++s) {
      auto& st = states[s];
      if (cfg.visual_mode == VisualMode::kAtt) {
        st.att = frame_attention_forward(items[s], p, cfg, d);
        st.visual = st.att.visual;
      } else {
        st.visual = item_visual_avg(items[s], p, d);
      }
      st.grad_visual.assign(st.visual.size(), Real(0));
    }
  }

  const Real scale = reduction == LossReduction::kMean ? Real(1) / static_cast<Real>(batch.size()) : Real(1);
  const bool rating_att = cfg.fusion_mode == FusionMode::kAtt;
  BatchLoss loss;
  double pair_sum = 0;
  for (const auto& t : batch) {
    std::span<const Real> xp, xn;
    std::optional<RatingAttentionForward<Real>> rp, rn;
    if (visual) {
      xp = states[slot(t.positive)].visual;
      xn = states[slot(t.negative)].visual;
      if (rating_att) {
        rp = rating_attention_forward(t.user, t.positive, xp, p, cfg);
        rn = rating_attention_forward(t.user, t.negative, xn, p, cfg);
      }
    }
    auto score = [&](ItemIndex i, std::span<const Real> x, const std::optional<RatingAttentionForward<Real>>& r) {
      const Real collab = dot<Real>(p.user_latent().row(t.user), p.item_latent().row(i));
      if (!visual) return collab;
      const Real vis = dot<Real>(p.user_visual().row(t.user), x);
      if (!rating_att) return collab + vis;
      return r->beta_collab * collab + r->beta_visual * vis;
    };
    const Real sp = score(t.positive, xp, rp);
    const Real sn = score(t.negative, xn, rn);
    pair_sum += bpr_pair_loss(sp, sn);
    if (grads) {
      // d/dx softplus(-x) = -sigmoid(-x)
      const Real g = -static_cast<Real>(sigmoid(-static_cast<double>(sp - sn))) * scale;
      std::span<Real> gxp, gxn;
      if (visual) {
        gxp = states[slot(t.positive)].grad_visual;
        gxn = states[slot(t.negative)].grad_visual;
      }
      score_backward<Real>(t.user, t.positive, xp, g, rp ? &*rp : nullptr, p, cfg, *grads, gxp);
      score_backward<Real>(t.user, t.negative, xn, -g, rn ? &*rn : nullptr, p, cfg, *grads, gxn);
    }
  }
  loss.pairwise = reduction == LossReduction::kMean ? pair_sum / static_cast<double>(batch.size()) : pair_sum;

  if (grads && visual) {
    for (std::size_t s = 0; s < items.size(); ++s) item_backward(items[s], states[s], p, cfg, d, *grads);
  }

  // Regularization on Theta1 = [U, V, W].
  const double lambda = cfg.lambda1;
  std::vector<UserIndex> users;
  for (const auto& t : batch) users.push_back(t.user);
  sort_unique(users);
  auto reg_rows = [&](const Matrix<Real>& m, Matrix<Real>* gm, const auto& rows) {
    double s = 0;
    for (auto r : rows) {
      s += static_cast<double>(squared_norm<Real>(m.row(r)));
      if (gm) axpy(static_cast<Real>(2 * lambda), m.row(r), gm->row(r));
    }
    return s;
  };
  auto gptr = [grads](TensorId id) { return grads ? &(*grads)[id] : nullptr; };
  double touched = reg_rows(p.user_latent(), gptr(TensorId::kUserLatent), users) +
                   reg_rows(p.item_latent(), gptr(TensorId::kItemLatent), items);
  double full = static_cast<double>(squared_norm<Real>(p.user_latent().data())) +
                static_cast<double>(squared_norm<Real>(p.item_latent().data()));
  if (visual) {
    touched += reg_rows(p.user_visual(), gptr(TensorId::kUserVisual), users);
    full += static_cast<double>(squared_norm<Real>(p.user_visual().data()));
  }
  loss.reg_touched = lambda * touched;
  loss.reg_full = lambda * full;
  return loss;
}

}  // namespace detail

template <class Real>
BatchLoss batch_loss(std::span<const TrainTriple> batch, const ParamTensors<Real>& p, const ModelConfig& cfg,
                     const Dataset& d, LossReduction reduction = LossReduction::kMean) {
  return detail::forward_backward<Real>(batch, p, cfg, d, reduction, nullptr);
}

/// Exact gradient of batch_loss(...).objective(); inactive tensors get zeros.
template <class Real>
GradientSet<Real> batch_gradients(std::span<const TrainTriple> batch, const ParamTensors<Real>& p,
                                  const ModelConfig& cfg, const Dataset& d,
                                  LossReduction reduction = LossReduction::kMean, BatchLoss* loss_out = nullptr) {
  GradientSet<Real> g = p.zeros_like();
  const BatchLoss l = detail::forward_backward<Real>(batch, p, cfg, d, reduction, &g);
  if (loss_out) *loss_out = l;
  return g;
}

// ---- optimizer --------------------------------------------------------------

template <class Real>
struct AdamState {
  ParamTensors<Real> first_moment;
  ParamTensors<Real> second_moment;
  std::size_t step = 0;

  static AdamState zeros_like(const ParamTensors<Real>& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

/// One bias-corrected Adam update of the active tensors; advances state.step.
template <class Real>
void adam_step(ParamTensors<Real>& p, const GradientSet<Real>& g, AdamState<Real>& state, const OptimizerHyper& h,
               const ModelConfig& cfg) {
  const std::size_t t = ++state.step;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  const auto active = active_tensors(cfg);
  for (std::size_t k = 0; k < kNumTensors; ++k) {
    if (!active[k]) continue;
    auto& w = p.t[k].data();
    const auto& gr = g.t[k].data();
    auto& m = state.first_moment.t[k].data();
    auto& v = state.second_moment.t[k].data();
    for (std::size_t q = 0; q < w.size(); ++q) {
      const double gq = gr[q];
      const double mq = h.beta1 * m[q] + (1.0 - h.beta1) * gq;
      const double vq = h.beta2 * v[q] + (1.0 - h.beta2) * gq * gq;
      m[q] = static_cast<Real>(mq);
      v[q] = static_cast<Real>(vq);
      const double m_hat = mq / bc1;
      const double v_hat = vq / bc2;
      w[q] -= static_cast<Real>(h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon));
    }
  }
}

// ---- fit --------------------------------------------------------------------

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_hr = 0.0;  // at OptimizerHyper::valid_k
  double valid_ndcg = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;  // epoch 0 = initial parameters
  std::size_t best_epoch = 0;
  std::size_t valid_k = 10;
  bool stopped_early = false;
  std::string checkpoint;  // set by the caller once parameters are saved
};

template <class Real>
struct FitResult {
  ParamTensors<Real> params;
  TrainLog log;
};

/// Mini-batch Adam on the BPR objective with fresh negatives every epoch.
/// Keeps the parameters of the epoch with the best validation HR@valid_k
/// and stops after early_stop_patience epochs without improvement.
template <class Real>
FitResult<Real> fit(const SplitDataset& s, const ModelConfig& cfg, const OptimizerHyper& h,
                    const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  validate(cfg);
  validate(h);
  if (s.train.empty()) throw EmptyDatasetError("fit: empty training split");
  const Dataset& d = s.base;
  FitResult<Real> out;
  out.params = init_params<Real>(cfg, ModelShape::of(d));
  out.log.valid_k = h.valid_k;
  if (h.epochs == 0) return out;

  const UserItems train_index(d.num_users(), s.train);
  const UserItems rated(d.num_users(), d.ratings);
  Rng rng(derive_seed(h.seed, "sample"));
  const std::uint64_t valid_seed = derive_seed(h.seed, "valid");
  const std::array<std::size_t, 1> ks{h.valid_k};

  auto validate_params = [&](const ParamTensors<Real>& p, EpochRecord& rec) {
    if (s.validation.empty()) return;
    const Scorer<Real> scorer(p, cfg, d);
    const auto rep = evaluate_item_pairs([&scorer](UserIndex u, ItemIndex i) { return scorer.item(u, i); }, rated,
                                         d.num_items(), s.validation, ks, h.valid_negatives, 1, valid_seed, h.threads);
    rec.valid_hr = rep.per_k[0].hr;
    rec.valid_ndcg = rep.per_k[0].ndcg;
  };
  auto batches = [&](const std::vector<TrainTriple>& triples, auto&& fn) {
    for (std::size_t lo = 0; lo < triples.size(); lo += h.batch_size) {
      const std::size_t hi = std::min(triples.size(), lo + h.batch_size);
      fn(std::span<const TrainTriple>(triples.data() + lo, hi - lo));
    }
  };

  using Clock = std::chrono::steady_clock;
  {
    const auto t0 = Clock::now();
    EpochRecord rec;
    const auto triples = sample_epoch(s.train, train_index, d.num_items(), h.neg_ratio, rng);
    double sum = 0;
    std::size_t nb = 0;
    batches(triples, [&](std::span<const TrainTriple> b) {
      sum += batch_loss<Real>(b, out.params, cfg, d, h.loss_reduction).readout();
      ++nb;
    });
    rec.train_loss = sum / static_cast<double>(nb);
    validate_params(out.params, rec);
    rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    out.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  ParamTensors<Real> params = out.params;
  AdamState<Real> adam = AdamState<Real>::zeros_like(params);
  double best = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= h.epochs; ++epoch) {
    const auto t0 = Clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    const auto triples = sample_epoch(s.train, train_index, d.num_items(), h.neg_ratio, rng);
    double sum = 0;
    std::size_t nb = 0;
    batches(triples, [&](std::span<const TrainTriple> b) {
      BatchLoss l;
      const auto g = batch_gradients<Real>(b, params, cfg, d, h.loss_reduction, &l);
      adam_step(params, g, adam, h, cfg);
      sum += l.readout();
      ++nb;
    });
    rec.train_loss = sum / static_cast<double>(nb);
    validate_params(params, rec);
    rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    out.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (s.validation.empty() || rec.valid_hr > best) {
      best = rec.valid_hr;
      out.params = params;
      out.log.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= h.early_stop_patience) {
      out.log.stopped_early = true;
      break;
    }
  }
  return out;
}

// ---- gradient oracle --------------------------------------------------------

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::string tensor;  // coordinate with the largest error
  std::size_t row = 0;
  std::size_t col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
};

/// Central differences of the batch objective on every active coordinate,
/// or on a random subsample of `max_coords` when there are more.
inline FiniteDiffReport finite_diff_check(const ParamTensors<double>& params, const ModelConfig& cfg, const Dataset& d,
                                          std::span<const TrainTriple> batch, double step,
                                          std::size_t max_coords = 0, std::uint64_t seed = 0,
                                          LossReduction reduction = LossReduction::kMean) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ArgumentError("finite_diff_check: step must be > 0");
  const auto analytic = batch_gradients<double>(batch, params, cfg, d, reduction);
  const auto active = active_tensors(cfg);

  struct Coord {
    std::size_t tensor, index;
  };
  std::vector<Coord> coords;
  for (std::size_t k = 0; k < kNumTensors; ++k) {
    if (!active[k]) continue;
    for (std::size_t q = 0; q < params.t[k].size(); ++q) coords.push_back({k, q});
  }
  if (max_coords > 0 && coords.size() > max_coords) {
    Rng rng(derive_seed(seed, "fdcheck"));
    shuffle(coords, rng);
    coords.resize(max_coords);
  }

  FiniteDiffReport rep;
  ParamTensors<double> p = params;
  for (const auto& c : coords) {
    double& w = p.t[c.tensor].data()[c.index];
    const double saved = w;
    w = saved + step;
    const double up = batch_loss<double>(batch, p, cfg, d, reduction).objective();
    w = saved - step;
    const double down = batch_loss<double>(batch, p, cfg, d, reduction).objective();
    w = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.t[c.tensor].data()[c.index];
    const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    ++rep.coords_checked;
    if (rep.tensor.empty() || rel > rep.max_rel_error) {
      const auto cols = std::max<std::size_t>(1, p.t[c.tensor].cols());
      rep.max_rel_error = rel;
      rep.tensor = std::string(kTensorNames[c.tensor]);
      rep.row = c.index / cols;
      rep.col = c.index % cols;
      rep.analytic = a;
      rep.numeric = numeric;
    }
  }
  return rep;
}

}  // namespace jifr
