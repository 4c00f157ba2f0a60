#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "data.hpp"
#include "error.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace jifr {

enum class EvalTask { kItem, kFrame };

inline std::string_view to_string(EvalTask t) { return t == EvalTask::kItem ? "item" : "frame"; }

struct RankMetrics {
  bool hit = false;
  double ndcg = 0.0;
};

/// 1-based rank of the positive; candidates tied with it are ranked ahead
/// of it, so an all-equal scorer gets the worst rank.
template <class Real>
std::size_t rank_of_positive(std::span<const Real> scores, std::size_t positive) {
  if (scores.empty()) throw ArgumentError("rank_metrics: empty candidate set");
  if (positive >= scores.size()) throw ArgumentError("rank_metrics: positive index out of range");
  const Real s = scores[positive];
  std::size_t ahead = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j != positive && !(scores[j] < s)) ++ahead;
  }
  return ahead + 1;
}

inline RankMetrics metrics_at_rank(std::size_t rank, std::size_t k) {
  if (rank > k) return {};
  return {true, 1.0 / std::log2(static_cast<double>(rank) + 1.0)};
}

template <class Real>
RankMetrics rank_metrics(std::span<const Real> scores, std::size_t positive, std::size_t k) {
  if (k < 1) throw ArgumentError("rank_metrics: K must be >= 1");
  return metrics_at_rank(rank_of_positive(scores, positive), k);
}

struct MetricsAtK {
  std::size_t k = 0;
  double hr = 0.0;
  double ndcg = 0.0;
  double hr_std = 0.0;  // across repeats (population)
  double ndcg_std = 0.0;
};

struct EvalReport {
  EvalTask task = EvalTask::kItem;
  std::vector<MetricsAtK> per_k;
  std::size_t repeats = 1;
  std::size_t negatives_per_positive = 0;
  std::uint64_t seed = 0;
  std::size_t num_pairs = 0;
  std::size_t singleton_pairs = 0;
  std::vector<std::string> warnings;

  const MetricsAtK& at(std::size_t k) const {
    for (const auto& m : per_k) {
      if (m.k == k) return m;
    }
    throw ArgumentError("report has no K=" + std::to_string(k));
  }
};

namespace detail {

/// Runs fn(index) for index in [0, n) over up to `threads` workers. Each
/// index writes its own output slot, so results do not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, std::size_t{0});
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi, t] {
      for (std::size_t i = lo; i < hi; ++i) fn(i, t);
    });
  }
  for (auto& th : pool) th.join();
}

inline void check_ks(std::span<const std::size_t> ks) {
  if (ks.empty()) throw ArgumentError("empty K list");
  for (auto k : ks) {
    if (k < 1) throw ArgumentError("K must be >= 1");
  }
}

/// Mean over pairs within each repeat, then mean and stddev over repeats.
inline void summarize(EvalReport& rep, std::span<const std::size_t> ks, const std::vector<std::vector<double>>& hr,
                      const std::vector<std::vector<double>>& ndcg) {
  const double n = static_cast<double>(hr.size());
  for (std::size_t q = 0; q < ks.size(); ++q) {
    MetricsAtK m;
    m.k = ks[q];
    for (std::size_t r = 0; r < hr.size(); ++r) {
      m.hr += hr[r][q] / n;
      m.ndcg += ndcg[r][q] / n;
    }
    for (std::size_t r = 0; r < hr.size(); ++r) {
      m.hr_std += (hr[r][q] - m.hr) * (hr[r][q] - m.hr) / n;
      m.ndcg_std += (ndcg[r][q] - m.ndcg) * (ndcg[r][q] - m.ndcg) / n;
    }
    m.hr_std = std::sqrt(m.hr_std);
    m.ndcg_std = std::sqrt(m.ndcg_std);
    rep.per_k.push_back(m);
  }
}

/// Candidate list for one test pair: the positive first, then sampled
/// unrated items. `mark` is an all-zero scratch array of length num_items.
inline void sample_item_candidates(Rng& rng, ItemIndex positive, std::span<const ItemIndex> rated, std::size_t num_items,
                                   std::size_t n_negatives, std::vector<char>& mark, std::vector<ItemIndex>& out) {
  out.clear();
  out.push_back(positive);
  const std::size_t unrated = num_items - rated.size();
  if (unrated <= n_negatives) {
    for (ItemIndex i = 0; i < num_items; ++i) {
      if (!std::binary_search(rated.begin(), rated.end(), i)) out.push_back(i);
    }
    return;
  }
  if (unrated >= 2 * n_negatives) {
    for (ItemIndex i : rated) mark[i] = 1;
    while (out.size() < n_negatives + 1) {
      const auto i = static_cast<ItemIndex>(uniform_index(rng, num_items));
      if (mark[i]) continue;
      mark[i] = 1;
      out.push_back(i);
    }
    for (ItemIndex i : rated) mark[i] = 0;
    for (std::size_t k = 1; k < out.size(); ++k) mark[out[k]] = 0;
    return;
  }
  std::vector<ItemIndex> pool;
  pool.reserve(unrated);
  for (ItemIndex i = 0; i < num_items; ++i) {
    if (!std::binary_search(rated.begin(), rated.end(), i)) pool.push_back(i);
  }
  for (std::size_t k = 0; k < n_negatives; ++k) {
    std::swap(pool[k], pool[k + uniform_index(rng, pool.size() - k)]);
    out.push_back(pool[k]);
  }
}

}  // namespace detail

/// Sampled-negative protocol over an arbitrary list of (user, item) pairs.
/// `score(user, item)` must be safe to call concurrently. Negatives are items
/// the user has not rated in `rated` (all splits).
template <class ScoreFn>
EvalReport evaluate_item_pairs(ScoreFn&& score, const UserItems& rated, std::size_t num_items,
                               std::span<const Rating> pairs, std::span<const std::size_t> ks,
                               std::size_t n_negatives, std::size_t repeats, std::uint64_t seed,
                               std::size_t threads = 1) {
  detail::check_ks(ks);
  if (pairs.empty()) throw ArgumentError("evaluate_item_rec: no pairs to evaluate");
  if (repeats < 1) throw ArgumentError("repeats must be >= 1");
  EvalReport rep;
  rep.task = EvalTask::kItem;
  rep.repeats = repeats;
  rep.negatives_per_positive = n_negatives;
  rep.seed = seed;
  rep.num_pairs = pairs.size();

  std::size_t short_users = 0;
  {
    std::vector<bool> seen(rated.num_users(), false);
    for (const auto& p : pairs) {
      if (!seen[p.user] && num_items - rated.of(p.user).size() < n_negatives) ++short_users;
      seen[p.user] = true;
    }
  }
  if (short_users > 0) {
    rep.warnings.push_back(std::to_string(short_users) + " user(s) have fewer than " + std::to_string(n_negatives) +
                           " unrated items; all unrated items used");
  }

  const std::size_t nk = ks.size();
  const std::size_t workers = std::max<std::size_t>(1, threads);
  std::vector<std::vector<char>> marks(workers, std::vector<char>(num_items, 0));
  std::vector<std::vector<double>> hr(repeats, std::vector<double>(nk, 0.0)), nd = hr;
  std::vector<std::size_t> ranks(pairs.size());
  for (std::size_t r = 0; r < repeats; ++r) {
    detail::parallel_for(pairs.size(), workers, [&](std::size_t p, std::size_t worker) {
      Rng rng(derive_seed(seed, r, p));
      std::vector<ItemIndex> cand;
      detail::sample_item_candidates(rng, pairs[p].item, rated.of(pairs[p].user), num_items, n_negatives,
                                     marks[worker], cand);
      std::vector<double> s(cand.size());
      for (std::size_t c = 0; c < cand.size(); ++c) s[c] = static_cast<double>(score(pairs[p].user, cand[c]));
      ranks[p] = rank_of_positive<double>(s, 0);
    });
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      for (std::size_t q = 0; q < nk; ++q) {
        const auto m = metrics_at_rank(ranks[p], ks[q]);
        hr[r][q] += m.hit ? 1.0 : 0.0;
        nd[r][q] += m.ndcg;
      }
    }
    for (std::size_t q = 0; q < nk; ++q) {
      hr[r][q] /= static_cast<double>(pairs.size());
      nd[r][q] /= static_cast<double>(pairs.size());
    }
  }
  detail::summarize(rep, ks, hr, nd);
  return rep;
}

/// Item recommendation on the test split: each test pair is ranked against
/// `n_negatives` sampled unrated items, repeated `repeats` times.
template <class Real>
EvalReport evaluate_item_rec(const ParamTensors<Real>& p, const SplitDataset& s, const ModelConfig& cfg,
                             std::span<const std::size_t> ks, std::size_t n_negatives, std::size_t repeats,
                             std::uint64_t seed, std::size_t threads = 1) {
  if (s.test.empty()) throw ArgumentError("evaluate_item_rec: empty test split");
  const Scorer<Real> scorer(p, cfg, s.base);
  const UserItems rated(s.base.num_users(), s.base.ratings);
  return evaluate_item_pairs([&scorer](UserIndex u, ItemIndex i) { return scorer.item(u, i); }, rated,
                             s.base.num_items(), s.test, ks, n_negatives, repeats, seed, threads);
}

/// Within-item frame ranking: every (user, liked frame) is ranked against
/// all frames of its parent item. `score(user, frame, pair_index)`.
template <class ScoreFn>
EvalReport evaluate_frame_pairs(ScoreFn&& score, const Dataset& d, std::span<const FrameLike> likes,
                                std::span<const std::size_t> ks, bool exclude_singletons = false) {
  detail::check_ks(ks);
  EvalReport rep;
  rep.task = EvalTask::kFrame;
  std::vector<std::vector<double>> hr(1, std::vector<double>(ks.size(), 0.0)), nd = hr;
  std::size_t used = 0;
  for (std::size_t p = 0; p < likes.size(); ++p) {
    const auto& like = likes[p];
    const auto frames = d.frames_of(d.frame_item[like.frame]);
    if (frames.size() == 1) {
      ++rep.singleton_pairs;
      if (exclude_singletons) continue;
    }
    std::vector<double> s(frames.size());
    std::size_t pos = 0;
    for (std::size_t j = 0; j < frames.size(); ++j) {
      if (frames[j] == like.frame) pos = j;
      s[j] = static_cast<double>(score(like.user, frames[j], p));
    }
    const std::size_t rank = rank_of_positive<double>(s, pos);
    for (std::size_t q = 0; q < ks.size(); ++q) {
      const auto m = metrics_at_rank(rank, ks[q]);
      hr[0][q] += m.hit ? 1.0 : 0.0;
      nd[0][q] += m.ndcg;
    }
    ++used;
  }
  if (used == 0) throw ArgumentError("evaluate_frame_rec: no frame test pairs");
  for (std::size_t q = 0; q < ks.size(); ++q) {
    hr[0][q] /= static_cast<double>(used);
    nd[0][q] /= static_cast<double>(used);
  }
  rep.num_pairs = used;
  if (rep.singleton_pairs > 0) {
    rep.warnings.push_back(std::to_string(rep.singleton_pairs) + " pair(s) on single-frame items" +
                           (exclude_singletons ? " excluded" : " included (trivial hits)"));
  }
  detail::summarize(rep, ks, hr, nd);
  return rep;
}

template <class Real>
EvalReport evaluate_frame_rec(const ParamTensors<Real>& p, const SplitDataset& s, const ModelConfig& cfg,
                              std::span<const std::size_t> ks, bool exclude_singletons = false) {
  if (cfg.visual_mode == VisualMode::kOff) throw UnsupportedTaskError("frame recommendation needs a visual branch");
  if (s.frame_test.empty()) throw ArgumentError("evaluate_frame_rec: empty frame test set");
  return evaluate_frame_pairs(
      [&](UserIndex u, FrameIndex k, std::size_t) { return predict_frame_score(u, k, p, cfg, s.base); }, s.base,
      s.frame_test, ks, exclude_singletons);
}

/// Same protocol with i.i.d. uniform scores.
inline EvalReport random_frame_baseline(const SplitDataset& s, std::span<const std::size_t> ks, std::uint64_t seed,
                                        bool exclude_singletons = false) {
  if (s.frame_test.empty()) throw ArgumentError("random_frame_baseline: empty frame test set");
  std::size_t last = SIZE_MAX;
  Rng rng;
  auto rep = evaluate_frame_pairs(
      [&](UserIndex, FrameIndex, std::size_t pair) {
        if (pair != last) {
          rng.seed(derive_seed(seed, pair));
          last = pair;
        }
        return uniform01(rng);
      },
      s.base, s.frame_test, ks, exclude_singletons);
  rep.seed = seed;
  return rep;
}

}  // namespace jifr
