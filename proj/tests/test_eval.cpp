#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "jifr/jifr.hpp"
#include "test_util.hpp"

using namespace jifr;

namespace {

// Full-ranking oracle: sort candidates by score descending, the positive
// placed after every candidate with an equal score.
std::pair<double, double> brute_force(const std::vector<double>& scores, std::size_t pos, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (a == pos || b == pos) return b == pos;
    return a < b;
  });
  const std::size_t rank = static_cast<std::size_t>(std::find(order.begin(), order.end(), pos) - order.begin()) + 1;
  if (rank > k) return {0.0, 0.0};
  return {1.0, std::log(2.0) / std::log(static_cast<double>(rank) + 1.0)};
}

SplitDataset uniform_frame_split(std::size_t frames_per_item, std::uint64_t seed) {
  SynthConfig c;
  c.num_users = 300;
  c.num_items = 300;
  c.frames_per_item = frames_per_item;
  c.seed = seed;
  return split_ratings(generate_synthetic(c).dataset, 0.5, 0.1, seed);
}

}  // namespace

TEST(RankMetrics, Examples) {
  const std::vector<double> top = {5.0, 1.0, 2.0, 3.0};
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto m = rank_metrics<double>(top, 0, k);
    EXPECT_TRUE(m.hit);
    EXPECT_EQ(m.ndcg, 1.0);
  }
  const std::vector<double> third = {2.0, 5.0, 3.0, 1.0};
  EXPECT_EQ(rank_of_positive<double>(third, 0), 3u);
  EXPECT_TRUE(rank_metrics<double>(third, 0, 3).hit);
  EXPECT_DOUBLE_EQ(rank_metrics<double>(third, 0, 3).ndcg, 0.5);
  const std::vector<double> fourth = {1.0, 5.0, 3.0, 2.0};
  EXPECT_FALSE(rank_metrics<double>(fourth, 0, 3).hit);
  EXPECT_EQ(rank_metrics<double>(fourth, 0, 3).ndcg, 0.0);
}

TEST(RankMetrics, TiesArePessimistic) {
  const std::vector<double> flat(7, 0.0);
  EXPECT_EQ(rank_of_positive<double>(flat, 3), 7u);
  const std::vector<double> tie = {1.0, 1.0, 0.0};
  EXPECT_EQ(rank_of_positive<double>(tie, 0), 2u);
  EXPECT_EQ(rank_of_positive<double>(tie, 1), 2u);
}

TEST(RankMetrics, Errors) {
  EXPECT_THROW(rank_metrics<double>(std::vector<double>{}, 0, 1), ArgumentError);
  EXPECT_THROW(rank_metrics<double>(std::vector<double>{1.0}, 1, 1), ArgumentError);
  EXPECT_THROW(rank_metrics<double>(std::vector<double>{1.0}, 0, 0), ArgumentError);
}

TEST(ItemProtocol, MatchesBruteForceOnEnumerableInstances) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    // Few enough items that every unrated item becomes a candidate.
    const std::size_t items = 2 + uniform_index(rng, 9);
    const std::size_t users = 1 + uniform_index(rng, 3);
    std::vector<Rating> r;
    for (UserIndex u = 0; u < users; ++u) r.push_back({u, static_cast<ItemIndex>(uniform_index(rng, items))});
    const Dataset d = jifr::testing::ratings_only(users, items, r);
    std::vector<double> table(users * items);
    for (auto& v : table) v = std::floor(uniform01(rng) * 4.0);  // coarse: plenty of ties
    auto score = [&](UserIndex u, ItemIndex i) { return table[u * items + i]; };
    const UserItems rated(users, d.ratings);
    const std::vector<std::size_t> ks = {1, 2, 3, 5, 10};
    const auto rep = evaluate_item_pairs(score, rated, items, d.ratings, ks, 1000, 1, 7);
    for (std::size_t q = 0; q < ks.size(); ++q) {
      double hr = 0, nd = 0;
      for (const auto& x : d.ratings) {
        std::vector<double> s = {score(x.user, x.item)};
        for (ItemIndex i = 0; i < items; ++i) {
          if (!rated.contains(x.user, i)) s.push_back(score(x.user, i));
        }
        const auto [h, n] = brute_force(s, 0, ks[q]);
        hr += h;
        nd += n;
      }
      EXPECT_DOUBLE_EQ(rep.per_k[q].hr, hr / static_cast<double>(d.ratings.size()));
      EXPECT_DOUBLE_EQ(rep.per_k[q].ndcg, nd / static_cast<double>(d.ratings.size()));
    }
    EXPECT_EQ(rep.warnings.size(), 1u);  // fewer than 1000 unrated items
  }
}

TEST(ItemProtocol, SampledCandidatesAreDistinctUnratedItems) {
  Rng rng(1);
  std::vector<char> mark(50, 0);
  const std::vector<ItemIndex> rated = {3, 7, 8, 20};
  std::vector<ItemIndex> out;
  for (std::size_t n : {5u, 20u, 30u, 46u, 60u}) {
    detail::sample_item_candidates(rng, 7, rated, 50, n, mark, out);
    EXPECT_EQ(out.front(), 7u);
    EXPECT_EQ(out.size(), std::min<std::size_t>(n, 46) + 1);
    const std::set<ItemIndex> uniq(out.begin() + 1, out.end());
    EXPECT_EQ(uniq.size(), out.size() - 1);
    for (auto i = out.begin() + 1; i != out.end(); ++i) {
      EXPECT_FALSE(std::binary_search(rated.begin(), rated.end(), *i));
    }
    EXPECT_EQ(std::count(mark.begin(), mark.end(), 1), 0);
  }
}

TEST(ItemProtocol, PropertiesAndDeterminism) {
  SynthConfig c;
  c.num_users = 30;
  c.num_items = 80;
  c.ratings_per_user = 6;
  c.seed = 3;
  const auto s = split_ratings(generate_synthetic(c).dataset, 0.7, 0.1, 3);
  ModelConfig cfg;
  cfg.collab_dim = cfg.visual_dim = 4;
  cfg.seed = 2;
  const auto p = init_params<double>(cfg, ModelShape::of(s.base));
  const std::vector<std::size_t> ks = {1, 2, 5, 10, 20};
  const auto a = evaluate_item_rec(p, s, cfg, ks, 20, 3, 99);
  const auto b = evaluate_item_rec(p, s, cfg, ks, 20, 3, 99, 4);
  for (std::size_t q = 0; q < ks.size(); ++q) {
    EXPECT_EQ(a.per_k[q].hr, b.per_k[q].hr);
    EXPECT_EQ(a.per_k[q].ndcg, b.per_k[q].ndcg);
    EXPECT_EQ(a.per_k[q].hr_std, b.per_k[q].hr_std);
    EXPECT_LE(a.per_k[q].ndcg, a.per_k[q].hr);
    EXPECT_GE(a.per_k[q].hr, 0.0);
    EXPECT_LE(a.per_k[q].hr, 1.0);
    if (q > 0) {
      EXPECT_GE(a.per_k[q].hr, a.per_k[q - 1].hr);
      EXPECT_GE(a.per_k[q].ndcg, a.per_k[q - 1].ndcg);
    }
  }
  EXPECT_GT(a.per_k[2].hr_std, 0.0);
  EXPECT_EQ(a.repeats, 3u);
  EXPECT_EQ(a.negatives_per_positive, 20u);
  EXPECT_EQ(a.num_pairs, s.test.size());
  const auto other = evaluate_item_rec(p, s, cfg, ks, 20, 3, 100);
  EXPECT_NE(other.per_k[4].ndcg, a.per_k[4].ndcg);
}

TEST(ItemProtocol, InvariantUnderIncreasingTransforms) {
  Rng rng(4);
  const Dataset d = jifr::testing::ratings_only(5, 40, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 6}, {2, 9}});
  std::vector<double> table(5 * 40);
  for (auto& v : table) v = uniform01(rng) - 0.5;
  const UserItems rated(5, d.ratings);
  const std::vector<std::size_t> ks = {1, 3, 10};
  auto run = [&](auto f) {
    return evaluate_item_pairs([&](UserIndex u, ItemIndex i) { return f(table[u * 40 + i]); }, rated, 40, d.ratings,
                               ks, 15, 4, 5);
  };
  const auto base = run([](double x) { return x; });
  for (const auto& rep : {run([](double x) { return 2 * x + 1; }), run([](double x) { return std::tanh(x); })}) {
    for (std::size_t q = 0; q < ks.size(); ++q) {
      EXPECT_EQ(rep.per_k[q].hr, base.per_k[q].hr);
      EXPECT_EQ(rep.per_k[q].ndcg, base.per_k[q].ndcg);
    }
  }
}

TEST(ItemProtocol, PlantedOracleRanksItsOnlyPositiveFirst) {
  SynthConfig c;
  c.num_users = 100;
  c.num_items = 120;
  c.ratings_per_user = 1;
  c.seed = 6;
  const auto syn = generate_synthetic(c);
  const auto s = split_ratings(syn.dataset, 0.5, 0.1, 6);
  const auto rep = evaluate_item_rec(syn.planted.params, s, syn.planted.config, std::vector<std::size_t>{1}, 1000, 2, 1);
  EXPECT_EQ(rep.at(1).hr, 1.0);
  EXPECT_EQ(rep.at(1).ndcg, 1.0);
}

TEST(ItemProtocol, Errors) {
  SplitDataset s;
  s.base = jifr::testing::ratings_only(1, 2, {{0, 0}});
  ModelConfig cfg;
  const auto p = init_params<double>(cfg, ModelShape::of(s.base));
  EXPECT_THROW(evaluate_item_rec(p, s, cfg, std::vector<std::size_t>{1}, 10, 1, 0), ArgumentError);
  s.test = {{0, 0}};
  EXPECT_THROW(evaluate_item_rec(p, s, cfg, std::vector<std::size_t>{}, 10, 1, 0), ArgumentError);
  EXPECT_THROW(evaluate_item_rec(p, s, cfg, std::vector<std::size_t>{0}, 10, 1, 0), ArgumentError);
  EXPECT_THROW(evaluate_item_rec(p, s, cfg, std::vector<std::size_t>{1}, 10, 0, 0), ArgumentError);
}

// ---- frames --------------------------------------------------------------------

TEST(FrameProtocol, PlantedOracleIsPerfect) {
  SynthConfig c;
  c.seed = 7;
  const auto syn = generate_synthetic(c);
  const auto s = split_ratings(syn.dataset, 0.7, 0.1, 7);
  const auto rep = evaluate_frame_rec(syn.planted.params, s, syn.planted.config, std::vector<std::size_t>{1, 3});
  EXPECT_EQ(rep.at(1).hr, 1.0);
  EXPECT_EQ(rep.at(1).ndcg, 1.0);
  EXPECT_EQ(rep.num_pairs, s.frame_test.size());
}

TEST(FrameProtocol, SingletonItems) {
  SynthConfig c;
  c.num_users = 20;
  c.num_items = 30;
  c.frames_per_item = 1;
  c.ratings_per_user = 5;
  const auto syn = generate_synthetic(c);
  const auto s = split_ratings(syn.dataset, 0.7, 0.1, 1);
  ModelConfig cfg;
  const auto p = init_params<double>(cfg, ModelShape::of(s.base));
  const auto rep = evaluate_frame_rec(p, s, cfg, std::vector<std::size_t>{1});
  EXPECT_EQ(rep.at(1).hr, 1.0);
  EXPECT_EQ(rep.singleton_pairs, s.frame_test.size());
  EXPECT_EQ(rep.warnings.size(), 1u);
  EXPECT_THROW(evaluate_frame_rec(p, s, cfg, std::vector<std::size_t>{1}, true), ArgumentError);
}

TEST(FrameProtocol, Errors) {
  SplitDataset s = uniform_frame_split(5, 1);
  ModelConfig cfg;
  const auto p = init_params<double>(cfg, ModelShape::of(s.base));
  auto off = cfg;
  off.visual_mode = VisualMode::kOff;
  off.fusion_mode = FusionMode::kSum;
  EXPECT_THROW(evaluate_frame_rec(p, s, off, std::vector<std::size_t>{1}), UnsupportedTaskError);
  s.frame_test.clear();
  EXPECT_THROW(evaluate_frame_rec(p, s, cfg, std::vector<std::size_t>{1}), ArgumentError);
  EXPECT_THROW(random_frame_baseline(s, std::vector<std::size_t>{1}, 0), ArgumentError);
}

TEST(RandomBaseline, UniformFiveFrames) {
  const auto s = uniform_frame_split(5, 2);
  ASSERT_GE(s.frame_test.size(), 2000u);
  const std::vector<std::size_t> ks = {1, 2, 3, 5, 8};
  const auto rep = random_frame_baseline(s, ks, 13);
  EXPECT_NEAR(rep.at(1).hr, 0.2, 0.03);
  EXPECT_NEAR(rep.at(2).hr, 0.4, 0.03);
  EXPECT_NEAR(rep.at(3).hr, 0.6, 0.03);
  EXPECT_EQ(rep.at(5).hr, 1.0);
  EXPECT_EQ(rep.at(8).hr, 1.0);
  const auto again = random_frame_baseline(s, ks, 13);
  EXPECT_EQ(again.at(1).hr, rep.at(1).hr);
  EXPECT_EQ(rep.seed, 13u);
}

TEST(RandomBaseline, MixedFrameCountsMatchClosedForm) {
  // Regroup frames so items carry 1..6 frames.
  SplitDataset s = uniform_frame_split(3, 3);
  Dataset& d = s.base;
  Rng rng(5);
  for (auto& fr : d.item_frames) fr.clear();
  for (FrameIndex k = 0; k < d.num_frames(); ++k) {
    const auto i = static_cast<ItemIndex>(k < d.num_items() ? k : uniform_index(rng, d.num_items()));
    d.frame_item[k] = i;
    d.item_frames[i].push_back(k);
  }
  // One liked frame per test pair, the first frame of the test item.
  s.frame_test.clear();
  for (const auto& r : s.test) s.frame_test.push_back({r.user, d.item_frames[r.item].front()});
  ASSERT_GE(s.frame_test.size(), 2000u);
  const std::vector<std::size_t> ks = {1, 2, 3};
  const auto rep = random_frame_baseline(s, ks, 21);
  for (std::size_t k : ks) {
    double expect = 0;
    for (const auto& like : s.frame_test) {
      const double m = static_cast<double>(d.frames_of(d.frame_item[like.frame]).size());
      expect += std::min(static_cast<double>(k) / m, 1.0);
    }
    expect /= static_cast<double>(s.frame_test.size());
    EXPECT_NEAR(rep.at(k).hr, expect, 0.03) << "K=" << k;
  }
}
