#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace jifr {

using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;
using FrameIndex = std::uint32_t;

struct Rating {
  UserIndex user;
  ItemIndex item;
  auto operator<=>(const Rating&) const = default;
};

struct FrameLike {
  UserIndex user;
  FrameIndex frame;
  auto operator<=>(const FrameLike&) const = default;
};

/// Users, items, frames and frame features with dense indices. Original
/// string ids are kept in sorted order, so dense index i maps to the i-th
/// smallest original id.
struct Dataset {
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<std::string> frame_ids;

  std::vector<Rating> ratings;                       // sorted, unique
  std::vector<std::vector<FrameIndex>> item_frames;  // ascending frame index
  std::vector<ItemIndex> frame_item;
  std::size_t feature_dim = 0;
  std::vector<double> features;  // num_frames x feature_dim, row-major

  // Fine-grained ground truth, only ever used to build frame_test.
  std::vector<FrameLike> frame_likes;  // sorted, unique

  std::size_t num_users() const { return user_ids.size(); }
  std::size_t num_items() const { return item_ids.size(); }
  std::size_t num_frames() const { return frame_ids.size(); }

  std::span<const double> feature(FrameIndex k) const {
    return {features.data() + static_cast<std::size_t>(k) * feature_dim, feature_dim};
  }

  std::span<const FrameIndex> frames_of(ItemIndex i) const { return item_frames[i]; }

  /// Digest of the id mapping; checkpoints record it to catch a model being
  /// applied to a differently indexed dataset.
  std::uint64_t id_digest() const {
    std::uint64_t h = fnv1a("jifr-ids");
    auto mix = [&h](const std::vector<std::string>& ids, std::string_view tag) {
      h = fnv1a(tag, h);
      for (const auto& s : ids) {
        h = fnv1a(s, h);
        h = fnv1a(std::string_view("\x1f", 1), h);
      }
    };
    mix(user_ids, "u");
    mix(item_ids, "i");
    mix(frame_ids, "f");
    return h;
  }
};

/// Throws IntegrityError if any structural invariant is violated.
inline void validate(const Dataset& d) {
  const auto nu = d.num_users(), ni = d.num_items(), nf = d.num_frames();
  if (d.item_frames.size() != ni) throw IntegrityError("item_frames size mismatch");
  if (d.frame_item.size() != nf) throw IntegrityError("frame_item size mismatch");
  if (d.features.size() != nf * d.feature_dim) throw IntegrityError("feature matrix size mismatch");
  for (std::size_t i = 0; i < ni; ++i) {
    for (FrameIndex k : d.item_frames[i]) {
      if (k >= nf || d.frame_item[k] != i) throw IntegrityError("frame/item map inconsistent for item " + d.item_ids[i]);
    }
  }
  std::size_t total = 0;
  for (const auto& fr : d.item_frames) total += fr.size();
  if (total != nf) throw IntegrityError("every frame must belong to exactly one item");
  for (std::size_t r = 0; r < d.ratings.size(); ++r) {
    const auto& x = d.ratings[r];
    if (x.user >= nu || x.item >= ni) throw IntegrityError("rating id out of range");
    if (r > 0 && !(d.ratings[r - 1] < x)) throw IntegrityError("ratings must be sorted and unique");
    if (d.item_frames[x.item].empty()) throw IntegrityError("rated item " + d.item_ids[x.item] + " has no frames");
  }
  for (const auto& like : d.frame_likes) {
    if (like.user >= nu || like.frame >= nf) throw IntegrityError("frame like id out of range");
  }
  for (double v : d.features) {
    if (!std::isfinite(v)) throw IntegrityError("non-finite frame feature");
  }
}

/// Per-user sorted item lists over a set of ratings.
class UserItems {
 public:
  UserItems() = default;
  UserItems(std::size_t num_users, std::span<const Rating> ratings) : items_(num_users) {
    for (const auto& r : ratings) items_[r.user].push_back(r.item);
    for (auto& v : items_) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }

  std::span<const ItemIndex> of(UserIndex u) const { return items_[u]; }
  bool contains(UserIndex u, ItemIndex i) const { return std::binary_search(items_[u].begin(), items_[u].end(), i); }
  std::size_t num_users() const { return items_.size(); }

 private:
  std::vector<std::vector<ItemIndex>> items_;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Calls fn(tokens, line_number) for every non-comment, non-blank line.
template <class Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v(line);
    if (v.empty() || v.front() == '#') continue;
    auto toks = split_ws(v);
    if (toks.empty()) continue;
    fn(toks, lineno);
  }
}

inline std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> out;
  for_each_record(path, [&](const std::vector<std::string_view>& t, std::size_t lineno) {
    if (t.size() != 2) throw ParseError(path.string(), lineno, "expected 2 fields, got " + std::to_string(t.size()));
    out.emplace_back(std::string(t[0]), std::string(t[1]));
  });
  return out;
}

inline double parse_double(std::string_view tok, const std::string& file, std::size_t lineno) {
  double v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    throw ParseError(file, lineno, "not a number: '" + std::string(tok) + "'");
  }
  return v;
}

inline std::unordered_map<std::string, std::uint32_t> index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::uint32_t> m;
  m.reserve(ids.size());
  for (std::uint32_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], i);
  return m;
}

inline std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline void sort_unique(auto& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace detail

/// Reads the tab-separated ratings, frames and features files (and an
/// optional frame-likes file) into a densely re-indexed Dataset. Items are
/// the union of rated items and items named in the frames file.
inline Dataset load_dataset(const std::filesystem::path& ratings_path, const std::filesystem::path& frames_path,
                            const std::filesystem::path& features_path,
                            const std::optional<std::filesystem::path>& likes_path = std::nullopt) {
  const auto raw_ratings = detail::read_pairs(ratings_path);
  const auto raw_frames = detail::read_pairs(frames_path);

  std::vector<std::string> users, items, frames;
  for (const auto& [u, i] : raw_ratings) {
    users.push_back(u);
    items.push_back(i);
  }
  for (const auto& [f, i] : raw_frames) {
    frames.push_back(f);
    items.push_back(i);
  }

  Dataset d;
  d.user_ids = detail::sorted_unique(std::move(users));
  d.item_ids = detail::sorted_unique(std::move(items));
  d.frame_ids = detail::sorted_unique(std::move(frames));
  if (d.frame_ids.size() != raw_frames.size()) {
    throw IntegrityError(frames_path.string() + ": a frame is listed more than once");
  }

  const auto uidx = detail::index_of(d.user_ids);
  const auto iidx = detail::index_of(d.item_ids);
  const auto fidx = detail::index_of(d.frame_ids);

  d.ratings.reserve(raw_ratings.size());
  for (const auto& [u, i] : raw_ratings) d.ratings.push_back({uidx.at(u), iidx.at(i)});
  detail::sort_unique(d.ratings);

  d.item_frames.assign(d.num_items(), {});
  d.frame_item.assign(d.num_frames(), 0);
  for (const auto& [f, i] : raw_frames) {
    const FrameIndex k = fidx.at(f);
    d.frame_item[k] = iidx.at(i);
  }
  for (FrameIndex k = 0; k < d.num_frames(); ++k) d.item_frames[d.frame_item[k]].push_back(k);

  std::vector<bool> seen(d.num_frames(), false);
  const std::string fpath = features_path.string();
  bool have_dim = false;
  detail::for_each_record(features_path, [&](const std::vector<std::string_view>& t, std::size_t lineno) {
    if (t.size() < 2) throw ParseError(fpath, lineno, "expected frame id followed by at least one value");
    const std::size_t dim = t.size() - 1;
    if (!have_dim) {
      d.feature_dim = dim;
      d.features.assign(d.num_frames() * dim, 0.0);
      have_dim = true;
    } else if (dim != d.feature_dim) {
      throw IntegrityError(fpath + ":" + std::to_string(lineno) + ": feature dimension " + std::to_string(dim) +
                           " != " + std::to_string(d.feature_dim));
    }
    auto it = fidx.find(std::string(t[0]));
    if (it == fidx.end()) {
      throw IntegrityError(fpath + ":" + std::to_string(lineno) + ": features for unknown frame " + std::string(t[0]));
    }
    if (seen[it->second]) throw IntegrityError(fpath + ":" + std::to_string(lineno) + ": duplicate frame " + std::string(t[0]));
    seen[it->second] = true;
    double* row = d.features.data() + static_cast<std::size_t>(it->second) * dim;
    for (std::size_t c = 0; c < dim; ++c) row[c] = detail::parse_double(t[c + 1], fpath, lineno);
  });
  for (FrameIndex k = 0; k < d.num_frames(); ++k) {
    if (!seen[k]) throw IntegrityError("frame " + d.frame_ids[k] + " has no feature vector");
  }

  if (likes_path) {
    for (const auto& [u, f] : detail::read_pairs(*likes_path)) {
      auto ui = uidx.find(u);
      auto fi = fidx.find(f);
      if (ui == uidx.end() || fi == fidx.end()) {
        throw IntegrityError(likes_path->string() + ": like (" + u + ", " + f + ") references an unknown user or frame");
      }
      d.frame_likes.push_back({ui->second, fi->second});
    }
    detail::sort_unique(d.frame_likes);
  }

  validate(d);
  return d;
}

/// Loads `<dir>/ratings.tsv`, `frames.tsv`, `features.tsv` and, when present,
/// `frame_likes.tsv`.
inline Dataset load_dataset_dir(const std::filesystem::path& dir) {
  std::optional<std::filesystem::path> likes;
  if (std::filesystem::exists(dir / "frame_likes.tsv")) likes = dir / "frame_likes.tsv";
  return load_dataset(dir / "ratings.tsv", dir / "frames.tsv", dir / "features.tsv", likes);
}

/// Keeps only the flagged users and items (and the frames of kept items),
/// re-indexing densely in the original sorted order.
inline Dataset restrict(const Dataset& d, const std::vector<bool>& keep_user, const std::vector<bool>& keep_item) {
  Dataset out;
  out.feature_dim = d.feature_dim;
  std::vector<std::uint32_t> new_user(d.num_users(), UINT32_MAX), new_item(d.num_items(), UINT32_MAX),
      new_frame(d.num_frames(), UINT32_MAX);
  for (std::size_t u = 0; u < d.num_users(); ++u) {
    if (keep_user[u]) {
      new_user[u] = static_cast<std::uint32_t>(out.user_ids.size());
      out.user_ids.push_back(d.user_ids[u]);
    }
  }
  for (std::size_t i = 0; i < d.num_items(); ++i) {
    if (keep_item[i]) {
      new_item[i] = static_cast<std::uint32_t>(out.item_ids.size());
      out.item_ids.push_back(d.item_ids[i]);
    }
  }
  out.item_frames.assign(out.num_items(), {});
  for (FrameIndex k = 0; k < d.num_frames(); ++k) {
    const ItemIndex i = d.frame_item[k];
    if (!keep_item[i]) continue;
    const auto nk = static_cast<FrameIndex>(out.frame_ids.size());
    new_frame[k] = nk;
    out.frame_ids.push_back(d.frame_ids[k]);
    out.frame_item.push_back(new_item[i]);
    out.item_frames[new_item[i]].push_back(nk);
    auto f = d.feature(k);
    out.features.insert(out.features.end(), f.begin(), f.end());
  }
  for (const auto& r : d.ratings) {
    if (keep_user[r.user] && keep_item[r.item]) out.ratings.push_back({new_user[r.user], new_item[r.item]});
  }
  for (const auto& l : d.frame_likes) {
    if (keep_user[l.user] && new_frame[l.frame] != UINT32_MAX) out.frame_likes.push_back({new_user[l.user], new_frame[l.frame]});
  }
  return out;
}

/// Iteratively drops users and items with fewer than `min_count` ratings
/// until nothing changes. Unrated items are dropped as well.
inline Dataset prune_dataset(const Dataset& d, std::size_t min_count) {
  if (min_count < 1) throw ArgumentError("min_count must be >= 1");
  std::vector<bool> keep_user(d.num_users(), true), keep_item(d.num_items(), true);
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::size_t> uc(d.num_users(), 0), ic(d.num_items(), 0);
    for (const auto& r : d.ratings) {
      if (keep_user[r.user] && keep_item[r.item]) {
        ++uc[r.user];
        ++ic[r.item];
      }
    }
    for (std::size_t u = 0; u < uc.size(); ++u) {
      if (keep_user[u] && uc[u] < min_count) {
        keep_user[u] = false;
        changed = true;
      }
    }
    for (std::size_t i = 0; i < ic.size(); ++i) {
      if (keep_item[i] && ic[i] < min_count) {
        keep_item[i] = false;
        changed = true;
      }
    }
  }
  Dataset out = restrict(d, keep_user, keep_item);
  if (out.ratings.empty()) {
    throw EmptyDatasetError("no ratings survive pruning at min_count=" + std::to_string(min_count));
  }
  return out;
}

struct SplitDataset {
  Dataset base;
  std::vector<Rating> train;  // each sorted
  std::vector<Rating> validation;
  std::vector<Rating> test;
  std::vector<FrameLike> frame_test;
  std::vector<UserIndex> cold_users;  // users with no training rating
  std::vector<std::string> warnings;
};

namespace detail {

inline void finish_split(SplitDataset& s) {
  sort_unique(s.train);
  sort_unique(s.validation);
  sort_unique(s.test);
  const Dataset& d = s.base;
  for (const auto& like : d.frame_likes) {
    if (std::binary_search(s.test.begin(), s.test.end(), Rating{like.user, d.frame_item[like.frame]})) {
      s.frame_test.push_back(like);
    }
  }
  std::vector<bool> has_train(d.num_users(), false);
  for (const auto& r : s.train) has_train[r.user] = true;
  for (UserIndex u = 0; u < d.num_users(); ++u) {
    if (!has_train[u]) s.cold_users.push_back(u);
  }
  if (!s.cold_users.empty()) {
    s.warnings.push_back(std::to_string(s.cold_users.size()) +
                         " user(s) have no training ratings and are evaluated cold");
  }
}

inline std::size_t floor_count(std::size_t n, double frac) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
}

}  // namespace detail

/// Random partition of the ratings. Train gets floor(n * train_frac),
/// validation floor(n * valid_frac), test the rest. With `stratified` the
/// same rule is applied to each user's ratings separately.
inline SplitDataset split_ratings(const Dataset& d, double train_frac, double valid_frac, std::uint64_t seed,
                                  bool stratified = false) {
  if (!(train_frac > 0.0) || !(valid_frac > 0.0) || !(train_frac + valid_frac < 1.0)) {
    throw ArgumentError("split fractions must satisfy 0 < train, 0 < valid, train + valid < 1");
  }
  SplitDataset s;
  s.base = d;
  Rng rng(derive_seed(seed, "split"));

  auto assign = [&](std::vector<Rating> group) {
    shuffle(group, rng);
    const std::size_t n_train = detail::floor_count(group.size(), train_frac);
    const std::size_t n_valid = detail::floor_count(group.size(), valid_frac);
    for (std::size_t k = 0; k < group.size(); ++k) {
      if (k < n_train) {
        s.train.push_back(group[k]);
      } else if (k < n_train + n_valid) {
        s.validation.push_back(group[k]);
      } else {
        s.test.push_back(group[k]);
      }
    }
  };

  if (stratified) {
    std::vector<Rating> group;
    for (std::size_t r = 0; r < d.ratings.size(); ++r) {
      group.push_back(d.ratings[r]);
      if (r + 1 == d.ratings.size() || d.ratings[r + 1].user != d.ratings[r].user) {
        assign(std::move(group));
        group.clear();
      }
    }
  } else {
    assign(d.ratings);
  }
  detail::finish_split(s);
  return s;
}

// ---- writers ---------------------------------------------------------------

inline void write_ratings(const std::filesystem::path& path, const Dataset& d, std::span<const Rating> ratings) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : ratings) out << d.user_ids[r.user] << '\t' << d.item_ids[r.item] << '\n';
}

inline void write_frame_likes(const std::filesystem::path& path, const Dataset& d, std::span<const FrameLike> likes) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& l : likes) out << d.user_ids[l.user] << '\t' << d.frame_ids[l.frame] << '\n';
}

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

/// Writes ratings.tsv, frames.tsv, features.tsv and frame_likes.tsv. Feature
/// values use shortest round-trip formatting so reloading is exact.
inline void write_dataset(const std::filesystem::path& dir, const Dataset& d) {
  std::filesystem::create_directories(dir);
  write_ratings(dir / "ratings.tsv", d, d.ratings);
  {
    std::ofstream out(dir / "frames.tsv");
    for (FrameIndex k = 0; k < d.num_frames(); ++k) out << d.frame_ids[k] << '\t' << d.item_ids[d.frame_item[k]] << '\n';
  }
  {
    std::ofstream out(dir / "features.tsv");
    for (FrameIndex k = 0; k < d.num_frames(); ++k) {
      out << d.frame_ids[k] << '\t';
      auto f = d.feature(k);
      for (std::size_t c = 0; c < f.size(); ++c) out << (c ? " " : "") << format_double(f[c]);
      out << '\n';
    }
  }
  write_frame_likes(dir / "frame_likes.tsv", d, d.frame_likes);
}

inline void write_split(const std::filesystem::path& dir, const SplitDataset& s) {
  std::filesystem::create_directories(dir);
  write_ratings(dir / "train.tsv", s.base, s.train);
  write_ratings(dir / "valid.tsv", s.base, s.validation);
  write_ratings(dir / "test.tsv", s.base, s.test);
  write_frame_likes(dir / "frame_test.tsv", s.base, s.frame_test);
}

inline bool has_split_files(const std::filesystem::path& dir) {
  for (const char* f : {"train.tsv", "valid.tsv", "test.tsv", "frame_test.tsv"}) {
    if (!std::filesystem::exists(dir / f)) return false;
  }
  return true;
}

/// Rebuilds a SplitDataset from split files written by write_split. The base
/// dataset is `raw` restricted to users and items that occur in the split,
/// which reproduces the pruned dataset the split was made from.
inline SplitDataset load_split(const Dataset& raw, const std::filesystem::path& dir) {
  const auto uidx = detail::index_of(raw.user_ids);
  const auto iidx = detail::index_of(raw.item_ids);
  const auto fidx = detail::index_of(raw.frame_ids);
  std::vector<bool> keep_user(raw.num_users(), false), keep_item(raw.num_items(), false);

  auto read = [&](const char* name) {
    std::vector<std::pair<UserIndex, ItemIndex>> out;
    for (const auto& [u, i] : detail::read_pairs(dir / name)) {
      auto ui = uidx.find(u);
      auto ii = iidx.find(i);
      if (ui == uidx.end() || ii == iidx.end()) {
        throw IntegrityError(std::string(name) + ": (" + u + ", " + i + ") not in dataset");
      }
      keep_user[ui->second] = true;
      keep_item[ii->second] = true;
      out.emplace_back(ui->second, ii->second);
    }
    return out;
  };
  const auto tr = read("train.tsv");
  const auto va = read("valid.tsv");
  const auto te = read("test.tsv");

  SplitDataset s;
  s.base = restrict(raw, keep_user, keep_item);
  const auto nu = detail::index_of(s.base.user_ids);
  const auto ni = detail::index_of(s.base.item_ids);
  auto remap = [&](const std::vector<std::pair<UserIndex, ItemIndex>>& src, std::vector<Rating>& dst) {
    for (const auto& [u, i] : src) dst.push_back({nu.at(raw.user_ids[u]), ni.at(raw.item_ids[i])});
  };
  remap(tr, s.train);
  remap(va, s.validation);
  remap(te, s.test);

  // frame_test is taken from the file, not recomputed from likes.
  s.base.frame_likes.clear();
  const auto nf = detail::index_of(s.base.frame_ids);
  for (const auto& [u, f] : detail::read_pairs(dir / "frame_test.tsv")) {
    auto ui = nu.find(u);
    auto fi = nf.find(f);
    if (ui == nu.end() || fi == nf.end() || !fidx.count(f)) {
      throw IntegrityError("frame_test.tsv: (" + u + ", " + f + ") not in split dataset");
    }
    s.frame_test.push_back({ui->second, fi->second});
  }
  std::vector<FrameLike> ft = std::move(s.frame_test);
  s.frame_test.clear();
  s.base.frame_likes = ft;
  detail::sort_unique(s.base.frame_likes);
  detail::finish_split(s);
  validate(s.base);
  return s;
}

}  // namespace jifr
