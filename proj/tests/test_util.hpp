#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "jifr/jifr.hpp"

namespace jifr::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("jifr-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Three-user toy dataset: u1 rates i1,i2; u2 rates i1; i1 has two frames, i2 one, F = 3.
inline void write_toy(const std::filesystem::path& dir) {
  write_file(dir / "ratings.tsv", "u1\ti1\nu1\ti2\nu2\ti1\n");
  write_file(dir / "frames.tsv", "f1\ti1\nf2\ti1\nf3\ti2\n");
  write_file(dir / "features.tsv", "f1\t1 0 0\nf2\t0 1 0\nf3\t0 0 1\n");
}

/// Dataset with the given ratings, one frame per item and F = 1.
inline Dataset ratings_only(std::size_t users, std::size_t items, std::vector<Rating> ratings) {
  Dataset d;
  for (std::size_t u = 0; u < users; ++u) d.user_ids.push_back("u" + std::to_string(100 + u));
  for (std::size_t i = 0; i < items; ++i) d.item_ids.push_back("i" + std::to_string(100 + i));
  d.item_frames.resize(items);
  for (std::size_t i = 0; i < items; ++i) {
    d.frame_ids.push_back("f" + std::to_string(100 + i));
    d.frame_item.push_back(static_cast<ItemIndex>(i));
    d.item_frames[i].push_back(static_cast<FrameIndex>(i));
  }
  d.feature_dim = 1;
  d.features.assign(items, 1.0);
  std::sort(ratings.begin(), ratings.end());
  ratings.erase(std::unique(ratings.begin(), ratings.end()), ratings.end());
  d.ratings = std::move(ratings);
  validate(d);
  return d;
}

}  // namespace jifr::testing
