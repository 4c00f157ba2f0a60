#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "test_util.hpp"

using namespace jifr;
using jifr::testing::read_file;
using jifr::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "jifr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), err);
  return {code, err.str()};
}

// Small synthetic dataset plus a split, shared by the tests below.
class CliData : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    ASSERT_EQ(run_cli({"synth", "--users", "30", "--items", "40", "--ratings-per-user", "6", "--features", "5",
                       "--seed", "3", "--out", data()})
                  .code,
              0);
    ASSERT_EQ(run_cli({"split", "--data", data(), "--out", split(), "--min-count", "2", "--seed", "3"}).code, 0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string data() { return (dir_->path() / "data").string(); }
  static std::string split() { return (dir_->path() / "split").string(); }
  static std::string path(const std::string& name) { return (dir_->path() / name).string(); }

  static std::vector<std::string> train_args(const std::string& out) {
    return {"train", "--data", data(), "--split", split(), "--out", out, "--d", "4", "--attn-hidden", "4",
            "--key-dim", "3", "--epochs", "3", "--batch-size", "64", "--valid-negatives", "20", "--seed", "5"};
  }

  static TempDir* dir_;
};

TempDir* CliData::dir_ = nullptr;

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"gradcheck", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run_cli({"train", "--data", "x", "--out", "y", "--visual", "max"}).code, 2);
  EXPECT_EQ(run_cli({"train", "--data", "x", "--out", "y", "--d1", "4", "--d2", "8"}).code, 2);
  EXPECT_EQ(run_cli({"train", "--data", "x", "--out", "y", "--train-frac", "0.95"}).code, 2);
  EXPECT_EQ(run_cli({"eval-items", "--data", "x", "--checkpoint", "c", "--out", "y", "--k", "5,zero"}).code, 2);
  EXPECT_EQ(run_cli({"gradcheck", "--modes", "att-att"}).code, 2);
  const auto r = run_cli({"synth", "--users", "0", "--out", "y"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: usage:", 0), 0u);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, DataErrorsAreSingleLine) {
  TempDir dir("cli-missing");
  const auto r = run_cli({"split", "--data", (dir / "nothing").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

  jifr::testing::write_toy(dir.path());
  jifr::testing::write_file(dir / "ratings.tsv", "u1\ti1\nbroken\n");
  const auto p = run_cli({"split", "--data", dir.path().string(), "--out", (dir / "o").string()});
  EXPECT_EQ(p.code, 1);
  EXPECT_NE(p.err.find("error: parse:"), std::string::npos);
  EXPECT_NE(p.err.find(":2:"), std::string::npos);
}

TEST(Cli, Gradcheck) { EXPECT_EQ(run_cli({"gradcheck", "--modes", "all"}).code, 0); }

TEST_F(CliData, SynthWritesDatasetFiles) {
  for (const char* f : {"ratings.tsv", "frames.tsv", "features.tsv", "frame_likes.tsv", "salient.tsv",
                        "planted.ckpt.json", "run.json"}) {
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(data()) / f)) << f;
  }
  const json m = json::parse(read_file(std::filesystem::path(data()) / "run.json"));
  EXPECT_EQ(m["subcommand"], "synth");
  EXPECT_EQ(m["master_seed"], 3);
  EXPECT_EQ(m["flags"]["users"], "30");
  EXPECT_EQ(m["flags"]["frames-per-item"], "5");
  const Dataset d = load_dataset_dir(data());
  EXPECT_EQ(d.num_users(), 30u);
  EXPECT_EQ(d.ratings.size(), 180u);
  const auto ck = load_checkpoint<double>(std::filesystem::path(data()) / "planted.ckpt.json");
  EXPECT_EQ(ck.id_digest, d.id_digest());
}

TEST_F(CliData, TrainAndEvaluateDeterministically) {
  const std::string a = path("run_a"), b = path("run_b");
  for (const auto& out : {a, b}) {
    ASSERT_EQ(run_cli(train_args(out)).code, 0);
    ASSERT_EQ(run_cli({"eval-items", "--data", data(), "--split", split(), "--checkpoint", out + "/model.ckpt.json",
                       "--out", out, "--negatives", "15", "--repeats", "2", "--threads", "2"})
                  .code,
              0);
  }
  for (const char* f : {"model.ckpt.json", "item_report.json", "item_report.tsv"}) {
    EXPECT_EQ(read_file(a + "/" + f), read_file(b + "/" + f)) << f;
  }
  const std::string log = read_file(a + "/train_log.jsonl");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 4);
  const json first = json::parse(log.substr(0, log.find('\n')));
  for (const char* key : {"epoch", "train_loss", "valid_hr10", "valid_ndcg10", "seconds"}) {
    EXPECT_TRUE(first.contains(key)) << key;
  }
  const json report = json::parse(read_file(a + "/item_report.json"));
  EXPECT_EQ(report["per_k"].size(), 3u);
  EXPECT_EQ(report["repeats"], 2);
  const json manifest = json::parse(read_file(a + "/run.json"));
  EXPECT_EQ(manifest["subcommand"], "eval-items");
  EXPECT_EQ(json::parse(read_file(a + "/model.ckpt.json"))["config"]["seed"], derive_seed(5, "model"));
}

TEST_F(CliData, EvalFramesWithBaseline) {
  const std::string out = path("frames");
  ASSERT_EQ(run_cli(train_args(out)).code, 0);
  ASSERT_EQ(run_cli({"eval-frames", "--data", data(), "--split", split(), "--checkpoint", out + "/model.ckpt.json",
                     "--out", out, "--random-baseline"})
                .code,
            0);
  for (const char* f : {"frame_report.json", "frame_report.tsv", "random_frame_report.json"}) {
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / f)) << f;
  }
  const std::string tsv = read_file(out + "/frame_report.tsv");
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "K\tHR\tNDCG\tHR_std\tNDCG_std");
}

TEST_F(CliData, EvalFramesRejectsVisualOff) {
  const std::string out = path("off");
  auto args = train_args(out);
  args.insert(args.end(), {"--visual", "off", "--fusion", "sum"});
  ASSERT_EQ(run_cli(args).code, 0);
  const auto r = run_cli({"eval-frames", "--data", data(), "--split", split(), "--checkpoint",
                          out + "/model.ckpt.json", "--out", out});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unsupported"), std::string::npos);
}

TEST_F(CliData, SinglePrecisionTraining) {
  const std::string out = path("f32");
  auto args = train_args(out);
  args.insert(args.end(), {"--precision", "f32"});
  ASSERT_EQ(run_cli(args).code, 0);
  EXPECT_EQ(checkpoint_precision(out + "/model.ckpt.json"), "f32");
  EXPECT_EQ(run_cli({"eval-items", "--data", data(), "--split", split(), "--checkpoint", out + "/model.ckpt.json",
                     "--out", out, "--negatives", "10", "--repeats", "1"})
                .code,
            0);
}

TEST_F(CliData, CheckpointFromAnotherDatasetIsRejected) {
  const auto r = run_cli({"eval-items", "--data", data(), "--split", split(), "--checkpoint",
                          data() + "/planted.ckpt.json", "--out", path("mismatch")});
  EXPECT_EQ(r.code, 1);  // planted params index the unpruned dataset
  EXPECT_NE(r.err.find("error: integrity:"), std::string::npos);
}

TEST_F(CliData, TrainSplitsWhenNoSplitGiven) {
  const std::string out = path("selfsplit");
  auto args = train_args(out);
  args[4] = out;  // --split points at the output directory, which has no split yet
  args.back() = "3";  // master seed of the shared split
  args.insert(args.end(), {"--min-count", "2"});
  ASSERT_EQ(run_cli(args).code, 0);
  EXPECT_TRUE(has_split_files(out));
  EXPECT_EQ(read_file(out + "/test.tsv"), read_file(split() + "/test.tsv"));
}

TEST_F(CliData, Ablate) {
  const std::string out = path("ablate");
  ASSERT_EQ(run_cli({"ablate", "--data", data(), "--split", split(), "--out", out, "--d", "4", "--attn-hidden", "4",
                     "--key-dim", "3", "--epochs", "1", "--valid-negatives", "10", "--negatives", "10", "--repeats",
                     "1"})
                .code,
            0);
  const std::string tsv = read_file(out + "/ablation.tsv");
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 5);
  EXPECT_NE(tsv.find("avg\tavg"), std::string::npos);
  EXPECT_NE(tsv.find("att\tatt"), std::string::npos);
}
