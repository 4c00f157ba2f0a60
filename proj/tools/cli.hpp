#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jifr/jifr.hpp"

namespace jifr::cli {

namespace fs = std::filesystem;

struct ModelFlags {
  std::string visual = "att";
  std::string fusion = "att";
  std::size_t d = 32;
  std::size_t d1 = 0;  // 0: use d
  std::size_t d2 = 0;
  std::size_t attn_hidden = 32;
  std::size_t key_dim = 32;
  double lambda1 = 0.001;
  double init_scale = 0.1;
  bool share_projection = false;
  bool attention_bias = false;

  ModelConfig resolve(std::uint64_t master_seed) const {
    ModelConfig c;
    c.visual_mode = parse_visual_mode(visual);
    c.fusion_mode = parse_fusion_mode(fusion);
    c.collab_dim = d1 ? d1 : d;
    c.visual_dim = d2 ? d2 : d;
    c.frame_attn_hidden = attn_hidden;
    c.rating_attn_hidden = attn_hidden;
    c.key_dim = share_projection ? c.visual_dim : key_dim;
    c.lambda1 = lambda1;
    c.init_scale = init_scale;
    c.share_visual_projection = share_projection;
    c.attention_bias = attention_bias;
    c.seed = derive_seed(master_seed, "model");
    return c;
  }
};

struct OptimizerFlags {
  OptimizerHyper h;
  std::string loss_reduction = "mean";

  OptimizerHyper resolve(std::uint64_t master_seed, std::size_t threads) const {
    OptimizerHyper out = h;
    if (loss_reduction == "mean") {
      out.loss_reduction = LossReduction::kMean;
    } else if (loss_reduction == "sum") {
      out.loss_reduction = LossReduction::kSum;
    } else {
      throw ConfigError("loss reduction must be mean or sum");
    }
    out.seed = derive_seed(master_seed, "train");
    out.threads = threads;
    return out;
  }
};

struct SplitFlags {
  double train_frac = 0.7;
  double valid_frac = 0.1;
  std::size_t min_count = 5;
  bool stratified = false;
};

inline void add_model_flags(CLI::App* app, ModelFlags& m, bool with_modes = true) {
  if (with_modes) {
    app->add_option("--visual", m.visual, "Visual branch: off | avg | att")
        ->check(CLI::IsMember({"off", "avg", "att"}))
        ->capture_default_str();
    app->add_option("--fusion", m.fusion, "Rating fusion: sum | att")
        ->check(CLI::IsMember({"sum", "avg", "att"}))
        ->capture_default_str();
  }
  app->add_option("--d", m.d, "Collaborative and visual dimension")->capture_default_str();
  app->add_option("--d1", m.d1, "Collaborative dimension (overrides --d)")->capture_default_str();
  app->add_option("--d2", m.d2, "Visual dimension (overrides --d)")->capture_default_str();
  app->add_option("--attn-hidden", m.attn_hidden, "Hidden units of both attention networks")->capture_default_str();
  app->add_option("--key-dim", m.key_dim, "Output size of the attention key projection")->capture_default_str();
  app->add_option("--lambda1", m.lambda1, "L2 weight on user/item embeddings")->capture_default_str();
  app->add_option("--init-scale", m.init_scale, "Stddev of parameter initialization")->capture_default_str();
  app->add_flag("--share-visual-projection", m.share_projection, "Attention keys use the value projection");
  app->add_flag("--attention-bias", m.attention_bias, "Add bias terms to the attention networks");
}

inline void add_optimizer_flags(CLI::App* app, OptimizerFlags& o) {
  app->add_option("--lr", o.h.learning_rate, "Adam learning rate")->capture_default_str();
  app->add_option("--beta1", o.h.beta1, "Adam beta1")->capture_default_str();
  app->add_option("--beta2", o.h.beta2, "Adam beta2")->capture_default_str();
  app->add_option("--eps", o.h.epsilon, "Adam epsilon")->capture_default_str();
  app->add_option("--batch-size", o.h.batch_size, "Triples per mini-batch")->capture_default_str();
  app->add_option("--epochs", o.h.epochs, "Maximum epochs")->capture_default_str();
  app->add_option("--neg-ratio", o.h.neg_ratio, "Sampled negatives per training positive")->capture_default_str();
  app->add_option("--patience", o.h.early_stop_patience, "Epochs without validation gain before stopping")
      ->capture_default_str();
  app->add_option("--loss-reduction", o.loss_reduction, "mean | sum over the batch")
      ->check(CLI::IsMember({"mean", "sum"}))
      ->capture_default_str();
  app->add_option("--valid-k", o.h.valid_k, "K of the validation HR used for model selection")->capture_default_str();
  app->add_option("--valid-negatives", o.h.valid_negatives, "Sampled negatives per validation pair")
      ->capture_default_str();
}

inline void add_split_flags(CLI::App* app, SplitFlags& s) {
  app->add_option("--train-frac", s.train_frac, "Fraction of ratings for training")->capture_default_str();
  app->add_option("--valid-frac", s.valid_frac, "Fraction of ratings for validation")->capture_default_str();
  app->add_option("--min-count", s.min_count, "Minimum ratings per user and per item")->capture_default_str();
  app->add_flag("--stratified", s.stratified, "Split each user's ratings separately");
}

inline std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> ks;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size() || v == 0) throw ArgumentError("bad K list '" + s + "'");
    ks.push_back(v);
  }
  if (ks.empty()) throw ArgumentError("empty K list");
  return ks;
}

/// Every option of `app` with its resolved value (given or default).
inline json resolved_flags(const CLI::App* app) {
  json flags = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->count() > 0) {
      const auto results = opt->reduced_results();
      flags[name] = results.size() == 1 ? json(results.front()) : json(results);
    } else if (opt->get_type_size() == 0) {
      flags[name] = false;
    } else {
      flags[name] = opt->get_default_str();
    }
  }
  return flags;
}

inline void write_manifest(const fs::path& dir, const CLI::App* sub, std::uint64_t seed, const json& extra = {}) {
  fs::create_directories(dir);
  json m = {{"tool", "jifr"}, {"subcommand", sub->get_name()}, {"flags", resolved_flags(sub)}, {"master_seed", seed}};
  if (!extra.is_null()) m["derived"] = extra;
  std::ofstream(dir / "run.json") << m.dump(2) << '\n';
}

inline json report_json(const EvalReport& r) {
  json per_k = json::array();
  for (const auto& m : r.per_k) {
    per_k.push_back({{"k", m.k}, {"hr", m.hr}, {"ndcg", m.ndcg}, {"hr_std", m.hr_std}, {"ndcg_std", m.ndcg_std}});
  }
  json j = {{"task", std::string(to_string(r.task))},
            {"per_k", per_k},
            {"repeats", r.repeats},
            {"num_pairs", r.num_pairs},
            {"seed", r.seed},
            {"warnings", r.warnings}};
  if (r.task == EvalTask::kItem) j["negatives_per_positive"] = r.negatives_per_positive;
  if (r.task == EvalTask::kFrame) j["singleton_pairs"] = r.singleton_pairs;
  return j;
}

inline void write_report(const fs::path& dir, const std::string& stem, const EvalReport& r) {
  fs::create_directories(dir);
  std::ofstream(dir / (stem + ".json")) << report_json(r).dump(2) << '\n';
  std::ofstream tsv(dir / (stem + ".tsv"));
  tsv << "K\tHR\tNDCG\tHR_std\tNDCG_std\n";
  for (const auto& m : r.per_k) {
    tsv << m.k << '\t' << format_double(m.hr) << '\t' << format_double(m.ndcg) << '\t' << format_double(m.hr_std)
        << '\t' << format_double(m.ndcg_std) << '\n';
  }
}

inline void print_report(std::ostream& os, const std::string& title, const EvalReport& r) {
  os << title << " (" << r.num_pairs << " pairs, " << r.repeats << " repeat(s))\n";
  os << "  K      HR        NDCG\n";
  for (const auto& m : r.per_k) {
    os << "  " << std::setw(3) << m.k << "  " << std::fixed << std::setprecision(4) << std::setw(8) << m.hr << "  "
       << std::setw(8) << m.ndcg << '\n';
  }
  os.unsetf(std::ios::floatfield);
  for (const auto& w : r.warnings) os << "  warning: " << w << '\n';
}

/// Split for the given data directory: read from `split_dir` when it holds
/// split files, otherwise prune and split the raw data (and, if `write_to` is
/// set, save the split there).
inline SplitDataset obtain_split(const fs::path& data_dir, const fs::path& split_dir, const SplitFlags& sf,
                                 std::uint64_t seed, const std::optional<fs::path>& write_to) {
  const Dataset raw = load_dataset_dir(data_dir);
  if (has_split_files(split_dir)) return load_split(raw, split_dir);
  SplitDataset s = split_ratings(prune_dataset(raw, sf.min_count), sf.train_frac, sf.valid_frac, seed, sf.stratified);
  if (write_to) write_split(*write_to, s);
  return s;
}

inline void write_train_log(const fs::path& path, const TrainLog& log) {
  std::ofstream out(path);
  for (const auto& e : log.epochs) {
    out << json{{"epoch", e.epoch},
                {"train_loss", e.train_loss},
                {"valid_hr" + std::to_string(log.valid_k), e.valid_hr},
                {"valid_ndcg" + std::to_string(log.valid_k), e.valid_ndcg},
                {"seconds", e.seconds}}
               .dump()
        << '\n';
  }
}

template <class Real>
void check_digest(const Checkpoint<Real>& ck, const Dataset& d) {
  if (ck.id_digest != d.id_digest() || !(ck.shape == ModelShape::of(d))) {
    throw IntegrityError("checkpoint was trained on a differently indexed dataset (id digest mismatch)");
  }
}

template <class Real>
int train_command(const SplitDataset& s, const ModelConfig& cfg, const OptimizerHyper& h, const fs::path& out) {
  auto result = fit<Real>(s, cfg, h, [](const EpochRecord& e) {
    std::cerr << "epoch " << e.epoch << " loss " << e.train_loss << " valid_hr " << e.valid_hr << " valid_ndcg "
              << e.valid_ndcg << '\n';
  });
  result.log.checkpoint = (out / "model.ckpt.json").string();
  save_checkpoint(out / "model.ckpt.json", result.params, cfg, ModelShape::of(s.base), s.base.id_digest());
  write_train_log(out / "train_log.jsonl", result.log);
  std::cout << "best epoch " << result.log.best_epoch << " of " << (result.log.epochs.size() - 1) << "; checkpoint "
            << result.log.checkpoint << '\n';
  return 0;
}

struct EvalFlags {
  std::string ks;
  std::size_t negatives = 1000;
  std::size_t repeats = 10;
  bool exclude_singletons = false;
  bool random_baseline = false;
};

template <class Real>
int eval_items_command(const fs::path& ckpt, const SplitDataset& s, const EvalFlags& ef, std::uint64_t seed,
                       std::size_t threads, const fs::path& out) {
  const auto ck = load_checkpoint<Real>(ckpt);
  check_digest(ck, s.base);
  const auto ks = parse_ks(ef.ks);
  const auto rep = evaluate_item_rec(ck.params, s, ck.config, ks, ef.negatives, ef.repeats,
                                     derive_seed(seed, "eval-items"), threads);
  write_report(out, "item_report", rep);
  print_report(std::cout, "item recommendation", rep);
  return 0;
}

template <class Real>
int eval_frames_command(const fs::path& ckpt, const SplitDataset& s, const EvalFlags& ef, std::uint64_t seed,
                        const fs::path& out) {
  const auto ck = load_checkpoint<Real>(ckpt);
  check_digest(ck, s.base);
  const auto ks = parse_ks(ef.ks);
  const auto rep = evaluate_frame_rec(ck.params, s, ck.config, ks, ef.exclude_singletons);
  write_report(out, "frame_report", rep);
  print_report(std::cout, "key frame recommendation", rep);
  if (ef.random_baseline) {
    const auto rnd = random_frame_baseline(s, ks, derive_seed(seed, "random-frames"), ef.exclude_singletons);
    write_report(out, "random_frame_report", rnd);
    print_report(std::cout, "random frame baseline", rnd);
  }
  return 0;
}

struct GradcheckResult {
  VisualMode visual;
  FusionMode fusion;
  FiniteDiffReport report;
};

/// Finite-difference check of one mode pair on a fresh random instance
/// (5 users, 8 items, 20 frames, 6 features, dimension 4).
inline GradcheckResult gradcheck_mode(VisualMode v, FusionMode f, std::uint64_t seed, double step,
                                      bool attention_bias = false, bool share_projection = false) {
  const Dataset d = random_dataset(5, 8, 20, 6, 3, seed);
  ModelConfig cfg;
  cfg.visual_mode = v;
  cfg.fusion_mode = f;
  cfg.collab_dim = cfg.visual_dim = cfg.key_dim = cfg.frame_attn_hidden = cfg.rating_attn_hidden = 4;
  cfg.lambda1 = 0.01;
  cfg.init_scale = 0.5;
  cfg.attention_bias = attention_bias;
  cfg.share_visual_projection = share_projection;
  cfg.seed = derive_seed(seed, "gradcheck-init");
  auto p = init_params<double>(cfg, ModelShape::of(d));
  if (attention_bias) {
    Rng rng(derive_seed(seed, "gradcheck-bias"));
    Normal g(0.5);
    for (auto id : {TensorId::kFrameBias, TensorId::kRatingBias}) {
      for (auto& x : p[id].data()) x = g(rng);
    }
  }
  const UserItems pos(d.num_users(), d.ratings);
  Rng rng(derive_seed(seed, "gradcheck-batch"));
  const auto batch = sample_epoch(d.ratings, pos, d.num_items(), 2, rng);
  return {v, f, finite_diff_check(p, cfg, d, batch, step)};
}

inline std::vector<std::pair<VisualMode, FusionMode>> parse_modes(const std::string& s) {
  std::vector<std::pair<VisualMode, FusionMode>> out;
  if (s == "all") {
    for (auto v : {VisualMode::kOff, VisualMode::kAvg, VisualMode::kAtt}) {
      for (auto f : {FusionMode::kSum, FusionMode::kAtt}) out.emplace_back(v, f);
    }
    return out;
  }
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto slash = tok.find('/');
    if (slash == std::string::npos) throw ArgumentError("mode must look like visual/fusion, got '" + tok + "'");
    out.emplace_back(parse_visual_mode(tok.substr(0, slash)), parse_fusion_mode(tok.substr(slash + 1)));
  }
  return out;
}

inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Joint multimedia item and key frame recommendation"};
  app.require_subcommand(1);
  app.allow_extras(false);

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string precision = "f64";
  std::string data_dir, split_dir, out_dir, checkpoint;

  // synth
  SynthConfig sc;
  auto* synth = app.add_subcommand("synth", "Generate a planted synthetic dataset");
  synth->add_option("--users", sc.num_users, "Number of users")->capture_default_str();
  synth->add_option("--items", sc.num_items, "Number of items")->capture_default_str();
  synth->add_option("--frames-per-item", sc.frames_per_item, "Frames per item")->capture_default_str();
  synth->add_option("--features", sc.feature_dim, "Frame feature dimension")->capture_default_str();
  synth->add_option("--planted-dim", sc.planted_dim, "Dimension of the planted model")->capture_default_str();
  synth->add_option("--ratings-per-user", sc.ratings_per_user, "Positives per user")->capture_default_str();
  synth->add_option("--likes-per-pair", sc.likes_per_pair, "Liked frames per rated item")->capture_default_str();
  synth->add_option("--salient-shift", sc.salient_shift, "Distance of the salient frame cluster")
      ->capture_default_str();
  synth->add_option("--attention-gain", sc.attention_gain, "Sharpness of the planted frame attention")
      ->capture_default_str();
  synth->add_option("--seed", seed, "Master seed")->capture_default_str();
  synth->add_option("--out", out_dir, "Output directory")->required();

  // split
  SplitFlags sf;
  auto* split = app.add_subcommand("split", "Prune and split a dataset into train/valid/test");
  split->add_option("--data", data_dir, "Dataset directory")->required();
  split->add_option("--out", out_dir, "Output directory")->required();
  add_split_flags(split, sf);
  split->add_option("--seed", seed, "Master seed")->capture_default_str();

  // train
  ModelFlags mf;
  OptimizerFlags of;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--split", split_dir, "Directory with split files (default: --data)");
  train->add_option("--out", out_dir, "Output directory")->required();
  add_model_flags(train, mf);
  add_optimizer_flags(train, of);
  add_split_flags(train, sf);
  train->add_option("--seed", seed, "Master seed")->capture_default_str();
  train->add_option("--threads", threads, "Evaluation threads")->capture_default_str();
  train->add_option("--precision", precision, "f32 | f64")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();

  // eval-items / eval-frames
  EvalFlags ef_items{"5,10,15"}, ef_frames{"1,2,3"};
  auto* eval_items = app.add_subcommand("eval-items", "Sampled-negative item ranking on the test split");
  auto* eval_frames = app.add_subcommand("eval-frames", "Within-item key frame ranking on the frame test set");
  for (auto [sub, ef] : {std::pair{eval_items, &ef_items}, std::pair{eval_frames, &ef_frames}}) {
    sub->add_option("--data", data_dir, "Dataset directory")->required();
    sub->add_option("--split", split_dir, "Directory with split files (default: --data)");
    sub->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--k", ef->ks, "Comma-separated cutoffs")->capture_default_str();
    sub->add_option("--seed", seed, "Master seed")->capture_default_str();
  }
  eval_items->add_option("--negatives", ef_items.negatives, "Sampled unrated items per test pair")
      ->capture_default_str();
  eval_items->add_option("--repeats", ef_items.repeats, "Independent repetitions")->capture_default_str();
  eval_items->add_option("--threads", threads, "Evaluation threads")->capture_default_str();
  eval_frames->add_flag("--exclude-singletons", ef_frames.exclude_singletons, "Skip items with a single frame");
  eval_frames->add_flag("--random-baseline", ef_frames.random_baseline, "Also report the random frame baseline");

  // gradcheck
  std::string modes = "all";
  double step = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  gradcheck->add_option("--modes", modes, "all, or a list like att/att,avg/sum")->capture_default_str();
  gradcheck->add_option("--step", step, "Finite-difference step")->capture_default_str();
  gradcheck->add_option("--seed", seed, "Master seed")->capture_default_str();

  // ablate
  ModelFlags amf;
  OptimizerFlags aof;
  std::string ablate_item_ks = "15", ablate_frame_ks = "3";
  std::size_t ablate_negatives = 1000, ablate_repeats = 10;
  auto* ablate = app.add_subcommand("ablate", "Train the avg/att x avg/att grid and report gains over avg/avg");
  ablate->add_option("--data", data_dir, "Dataset directory")->required();
  ablate->add_option("--split", split_dir, "Directory with split files (default: --data)");
  ablate->add_option("--out", out_dir, "Output directory")->required();
  add_model_flags(ablate, amf, false);
  add_optimizer_flags(ablate, aof);
  add_split_flags(ablate, sf);
  ablate->add_option("--item-k", ablate_item_ks, "Item cutoffs")->capture_default_str();
  ablate->add_option("--frame-k", ablate_frame_ks, "Frame cutoffs")->capture_default_str();
  ablate->add_option("--negatives", ablate_negatives, "Sampled unrated items per test pair")->capture_default_str();
  ablate->add_option("--repeats", ablate_repeats, "Independent repetitions")->capture_default_str();
  ablate->add_option("--seed", seed, "Master seed")->capture_default_str();
  ablate->add_option("--threads", threads, "Evaluation threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << '\n';
    return 2;
  }

  // Flag values that parse but make no sense are usage errors too.
  try {
    if (*synth) validate(sc);
    if (*split || *train || *ablate) {
      if (!(sf.train_frac > 0.0) || !(sf.valid_frac > 0.0) || !(sf.train_frac + sf.valid_frac < 1.0)) {
        throw ArgumentError("split fractions must satisfy 0 < train, 0 < valid, train + valid < 1");
      }
      if (sf.min_count < 1) throw ArgumentError("--min-count must be >= 1");
    }
    if (*train) {
      validate(mf.resolve(seed));
      validate(of.resolve(seed, threads));
    }
    if (*ablate) {
      for (const char* v : {"avg", "att"}) {
        ModelFlags m = amf;
        m.visual = v;
        m.fusion = "att";
        validate(m.resolve(seed));
      }
      validate(aof.resolve(seed, threads));
      parse_ks(ablate_item_ks);
      parse_ks(ablate_frame_ks);
    }
    if (*eval_items) parse_ks(ef_items.ks);
    if (*eval_frames) parse_ks(ef_frames.ks);
    if (*gradcheck) {
      parse_modes(modes);
      if (!(step > 0.0)) throw ArgumentError("--step must be > 0");
    }
  } catch (const Error& e) {
    err << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (split_dir.empty()) split_dir = data_dir;

    if (*synth) {
      sc.seed = derive_seed(seed, "synth");
      const auto result = generate_synthetic(sc);
      const fs::path out(out_dir);
      write_dataset(out, result.dataset);
      {
        std::ofstream sal(out / "salient.tsv");
        const auto& d = result.dataset;
        for (std::size_t i = 0; i < d.num_items(); ++i) {
          for (std::size_t j = 0; j < d.item_frames[i].size(); ++j) {
            if (result.planted.salient[i][j]) sal << d.frame_ids[d.item_frames[i][j]] << '\t' << d.item_ids[i] << '\n';
          }
        }
      }
      save_checkpoint(out / "planted.ckpt.json", result.planted.params, result.planted.config,
                      ModelShape::of(result.dataset), result.dataset.id_digest());
      write_manifest(out, synth, seed, {{"synth_seed", sc.seed}});
      std::cout << "wrote " << result.dataset.num_users() << " users, " << result.dataset.num_items() << " items, "
                << result.dataset.num_frames() << " frames, " << result.dataset.ratings.size() << " ratings to "
                << out.string() << '\n';
      return 0;
    }

    if (*split) {
      const SplitDataset s =
          split_ratings(prune_dataset(load_dataset_dir(data_dir), sf.min_count), sf.train_frac, sf.valid_frac, seed,
                        sf.stratified);
      write_split(out_dir, s);
      write_manifest(out_dir, split, seed);
      std::cout << "train " << s.train.size() << ", valid " << s.validation.size() << ", test " << s.test.size()
                << ", frame test " << s.frame_test.size() << '\n';
      for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
      return 0;
    }

    if (*train) {
      const ModelConfig cfg = mf.resolve(seed);
      validate(cfg);
      const OptimizerHyper h = of.resolve(seed, threads);
      validate(h);
      const fs::path out(out_dir);
      fs::create_directories(out);
      const SplitDataset s = obtain_split(data_dir, split_dir, sf, seed, out);
      write_manifest(out, train, seed, {{"model_seed", cfg.seed}, {"train_seed", h.seed}});
      return precision == "f32" ? train_command<float>(s, cfg, h, out) : train_command<double>(s, cfg, h, out);
    }

    if (*eval_items || *eval_frames) {
      const bool items = static_cast<bool>(*eval_items);
      if (!has_split_files(split_dir)) {
        throw ArgumentError("no split files (train/valid/test/frame_test.tsv) in " + split_dir);
      }
      const SplitDataset s = load_split(load_dataset_dir(data_dir), split_dir);
      const std::string prec = checkpoint_precision(checkpoint);
      const fs::path out(out_dir);
      write_manifest(out, items ? eval_items : eval_frames, seed);
      if (items) {
        return prec == "f32" ? eval_items_command<float>(checkpoint, s, ef_items, seed, threads, out)
                             : eval_items_command<double>(checkpoint, s, ef_items, seed, threads, out);
      }
      return prec == "f32" ? eval_frames_command<float>(checkpoint, s, ef_frames, seed, out)
                           : eval_frames_command<double>(checkpoint, s, ef_frames, seed, out);
    }

    if (*gradcheck) {
      bool ok = true;
      for (const auto& [v, f] : parse_modes(modes)) {
        const auto r = gradcheck_mode(v, f, derive_seed(seed, "gradcheck"), step);
        const bool pass = r.report.max_rel_error < 1e-4;
        ok = ok && pass;
        std::cout << to_string(v) << '/' << to_string(f) << "  max_rel_err " << std::scientific
                  << std::setprecision(3) << r.report.max_rel_error << " at " << r.report.tensor << '['
                  << r.report.row << ',' << r.report.col << "]  coords " << r.report.coords_checked << "  "
                  << (pass ? "PASS" : "FAIL") << '\n';
        std::cout.unsetf(std::ios::floatfield);
      }
      return ok ? 0 : 1;
    }

    if (*ablate) {
      const OptimizerHyper h = aof.resolve(seed, threads);
      const fs::path out(out_dir);
      fs::create_directories(out);
      const SplitDataset s = obtain_split(data_dir, split_dir, sf, seed, out);
      write_manifest(out, ablate, seed);
      const auto iks = parse_ks(ablate_item_ks);
      const auto fks = parse_ks(ablate_frame_ks);
      struct Row {
        std::string visual, fusion;
        EvalReport items, frames;
      };
      std::vector<Row> rows;
      for (const char* v : {"avg", "att"}) {
        for (const char* f : {"sum", "att"}) {
          ModelFlags m = amf;
          m.visual = v;
          m.fusion = f;
          const ModelConfig cfg = m.resolve(seed);
          std::cerr << "training " << v << '/' << f << '\n';
          const auto r = fit<double>(s, cfg, h);
          rows.push_back({v, f == std::string("sum") ? "avg" : "att",
                          evaluate_item_rec(r.params, s, cfg, iks, ablate_negatives, ablate_repeats,
                                            derive_seed(seed, "eval-items"), threads),
                          evaluate_frame_rec(r.params, s, cfg, fks)});
        }
      }
      std::ofstream tsv(out / "ablation.tsv");
      tsv << "visual\trating";
      for (auto k : iks) tsv << "\titem_hr@" << k << "\titem_ndcg@" << k;
      for (auto k : fks) tsv << "\tframe_hr@" << k << "\tframe_ndcg@" << k;
      tsv << '\n';
      auto gain = [](double x, double base) { return base > 0 ? 100.0 * (x - base) / base : 0.0; };
      std::cout << "visual rating  relative improvement over avg/avg (%)\n";
      for (const auto& r : rows) {
        tsv << r.visual << '\t' << r.fusion;
        std::cout << std::setw(6) << r.visual << ' ' << std::setw(6) << r.fusion;
        for (std::size_t q = 0; q < iks.size(); ++q) {
          const auto& m = r.items.per_k[q];
          const auto& b = rows.front().items.per_k[q];
          tsv << '\t' << format_double(m.hr) << '\t' << format_double(m.ndcg);
          std::cout << "  item@" << m.k << " HR " << std::fixed << std::setprecision(2) << gain(m.hr, b.hr)
                    << " NDCG " << gain(m.ndcg, b.ndcg);
        }
        for (std::size_t q = 0; q < fks.size(); ++q) {
          const auto& m = r.frames.per_k[q];
          const auto& b = rows.front().frames.per_k[q];
          tsv << '\t' << format_double(m.hr) << '\t' << format_double(m.ndcg);
          std::cout << "  frame@" << m.k << " HR " << gain(m.hr, b.hr) << " NDCG " << gain(m.ndcg, b.ndcg);
        }
        std::cout.unsetf(std::ios::floatfield);
        tsv << '\n';
        std::cout << '\n';
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace jifr::cli
