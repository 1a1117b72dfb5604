// isp: data generation, training, prediction, evaluation and analysis.
//
// Exit status: 0 success, 1 usage error, 2 data or validation error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "isp/analysis/analysis.hpp"
#include "isp/autodiff/checkpoint.hpp"
#include "isp/autodiff/primitive_checks.hpp"
#include "isp/data/corpus.hpp"
#include "isp/eval/evaluation.hpp"
#include "isp/io/config.hpp"
#include "isp/io/formats.hpp"
#include "isp/io/report.hpp"
#include "isp/train/experiment.hpp"
#include "isp/train/gradcheck.hpp"
#include "isp/train/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace isp;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  std::optional<std::size_t> threads;
  std::optional<std::string> data_dir;
  std::optional<std::string> out_dir;
  std::optional<std::string> checkpoint;
  std::optional<std::string> pred;
  std::optional<std::string> finetuned;
  std::optional<std::string> variant;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::optional<double> weight_decay;
  std::optional<std::size_t> permutations;
  std::string split = "test";
  bool sample = false;
  bool shuffle_labels = false;
  std::size_t count = 5;
};

// Shared state of one invocation after the config is resolved.
struct Context {
  std::string command;
  io::RunConfig cfg;
  Options opt;

  fs::path data_dir() const { return opt.data_dir.value_or(cfg.paths.data_dir); }
  fs::path out_dir() const { return opt.out_dir.value_or(cfg.paths.out_dir); }
  fs::path checkpoint() const { return opt.checkpoint.value_or(cfg.paths.checkpoint); }
  data::Split split() const { return data::split_from_name(opt.split); }

  std::size_t threads() const {
    if (opt.threads) return std::max<std::size_t>(1, *opt.threads);
    if (const char* env = std::getenv("ISP_THREADS")) {
      try {
        std::size_t used = 0;
        const auto n = std::stoul(env, &used);
        if (used == std::string_view(env).size() && n > 0) return n;
      } catch (const std::exception&) {
      }
      throw UsageError("ISP_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    return 1;
  }
};

io::RunConfig resolve_config(const Options& o) {
  io::RunConfig cfg = o.config.empty() ? io::RunConfig{} : io::load_run_config(o.config);
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.lr) cfg.train.lr = *o.lr;
  if (o.weight_decay) cfg.train.weight_decay = *o.weight_decay;
  if (o.permutations) cfg.permutations = *o.permutations;
  return cfg;
}

io::MetricReport new_report(const Context& ctx, const std::string& corpus_hash) {
  io::MetricReport r;
  auto hashed = io::to_json(ctx.cfg);
  hashed.erase("paths");  // output locations do not change results
  r.provenance.command = ctx.command;
  r.provenance.version = io::version_string();
  r.provenance.config_hash = io::config_hash(hashed);
  r.provenance.corpus_hash = corpus_hash;
  r.provenance.seeds = io::to_json(ctx.cfg)["seeds"].get<std::map<std::string, std::uint64_t>>();
  r.provenance.timestamp = io::utc_timestamp();
  return r;
}

void check_compatible(const model::ModelConfig& m, const data::Corpus& corpus) {
  const auto& g = corpus.config;
  if (m.n_observers != g.n_observers || m.grid_h != g.grid_h || m.grid_w != g.grid_w || m.channels != g.channels) {
    throw std::invalid_argument("model and corpus disagree on observers, grid or channels");
  }
}

struct LoadedModel {
  std::string variant;
  model::ModelConfig config;
  model::ParamSet params;
};

LoadedModel load_model(const fs::path& path) {
  auto ckpt = ad::load_checkpoint(path);
  if (!ckpt.config.contains("model")) throw std::invalid_argument(path.string() + ": checkpoint lacks a model config");
  LoadedModel m;
  m.config = model::model_config_from_json(ckpt.config.at("model"));
  m.variant = ckpt.config.value("variant", std::string("model"));
  m.params = std::move(ckpt.params);
  model::check_params(m.config, m.params);
  return m;
}

void save_model(const fs::path& path, const std::string& variant, const model::ModelConfig& cfg,
                const model::ParamSet& params, const io::RunConfig& run, const data::Corpus& corpus) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  ad::Checkpoint ckpt;
  ckpt.params = params;
  ckpt.config = {{"variant", variant},
                 {"model", model::to_json(cfg)},
                 {"train", io::to_json(run.train)},
                 {"corpus_hash", data::content_hash(corpus)}};
  ad::save_checkpoint(ckpt, path);
}

std::vector<data::Scanpath> restrict_to(std::vector<data::Scanpath> sps, const data::Corpus& corpus, data::Split split) {
  const auto& ids = corpus.splits.ids(split);
  const std::set<int> keep(ids.begin(), ids.end());
  std::erase_if(sps, [&](const data::Scanpath& sp) { return !keep.count(sp.image_id); });
  return sps;
}

// Predictions from --pred, --finetuned, or the checkpoint decoded greedily.
struct PredictionSource {
  std::string variant;
  std::vector<data::Scanpath> scanpaths;
};

PredictionSource load_predictions(const Context& ctx, const data::Corpus& corpus) {
  if (ctx.opt.pred) return {"pred", restrict_to(io::read_scanpaths(*ctx.opt.pred), corpus, ctx.split())};
  train::PredictConfig pc = ctx.cfg.predict;
  pc.mode = model::DecodeMode::Argmax;
  const auto m = load_model(ctx.checkpoint());
  check_compatible(m.config, corpus);
  return {m.variant, train::predict_split(m.config, m.params, corpus, ctx.split(), pc)};
}

std::vector<int> group_labels(const data::Corpus& corpus) {
  std::vector<int> labels;
  for (const auto& p : corpus.profiles) labels.push_back(p.group == data::Group::B ? 1 : 0);
  return labels;
}

void finish(const io::MetricReport& report, const fs::path& dir) {
  io::emit_report(report, dir);
  std::cout << "report: " << (dir / "report.csv").string() << "\n";
}

// ---- commands ---------------------------------------------------------------

int cmd_gen_data(Context& ctx) {
  ctx.cfg.seeds.data = ctx.opt.seed;
  const auto corpus = data::build_corpus(ctx.cfg.generator, ctx.cfg.seeds.data);
  io::write_corpus(corpus, ctx.data_dir());
  std::cout << "wrote " << corpus.scenes.size() << " scenes, " << corpus.scanpaths.size() << " scanpaths to "
            << ctx.data_dir().string() << " (hash " << data::content_hash(corpus) << ")\n";
  return 0;
}

train::Variant pick_variant(const Context& ctx) {
  if (!ctx.opt.variant) return {"OE+FI+FP", ctx.cfg.model};
  for (auto& v : train::ablation_variants(ctx.cfg.model)) {
    if (v.name == *ctx.opt.variant) return v;
  }
  throw UsageError("unknown variant '" + *ctx.opt.variant + "'");
}

void add_loss_rows(io::MetricReport& r, const std::string& variant, const std::string& split,
                   const train::EpochLoss& l) {
  r.add(variant, split, "position_loss", l.position);
  r.add(variant, split, "duration_loss", l.duration);
  r.add(variant, split, "total_loss", l.total);
}

int cmd_train(Context& ctx) {
  ctx.cfg.seeds.init = ctx.opt.seed;
  ctx.cfg.seeds.train = ctx.opt.seed;
  ctx.cfg.sync_seeds();
  const auto corpus = io::read_corpus(ctx.data_dir());
  const auto variant = pick_variant(ctx);
  check_compatible(variant.config, corpus);
  const auto run = train::train_variant(variant, corpus, ctx.cfg.train, ctx.cfg.seeds.init);
  save_model(ctx.checkpoint(), variant.name, variant.config, run.params, ctx.cfg, corpus);

  auto report = new_report(ctx, data::content_hash(corpus));
  add_loss_rows(report, variant.name, "train", run.curve.back());
  add_loss_rows(report, variant.name, "val",
                train::evaluate_loss(variant.config, run.params, corpus, corpus.scanpaths_in(data::Split::Val),
                                     ctx.cfg.train.duration_loss_weight));
  fs::create_directories(ctx.out_dir());
  train::write_loss_curve_csv(run.curve, ctx.out_dir() / "loss_curve.csv");
  finish(report, ctx.out_dir());
  std::cout << "checkpoint: " << ctx.checkpoint().string() << "\n";
  return 0;
}

int cmd_finetune(Context& ctx) {
  ctx.cfg.seeds.train = ctx.opt.seed;
  ctx.cfg.sync_seeds();
  const auto corpus = io::read_corpus(ctx.data_dir());
  const auto base = load_model(ctx.checkpoint());
  check_compatible(base.config, corpus);
  const auto copies = train::fine_tune_per_observer(base.config, base.params, corpus, ctx.cfg.train);

  const auto dir = ctx.out_dir() / "finetuned";
  auto report = new_report(ctx, data::content_hash(corpus));
  const auto val = corpus.scanpaths_in(data::Split::Val);
  for (std::size_t o = 0; o < copies.size(); ++o) {
    save_model(dir / ("observer_" + std::to_string(o) + ".json"), "ft", base.config, copies[o], ctx.cfg, corpus);
    std::vector<data::Scanpath> own;
    std::copy_if(val.begin(), val.end(), std::back_inserter(own),
                 [&](const data::Scanpath& sp) { return sp.observer_id == static_cast<int>(o); });
    const double w = ctx.cfg.train.duration_loss_weight;
    report.details["val_total_loss"].push_back(
        {{"observer", o},
         {"base", train::evaluate_loss(base.config, base.params, corpus, own, w).total},
         {"finetuned", train::evaluate_loss(base.config, copies[o], corpus, own, w).total}});
  }
  finish(report, ctx.out_dir());
  std::cout << "fine-tuned copies: " << dir.string() << "\n";
  return 0;
}

std::vector<model::ParamSet> load_finetuned(const fs::path& dir, model::ModelConfig& cfg) {
  std::vector<model::ParamSet> out;
  for (std::size_t o = 0;; ++o) {
    const auto path = dir / ("observer_" + std::to_string(o) + ".json");
    if (!fs::exists(path)) break;
    auto m = load_model(path);
    if (o > 0 && model::to_json(m.config) != model::to_json(cfg)) {
      throw std::invalid_argument(path.string() + ": config differs from observer_0");
    }
    cfg = m.config;
    out.push_back(std::move(m.params));
  }
  if (out.empty()) throw std::invalid_argument("no observer_<n>.json checkpoints in " + dir.string());
  return out;
}

int cmd_predict(Context& ctx) {
  ctx.cfg.seeds.predict = ctx.opt.seed;
  ctx.cfg.sync_seeds();
  if (ctx.opt.sample) ctx.cfg.predict.mode = model::DecodeMode::Sample;
  const auto corpus = io::read_corpus(ctx.data_dir());
  std::vector<data::Scanpath> preds;
  if (ctx.opt.finetuned) {
    model::ModelConfig cfg;
    const auto sets = load_finetuned(*ctx.opt.finetuned, cfg);
    check_compatible(cfg, corpus);
    preds = train::predict_split_per_observer(cfg, sets, corpus, ctx.split(), ctx.cfg.predict);
  } else {
    const auto m = load_model(ctx.checkpoint());
    check_compatible(m.config, corpus);
    preds = train::predict_split(m.config, m.params, corpus, ctx.split(), ctx.cfg.predict);
  }
  const fs::path out = ctx.opt.pred.value_or((ctx.out_dir() / "predictions.jsonl").string());
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  io::write_scanpaths(preds, out);
  std::cout << "wrote " << preds.size() << " predictions to " << out.string() << "\n";
  return 0;
}

int cmd_eval_value(Context& ctx) {
  const auto corpus = io::read_corpus(ctx.data_dir());
  const auto src = load_predictions(ctx, corpus);
  const auto gts = corpus.scanpaths_in(ctx.split());
  const auto result = eval::value_eval(src.scanpaths, gts, ctx.cfg.metrics, ctx.threads());
  auto report = new_report(ctx, data::content_hash(corpus));
  report.add_value(src.variant, ctx.opt.split, result.summary);
  report.add_value("human", ctx.opt.split, eval::human_consistency(gts, ctx.cfg.metrics));
  finish(report, ctx.out_dir());
  return 0;
}

int cmd_eval_rank(Context& ctx) {
  const auto corpus = io::read_corpus(ctx.data_dir());
  const auto src = load_predictions(ctx, corpus);
  const auto gts = corpus.scanpaths_in(ctx.split());
  const auto result = eval::rank_eval(src.scanpaths, gts, ctx.cfg.metrics, eval::kDefaultKs, ctx.threads());
  auto report = new_report(ctx, data::content_hash(corpus));
  report.add_ranking(src.variant, ctx.opt.split, result);
  report.details["random_rank_mrr"] = eval::random_rank_mrr(result.n_observers);
  report.details["skipped_images"] = result.skipped_images;
  finish(report, ctx.out_dir());
  return 0;
}

int cmd_eval_saliency(Context& ctx) {
  ctx.cfg.seeds.saliency = ctx.opt.seed;
  ctx.cfg.sync_seeds();
  const auto corpus = io::read_corpus(ctx.data_dir());
  const auto src = load_predictions(ctx, corpus);
  const auto gts = corpus.scanpaths_in(ctx.split());
  const auto result = eval::evaluate_saliency(src.scanpaths, gts, ctx.cfg.saliency);
  auto report = new_report(ctx, data::content_hash(corpus));
  report.add_saliency(src.variant, ctx.opt.split, result.mean);
  const auto maps = ctx.out_dir() / "saliency";
  fs::create_directories(maps);
  for (const auto& [image, map] : result.pred_maps) {
    eval::write_pgm(map, maps / ("pred_" + std::to_string(image) + ".pgm"));
    const auto& s = result.per_image.at(image);
    report.details["per_image"].push_back({{"image", image},
                                           {"cc", s.cc},
                                           {"auc", s.auc},
                                           {"nss", s.nss},
                                           {"sauc", s.sauc},
                                           {"kld", s.kld},
                                           {"sim", s.sim}});
  }
  finish(report, ctx.out_dir());
  return 0;
}

int cmd_ablate(Context& ctx) {
  ctx.cfg.seeds.init = ctx.opt.seed;
  ctx.cfg.seeds.train = ctx.opt.seed;
  ctx.cfg.sync_seeds();
  const auto corpus = io::read_corpus(ctx.data_dir());
  check_compatible(ctx.cfg.model, corpus);
  train::PredictConfig pc = ctx.cfg.predict;
  pc.mode = model::DecodeMode::Argmax;
  auto report = new_report(ctx, data::content_hash(corpus));
  const auto curves = ctx.out_dir() / "curves";
  fs::create_directories(curves);
  for (const auto& v : train::ablation_variants(ctx.cfg.model)) {
    std::cout << "training " << v.name << "\n" << std::flush;
    auto run = train::train_variant(v, corpus, ctx.cfg.train, ctx.cfg.seeds.init);
    train::write_loss_curve_csv(run.curve, curves / (v.name + ".csv"));
    const auto r = train::evaluate_variant(v, std::move(run), corpus, ctx.split(), pc, ctx.cfg.metrics);
    report.add_value(v.name, ctx.opt.split, r.value);
    report.add_ranking(v.name, ctx.opt.split, r.ranking);
    report.add(v.name, ctx.opt.split, "total_loss", r.curve.back().total);
    report.details["random_rank_mrr"] = eval::random_rank_mrr(r.ranking.n_observers);
  }
  finish(report, ctx.out_dir());
  return 0;
}

json stats_json(const std::vector<analysis::ObserverRoiStats>& stats) {
  json out = json::array();
  for (const auto& s : stats) {
    json cats = json::object();
    for (int c = 0; c < data::kRoiCount; ++c) {
      const auto roi = static_cast<data::Roi>(c);
      const auto& cs = s[roi];
      cats[std::string(data::roi_name(roi))] = {
          {"count", cs.count},
          {"proportion", cs.proportion},
          {"latency_ms", cs.latency_ms ? json(*cs.latency_ms) : json(nullptr)},
          {"mean_duration_ms", cs.mean_duration_ms ? json(*cs.mean_duration_ms) : json(nullptr)}};
    }
    out.push_back({{"observer", s.observer_id}, {"fixations", s.n_fixations}, {"categories", cats}});
  }
  return out;
}

int cmd_analyze(Context& ctx) {
  ctx.cfg.seeds.analysis = ctx.opt.seed;
  const auto corpus = io::read_corpus(ctx.data_dir());
  const auto src = load_predictions(ctx, corpus);
  const auto gts = corpus.scanpaths_in(ctx.split());
  const auto cmp = analysis::compare_semantics(src.scanpaths, gts, corpus.scenes, ctx.cfg.permutations,
                                               data::derive_seed(ctx.cfg.seeds.analysis, 1));
  auto report = new_report(ctx, data::content_hash(corpus));
  report.add(src.variant, ctx.opt.split, "spearman_rho", cmp.social_rank.rho);
  report.add(src.variant, ctx.opt.split, "spearman_p", cmp.social_rank.p_greater);
  report.details["spearman_p_two_sided"] = cmp.social_rank.p_two_sided;
  report.details["spearman_degenerate"] = cmp.social_rank.degenerate;

  const auto labels = group_labels(corpus);
  auto compare = [&](const std::string& who, const std::vector<analysis::ObserverRoiStats>& stats, std::uint64_t k) {
    const auto social = analysis::proportions(stats, data::Roi::Social);
    const auto [a, b] = analysis::split_by_group(social, labels);
    const auto g = analysis::group_compare(a, b, ctx.cfg.permutations, data::derive_seed(ctx.cfg.seeds.analysis, k));
    report.add(who, ctx.opt.split, "t_stat", g.t);
    report.add(who, ctx.opt.split, "perm_p", g.p);
    report.details["group_social"][who] = {{"mean_a", g.mean_a}, {"mean_b", g.mean_b}};
  };
  compare("gt", cmp.ground_truth, 2);
  compare(src.variant, cmp.predicted, 3);
  report.details["roi"]["gt"] = stats_json(cmp.ground_truth);
  report.details["roi"][src.variant] = stats_json(cmp.predicted);
  finish(report, ctx.out_dir());
  return 0;
}

int cmd_classify(Context& ctx) {
  ctx.cfg.seeds.classifier = ctx.opt.seed;
  ctx.cfg.sync_seeds();
  const auto corpus = io::read_corpus(ctx.data_dir());
  const auto m = load_model(ctx.checkpoint());
  check_compatible(m.config, corpus);
  const auto features = analysis::extract_observer_features(m.config, m.params);
  auto labels = group_labels(corpus);
  if (ctx.opt.shuffle_labels) {
    std::mt19937_64 rng(data::derive_seed(ctx.cfg.seeds.classifier, 0x5f));
    std::shuffle(labels.begin(), labels.end(), rng);
  }
  const auto result = analysis::classify_group_loocv(features, labels, ctx.cfg.classifier);
  const auto [lo, hi] = analysis::binomial_interval(labels.size());
  const std::string variant = ctx.opt.shuffle_labels ? m.variant + "/shuffled" : m.variant;
  auto report = new_report(ctx, data::content_hash(corpus));
  report.add(variant, "loocv", "accuracy", result.accuracy);
  report.details = {{"labels", labels},
                    {"predictions", result.predictions},
                    {"probabilities", result.probabilities},
                    {"chance_interval", {lo, hi}}};
  finish(report, ctx.out_dir());
  return 0;
}

int cmd_grad_check(Context& ctx) {
  bool ok = true;
  double worst = 0.0;
  for (const auto& c : ad::check_primitives(ctx.opt.count)) {
    worst = std::max(worst, c.report.max_rel_error);
    if (!c.report.passed) {
      ok = false;
      std::cout << "FAIL primitive " << c.name << " seed " << c.seed << " err " << c.report.max_rel_error << "\n";
    }
  }
  std::cout << "primitives: max relative error " << worst << "\n";
  for (std::size_t i = 0; i < ctx.opt.count; ++i) {
    const auto seed = ctx.opt.seed + i;
    const auto r = train::check_loss_gradients(seed);
    std::cout << "loss seed " << seed << ": max relative error " << r.max_rel_error << (r.passed ? "" : " FAIL")
              << "\n";
    for (const auto& p : r.params) {
      if (!p.passed) std::cout << "  " << p.name << " " << p.max_rel_error << "\n";
    }
    ok = ok && r.passed;
  }
  return ok ? 0 : 2;
}

// ---- wiring -----------------------------------------------------------------

struct Command {
  const char* name;
  const char* help;
  int (*run)(Context&);
  bool stochastic;
};

const Command kCommands[] = {
    {"gen-data", "Generate the synthetic corpus", cmd_gen_data, true},
    {"train", "Train a model variant", cmd_train, true},
    {"finetune", "Fine-tune an observer-agnostic checkpoint per observer", cmd_finetune, true},
    {"predict", "Write predicted scanpaths for a split", cmd_predict, true},
    {"eval-value", "ScanMatch, MultiMatch and SED against ground truth", cmd_eval_value, false},
    {"eval-rank", "Recall@K and MRR of observer identification", cmd_eval_rank, false},
    {"eval-saliency", "Saliency metrics and PGM maps", cmd_eval_saliency, true},
    {"ablate", "Train and evaluate every ablation variant", cmd_ablate, true},
    {"analyze", "Semantic ROI analysis and group comparison", cmd_analyze, true},
    {"classify", "Leave-one-out group classifier on observer features", cmd_classify, true},
    {"grad-check", "Finite-difference gradient checks", cmd_grad_check, true},
};

void add_options(CLI::App& sub, const Command& c, Options& o) {
  sub.add_option("--config", o.config, "RunConfig JSON")->check(CLI::ExistingFile);
  auto* seed = sub.add_option("--seed", o.seed, "seed for this command's randomness");
  if (c.stochastic) seed->required();
  const std::string name = c.name;
  if (name == "grad-check") {
    sub.add_option("--count", o.count, "seeds of the loss check and primitive shapes")->check(CLI::PositiveNumber);
    return;
  }
  sub.add_option("--data", o.data_dir, "corpus directory");
  sub.add_option("--out", o.out_dir, "output directory");
  if (name == "gen-data") return;
  sub.add_option("--checkpoint", o.checkpoint, "model checkpoint");
  if (name == "train" || name == "finetune" || name == "ablate") {
    sub.add_option("--epochs", o.epochs);
    sub.add_option("--lr", o.lr);
    sub.add_option("--batch-size", o.batch_size);
    sub.add_option("--weight-decay", o.weight_decay);
  }
  if (name == "train") sub.add_option("--variant", o.variant, "none, OE, OE+FI, OE+FP, OE+FI+FP or one-hot");
  if (name != "train" && name != "finetune" && name != "classify") {
    sub.add_option("--split", o.split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  }
  if (name == "predict") {
    sub.add_option("--pred", o.pred, "output scanpaths (JSON Lines)");
    sub.add_option("--finetuned", o.finetuned, "directory of per-observer checkpoints");
    sub.add_flag("--sample", o.sample, "sample instead of argmax decoding");
  }
  if (name.starts_with("eval-") || name == "analyze") {
    sub.add_option("--pred", o.pred, "predicted scanpaths; default decodes --checkpoint");
  }
  if (name == "analyze") sub.add_option("--permutations", o.permutations)->check(CLI::PositiveNumber);
  if (name == "classify") sub.add_flag("--shuffle-labels", o.shuffle_labels, "permute group labels");
  if (name.starts_with("eval-") || name == "ablate") sub.add_option("--threads", o.threads, "worker threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Individualized scanpath prediction toolkit", "isp"};
  app.require_subcommand(1);
  Options opt;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : kCommands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_options(*sub, c, opt);
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      Context ctx{cmd->name, resolve_config(opt), opt};
      ctx.cfg.validate();
      ctx.cfg.sync_seeds();
      return cmd->run(ctx);
    } catch (const UsageError& e) {
      std::cerr << "isp " << cmd->name << ": " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "isp " << cmd->name << ": " << e.what() << "\n";
      return 2;
    }
  }
  return 1;
}
