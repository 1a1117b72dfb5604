// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero if
// any check in the selected group fails.
//
//   acceptance properties    criteria 1-4
//   acceptance training      criteria 5-9 plus the training-run properties
//   acceptance determinism   criterion 10

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "isp/analysis/analysis.hpp"
#include "isp/autodiff/primitive_checks.hpp"
#include "isp/data/corpus.hpp"
#include "isp/eval/evaluation.hpp"
#include "isp/io/config.hpp"
#include "isp/metrics/scanpath_metrics.hpp"
#include "isp/model/model.hpp"
#include "isp/train/experiment.hpp"
#include "isp/train/gradcheck.hpp"
#include "isp/train/train.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace isp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Verdicts {
 public:
  void record(const std::string& id, bool pass, const std::string& what) {
    std::cout << id << ' ' << (pass ? "PASS" : "FAIL") << ' ' << what << std::endl;
    failed_ = failed_ || !pass;
  }
  int exit_code() const { return failed_ ? 1 : 0; }

 private:
  bool failed_ = false;
};

// ---- criteria 1-4 -----------------------------------------------------------

void criterion_1(Verdicts& v) {
  const auto start = Clock::now();
  double prim_worst = 0.0;
  bool prim_ok = true;
  std::string prim_failures;
  for (const auto& c : ad::check_primitives(10, {1e-5, 1e-4})) {
    prim_worst = std::max(prim_worst, c.report.max_rel_error);
    if (!c.report.passed) {
      prim_ok = false;
      prim_failures += " " + c.name;
    }
  }
  double loss_worst = 0.0;
  bool loss_ok = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = train::check_loss_gradients(seed, {1e-5, 1e-4});
    loss_worst = std::max(loss_worst, r.max_rel_error);
    loss_ok = loss_ok && r.passed && r.max_rel_error < 1e-4;
  }
  const double secs = seconds_since(start);
  v.record("C1", prim_ok && loss_ok && secs < 30.0,
           fmt("gradient correctness: %zu primitives max rel err %.2e%s; full loss (4x4, C=3, L=2, T=3, 5 seeds) "
               "max rel err %.2e; %.1f s (< 30 s)",
               ad::primitive_cases().size(), prim_worst, prim_failures.c_str(), loss_worst, secs));
}

bool is_simplex(const ad::Tensor& t, double tol, double& worst) {
  double sum = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < t.numel(); ++i) {
    ok = ok && t[i] >= 0.0;
    sum += t[i];
  }
  worst = std::max(worst, std::abs(sum - 1.0));
  return ok && std::abs(sum - 1.0) <= tol;
}

void criterion_2(Verdicts& v) {
  model::ModelConfig base;
  base.n_observers = 3;
  base.grid_h = 5;
  base.grid_w = 6;
  base.channels = 4;
  base.observer_dim = 4;
  base.hidden = 6;
  base.semantic_channels = 3;
  base.max_steps = 4;
  const auto variants = train::ablation_variants(base);
  std::mt19937_64 rng(20);
  std::normal_distribution<double> noise(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t checked = 0, bad = 0;
  double worst = 0.0;
  for (int pass = 0; pass < 1000; ++pass) {
    const auto& cfg = variants[static_cast<std::size_t>(pass) % variants.size()].config;
    auto params = model::init_params(cfg, static_cast<std::uint64_t>(pass));
    for (auto& [_, t] : params) {
      for (auto& x : t.mutable_data()) x += noise(rng);
    }
    std::vector<double> e(cfg.channels * cfg.cells());
    for (auto& x : e) x = 3.0 * u(rng);
    data::Scanpath gt{0, pass % 3, {}};
    for (std::size_t t = 0; t < cfg.max_steps; ++t) gt.fixations.push_back({u(rng), u(rng), 200.0});
    const auto ro = model::rollout_teacher_forced(cfg, params, ad::Tensor({cfg.channels, cfg.cells()}, e),
                                                  static_cast<std::size_t>(pass % 3), gt);
    auto check = [&](const ad::Tensor& t) {
      ++checked;
      if (!is_simplex(t, 1e-6, worst)) ++bad;
    };
    check(ro.m0);
    if (cfg.enable_fi) check(ro.context.m_u);
    for (const auto& s : ro.steps) {
      check(s.m);
      check(s.beta);
    }
  }
  v.record("C2", bad == 0,
           fmt("simplex invariants: %zu maps over 1000 random forward passes, %zu violations, max |sum-1| %.1e",
               checked, bad, worst));
}

void criterion_3(Verdicts& v) {
  const auto start = Clock::now();
  // ScanMatch: every pair of token sequences of length 1..4 over a 2x2 grid.
  const metrics::SubstitutionMatrix sub(2, 2, 4.0, 3.0);
  const auto seqs = oracle::all_sequences(4, 4);
  std::size_t sm_pairs = 0, sm_bad = 0;
  for (double gap : {0.0, 0.5}) {
    for (const auto& a : seqs) {
      for (const auto& b : seqs) {
        ++sm_pairs;
        if (std::abs(metrics::needleman_wunsch(a, b, sub, gap) - oracle::brute_force_alignment(a, b, sub, gap)) >
            1e-12) {
          ++sm_bad;
        }
      }
    }
  }
  // SED: random strings of length 0..6 against the naive recursion.
  std::mt19937_64 rng(30);
  std::size_t sed_bad = 0;
  const std::size_t sed_pairs = 3000;
  for (std::size_t i = 0; i < sed_pairs; ++i) {
    auto draw = [&] {
      std::vector<int> s(rng() % 7);
      for (auto& c : s) c = static_cast<int>(rng() % 4);
      return s;
    };
    const auto a = draw();
    const auto b = draw();
    if (metrics::levenshtein(a, b) != oracle::naive_levenshtein(a, 0, b, 0)) ++sed_bad;
  }
  // MultiMatch: 3-fixation pairs against exhaustive monotone alignment.
  std::size_t mm_bad = 0;
  const std::size_t mm_pairs = 3000;
  for (std::size_t i = 0; i < mm_pairs; ++i) {
    const auto a = oracle::random_scanpath(rng, 3, 3);
    const auto b = oracle::random_scanpath(rng, 3, 3);
    const auto got = metrics::multimatch(a, b);
    const auto want = oracle::exhaustive_multimatch(a, b);
    const double err = std::max({std::abs(got.shape - want.shape), std::abs(got.direction - want.direction),
                                 std::abs(got.length - want.length), std::abs(got.position - want.position),
                                 std::abs(got.duration - want.duration)});
    if (err > 1e-12) ++mm_bad;
  }
  const double secs = seconds_since(start);
  v.record("C3", sm_bad == 0 && sed_bad == 0 && mm_bad == 0 && secs < 60.0,
           fmt("metric oracles: ScanMatch %zu/%zu exhaustive pairs, SED %zu/%zu, MultiMatch %zu/%zu disagree; "
               "%.1f s (< 60 s)",
               sm_bad, sm_pairs, sed_bad, sed_pairs, mm_bad, mm_pairs, secs));
}

void criterion_4(Verdicts& v) {
  std::mt19937_64 rng(40);
  std::size_t identity_bad = 0, symmetry_bad = 0, triangle_bad = 0;
  for (int i = 0; i < 200; ++i) {
    const auto a = oracle::random_scanpath(rng, 2, 8);
    const auto mm = metrics::multimatch(a, a);
    const bool ok = metrics::scanmatch(a, a) == 1.0 && metrics::string_edit_distance(a, a) == 0 && mm.shape == 1.0 &&
                    mm.direction == 1.0 && mm.length == 1.0 && mm.position == 1.0 && mm.duration == 1.0;
    if (!ok) ++identity_bad;
  }
  for (int i = 0; i < 200; ++i) {
    const auto a = oracle::random_scanpath(rng);
    const auto b = oracle::random_scanpath(rng);
    const auto ab = metrics::multimatch(a, b);
    const auto ba = metrics::multimatch(b, a);
    const bool ok = metrics::scanmatch(a, b) == metrics::scanmatch(b, a) &&
                    metrics::string_edit_distance(a, b) == metrics::string_edit_distance(b, a) &&
                    ab.shape == ba.shape && ab.direction == ba.direction && ab.length == ba.length &&
                    ab.position == ba.position && ab.duration == ba.duration;
    if (!ok) ++symmetry_bad;
  }
  for (int i = 0; i < 1000; ++i) {
    const auto a = oracle::random_scanpath(rng);
    const auto b = oracle::random_scanpath(rng);
    const auto c = oracle::random_scanpath(rng);
    if (metrics::string_edit_distance(a, c) >
        metrics::string_edit_distance(a, b) + metrics::string_edit_distance(b, c)) {
      ++triangle_bad;
    }
  }
  v.record("C4", identity_bad + symmetry_bad + triangle_bad == 0,
           fmt("metric identities: identity failures %zu/200, symmetry failures %zu/200, SED triangle violations "
               "%zu/1000",
               identity_bad, symmetry_bad, triangle_bad));
}

// ---- criteria 5-9 -----------------------------------------------------------

io::RunConfig lab_config() {
  auto cfg = io::load_run_config(ISP_CONFIG_DIR "/lab.json");
  cfg.sync_seeds();
  cfg.validate();
  return cfg;
}

void training_criteria(Verdicts& v) {
  const auto cfg = lab_config();
  std::cout << "lab preset: lr " << cfg.train.lr << ", " << cfg.train.epochs << " epochs, batch "
            << cfg.train.batch_size << ", corpus seed " << cfg.seeds.data << std::endl;
  const auto start = Clock::now();
  const auto corpus = data::build_corpus(cfg.generator, cfg.seeds.data);
  train::PredictConfig pc = cfg.predict;
  pc.mode = model::DecodeMode::Argmax;

  std::map<std::string, train::VariantResult> results;
  auto variants = train::ablation_variants(cfg.model);
  // The two variants criterion 5 needs come first so its runtime is measured alone.
  std::stable_partition(variants.begin(), variants.end(),
                        [](const train::Variant& x) { return x.name == "none" || x.name == "OE+FI+FP"; });
  double c5_secs = 0.0;
  for (const auto& var : variants) {
    const auto t0 = Clock::now();
    auto run = train::train_variant(var, corpus, cfg.train, cfg.seeds.init);
    auto r = train::evaluate_variant(var, std::move(run), corpus, data::Split::Test, pc, cfg.metrics);
    std::cout << fmt("  %-9s SM %.4f  MM %.4f  SED %.3f  R@1 %5.2f  MRR %.4f  (%.0f s)", var.name.c_str(),
                     r.value.sm.mean, r.value.mm.mean, r.value.sed.mean, r.ranking.recall_at.at(1), r.ranking.mrr,
                     seconds_since(t0))
              << std::endl;
    results.emplace(var.name, std::move(r));
    if (results.size() == 2) c5_secs = seconds_since(start);
  }
  const auto& full = results.at("OE+FI+FP");
  const auto& none = results.at("none");

  // 5: individualization signal.
  const double chance = 100.0 / static_cast<double>(cfg.model.n_observers);
  const double full_r1 = full.ranking.recall_at.at(1);
  const double none_r1 = none.ranking.recall_at.at(1);
  const double expected_mrr = eval::random_rank_mrr(cfg.model.n_observers);
  const bool c5 = full_r1 >= chance + 10.0 && full_r1 >= none_r1 + 10.0 &&
                  std::abs(none.ranking.mrr - expected_mrr) <= 0.05 && c5_secs < 600.0;
  v.record("C5", c5,
           fmt("individualization: full R@1 %.2f%% (chance %.2f%%, need >= +10), agnostic R@1 %.2f%% (need full >= "
               "+10), agnostic MRR %.4f vs random %.4f (need within 0.05); %.0f s (< 600 s)",
               full_r1, chance, none_r1, none.ranking.mrr, expected_mrr, c5_secs));

  // 6: ablation ordering.
  constexpr double kTie = 1e-3;
  const double sm_full = full.value.sm.mean;
  const double sm_fi = results.at("OE+FI").value.sm.mean;
  const double sm_oe = results.at("OE").value.sm.mean;
  const double sm_none = none.value.sm.mean;
  std::string best_mrr_name;
  double best_other_mrr = -1.0;
  for (const auto& [name, r] : results) {
    if (name != "OE+FI+FP" && r.ranking.mrr > best_other_mrr) {
      best_other_mrr = r.ranking.mrr;
      best_mrr_name = name;
    }
  }
  const bool order_ok = sm_full >= sm_fi - kTie && sm_fi >= sm_oe - kTie && sm_oe >= sm_none - kTie;
  const bool mrr_ok = full.ranking.mrr >= best_other_mrr - kTie;
  v.record("C6", order_ok && mrr_ok,
           fmt("ablation ordering: SM full %.4f %s OE+FI %.4f %s OE %.4f %s none %.4f; MRR full %.4f vs best other "
               "%.4f (%s)",
               sm_full, sm_full >= sm_fi - kTie ? ">=" : "<", sm_fi, sm_fi >= sm_oe - kTie ? ">=" : "<", sm_oe,
               sm_oe >= sm_none - kTie ? ">=" : "<", sm_none, full.ranking.mrr, best_other_mrr,
               best_mrr_name.c_str()));

  // 7: saliency direction.
  const auto gts = corpus.scanpaths_in(data::Split::Test);
  auto scfg = cfg.saliency;
  const auto sal = eval::evaluate_saliency(full.predictions, gts, scfg);
  const eval::SaliencyMap uniform{scfg.height, scfg.width,
                                  std::vector<double>(scfg.height * scfg.width, 1.0 / (scfg.height * scfg.width))};
  std::vector<data::Fixation> pooled;
  for (const auto& sp : gts) pooled.insert(pooled.end(), sp.fixations.begin(), sp.fixations.end());
  const double uniform_nss = eval::nss(uniform, pooled);
  v.record("C7", sal.mean.nss > 0.5 && sal.mean.nss > uniform_nss && sal.mean.cc > 0.3,
           fmt("saliency: NSS %.3f (need > 0.5 and > uniform %.3f), CC %.3f (need > 0.3)", sal.mean.nss, uniform_nss,
               sal.mean.cc));

  // 8: semantic recovery.
  const auto perm_seed = data::derive_seed(cfg.seeds.analysis, 1);
  const auto sem_full = analysis::compare_semantics(full.predictions, gts, corpus.scenes, cfg.permutations, perm_seed);
  const auto sem_none = analysis::compare_semantics(none.predictions, gts, corpus.scenes, cfg.permutations, perm_seed);
  const bool c8 = sem_full.social_rank.rho > 0.5 && sem_full.social_rank.p_greater < 0.05 &&
                  !(sem_none.social_rank.rho > 0.0 && sem_none.social_rank.p_greater < 0.05);
  v.record("C8", c8,
           fmt("semantic recovery: full rho %.3f (p %.4f, need rho > 0.5, p < 0.05); agnostic rho %.3f (p %.4f%s, "
               "need not significant)",
               sem_full.social_rank.rho, sem_full.social_rank.p_greater, sem_none.social_rank.rho,
               sem_none.social_rank.p_greater, sem_none.social_rank.degenerate ? ", constant ranking" : ""));

  // 9: group classifier.
  std::vector<int> labels;
  for (const auto& p : corpus.profiles) labels.push_back(p.group == data::Group::B ? 1 : 0);
  const auto features = analysis::extract_observer_features(full.variant.config, full.params);
  const auto acc = analysis::classify_group_loocv(features, labels, cfg.classifier).accuracy;
  const auto [lo, hi] = analysis::binomial_interval(labels.size());
  bool shuffled_ok = true;
  std::string shuffled;
  for (std::uint64_t k = 0; k < 5; ++k) {
    auto perm = labels;
    std::mt19937_64 rng(data::derive_seed(cfg.seeds.classifier, 0x5f, k));
    std::shuffle(perm.begin(), perm.end(), rng);
    const double a = analysis::classify_group_loocv(features, perm, cfg.classifier).accuracy;
    shuffled_ok = shuffled_ok && a >= lo && a <= hi;
    shuffled += fmt("%s%.1f", k ? "/" : "", a);
  }
  v.record("C9", acc >= 70.0 && shuffled_ok,
           fmt("classifier: LOOCV accuracy %.1f%% (need >= 70); 5 shuffled-label runs %s%% (need within "
               "[%.1f, %.1f])",
               acc, shuffled.c_str(), lo, hi));

  // Properties of the training protocol on the same run.
  const auto& curve = full.curve;
  v.record("P-train", curve.back().total < 0.8 * curve.front().total,
           fmt("full model training loss %.4f -> %.4f (need < 0.8x)", curve.front().total, curve.back().total));
  v.record("P-ablation", sm_full >= sm_none, fmt("full SM %.4f >= agnostic SM %.4f", sm_full, sm_none));

  const auto copies = train::fine_tune_per_observer(none.variant.config, none.params, corpus, cfg.train);
  const auto train_set = corpus.scanpaths_in(data::Split::Train);
  std::size_t worse = 0;
  double worst_gap = -1e300;
  for (std::size_t o = 0; o < copies.size(); ++o) {
    std::vector<data::Scanpath> own;
    std::copy_if(train_set.begin(), train_set.end(), std::back_inserter(own),
                 [&](const data::Scanpath& sp) { return sp.observer_id == static_cast<int>(o); });
    const double w = cfg.train.duration_loss_weight;
    const double before = train::evaluate_loss(none.variant.config, none.params, corpus, own, w).total;
    const double after = train::evaluate_loss(none.variant.config, copies[o], corpus, own, w).total;
    worst_gap = std::max(worst_gap, after - before);
    if (after > before) ++worse;
  }
  v.record("P-finetune", worse == 0,
           fmt("fine-tuned copies worse than base on their own observer: %zu/%zu (max change %+.4f)", worse,
               copies.size(), worst_gap));
}

// ---- criterion 10 -----------------------------------------------------------

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " ISP_CLI_PATH " " + args + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_10(Verdicts& v) {
  const auto root = fs::temp_directory_path() / "isp_acceptance_determinism";
  fs::remove_all(root);
  const std::string config = "--config " ISP_CONFIG_DIR "/lab.json";
  bool ran = true;
  std::vector<std::string> reports;
  for (const std::string run : {"a", "b"}) {
    const auto dir = root / run;
    const std::string data = " --data " + (dir / "data").string();
    const std::string ckpt = " --checkpoint " + (dir / "model.json").string();
    // Different thread counts must not change the result.
    const std::string threads = run == "a" ? "ISP_THREADS=1" : "ISP_THREADS=3";
    ran = ran && run_cli("gen-data " + config + " --seed 2024" + data) == 0;
    ran = ran && run_cli("train " + config + " --seed 11 --epochs 2" + data + ckpt + " --out " +
                             (dir / "train").string()) == 0;
    ran = ran && run_cli("eval-rank " + config + data + ckpt + " --out " + (dir / "rank").string(), threads) == 0;
    auto report = nlohmann::json::parse(slurp(dir / "rank" / "report.json"));
    report["provenance"].erase("timestamp");
    reports.push_back(report.dump());
  }
  const bool ckpt_same = slurp(root / "a" / "model.json") == slurp(root / "b" / "model.json");
  const bool csv_same = slurp(root / "a" / "rank" / "report.csv") == slurp(root / "b" / "rank" / "report.csv");
  v.record("C10", ran && reports[0] == reports[1] && ckpt_same && csv_same,
           fmt("determinism: gen-data + train + eval-rank twice (1 vs 3 threads): report.json %s modulo timestamp, "
               "report.csv %s, checkpoint %s",
               reports[0] == reports[1] ? "identical" : "DIFFERS", csv_same ? "identical" : "DIFFERS",
               ckpt_same ? "identical" : "DIFFERS"));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string group = argc > 1 ? argv[1] : "all";
  Verdicts v;
  try {
    if (group == "properties" || group == "all") {
      criterion_1(v);
      criterion_2(v);
      criterion_3(v);
      criterion_4(v);
    }
    if (group == "training" || group == "all") training_criteria(v);
    if (group == "determinism" || group == "all") criterion_10(v);
  } catch (const std::exception& e) {
    std::cout << "ERROR " << e.what() << std::endl;
    return 2;
  }
  return v.exit_code();
}
