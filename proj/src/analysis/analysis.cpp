#include "isp/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "isp/autodiff/adam.hpp"
#include "isp/autodiff/ops.hpp"
#include "isp/autodiff/tape.hpp"
#include "isp/data/synthetic.hpp"

namespace isp::analysis {
namespace {

// Permutation statistics equal to the observed value up to rounding count as hits.
constexpr double kTieTol = 1e-12;

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double binomial_cdf(std::size_t k, std::size_t n, double p) {
  double acc = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    const double log_pmf = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(i) + 1.0) -
                           std::lgamma(static_cast<double>(n - i) + 1.0) + static_cast<double>(i) * std::log(p) +
                           static_cast<double>(n - i) * std::log1p(-p);
    acc += std::exp(log_pmf);
  }
  return acc;
}

}  // namespace

std::vector<ObserverRoiStats> roi_stats(std::span<const data::Scanpath> scanpaths,
                                        std::span<const data::SyntheticScene> scenes) {
  std::map<int, const data::SyntheticScene*> by_id;
  for (const auto& s : scenes) by_id.emplace(s.id, &s);

  struct Acc {
    ObserverRoiStats stats;
    std::array<double, data::kRoiCount> duration_sum{};
    std::array<double, data::kRoiCount> latency_sum{};
    std::array<std::size_t, data::kRoiCount> latency_n{};
  };
  std::map<int, Acc> acc;
  for (const auto& sp : scanpaths) {
    auto it = by_id.find(sp.image_id);
    if (it == by_id.end()) throw std::invalid_argument("roi_stats: unknown image id " + std::to_string(sp.image_id));
    const auto& scene = *it->second;
    auto& a = acc[sp.observer_id];
    a.stats.observer_id = sp.observer_id;
    std::array<bool, data::kRoiCount> seen{};
    double elapsed = 0.0;
    for (const auto& f : sp.fixations) {
      const auto roi = scene.roi_mask.at(data::cell_index(f.x, f.y, scene.height(), scene.width()));
      const auto k = static_cast<std::size_t>(roi);
      ++a.stats.category[k].count;
      ++a.stats.n_fixations;
      a.duration_sum[k] += f.dur_ms;
      if (!seen[k]) {
        seen[k] = true;
        a.latency_sum[k] += elapsed;
        ++a.latency_n[k];
      }
      elapsed += f.dur_ms;
    }
  }

  std::vector<ObserverRoiStats> out;
  for (auto& [_, a] : acc) {
    for (std::size_t k = 0; k < data::kRoiCount; ++k) {
      auto& c = a.stats.category[k];
      if (a.stats.n_fixations > 0) {
        c.proportion = static_cast<double>(c.count) / static_cast<double>(a.stats.n_fixations);
      }
      if (c.count > 0) c.mean_duration_ms = a.duration_sum[k] / static_cast<double>(c.count);
      if (a.latency_n[k] > 0) c.latency_ms = a.latency_sum[k] / static_cast<double>(a.latency_n[k]);
    }
    out.push_back(a.stats);
  }
  return out;
}

std::vector<double> proportions(std::span<const ObserverRoiStats> stats, data::Roi roi) {
  std::vector<double> out;
  for (const auto& s : stats) out.push_back(s[roi].proportion);
  return out;
}

std::vector<double> mean_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y, std::size_t permutations,
                            std::uint64_t seed) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman_rho: inputs differ in length");
  if (x.size() < 3) throw std::invalid_argument("spearman_rho: needs at least 3 values");
  if (permutations < 1) throw std::invalid_argument("spearman_rho: needs at least one permutation");
  SpearmanResult r;
  const auto rx = mean_ranks(x);
  auto ry = mean_ranks(y);
  const auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(rx) || constant(ry)) {
    r.degenerate = true;
    return r;
  }
  r.rho = pearson(rx, ry);
  std::mt19937_64 rng(seed);
  std::size_t hits_abs = 0, hits_greater = 0;
  for (std::size_t i = 0; i < permutations; ++i) {
    std::shuffle(ry.begin(), ry.end(), rng);
    const double rho = pearson(rx, ry);
    if (std::abs(rho) >= std::abs(r.rho) - kTieTol) ++hits_abs;
    if (rho >= r.rho - kTieTol) ++hits_greater;
  }
  const auto n = static_cast<double>(permutations) + 1.0;
  r.p_two_sided = (static_cast<double>(hits_abs) + 1.0) / n;
  r.p_greater = (static_cast<double>(hits_greater) + 1.0) / n;
  return r;
}

double welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t: each group needs at least 2 values");
  const double ma = mean_of(a), mb = mean_of(b);
  auto var = [](std::span<const double> v, double m) {
    double ss = 0.0;
    for (double e : v) ss += (e - m) * (e - m);
    return ss / static_cast<double>(v.size() - 1);
  };
  const double se2 = var(a, ma) / static_cast<double>(a.size()) + var(b, mb) / static_cast<double>(b.size());
  const double diff = ma - mb;
  if (se2 == 0.0) {
    if (diff == 0.0) return 0.0;
    return diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return diff / std::sqrt(se2);
}

GroupComparison group_compare(std::span<const double> a, std::span<const double> b, std::size_t permutations,
                              std::uint64_t seed) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("group_compare: each group needs at least 2 values");
  if (permutations < 1) throw std::invalid_argument("group_compare: needs at least one permutation");
  GroupComparison g;
  g.mean_a = mean_of(a);
  g.mean_b = mean_of(b);
  g.t = welch_t(a, b);
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::mt19937_64 rng(seed);
  const double observed = std::abs(g.t);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < permutations; ++i) {
    std::shuffle(pooled.begin(), pooled.end(), rng);
    const std::span<const double> all(pooled);
    const double t = std::abs(welch_t(all.first(a.size()), all.subspan(a.size())));
    if (t >= observed - kTieTol * std::max(1.0, observed) || (std::isinf(observed) && std::isinf(t))) ++hits;
  }
  g.p = (static_cast<double>(hits) + 1.0) / (static_cast<double>(permutations) + 1.0);
  return g;
}

std::vector<std::vector<double>> extract_observer_features(const model::ModelConfig& cfg,
                                                           const model::ParamSet& params) {
  if (!cfg.enable_oe) throw std::invalid_argument("observer features need an OE-enabled model");
  model::check_params(cfg, params);
  std::vector<std::vector<double>> out;
  for (std::size_t o = 0; o < cfg.n_observers; ++o) out.push_back(model::observer_feature(cfg, params, o));
  return out;
}

ClassifierResult classify_group_loocv(std::span<const std::vector<double>> features, std::span<const int> labels,
                                      const ClassifierConfig& cfg) {
  const std::size_t n = features.size();
  if (labels.size() != n) throw std::invalid_argument("classify_group_loocv: features and labels differ in count");
  if (n < 4) throw std::invalid_argument("classify_group_loocv: needs at least 4 observers");
  if (std::any_of(labels.begin(), labels.end(), [](int l) { return l != 0 && l != 1; })) {
    throw std::invalid_argument("classify_group_loocv: labels must be 0 or 1");
  }
  if (std::all_of(labels.begin(), labels.end(), [&](int l) { return l == labels[0]; })) {
    throw std::invalid_argument("classify_group_loocv: both labels must be present");
  }
  const std::size_t dim = features[0].size();
  if (dim == 0 || std::any_of(features.begin(), features.end(), [&](const auto& f) { return f.size() != dim; })) {
    throw std::invalid_argument("classify_group_loocv: features must share a nonzero length");
  }
  if (cfg.hidden < 1) throw std::invalid_argument("classify_group_loocv: hidden width must be >= 1");

  ClassifierResult result;
  std::size_t correct = 0;
  for (std::size_t fold = 0; fold < n; ++fold) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < n; ++i) {
      if (i != fold) train.push_back(i);
    }
    const auto m = static_cast<double>(train.size());
    // z-score with training-fold statistics; constant columns are centred only.
    std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
    for (std::size_t i : train) {
      for (std::size_t j = 0; j < dim; ++j) mu[j] += features[i][j] / m;
    }
    for (std::size_t i : train) {
      for (std::size_t j = 0; j < dim; ++j) sd[j] += (features[i][j] - mu[j]) * (features[i][j] - mu[j]) / m;
    }
    for (auto& s : sd) s = s > 0.0 ? std::sqrt(s) : 1.0;
    auto standardize = [&](std::size_t i, std::vector<double>& out) {
      for (std::size_t j = 0; j < dim; ++j) out.push_back((features[i][j] - mu[j]) / sd[j]);
    };
    std::vector<double> xs, ys, ws;
    std::size_t positives = 0;
    for (std::size_t i : train) positives += labels[i] == 1;
    for (std::size_t i : train) {
      standardize(i, xs);
      ys.push_back(labels[i]);
      const double count = labels[i] == 1 ? static_cast<double>(positives) : m - static_cast<double>(positives);
      ws.push_back(cfg.class_balanced ? m / (2.0 * count) : 1.0);
    }
    const ad::Tensor x({train.size(), dim}, xs);
    const ad::Tensor y = ad::Tensor::vector(ys);
    const ad::Tensor w = ad::Tensor::vector(ws);

    std::mt19937_64 rng(data::derive_seed(cfg.seed, 0xc1a55, fold));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto init = [&](ad::Shape shape, double sd_) {
      ad::Tensor t = ad::Tensor::zeros(std::move(shape));
      for (auto& v : t.mutable_data()) v = sd_ * normal(rng);
      return t;
    };
    ad::NamedTensors params{{"W1", init({cfg.hidden, dim}, 1.0 / std::sqrt(static_cast<double>(dim)))},
                            {"b1", ad::Tensor::zeros({cfg.hidden})},
                            {"w2", init({cfg.hidden}, 1.0 / std::sqrt(static_cast<double>(cfg.hidden)))},
                            {"b2", ad::Tensor::zeros({1})}};
    auto logits = [](const ad::NamedTensors& p, const ad::Tensor& input) {
      auto hidden = ad::tanh(ad::add(ad::matmul(input, ad::transpose(p.at("W1"))), p.at("b1")));
      return ad::add(ad::matmul(hidden, p.at("w2")), p.at("b2"));
    };

    ad::AdamState adam;
    adam.options.lr = cfg.lr;
    adam.options.weight_decay = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      ad::Tape tape;
      ad::NamedTensors traced;
      for (const auto& [name, t] : params) traced.emplace(name, tape.watch(t));
      const auto z = logits(traced, x);
      // Weighted binary cross-entropy on logits: softplus(z) - y z.
      const auto bce = ad::sub(ad::softplus(z), ad::mul(y, z));
      const auto loss = ad::scale(ad::sum(ad::mul(w, bce)), 1.0 / m);
      const auto grads = tape.backprop(loss);
      ad::NamedTensors named;
      for (const auto& [name, t] : traced) {
        if (auto g = grads.of(t)) named.emplace(name, *g);
      }
      ad::adam_step(adam, params, named);
    }
    std::vector<double> held;
    standardize(fold, held);
    const double z = logits(params, ad::Tensor({1, dim}, held))[0];
    const double prob = 1.0 / (1.0 + std::exp(-z));
    const int pred = prob >= 0.5 ? 1 : 0;
    result.probabilities.push_back(prob);
    result.predictions.push_back(pred);
    correct += pred == labels[fold];
  }
  result.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(n);
  return result;
}

std::pair<double, double> binomial_interval(std::size_t n, double p, double level) {
  if (n == 0) throw std::invalid_argument("binomial_interval: n must be positive");
  if (!(p > 0.0 && p < 1.0) || !(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("binomial_interval: p and level must lie in (0, 1)");
  }
  const double tail = (1.0 - level) / 2.0;
  std::size_t lo = 0;
  while (lo < n && binomial_cdf(lo, n, p) < tail) ++lo;
  std::size_t hi = lo;
  while (hi < n && binomial_cdf(hi, n, p) < 1.0 - tail) ++hi;
  const auto nn = static_cast<double>(n);
  return {100.0 * static_cast<double>(lo) / nn, 100.0 * static_cast<double>(hi) / nn};
}

SemanticComparison compare_semantics(std::span<const data::Scanpath> predicted,
                                     std::span<const data::Scanpath> ground_truth,
                                     std::span<const data::SyntheticScene> scenes, std::size_t permutations,
                                     std::uint64_t seed) {
  SemanticComparison out;
  out.predicted = roi_stats(predicted, scenes);
  out.ground_truth = roi_stats(ground_truth, scenes);
  if (out.predicted.size() != out.ground_truth.size() ||
      !std::equal(out.predicted.begin(), out.predicted.end(), out.ground_truth.begin(),
                  [](const auto& a, const auto& b) { return a.observer_id == b.observer_id; })) {
    throw std::invalid_argument("compare_semantics: predicted and ground-truth observers differ");
  }
  const auto p = proportions(out.predicted, data::Roi::Social);
  const auto g = proportions(out.ground_truth, data::Roi::Social);
  out.social_rank = spearman_rho(p, g, permutations, seed);
  return out;
}

std::pair<std::vector<double>, std::vector<double>> split_by_group(std::span<const double> values,
                                                                   std::span<const int> labels) {
  if (values.size() != labels.size()) throw std::invalid_argument("split_by_group: size mismatch");
  std::pair<std::vector<double>, std::vector<double>> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (labels[i] == 0) {
      out.first.push_back(values[i]);
    } else if (labels[i] == 1) {
      out.second.push_back(values[i]);
    } else {
      throw std::invalid_argument("split_by_group: labels must be 0 or 1");
    }
  }
  return out;
}

}  // namespace isp::analysis
