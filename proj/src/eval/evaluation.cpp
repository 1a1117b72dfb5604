#include "isp/eval/evaluation.hpp"

#include "isp/eval/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace isp::eval {
namespace {

using Key = std::pair<int, int>;  // (image, observer)

std::map<Key, const data::Scanpath*> index_by_pair(std::span<const data::Scanpath> sps, const char* what) {
  std::map<Key, const data::Scanpath*> out;
  for (const auto& sp : sps) {
    if (!out.emplace(Key{sp.image_id, sp.observer_id}, &sp).second) {
      throw std::invalid_argument(std::string("duplicate ") + what + " for image " + std::to_string(sp.image_id) +
                                  ", observer " + std::to_string(sp.observer_id));
    }
  }
  return out;
}

PairMetrics score_pair(const data::Scanpath& pred, const data::Scanpath& gt, const metrics::MetricConfig& cfg) {
  PairMetrics p;
  p.image_id = gt.image_id;
  p.observer_id = gt.observer_id;
  p.sm = metrics::scanmatch(pred, gt, cfg);
  p.mm = metrics::multimatch(pred, gt, cfg);
  p.sed = metrics::string_edit_distance(pred, gt, cfg);
  return p;
}

std::size_t map_cell(const SaliencyMap& map, const data::Fixation& f) {
  return data::cell_index(f.x, f.y, map.height, map.width);
}

// P(pos > neg) + 0.5 P(pos == neg) by sorting, i.e. the area under the ROC
// curve traced over every distinct threshold.
double mann_whitney_auc(std::vector<double> pos, std::vector<double> neg) {
  if (pos.empty() || neg.empty()) throw std::invalid_argument("AUC needs positive and negative samples");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double p : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

void check_same_size(const SaliencyMap& a, const SaliencyMap& b) {
  if (a.height != b.height || a.width != b.width) {
    throw std::invalid_argument("saliency maps differ in resolution: " + std::to_string(a.height) + "x" +
                                std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                                std::to_string(b.width));
  }
}

}  // namespace

Stat summarize(std::span<const double> values) {
  Stat s;
  if (values.empty()) return s;
  const auto n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

ValueSummary summarize_pairs(std::span<const PairMetrics> pairs) {
  std::vector<double> sm, mm, sed, shape, direction, length, position, duration;
  for (const auto& p : pairs) {
    sm.push_back(p.sm);
    mm.push_back(p.mm.mean);
    sed.push_back(static_cast<double>(p.sed));
    position.push_back(p.mm.position);
    duration.push_back(p.mm.duration);
    if (p.mm.has_saccades) {
      shape.push_back(p.mm.shape);
      direction.push_back(p.mm.direction);
      length.push_back(p.mm.length);
    }
  }
  ValueSummary s;
  s.n = pairs.size();
  s.sm = summarize(sm);
  s.mm = summarize(mm);
  s.sed = summarize(sed);
  s.mm_shape = summarize(shape);
  s.mm_direction = summarize(direction);
  s.mm_length = summarize(length);
  s.mm_position = summarize(position);
  s.mm_duration = summarize(duration);
  return s;
}

ValueResult value_eval(std::span<const data::Scanpath> preds, std::span<const data::Scanpath> gts,
                       const metrics::MetricConfig& cfg, std::size_t threads) {
  cfg.validate();
  const auto by_pair = index_by_pair(preds, "prediction");
  std::vector<const data::Scanpath*> matched;
  for (const auto& gt : gts) {
    auto it = by_pair.find({gt.image_id, gt.observer_id});
    if (it == by_pair.end()) {
      throw std::invalid_argument("missing prediction for image " + std::to_string(gt.image_id) + ", observer " +
                                  std::to_string(gt.observer_id));
    }
    matched.push_back(it->second);
  }
  ValueResult r;
  r.pairs.resize(gts.size());
  parallel_for(gts.size(), threads, [&](std::size_t i) { r.pairs[i] = score_pair(*matched[i], gts[i], cfg); });
  r.summary = summarize_pairs(r.pairs);
  return r;
}

RankingResult rank_eval(std::span<const data::Scanpath> preds, std::span<const data::Scanpath> gts,
                        const metrics::MetricConfig& cfg, std::span<const std::size_t> ks, std::size_t threads) {
  cfg.validate();
  const auto gt_by_pair = index_by_pair(gts, "ground truth");
  std::set<int> observers;
  std::map<int, std::vector<const data::Scanpath*>> gt_by_image;
  for (const auto& gt : gts) {
    observers.insert(gt.observer_id);
    gt_by_image[gt.image_id].push_back(&gt);
  }
  const auto pred_by_pair = index_by_pair(preds, "prediction");

  RankingResult r;
  r.n_observers = observers.size();
  std::vector<std::vector<const data::Scanpath*>*> complete;
  for (auto& [image, list] : gt_by_image) {
    const bool ok =
        list.size() == observers.size() &&
        std::all_of(observers.begin(), observers.end(), [&](int o) { return pred_by_pair.count({image, o}) > 0; });
    if (!ok) {
      r.skipped_images.push_back(image);
      std::cerr << "rank_eval: skipping image " << image << " (missing observers)\n";
      continue;
    }
    std::sort(list.begin(), list.end(),
              [](const data::Scanpath* a, const data::Scanpath* b) { return a->observer_id < b->observer_id; });
    complete.push_back(&list);
  }
  std::vector<std::vector<RankEntry>> per_image(complete.size());
  parallel_for(complete.size(), threads, [&](std::size_t i) {
    const auto& list = *complete[i];
    const int image = list.front()->image_id;
    for (int o : observers) {
      const auto& pred = *pred_by_pair.at({image, o});
      double own = 0.0;
      std::vector<std::pair<int, double>> scores;
      for (const auto* gt : list) {
        const double s = metrics::scanmatch(pred, *gt, cfg);
        scores.emplace_back(gt->observer_id, s);
        if (gt->observer_id == o) own = s;
      }
      std::size_t rank = 1;
      for (auto [other, s] : scores) {
        if (other != o && (s > own || (s == own && other < o))) ++rank;
      }
      per_image[i].push_back({image, o, rank});
    }
  });
  for (const auto& entries : per_image) r.entries.insert(r.entries.end(), entries.begin(), entries.end());
  if (!r.entries.empty()) {
    double rr = 0.0;
    for (const auto& e : r.entries) rr += 1.0 / static_cast<double>(e.rank);
    r.mrr = rr / static_cast<double>(r.entries.size());
  }
  for (std::size_t k : ks) {
    const auto hits = std::count_if(r.entries.begin(), r.entries.end(), [&](const RankEntry& e) { return e.rank <= k; });
    r.recall_at[k] = r.entries.empty() ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(r.entries.size());
  }
  return r;
}

double random_rank_mrr(std::size_t n) {
  if (n == 0) throw std::invalid_argument("random_rank_mrr needs n >= 1");
  double h = 0.0;
  for (std::size_t r = 1; r <= n; ++r) h += 1.0 / static_cast<double>(r);
  return h / static_cast<double>(n);
}

ValueSummary human_consistency(std::span<const data::Scanpath> gts, const metrics::MetricConfig& cfg) {
  cfg.validate();
  std::map<int, std::vector<const data::Scanpath*>> by_image;
  for (const auto& gt : gts) by_image[gt.image_id].push_back(&gt);
  // One averaged row per (image, observer) against every other observer.
  std::vector<PairMetrics> rows;
  std::vector<double> sed_means;
  for (const auto& [image, list] : by_image) {
    if (list.size() < 2) {
      std::cerr << "human_consistency: image " << image << " has a single observer, skipped\n";
      continue;
    }
    for (const auto* self : list) {
      PairMetrics row;
      row.image_id = image;
      row.observer_id = self->observer_id;
      row.mm.has_saccades = true;
      double sed = 0.0;
      for (const auto* other : list) {
        if (other == self) continue;
        const auto p = score_pair(*other, *self, cfg);
        row.sm += p.sm;
        row.mm.shape += p.mm.shape;
        row.mm.direction += p.mm.direction;
        row.mm.length += p.mm.length;
        row.mm.position += p.mm.position;
        row.mm.duration += p.mm.duration;
        row.mm.mean += p.mm.mean;
        row.mm.has_saccades = row.mm.has_saccades && p.mm.has_saccades;
        sed += p.sed;
      }
      const auto k = static_cast<double>(list.size() - 1);
      row.sm /= k;
      row.mm.shape /= k;
      row.mm.direction /= k;
      row.mm.length /= k;
      row.mm.position /= k;
      row.mm.duration /= k;
      row.mm.mean /= k;
      rows.push_back(row);
      sed_means.push_back(sed / k);
    }
  }
  auto summary = summarize_pairs(rows);
  summary.sed = summarize(sed_means);
  return summary;
}

double default_saliency_sigma(std::size_t width) { return static_cast<double>(width) / 16.0; }

SaliencyMap build_saliency(std::span<const data::Fixation> fixations, double sigma, std::size_t height,
                           std::size_t width) {
  if (fixations.empty()) throw std::invalid_argument("build_saliency: empty fixation set");
  if (!(sigma > 0.0)) throw std::invalid_argument("build_saliency: sigma must be positive");
  if (height < 1 || width < 1) throw std::invalid_argument("build_saliency: empty resolution");
  std::vector<double> counts(height * width, 0.0);
  for (const auto& f : fixations) counts[data::cell_index(f.x, f.y, height, width)] += 1.0;

  const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (long k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
  }
  const auto h = static_cast<long>(height);
  const auto w = static_cast<long>(width);
  std::vector<double> rows(counts.size(), 0.0);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      double acc = 0.0;
      for (long k = -radius; k <= radius; ++k) {
        const long cc = c + k;
        if (cc >= 0 && cc < w) acc += kernel[static_cast<std::size_t>(k + radius)] * counts[static_cast<std::size_t>(r * w + cc)];
      }
      rows[static_cast<std::size_t>(r * w + c)] = acc;
    }
  }
  SaliencyMap map;
  map.height = height;
  map.width = width;
  map.values.assign(counts.size(), 0.0);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      double acc = 0.0;
      for (long k = -radius; k <= radius; ++k) {
        const long rr = r + k;
        if (rr >= 0 && rr < h) acc += kernel[static_cast<std::size_t>(k + radius)] * rows[static_cast<std::size_t>(rr * w + c)];
      }
      map.values[static_cast<std::size_t>(r * w + c)] = acc;
    }
  }
  const double total = std::accumulate(map.values.begin(), map.values.end(), 0.0);
  for (auto& v : map.values) v /= total;
  return map;
}

double correlation_coefficient(const SaliencyMap& a, const SaliencyMap& b) {
  check_same_size(a, b);
  const auto n = static_cast<double>(a.values.size());
  const double ma = std::accumulate(a.values.begin(), a.values.end(), 0.0) / n;
  const double mb = std::accumulate(b.values.begin(), b.values.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double da = a.values[i] - ma;
    const double db = b.values[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double auc_judd(const SaliencyMap& pred, std::span<const data::Fixation> fixations) {
  std::vector<bool> fixated(pred.values.size(), false);
  for (const auto& f : fixations) fixated[map_cell(pred, f)] = true;
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < pred.values.size(); ++i) (fixated[i] ? pos : neg).push_back(pred.values[i]);
  return mann_whitney_auc(std::move(pos), std::move(neg));
}

double auc_shuffled(const SaliencyMap& pred, std::span<const data::Fixation> fixations,
                    std::span<const data::Fixation> shuffle) {
  if (shuffle.empty()) throw std::invalid_argument("sAUC needs a nonempty shuffle fixation set");
  std::vector<double> pos, neg;
  for (const auto& f : fixations) pos.push_back(pred.values[map_cell(pred, f)]);
  for (const auto& f : shuffle) neg.push_back(pred.values[map_cell(pred, f)]);
  return mann_whitney_auc(std::move(pos), std::move(neg));
}

double nss(const SaliencyMap& pred, std::span<const data::Fixation> fixations, bool* degenerate) {
  if (fixations.empty()) throw std::invalid_argument("NSS needs at least one fixation");
  const auto n = static_cast<double>(pred.values.size());
  const double mean = std::accumulate(pred.values.begin(), pred.values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : pred.values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (degenerate) *degenerate = sd == 0.0;
  if (sd == 0.0) return 0.0;
  double acc = 0.0;
  for (const auto& f : fixations) acc += (pred.values[map_cell(pred, f)] - mean) / sd;
  return acc / static_cast<double>(fixations.size());
}

double kl_divergence(const SaliencyMap& pred, const SaliencyMap& gt) {
  check_same_size(pred, gt);
  constexpr double eps = 1e-7;
  double kl = 0.0;
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    kl += gt.values[i] * std::log((gt.values[i] + eps) / (pred.values[i] + eps));
  }
  return kl;
}

double similarity(const SaliencyMap& pred, const SaliencyMap& gt) {
  check_same_size(pred, gt);
  double s = 0.0;
  for (std::size_t i = 0; i < gt.values.size(); ++i) s += std::min(pred.values[i], gt.values[i]);
  return s;
}

SaliencyScores saliency_metrics(const SaliencyMap& pred, std::span<const data::Fixation> gt_fixations,
                                const SaliencyMap& gt_map, std::span<const data::Fixation> other_fixations) {
  check_same_size(pred, gt_map);
  if (gt_fixations.empty()) throw std::invalid_argument("saliency_metrics: no ground-truth fixations");
  SaliencyScores s;
  s.cc = correlation_coefficient(pred, gt_map);
  s.auc = auc_judd(pred, gt_fixations);
  s.nss = nss(pred, gt_fixations, &s.nss_degenerate);
  s.sauc = auc_shuffled(pred, gt_fixations, other_fixations);
  s.kld = kl_divergence(pred, gt_map);
  s.sim = similarity(pred, gt_map);
  return s;
}

SaliencyResult evaluate_saliency(std::span<const data::Scanpath> preds, std::span<const data::Scanpath> gts,
                                 const SaliencyEvalConfig& cfg) {
  const double sigma = cfg.sigma > 0.0 ? cfg.sigma : default_saliency_sigma(cfg.width);
  std::map<int, std::vector<data::Fixation>> pred_fix, gt_fix;
  for (const auto& sp : preds) pred_fix[sp.image_id].insert(pred_fix[sp.image_id].end(), sp.fixations.begin(), sp.fixations.end());
  for (const auto& sp : gts) gt_fix[sp.image_id].insert(gt_fix[sp.image_id].end(), sp.fixations.begin(), sp.fixations.end());

  std::vector<int> images;
  for (const auto& [image, _] : gt_fix) images.push_back(image);
  SaliencyResult result;
  std::mt19937_64 rng(cfg.seed);
  for (int image : images) {
    auto pit = pred_fix.find(image);
    if (pit == pred_fix.end()) throw std::invalid_argument("no predictions for image " + std::to_string(image));
    std::vector<int> others;
    for (int o : images) {
      if (o != image) others.push_back(o);
    }
    std::shuffle(others.begin(), others.end(), rng);
    others.resize(std::min(others.size(), cfg.shuffle_images));
    std::vector<data::Fixation> shuffle;
    for (int o : others) shuffle.insert(shuffle.end(), gt_fix[o].begin(), gt_fix[o].end());

    auto pred_map = build_saliency(pit->second, sigma, cfg.height, cfg.width);
    const auto gt_map = build_saliency(gt_fix[image], sigma, cfg.height, cfg.width);
    result.per_image[image] = shuffle.empty()
                                  ? SaliencyScores{}
                                  : saliency_metrics(pred_map, gt_fix[image], gt_map, shuffle);
    result.pred_maps.emplace(image, std::move(pred_map));
  }
  if (!result.per_image.empty()) {
    const auto n = static_cast<double>(result.per_image.size());
    for (const auto& [_, s] : result.per_image) {
      result.mean.cc += s.cc / n;
      result.mean.auc += s.auc / n;
      result.mean.nss += s.nss / n;
      result.mean.sauc += s.sauc / n;
      result.mean.kld += s.kld / n;
      result.mean.sim += s.sim / n;
      result.mean.nss_degenerate = result.mean.nss_degenerate || s.nss_degenerate;
    }
  }
  return result;
}

void write_pgm(const SaliencyMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const double mx = map.values.empty() ? 0.0 : *std::max_element(map.values.begin(), map.values.end());
  out << "P5\n" << map.width << ' ' << map.height << "\n255\n";
  for (double v : map.values) {
    const auto byte = static_cast<unsigned char>(mx > 0.0 ? std::lround(255.0 * v / mx) : 0);
    out.put(static_cast<char>(byte));
  }
}

}  // namespace isp::eval
