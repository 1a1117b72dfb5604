#include "isp/train/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "isp/autodiff/adam.hpp"
#include "isp/autodiff/ops.hpp"
#include "isp/autodiff/tape.hpp"
#include "isp/data/synthetic.hpp"

namespace isp::train {
namespace {

constexpr double kProbFloor = 1e-12;

std::string describe(const Batch& b) {
  std::ostringstream os;
  os << "image " << b.image_id << ", observers [";
  for (std::size_t i = 0; i < b.items.size(); ++i) os << (i ? "," : "") << b.items[i]->observer_id;
  os << "]";
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("train config: weight_decay must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (!(ft_lr > 0.0)) throw std::invalid_argument("train config: ft_lr must be positive");
  if (!(duration_loss_weight >= 0.0)) throw std::invalid_argument("train config: duration_loss_weight must be >= 0");
}

ad::Tensor position_loss(std::span<const ad::Tensor> maps, const data::Scanpath& gt, std::size_t grid_h,
                         std::size_t grid_w) {
  if (maps.size() != gt.fixations.size() || maps.empty()) {
    throw std::invalid_argument("position_loss: " + std::to_string(maps.size()) + " maps for " +
                                std::to_string(gt.fixations.size()) + " fixations");
  }
  std::vector<ad::Tensor> terms;
  for (std::size_t t = 0; t < maps.size(); ++t) {
    const auto& f = gt.fixations[t];
    const std::size_t cell[] = {data::cell_index(f.x, f.y, grid_h, grid_w)};
    terms.push_back(ad::log(ad::add_scalar(ad::gather(maps[t], cell), kProbFloor)));
  }
  return ad::scale(ad::sum(ad::concat(terms, 0)), -1.0 / static_cast<double>(maps.size()));
}

ad::Tensor duration_loss(std::span<const ad::Tensor> mu, std::span<const ad::Tensor> var, const data::Scanpath& gt) {
  if (mu.size() != gt.fixations.size() || var.size() != mu.size() || mu.empty()) {
    throw std::invalid_argument("duration_loss: step count does not match the scanpath");
  }
  std::vector<ad::Tensor> terms;
  for (std::size_t t = 0; t < mu.size(); ++t) {
    const double dur = gt.fixations[t].dur_ms;
    if (!(dur > 0.0)) throw std::invalid_argument("duration_loss: non-positive duration at step " + std::to_string(t));
    // 0.5 log(2 pi var) + (log d - mu)^2 / (2 var)
    auto resid = ad::add_scalar(ad::scale(mu[t], -1.0), std::log(dur));
    auto quad = ad::div(ad::mul(resid, resid), ad::scale(var[t], 2.0));
    auto norm = ad::scale(ad::log(ad::scale(var[t], 2.0 * std::numbers::pi)), 0.5);
    terms.push_back(ad::reshape(ad::add(norm, quad), {1}));
  }
  return ad::scale(ad::sum(ad::concat(terms, 0)), 1.0 / static_cast<double>(mu.size()));
}

LossParts scanpath_loss(const model::ModelConfig& cfg, const model::ParamSet& params, const ad::Tensor& features,
                        const data::Scanpath& gt, double duration_weight) {
  const auto ro = model::rollout_teacher_forced(cfg, params, features, static_cast<std::size_t>(gt.observer_id), gt);
  std::vector<ad::Tensor> maps, mu, var;
  for (const auto& s : ro.steps) {
    maps.push_back(s.m);
    mu.push_back(s.mu);
    var.push_back(s.var);
  }
  LossParts out;
  out.position = position_loss(maps, gt, cfg.grid_h, cfg.grid_w);
  out.duration = duration_loss(mu, var, gt);
  out.total = ad::add(out.position, ad::scale(out.duration, duration_weight));
  return out;
}

std::vector<Batch> make_batches(std::span<const data::Scanpath> scanpaths, std::size_t batch_size,
                                std::uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  std::mt19937_64 rng(seed);
  std::map<int, std::vector<const data::Scanpath*>> by_image;
  for (const auto& sp : scanpaths) by_image[sp.image_id].push_back(&sp);

  std::vector<Batch> batches;
  for (auto& [image, items] : by_image) {
    std::shuffle(items.begin(), items.end(), rng);
    // Repeated (image, observer) pairs go to different batches.
    std::vector<Batch> open;
    for (const auto* sp : items) {
      auto fits = [&](const Batch& b) {
        return b.items.size() < batch_size &&
               std::none_of(b.items.begin(), b.items.end(),
                            [&](const data::Scanpath* o) { return o->observer_id == sp->observer_id; });
      };
      auto it = std::find_if(open.begin(), open.end(), fits);
      if (it == open.end()) {
        open.push_back(Batch{image, {}});
        it = std::prev(open.end());
      }
      it->items.push_back(sp);
    }
    batches.insert(batches.end(), open.begin(), open.end());
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

EpochLoss evaluate_loss(const model::ModelConfig& cfg, const model::ParamSet& params, const data::Corpus& corpus,
                        std::span<const data::Scanpath> scanpaths, double duration_weight) {
  EpochLoss out;
  if (scanpaths.empty()) return out;
  for (const auto& sp : scanpaths) {
    auto parts = scanpath_loss(cfg, params, corpus.scene(sp.image_id).features, sp, duration_weight);
    out.position += parts.position.item();
    out.duration += parts.duration.item();
    out.total += parts.total.item();
  }
  const auto n = static_cast<double>(scanpaths.size());
  out.position /= n;
  out.duration /= n;
  out.total /= n;
  return out;
}

TrainResult train_on(const model::ModelConfig& cfg, model::ParamSet init, const data::Corpus& corpus,
                     std::span<const data::Scanpath> scanpaths, std::size_t epochs, double lr,
                     const TrainConfig& tc, const BatchObserver& on_batch) {
  tc.validate();
  model::check_params(cfg, init);
  TrainResult result;
  result.params = std::move(init);
  result.curve.push_back(evaluate_loss(cfg, result.params, corpus, scanpaths, tc.duration_loss_weight));

  ad::AdamState adam;
  adam.options.lr = lr;
  adam.options.weight_decay = tc.weight_decay;

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    const auto batches = make_batches(scanpaths, tc.batch_size, data::derive_seed(tc.seed, 0xba7c, epoch));
    EpochLoss row;
    row.epoch = epoch;
    std::size_t count = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      if (on_batch) on_batch(epoch, batch);
      ad::Tape tape;
      model::ParamSet traced;
      for (const auto& [name, t] : result.params) traced.emplace(name, tape.watch(t));

      const auto& features = corpus.scene(batch.image_id).features;
      std::vector<ad::Tensor> totals;
      for (const auto* sp : batch.items) {
        auto parts = scanpath_loss(cfg, traced, features, *sp, tc.duration_loss_weight);
        row.position += parts.position.item();
        row.duration += parts.duration.item();
        totals.push_back(ad::reshape(parts.total, {1}));
      }
      auto loss = ad::scale(ad::sum(ad::concat(totals, 0)), 1.0 / static_cast<double>(totals.size()));
      if (!std::isfinite(loss.item())) {
        throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(b) + " (" + describe(batch) + ")");
      }
      row.total += loss.item() * static_cast<double>(totals.size());
      count += totals.size();

      const auto grads = tape.backprop(loss);
      ad::NamedTensors named;
      for (const auto& [name, t] : traced) {
        if (auto g = grads.of(t)) named.emplace(name, *g);
      }
      ad::adam_step(adam, result.params, named);
    }
    if (count > 0) {
      const auto n = static_cast<double>(count);
      row.position /= n;
      row.duration /= n;
      row.total /= n;
    }
    result.curve.push_back(row);
  }
  return result;
}

TrainResult train(const model::ModelConfig& cfg, model::ParamSet init, const data::Corpus& corpus,
                  const TrainConfig& tc, const BatchObserver& on_batch) {
  const auto scanpaths = corpus.scanpaths_in(data::Split::Train);
  return train_on(cfg, std::move(init), corpus, scanpaths, tc.epochs, tc.lr, tc, on_batch);
}

std::vector<model::ParamSet> fine_tune_per_observer(const model::ModelConfig& cfg, const model::ParamSet& base,
                                                    const data::Corpus& corpus, const TrainConfig& tc) {
  if (cfg.enable_oe || cfg.observer_mode != model::ObserverMode::Embedding) {
    throw std::invalid_argument("fine_tune_per_observer expects an observer-agnostic base model");
  }
  const auto train_set = corpus.scanpaths_in(data::Split::Train);
  std::vector<model::ParamSet> out;
  for (std::size_t o = 0; o < cfg.n_observers; ++o) {
    std::vector<data::Scanpath> mine;
    for (const auto& sp : train_set) {
      if (sp.observer_id == static_cast<int>(o)) mine.push_back(sp);
    }
    if (mine.empty()) throw std::invalid_argument("observer " + std::to_string(o) + " has no training scanpaths");
    TrainConfig ft = tc;
    ft.seed = data::derive_seed(tc.seed, 0xf7, o);
    out.push_back(train_on(cfg, base, corpus, mine, tc.ft_epochs, tc.ft_lr, ft).params);
  }
  return out;
}

void write_loss_curve_csv(const std::vector<EpochLoss>& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write loss curve to " + path.string());
  out.precision(17);
  out << "epoch,position_loss,duration_loss,total\n";
  for (const auto& r : curve) out << r.epoch << ',' << r.position << ',' << r.duration << ',' << r.total << '\n';
}

}  // namespace isp::train
