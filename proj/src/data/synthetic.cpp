#include "isp/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace isp::data {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi_inclusive) {
  return std::uniform_int_distribution<std::size_t>(lo, hi_inclusive)(rng);
}

double cell_x(std::size_t col, std::size_t w) { return (static_cast<double>(col) + 0.5) / static_cast<double>(w); }
double cell_y(std::size_t row, std::size_t h) { return (static_cast<double>(row) + 0.5) / static_cast<double>(h); }

// Inverse-CDF draw from a discrete distribution with u in [0,1).
std::size_t sample_index(const std::vector<double>& probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Round-off leaves u above the final partial sum: take the last nonzero cell.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ (a + 0x632be59bd9b4e019ULL)) ^ (b + 0x8cb92ba72f3d8dd7ULL));
}

ChannelLayout channel_layout(std::size_t channels) {
  if (channels < 3) throw std::invalid_argument("synthetic scenes need at least 3 channels");
  ChannelLayout layout;
  layout.social = (channels - 1) / 2;
  layout.nonsocial = channels - 1 - layout.social;
  layout.background = channels - 1;
  return layout;
}

std::vector<double> render_blob(const Blob& blob, std::size_t grid_h, std::size_t grid_w) {
  std::vector<double> out(grid_h * grid_w);
  const double inv = 1.0 / (2.0 * blob.sigma * blob.sigma);
  for (std::size_t r = 0; r < grid_h; ++r) {
    for (std::size_t c = 0; c < grid_w; ++c) {
      const double dx = cell_x(c, grid_w) - blob.cx;
      const double dy = cell_y(r, grid_h) - blob.cy;
      out[r * grid_w + c] = blob.amplitude * std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  return out;
}

std::vector<SyntheticScene> generate_scenes(std::size_t n, const GeneratorConfig& config, std::uint64_t seed) {
  const auto layout = channel_layout(config.channels);
  const std::size_t h = config.grid_h;
  const std::size_t w = config.grid_w;
  const std::size_t hw = h * w;
  const double owner_threshold = std::exp(-2.0);  // inside two sigmas

  std::vector<SyntheticScene> scenes;
  scenes.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::mt19937_64 rng(derive_seed(seed, 0x5ce4e, s));
    SyntheticScene scene;
    scene.id = static_cast<int>(s);

    const std::size_t n_blobs = pick(rng, config.min_blobs, config.max_blobs);
    for (std::size_t b = 0; b < n_blobs; ++b) {
      Blob blob;
      bool social = b == 0 ? true : b == 1 ? false : uniform(rng, 0.0, 1.0) < 0.5;
      blob.category = social ? Roi::Social : Roi::Nonsocial;
      blob.channel = social ? pick(rng, 0, layout.social - 1) : layout.social + pick(rng, 0, layout.nonsocial - 1);
      blob.cx = uniform(rng, 0.12, 0.88);
      blob.cy = uniform(rng, 0.12, 0.88);
      blob.sigma = uniform(rng, config.blob_sigma_min, config.blob_sigma_max);
      blob.amplitude = uniform(rng, 0.7, 1.0);
      scene.blobs.push_back(blob);
    }

    std::vector<double> feat(config.channels * hw, 0.0);
    std::vector<double> best(hw, 0.0);
    std::vector<int> owner(hw, -1);
    for (std::size_t b = 0; b < scene.blobs.size(); ++b) {
      const auto& blob = scene.blobs[b];
      auto resp = render_blob(blob, h, w);
      for (std::size_t p = 0; p < hw; ++p) {
        feat[blob.channel * hw + p] += resp[p];
        const double rel = resp[p] / blob.amplitude;
        if (rel >= owner_threshold && rel > best[p]) {
          best[p] = rel;
          owner[p] = static_cast<int>(b);
        }
      }
    }
    scene.roi_mask.assign(hw, Roi::Background);
    for (std::size_t p = 0; p < hw; ++p) {
      if (owner[p] >= 0) scene.roi_mask[p] = scene.blobs[static_cast<std::size_t>(owner[p])].category;
    }
    for (std::size_t p = 0; p < hw; ++p) {
      double covered = 0.0;
      for (std::size_t c = 0; c < layout.background; ++c) covered = std::max(covered, feat[c * hw + p]);
      feat[layout.background * hw + p] =
          config.background_level * std::max(0.0, 1.0 - covered) + uniform(rng, 0.0, 0.05);
    }
    scene.features = ad::Tensor({config.channels, h, w}, std::move(feat));

    std::vector<double> m0(hw);
    double z = 0.0;
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double dx = cell_x(c, w) - 0.5;
        const double dy = cell_y(r, h) - 0.5;
        m0[r * w + c] = std::exp(-config.m0_center_strength * (dx * dx + dy * dy));
        z += m0[r * w + c];
      }
    }
    for (auto& v : m0) v /= z;
    scene.m0 = ad::Tensor({h, w}, std::move(m0));
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

std::vector<ObserverProfile> generate_profiles(std::size_t n_observers, double group_split, std::size_t channels,
                                               std::uint64_t seed) {
  if (n_observers < 2) throw std::invalid_argument("generate_profiles needs at least 2 observers");
  const auto layout = channel_layout(channels);
  auto n_a = static_cast<std::size_t>(std::lround(group_split * static_cast<double>(n_observers)));
  n_a = std::clamp<std::size_t>(n_a, 1, n_observers - 1);

  std::vector<ObserverProfile> profiles;
  for (std::size_t i = 0; i < n_observers; ++i) {
    std::mt19937_64 rng(derive_seed(seed, 0x0b5e, i));
    ObserverProfile p;
    p.id = static_cast<int>(i);
    p.group = i < n_a ? Group::A : Group::B;
    const bool a = p.group == Group::A;

    // Group A: weaker pull to social and nonsocial content, stronger center
    // and background pull, shorter fixations.
    const double social_base = a ? 0.35 : 1.25;
    const double nonsocial_base = a ? 0.55 : 0.85;
    const double background_base = a ? 0.60 : 0.15;
    p.channel_pref.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      double base = c < layout.social ? social_base : c < layout.background ? nonsocial_base : background_base;
      p.channel_pref[c] = std::max(0.0, base + uniform(rng, -0.45, 0.45));
    }
    // One favourite semantic channel per observer.
    const std::size_t fav = pick(rng, 0, layout.background - 1);
    p.channel_pref[fav] += 1.2;

    p.center_bias = a ? uniform(rng, 0.8, 1.6) : uniform(rng, 0.1, 0.6);
    p.ior_strength = uniform(rng, 0.6, 1.2);
    p.temp = uniform(rng, 0.07, 0.12);
    p.log_dur_mean = std::log(a ? 210.0 : 300.0) + uniform(rng, -0.3, 0.3);
    p.log_dur_sd = uniform(rng, 0.15, 0.25);
    profiles.push_back(std::move(p));
  }
  return profiles;
}

std::vector<double> static_priority(const ObserverProfile& profile, const SyntheticScene& scene,
                                    const GeneratorConfig& config) {
  const std::size_t c_n = scene.channels();
  const std::size_t h = scene.height();
  const std::size_t w = scene.width();
  const std::size_t hw = h * w;
  if (profile.channel_pref.size() != c_n) throw std::invalid_argument("profile/scene channel count mismatch");
  std::vector<double> score(hw, 0.0);
  auto e = scene.features.data();
  for (std::size_t c = 0; c < c_n; ++c) {
    const double pref = profile.channel_pref[c];
    for (std::size_t p = 0; p < hw; ++p) score[p] += pref * e[c * hw + p];
  }
  const double inv = 1.0 / (2.0 * config.center_bias_sigma * config.center_bias_sigma);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double dx = cell_x(c, w) - 0.5;
      const double dy = cell_y(r, h) - 0.5;
      score[r * w + c] += profile.center_bias * std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  return score;
}

std::vector<double> priority_map(const ObserverProfile& profile, const SyntheticScene& scene,
                                 const std::vector<double>& ior, const GeneratorConfig& config) {
  auto logits = static_priority(profile, scene, config);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < logits.size(); ++p) {
    logits[p] = (logits[p] - profile.ior_strength * ior[p]) / profile.temp;
    mx = std::max(mx, logits[p]);
  }
  double z = 0.0;
  for (auto& v : logits) {
    v = std::exp(v - mx);
    z += v;
  }
  for (auto& v : logits) v /= z;
  return logits;
}

Scanpath sample_gt_scanpath(const ObserverProfile& profile, const SyntheticScene& scene, std::size_t length,
                            std::uint64_t seed, const GeneratorConfig& config) {
  if (length < 1) throw std::invalid_argument("scanpath length must be at least 1");
  const std::size_t h = scene.height();
  const std::size_t w = scene.width();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Scanpath sp;
  sp.image_id = scene.id;
  sp.observer_id = profile.id;
  std::vector<double> ior(h * w, 0.0);
  const double inv = 1.0 / (2.0 * config.ior_sigma * config.ior_sigma);
  for (std::size_t t = 0; t < length; ++t) {
    auto probs = priority_map(profile, scene, ior, config);
    const std::size_t cell = sample_index(probs, u01(rng));
    const double dur =
        std::clamp(std::exp(profile.log_dur_mean + profile.log_dur_sd * normal(rng)), 50.0, 5000.0);
    sp.fixations.push_back(cell_center(cell, h, w, dur));

    const double fx = cell_x(cell % w, w);
    const double fy = cell_y(cell / w, h);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double dx = cell_x(c, w) - fx;
        const double dy = cell_y(r, h) - fy;
        ior[r * w + c] += std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
  return sp;
}

}  // namespace isp::data
