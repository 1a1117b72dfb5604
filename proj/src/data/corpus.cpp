#include "isp/data/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <random>
#include <stdexcept>

namespace isp::data {
namespace {

class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split split_from_name(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

const std::vector<int>& SplitManifest::ids(Split split) const {
  switch (split) {
    case Split::Train: return train;
    case Split::Val: return val;
    case Split::Test: return test;
  }
  return train;
}

const SyntheticScene& Corpus::scene(int id) const {
  for (const auto& s : scenes) {
    if (s.id == id) return s;
  }
  throw std::out_of_range("unknown scene id " + std::to_string(id));
}

std::vector<Scanpath> Corpus::scanpaths_in(Split split) const {
  const auto& ids = splits.ids(split);
  std::vector<Scanpath> out;
  for (const auto& sp : scanpaths) {
    if (std::find(ids.begin(), ids.end(), sp.image_id) != ids.end()) out.push_back(sp);
  }
  return out;
}

std::vector<const SyntheticScene*> Corpus::scenes_in(Split split) const {
  std::vector<const SyntheticScene*> out;
  for (int id : splits.ids(split)) out.push_back(&scene(id));
  return out;
}

SplitManifest split_scenes(std::size_t n_scenes, std::uint64_t seed) {
  if (n_scenes < 3) throw std::invalid_argument("corpus needs at least 3 scenes, got " + std::to_string(n_scenes));
  std::vector<int> ids(n_scenes);
  std::iota(ids.begin(), ids.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0x5917));
  std::shuffle(ids.begin(), ids.end(), rng);

  const auto n = static_cast<double>(n_scenes);
  const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.2 * n)));
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(0.1 * n)));
  const auto n_train = n_scenes - n_test - n_val;

  SplitManifest m;
  m.train.assign(ids.begin(), ids.begin() + static_cast<long>(n_train));
  m.val.assign(ids.begin() + static_cast<long>(n_train), ids.begin() + static_cast<long>(n_train + n_val));
  m.test.assign(ids.begin() + static_cast<long>(n_train + n_val), ids.end());
  std::sort(m.train.begin(), m.train.end());
  std::sort(m.val.begin(), m.val.end());
  std::sort(m.test.begin(), m.test.end());
  return m;
}

Corpus build_corpus(const GeneratorConfig& config, std::uint64_t seed) {
  Corpus corpus;
  corpus.config = config;
  corpus.seed = seed;
  corpus.splits = split_scenes(config.n_scenes, seed);
  corpus.scenes = generate_scenes(config.n_scenes, config, derive_seed(seed, 1));
  corpus.profiles = generate_profiles(config.n_observers, config.group_split, config.channels, derive_seed(seed, 2));
  for (const auto& scene : corpus.scenes) {
    for (const auto& profile : corpus.profiles) {
      auto s = derive_seed(seed, 3 + static_cast<std::uint64_t>(scene.id), static_cast<std::uint64_t>(profile.id));
      corpus.scanpaths.push_back(sample_gt_scanpath(profile, scene, config.scanpath_length, s, config));
    }
  }
  return corpus;
}

std::string content_hash(const Corpus& corpus) {
  Fnv1a h;
  for (const auto& s : corpus.scenes) {
    h.value(s.id);
    for (auto d : s.features.shape()) h.value(d);
    h.bytes(s.features.data().data(), s.features.numel() * sizeof(double));
    for (auto r : s.roi_mask) h.value(r);
    h.bytes(s.m0.data().data(), s.m0.numel() * sizeof(double));
  }
  for (const auto& p : corpus.profiles) {
    h.value(p.id);
    h.value(p.group);
    h.bytes(p.channel_pref.data(), p.channel_pref.size() * sizeof(double));
    h.value(p.center_bias);
    h.value(p.ior_strength);
    h.value(p.temp);
    h.value(p.log_dur_mean);
    h.value(p.log_dur_sd);
  }
  for (const auto& sp : corpus.scanpaths) {
    h.value(sp.image_id);
    h.value(sp.observer_id);
    for (const auto& f : sp.fixations) {
      h.value(f.x);
      h.value(f.y);
      h.value(f.dur_ms);
    }
  }
  for (auto split : {Split::Train, Split::Val, Split::Test}) {
    h.value(split);
    for (int id : corpus.splits.ids(split)) h.value(id);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.digest()));
  return buf;
}

}  // namespace isp::data
