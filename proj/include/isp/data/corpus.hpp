#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "isp/data/synthetic.hpp"

namespace isp::data {

enum class Split { Train, Val, Test };
std::string_view split_name(Split split);
Split split_from_name(std::string_view name);

struct SplitManifest {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;

  const std::vector<int>& ids(Split split) const;
};

struct Corpus {
  GeneratorConfig config;
  std::uint64_t seed = 0;
  std::vector<SyntheticScene> scenes;
  std::vector<ObserverProfile> profiles;
  std::vector<Scanpath> scanpaths;  // exactly one per (scene, observer)
  SplitManifest splits;

  const SyntheticScene& scene(int id) const;
  std::vector<Scanpath> scanpaths_in(Split split) const;
  std::vector<const SyntheticScene*> scenes_in(Split split) const;
};

// 70/10/20 partition of shuffled scene ids, every split non-empty.
SplitManifest split_scenes(std::size_t n_scenes, std::uint64_t seed);

// Throws std::invalid_argument when fewer than 3 scenes are requested.
Corpus build_corpus(const GeneratorConfig& config, std::uint64_t seed);

// FNV-1a over a canonical byte serialization of scenes, profiles, scanpaths and
// splits, as 16 lowercase hex digits.
std::string content_hash(const Corpus& corpus);

}  // namespace isp::data
