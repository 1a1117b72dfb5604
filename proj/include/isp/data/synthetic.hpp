#pragma once

#include <cstdint>
#include <vector>

#include "isp/autodiff/tensor.hpp"
#include "isp/data/scanpath.hpp"

namespace isp::data {

// Derives an independent stream seed from a base seed and up to two indices.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

struct GeneratorConfig {
  std::size_t grid_h = 16;
  std::size_t grid_w = 16;
  std::size_t channels = 12;
  std::size_t n_scenes = 60;
  std::size_t n_observers = 8;
  std::size_t scanpath_length = 6;
  // Fraction of observers assigned to group A.
  double group_split = 0.5;
  std::size_t min_blobs = 2;
  std::size_t max_blobs = 5;
  double blob_sigma_min = 0.06;
  double blob_sigma_max = 0.11;
  double background_level = 0.25;
  // Strength of the quadratic center prior behind m0.
  double m0_center_strength = 2.0;
  double ior_sigma = 0.09;
  double center_bias_sigma = 0.25;
};

// Channel layout: [0, social) social, [social, social + nonsocial) nonsocial,
// last channel background.
struct ChannelLayout {
  std::size_t social = 0;
  std::size_t nonsocial = 0;
  std::size_t background = 0;  // index of the background channel
};
ChannelLayout channel_layout(std::size_t channels);

struct Blob {
  std::size_t channel = 0;
  Roi category = Roi::Background;
  double cx = 0.5;
  double cy = 0.5;
  double sigma = 0.1;
  double amplitude = 1.0;
};

struct SyntheticScene {
  int id = 0;
  ad::Tensor features;        // C x H x W, nonnegative
  std::vector<Roi> roi_mask;  // H*W, row-major
  ad::Tensor m0;              // H x W simplex
  std::vector<Blob> blobs;

  std::size_t channels() const { return features.dim(0); }
  std::size_t height() const { return features.dim(1); }
  std::size_t width() const { return features.dim(2); }
};

enum class Group : std::uint8_t { A = 0, B = 1 };

struct ObserverProfile {
  int id = 0;
  Group group = Group::A;
  std::vector<double> channel_pref;
  double center_bias = 0.0;
  double ior_strength = 0.0;
  double temp = 1.0;
  double log_dur_mean = 0.0;
  double log_dur_sd = 0.1;
};

// Blob response sampled at cell centers of an H x W grid.
std::vector<double> render_blob(const Blob& blob, std::size_t grid_h, std::size_t grid_w);

std::vector<SyntheticScene> generate_scenes(std::size_t n, const GeneratorConfig& config, std::uint64_t seed);
std::vector<ObserverProfile> generate_profiles(std::size_t n_observers, double group_split, std::size_t channels,
                                               std::uint64_t seed);

// Static part of the observer's priority logits (before IOR and temperature).
std::vector<double> static_priority(const ObserverProfile& profile, const SyntheticScene& scene,
                                    const GeneratorConfig& config);
// Fixation distribution over cells given accumulated inhibition.
std::vector<double> priority_map(const ObserverProfile& profile, const SyntheticScene& scene,
                                 const std::vector<double>& ior, const GeneratorConfig& config);

Scanpath sample_gt_scanpath(const ObserverProfile& profile, const SyntheticScene& scene, std::size_t length,
                            std::uint64_t seed, const GeneratorConfig& config = {});

}  // namespace isp::data
