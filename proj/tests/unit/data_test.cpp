#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "isp/data/corpus.hpp"
#include "isp/data/synthetic.hpp"
#include "isp/metrics/scanpath_metrics.hpp"

using namespace isp::data;

namespace {

GeneratorConfig small_config() {
  GeneratorConfig c;
  c.n_scenes = 10;
  c.n_observers = 6;
  return c;
}

// Mass of an axis-aligned Gaussian restricted to the unit square.
double truncated_mass(const Blob& b) {
  auto axis = [&](double c) {
    const double s = b.sigma * std::numbers::sqrt2;
    return 0.5 * (std::erf((1.0 - c) / s) + std::erf(c / s));
  };
  return b.amplitude * 2.0 * std::numbers::pi * b.sigma * b.sigma * axis(b.cx) * axis(b.cy);
}

}  // namespace

TEST(Scanpath, ValidateRejectsBadFixations) {
  EXPECT_THROW(validate(Scanpath{}), std::invalid_argument);
  EXPECT_THROW(validate(Scanpath{0, 0, {{1.2, 0.5, 100}}}), std::invalid_argument);
  EXPECT_THROW(validate(Scanpath{0, 0, {{0.5, 0.5, 0}}}), std::invalid_argument);
  EXPECT_NO_THROW(validate(Scanpath{0, 0, {{1.0, 0.0, 10}}}));
}

TEST(Scanpath, CellIndexClampsUpperEdge) {
  EXPECT_EQ(cell_index(0.0, 0.0, 4, 4), 0u);
  EXPECT_EQ(cell_index(1.0, 1.0, 4, 4), 15u);
  EXPECT_EQ(cell_index(0.3, 0.6, 4, 5), 2u * 5 + 1);
  auto f = cell_center(7, 4, 5, 100);
  EXPECT_EQ(cell_index(f.x, f.y, 4, 5), 7u);
}

TEST(Scanpath, RoiNamesRoundTrip) {
  for (auto r : {Roi::Social, Roi::Nonsocial, Roi::Background}) EXPECT_EQ(roi_from_name(roi_name(r)), r);
  EXPECT_THROW(roi_from_name("face"), std::invalid_argument);
}

TEST(Scenes, SameSeedIsBitIdentical) {
  GeneratorConfig c;
  auto a = generate_scenes(5, c, 42);
  auto b = generate_scenes(5, c, 42);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(isp::ad::identical(a[i].features, b[i].features));
    EXPECT_TRUE(isp::ad::identical(a[i].m0, b[i].m0));
    EXPECT_EQ(a[i].roi_mask, b[i].roi_mask);
  }
  auto c2 = generate_scenes(5, c, 43);
  EXPECT_FALSE(isp::ad::identical(a[0].features, c2[0].features));
}

TEST(Scenes, ZeroCountIsEmpty) { EXPECT_TRUE(generate_scenes(0, GeneratorConfig{}, 1).empty()); }

TEST(Scenes, StructuralInvariants) {
  GeneratorConfig c;
  for (const auto& s : generate_scenes(20, c, 7)) {
    EXPECT_GE(s.blobs.size(), c.min_blobs);
    EXPECT_LE(s.blobs.size(), c.max_blobs);
    EXPECT_EQ(s.features.shape(), (isp::ad::Shape{c.channels, c.grid_h, c.grid_w}));
    for (double v : s.features.data()) EXPECT_GE(v, 0.0);
    double z = 0.0;
    for (double v : s.m0.data()) {
      EXPECT_GT(v, 0.0);
      z += v;
    }
    EXPECT_NEAR(z, 1.0, 1e-12);
    EXPECT_EQ(s.blobs[0].category, Roi::Social);
    EXPECT_EQ(s.blobs[1].category, Roi::Nonsocial);
  }
}

TEST(Scenes, BlobMassMatchesGaussianIntegral) {
  GeneratorConfig c;
  c.grid_h = c.grid_w = 64;
  for (const auto& s : generate_scenes(10, c, 3)) {
    for (const auto& b : s.blobs) {
      auto resp = render_blob(b, 64, 64);
      double mass = 0.0;
      for (double v : resp) mass += v / (64.0 * 64.0);
      EXPECT_NEAR(mass / truncated_mass(b), 1.0, 0.02);
    }
  }
}

TEST(Scenes, RoiMaskFollowsBlobOwnership) {
  GeneratorConfig c;
  std::array<std::size_t, kRoiCount> cells{};
  for (const auto& s : generate_scenes(20, c, 11)) {
    for (auto r : s.roi_mask) ++cells[static_cast<std::size_t>(r)];
  }
  for (auto n : cells) EXPECT_GT(n, 0u);
}

TEST(Profiles, GroupGapAndUniqueness) {
  const std::size_t channels = 12;
  auto layout = channel_layout(channels);
  auto ps = generate_profiles(8, 0.5, channels, 5);
  double social[2] = {0, 0};
  int count[2] = {0, 0};
  for (const auto& p : ps) {
    const int g = static_cast<int>(p.group);
    double s = 0.0;
    for (std::size_t c = 0; c < layout.social; ++c) s += p.channel_pref[c];
    social[g] += s / static_cast<double>(layout.social);
    ++count[g];
    EXPECT_GT(p.temp, 0.0);
    EXPECT_GT(p.log_dur_sd, 0.0);
  }
  EXPECT_EQ(count[0], 4);
  EXPECT_GE(social[1] / count[1] - social[0] / count[0], 0.3);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = i + 1; j < ps.size(); ++j) EXPECT_NE(ps[i].channel_pref, ps[j].channel_pref);
  }
  auto again = generate_profiles(8, 0.5, channels, 5);
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(ps[i].channel_pref, again[i].channel_pref);
  EXPECT_THROW(generate_profiles(1, 0.5, channels, 5), std::invalid_argument);
}

TEST(GtScanpath, HugeInhibitionNeverRepeatsCell) {
  GeneratorConfig c;
  auto scene = generate_scenes(1, c, 2)[0];
  auto p = generate_profiles(2, 0.5, c.channels, 2)[0];
  p.ior_strength = 1e6;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto sp = sample_gt_scanpath(p, scene, 8, seed, c);
    validate(sp);
    for (std::size_t t = 1; t < sp.fixations.size(); ++t) {
      EXPECT_NE(cell_index(sp.fixations[t].x, sp.fixations[t].y, c.grid_h, c.grid_w),
                cell_index(sp.fixations[t - 1].x, sp.fixations[t - 1].y, c.grid_h, c.grid_w));
    }
  }
}

TEST(GtScanpath, ZeroTemperatureIsGreedy) {
  GeneratorConfig c;
  auto scene = generate_scenes(1, c, 4)[0];
  auto p = generate_profiles(2, 0.5, c.channels, 4)[1];
  p.temp = 1e-6;
  p.ior_strength = 0.0;
  auto st = static_priority(p, scene, c);
  const auto best = static_cast<std::size_t>(std::max_element(st.begin(), st.end()) - st.begin());
  auto sp = sample_gt_scanpath(p, scene, 5, 9, c);
  for (const auto& f : sp.fixations) EXPECT_EQ(cell_index(f.x, f.y, c.grid_h, c.grid_w), best);
}

TEST(GtScanpath, DurationsClampedAndPositive) {
  GeneratorConfig c;
  auto scene = generate_scenes(1, c, 4)[0];
  auto p = generate_profiles(2, 0.5, c.channels, 4)[0];
  p.log_dur_mean = std::log(20000.0);
  for (const auto& f : sample_gt_scanpath(p, scene, 4, 1, c).fixations) EXPECT_EQ(f.dur_ms, 5000.0);
  p.log_dur_mean = std::log(1.0);
  for (const auto& f : sample_gt_scanpath(p, scene, 4, 1, c).fixations) EXPECT_EQ(f.dur_ms, 50.0);
  EXPECT_THROW(sample_gt_scanpath(p, scene, 0, 1, c), std::invalid_argument);
}

TEST(GtScanpath, FirstFixationFrequenciesMatchPriorityMap) {
  GeneratorConfig c;
  c.grid_h = c.grid_w = 6;
  auto scene = generate_scenes(1, c, 8)[0];
  auto p = generate_profiles(2, 0.5, c.channels, 8)[1];
  p.temp = 1.0;  // flatter map so many cells carry mass
  const auto probs = priority_map(p, scene, std::vector<double>(36, 0.0), c);
  const int n = 100000;
  std::vector<int> hits(36, 0);
  for (int s = 0; s < n; ++s) {
    const auto f = sample_gt_scanpath(p, scene, 1, static_cast<std::uint64_t>(s), c).fixations[0];
    ++hits[cell_index(f.x, f.y, c.grid_h, c.grid_w)];
  }
  for (std::size_t k = 0; k < 36; ++k) {
    const double sd = std::sqrt(n * probs[k] * (1.0 - probs[k]));
    EXPECT_LE(std::abs(hits[k] - n * probs[k]), 3.0 * sd + 1.0) << "cell " << k;
  }
}

TEST(Corpus, TenScenesSplitSevenOneTwo) {
  auto m = split_scenes(10, 1);
  EXPECT_EQ(m.train.size(), 7u);
  EXPECT_EQ(m.val.size(), 1u);
  EXPECT_EQ(m.test.size(), 2u);
  std::set<int> all;
  for (auto s : {Split::Train, Split::Val, Split::Test}) all.insert(m.ids(s).begin(), m.ids(s).end());
  EXPECT_EQ(all.size(), 10u);
  EXPECT_THROW(split_scenes(2, 1), std::invalid_argument);
}

TEST(Corpus, EveryObserverInEverySplit) {
  auto corpus = build_corpus(small_config(), 17);
  EXPECT_EQ(corpus.scanpaths.size(), 10u * 6u);
  for (auto split : {Split::Train, Split::Val, Split::Test}) {
    std::set<int> observers;
    for (const auto& sp : corpus.scanpaths_in(split)) observers.insert(sp.observer_id);
    EXPECT_EQ(observers.size(), 6u) << split_name(split);
  }
  std::set<std::pair<int, int>> pairs;
  for (const auto& sp : corpus.scanpaths) pairs.insert({sp.image_id, sp.observer_id});
  EXPECT_EQ(pairs.size(), corpus.scanpaths.size());
}

TEST(Corpus, HashIsStableUnderRegeneration) {
  auto a = build_corpus(small_config(), 21);
  auto b = build_corpus(small_config(), 21);
  auto c = build_corpus(small_config(), 22);
  EXPECT_EQ(content_hash(a), content_hash(b));
  EXPECT_NE(content_hash(a), content_hash(c));
  EXPECT_EQ(content_hash(a).size(), 16u);
}

TEST(Corpus, RoiCoverageOfFixations) {
  GeneratorConfig c;
  c.n_scenes = 20;
  auto corpus = build_corpus(c, 5);
  std::array<double, kRoiCount> hits{};
  double total = 0;
  for (const auto& sp : corpus.scanpaths) {
    const auto& scene = corpus.scene(sp.image_id);
    for (const auto& f : sp.fixations) {
      hits[static_cast<std::size_t>(scene.roi_mask[cell_index(f.x, f.y, c.grid_h, c.grid_w)])] += 1;
      total += 1;
    }
  }
  for (double h : hits) EXPECT_GT(h / total, 0.05);
}

TEST(Corpus, ObserversAreIdentifiableByScanMatch) {
  GeneratorConfig c;
  double same = 0, cross = 0;
  int n_same = 0, n_cross = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto scene = generate_scenes(1, c, derive_seed(seed, 100))[0];
    auto ps = generate_profiles(c.n_observers, c.group_split, c.channels, derive_seed(seed, 101));
    std::vector<Scanpath> first, second;
    for (const auto& p : ps) {
      first.push_back(sample_gt_scanpath(p, scene, c.scanpath_length, derive_seed(seed, 1, p.id), c));
      second.push_back(sample_gt_scanpath(p, scene, c.scanpath_length, derive_seed(seed, 2, p.id), c));
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t j = 0; j < ps.size(); ++j) {
        const double sm = isp::metrics::scanmatch(first[i], second[j]);
        if (i == j) {
          same += sm;
          ++n_same;
        } else {
          cross += sm;
          ++n_cross;
        }
      }
    }
  }
  EXPECT_GT(same / n_same, cross / n_cross);
}
