#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "isp/data/corpus.hpp"
#include "isp/io/config.hpp"
#include "isp/io/formats.hpp"
#include "isp/io/report.hpp"

using namespace isp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("isp_io_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

data::GeneratorConfig small_generator() {
  data::GeneratorConfig g;
  g.grid_h = 4;
  g.grid_w = 4;
  g.channels = 4;
  g.n_scenes = 6;
  g.n_observers = 3;
  g.scanpath_length = 3;
  return g;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

}  // namespace

TEST(RunConfig, JsonRoundTrip) {
  io::RunConfig c;
  c.generator.n_scenes = 17;
  c.model.enable_fi = false;
  c.train.lr = 2.5e-3;
  c.train.epochs = 4;
  c.metrics.sm_grid_x = 7;
  c.seeds.data = 99;
  c.seeds.classifier = 5;
  c.permutations = 321;
  c.paths.out_dir = "elsewhere";
  const auto j = io::to_json(c);
  const auto back = io::run_config_from_json(j);
  EXPECT_EQ(io::to_json(back), j);
  EXPECT_EQ(back.train.lr, 2.5e-3);
  EXPECT_FALSE(back.model.enable_fi);
  EXPECT_EQ(back.seeds.data, 99u);
}

TEST(RunConfig, UnknownKeysRejected) {
  auto j = io::to_json(io::RunConfig{});
  j["train"]["learning_rate"] = 1.0;
  EXPECT_THROW(io::run_config_from_json(j), std::invalid_argument);
  auto k = io::to_json(io::RunConfig{});
  k["bogus"] = 1;
  EXPECT_THROW(io::run_config_from_json(k), std::invalid_argument);
}

TEST(RunConfig, MissingKeysKeepDefaults) {
  const auto c = io::run_config_from_json(nlohmann::json{{"train", {{"epochs", 3}}}});
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_EQ(c.generator.n_observers, data::GeneratorConfig{}.n_observers);
}

TEST(RunConfig, CrossFieldValidation) {
  io::RunConfig c;
  c.generator.n_observers = 5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(RunConfig, SyncSeedsPropagates) {
  io::RunConfig c;
  c.seeds.train = 41;
  c.seeds.classifier = 43;
  c.sync_seeds();
  EXPECT_EQ(c.train.seed, 41u);
  EXPECT_EQ(c.classifier.seed, 43u);
}

TEST(Scanpaths, RandomRoundTripIsExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<data::Scanpath> sps;
  for (int i = 0; i < 100; ++i) {
    data::Scanpath sp{i % 7, i % 5, {}};
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < n; ++k) sp.fixations.push_back({u(rng), u(rng), 50.0 + 900.0 * u(rng)});
    sps.push_back(sp);
  }
  const auto path = scratch("roundtrip") / "gaze.jsonl";
  io::write_scanpaths(sps, path);
  EXPECT_EQ(io::read_scanpaths(path), sps);
}

TEST(Scanpaths, BadDurationNamesLine) {
  const auto path = scratch("baddur") / "gaze.jsonl";
  const data::Scanpath ok{0, 0, {{0.5, 0.5, 200.0}}};
  const std::string good = io::to_json(ok).dump();
  auto bad = io::to_json(ok);
  bad["fixations"][0]["dur_ms"] = -3.0;
  write_text(path, good + "\n" + good + "\n" + bad.dump() + "\n");
  try {
    io::read_scanpaths(path);
    FAIL() << "expected FormatError";
  } catch (const io::FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Scanpaths, MalformedLineNamesLine) {
  const auto path = scratch("malformed") / "gaze.jsonl";
  write_text(path, io::to_json(data::Scanpath{0, 0, {{0.1, 0.2, 100.0}}}).dump() + "\n{not json\n");
  try {
    io::read_scanpaths(path);
    FAIL() << "expected FormatError";
  } catch (const io::FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(Scanpaths, OutOfRangeCoordinateRejected) {
  auto j = io::to_json(data::Scanpath{0, 0, {{0.1, 0.2, 100.0}}});
  j["fixations"][0]["x"] = 1.5;
  EXPECT_ANY_THROW(io::scanpath_from_json(j));
}

TEST(Corpus, WriteReadPreservesContentHash) {
  const auto corpus = data::build_corpus(small_generator(), 12);
  const auto dir = scratch("corpus");
  io::write_corpus(corpus, dir);
  const auto back = io::read_corpus(dir);
  EXPECT_EQ(data::content_hash(back), data::content_hash(corpus));
  EXPECT_EQ(back.scanpaths, corpus.scanpaths);
  EXPECT_EQ(back.splits.test, corpus.splits.test);
}

TEST(Corpus, TamperedDataFailsHashCheck) {
  const auto corpus = data::build_corpus(small_generator(), 12);
  const auto dir = scratch("tamper");
  io::write_corpus(corpus, dir);
  auto sps = corpus.scanpaths;
  sps[0].fixations[0].dur_ms += 1.0;
  io::write_scanpaths(sps, dir / "scanpaths.jsonl");
  EXPECT_THROW(io::read_corpus(dir), io::FormatError);
}

TEST(Report, EmptyReportHasHeaderOnly) {
  const auto dir = scratch("empty_report");
  io::emit_report(io::MetricReport{}, dir);
  std::ifstream in(dir / "report.csv");
  std::string all((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(all, "variant,split,metric,value,stderr\n");
  EXPECT_TRUE(io::read_report_csv(dir / "report.csv").empty());
}

TEST(Report, CsvAndJsonCarryTheSameRows) {
  io::MetricReport r;
  r.add("full", "test", "sm", 0.123456789012345678, 0.01);
  r.add("full", "test", "r_at_5", 62.5);
  r.add("none", "val", "mrr", 1.0 / 3.0);
  const auto dir = scratch("report");
  io::emit_report(r, dir);
  const auto csv = io::read_report_csv(dir / "report.csv");
  EXPECT_EQ(csv, r.rows);
  const auto j = io::read_json_file(dir / "report.json");
  ASSERT_EQ(j["rows"].size(), csv.size());
  for (std::size_t i = 0; i < csv.size(); ++i) {
    EXPECT_EQ(j["rows"][i]["metric"], csv[i].metric);
    EXPECT_EQ(j["rows"][i]["value"].get<double>(), csv[i].value);
  }
  EXPECT_TRUE(j["rows"][1]["stderr"].is_null());
}

TEST(Report, UnknownMetricRejected) {
  io::MetricReport r;
  EXPECT_THROW(r.add("full", "test", "accuracy_pct", 1.0), std::invalid_argument);
  EXPECT_THROW(r.add("full", "test", "r_at_0", 1.0), std::invalid_argument);
  EXPECT_NO_THROW(r.add("full", "test", "r_at_10", 1.0));
}

TEST(Report, ConfigHashTracksConfig) {
  io::RunConfig a;
  const auto h = io::config_hash(io::to_json(a));
  EXPECT_EQ(io::config_hash(io::to_json(a)), h);
  a.train.lr *= 2.0;
  EXPECT_NE(io::config_hash(io::to_json(a)), h);
}

TEST(Report, FnvKnownVector) {
  EXPECT_EQ(io::fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(io::fnv1a_hex("a"), "af63dc4c8601ec8c");
}
