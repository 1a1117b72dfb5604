#include "isp/io/formats.hpp"

#include <fstream>
#include <map>
#include <set>

#include "isp/io/config.hpp"
#include "isp/io/json_util.hpp"

namespace isp::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_format(const json& j, const char* expected, const std::string& where) {
  if (!j.is_object() || !j.contains("format") || j.at("format") != expected) {
    throw FormatError(where + ": expected format \"" + expected + "\"");
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

json read_file(const fs::path& path) {
  try {
    return read_json_file(path);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

json nested(const ad::Tensor& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  json out = json::array();
  for (std::size_t r = 0; r < rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < cols; ++c) row.push_back(t[offset + r * cols + c]);
    out.push_back(std::move(row));
  }
  return out;
}

void flatten(const json& j, std::size_t rows, std::size_t cols, std::vector<double>& out, const std::string& what) {
  if (!j.is_array() || j.size() != rows) throw FormatError(what + ": expected " + std::to_string(rows) + " rows");
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) throw FormatError(what + ": expected " + std::to_string(cols) + " columns");
    for (const auto& v : row) out.push_back(v.get<double>());
  }
}

}  // namespace

json to_json(const data::Scanpath& sp) {
  json fixations = json::array();
  for (const auto& f : sp.fixations) fixations.push_back({{"x", f.x}, {"y", f.y}, {"dur_ms", f.dur_ms}});
  return {{"format", kGazeFormat}, {"image_id", sp.image_id}, {"observer_id", sp.observer_id}, {"fixations", fixations}};
}

data::Scanpath scanpath_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("scanpath must be a JSON object");
  if (j.contains("format") && j.at("format") != kGazeFormat) {
    throw std::invalid_argument(std::string("scanpath format must be \"") + kGazeFormat + "\"");
  }
  for (const char* key : {"image_id", "observer_id", "fixations"}) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("scanpath is missing '") + key + "'");
  }
  StrictReader r(j, "scanpath");
  data::Scanpath sp;
  std::string format;
  r.get("format", format);
  r.get("image_id", sp.image_id);
  r.get("observer_id", sp.observer_id);
  const auto& fixations = *r.sub("fixations");
  r.finish();
  if (!fixations.is_array()) throw std::invalid_argument("scanpath 'fixations' must be an array");
  for (const auto& f : fixations) {
    StrictReader fr(f, "fixation");
    data::Fixation fix{-1.0, -1.0, 0.0};
    for (const char* key : {"x", "y", "dur_ms"}) {
      if (!f.contains(key)) throw std::invalid_argument(std::string("fixation is missing '") + key + "'");
    }
    fr.get("x", fix.x);
    fr.get("y", fix.y);
    fr.get("dur_ms", fix.dur_ms);
    fr.finish();
    sp.fixations.push_back(fix);
  }
  data::validate(sp);
  return sp;
}

void write_scanpaths(std::span<const data::Scanpath> scanpaths, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& sp : scanpaths) out << to_json(sp).dump() << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<data::Scanpath> read_scanpaths(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<data::Scanpath> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(scanpath_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json scenes_to_json(std::span<const data::SyntheticScene> scenes) {
  json list = json::array();
  for (const auto& s : scenes) {
    const std::size_t c = s.channels(), h = s.height(), w = s.width();
    json features = json::array();
    for (std::size_t k = 0; k < c; ++k) features.push_back(nested(s.features, h, w, k * h * w));
    json roi = json::array();
    for (std::size_t r = 0; r < h; ++r) {
      json row = json::array();
      for (std::size_t col = 0; col < w; ++col) row.push_back(data::roi_name(s.roi_mask[r * w + col]));
      roi.push_back(std::move(row));
    }
    json blobs = json::array();
    for (const auto& b : s.blobs) {
      blobs.push_back({{"channel", b.channel},
                       {"category", data::roi_name(b.category)},
                       {"cx", b.cx},
                       {"cy", b.cy},
                       {"sigma", b.sigma},
                       {"amplitude", b.amplitude}});
    }
    list.push_back({{"id", s.id}, {"features", features}, {"roi_mask", roi}, {"m0", nested(s.m0, h, w)}, {"blobs", blobs}});
  }
  return {{"format", kSceneFormat}, {"scenes", list}};
}

std::vector<data::SyntheticScene> scenes_from_json(const json& j) {
  check_format(j, kSceneFormat, "scenes");
  std::vector<data::SyntheticScene> out;
  for (const auto& js : j.at("scenes")) {
    data::SyntheticScene s;
    s.id = js.at("id").get<int>();
    const std::string where = "scene " + std::to_string(s.id);
    const auto& feats = js.at("features");
    if (!feats.is_array() || feats.empty() || !feats[0].is_array() || feats[0].empty()) {
      throw FormatError(where + ": features must be a nonempty C x H x W array");
    }
    const std::size_t c = feats.size(), h = feats[0].size(), w = feats[0][0].size();
    std::vector<double> values;
    for (const auto& ch : feats) flatten(ch, h, w, values, where + " features");
    for (double v : values) {
      if (!(v >= 0.0)) throw FormatError(where + ": features must be nonnegative");
    }
    s.features = ad::Tensor({c, h, w}, std::move(values));
    std::vector<double> m0;
    flatten(js.at("m0"), h, w, m0, where + " m0");
    s.m0 = ad::Tensor({h, w}, std::move(m0));
    const auto& roi = js.at("roi_mask");
    if (!roi.is_array() || roi.size() != h) throw FormatError(where + ": roi_mask must have " + std::to_string(h) + " rows");
    for (const auto& row : roi) {
      if (!row.is_array() || row.size() != w) throw FormatError(where + ": roi_mask row length must be " + std::to_string(w));
      for (const auto& v : row) s.roi_mask.push_back(data::roi_from_name(v.get<std::string>()));
    }
    for (const auto& b : js.at("blobs")) {
      s.blobs.push_back({b.at("channel").get<std::size_t>(), data::roi_from_name(b.at("category").get<std::string>()),
                         b.at("cx").get<double>(), b.at("cy").get<double>(), b.at("sigma").get<double>(),
                         b.at("amplitude").get<double>()});
    }
    out.push_back(std::move(s));
  }
  return out;
}

json profiles_to_json(std::span<const data::ObserverProfile> profiles) {
  json list = json::array();
  for (const auto& p : profiles) {
    list.push_back({{"id", p.id},
                    {"group", p.group == data::Group::A ? "A" : "B"},
                    {"channel_pref", p.channel_pref},
                    {"center_bias", p.center_bias},
                    {"ior_strength", p.ior_strength},
                    {"temp", p.temp},
                    {"log_dur_mean", p.log_dur_mean},
                    {"log_dur_sd", p.log_dur_sd}});
  }
  return {{"format", kProfilesFormat}, {"profiles", list}};
}

std::vector<data::ObserverProfile> profiles_from_json(const json& j) {
  check_format(j, kProfilesFormat, "profiles");
  std::vector<data::ObserverProfile> out;
  for (const auto& jp : j.at("profiles")) {
    data::ObserverProfile p;
    p.id = jp.at("id").get<int>();
    const auto group = jp.at("group").get<std::string>();
    if (group != "A" && group != "B") throw FormatError("profile " + std::to_string(p.id) + ": group must be A or B");
    p.group = group == "A" ? data::Group::A : data::Group::B;
    p.channel_pref = jp.at("channel_pref").get<std::vector<double>>();
    p.center_bias = jp.at("center_bias").get<double>();
    p.ior_strength = jp.at("ior_strength").get<double>();
    p.temp = jp.at("temp").get<double>();
    p.log_dur_mean = jp.at("log_dur_mean").get<double>();
    p.log_dur_sd = jp.at("log_dur_sd").get<double>();
    if (!(p.temp > 0.0) || !(p.log_dur_sd > 0.0)) {
      throw FormatError("profile " + std::to_string(p.id) + ": temp and log_dur_sd must be positive");
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_corpus(const data::Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  write_json_file(scenes_to_json(corpus.scenes), dir / "scenes.json");
  write_json_file(profiles_to_json(corpus.profiles), dir / "profiles.json");
  write_scanpaths(corpus.scanpaths, dir / "scanpaths.jsonl");
  json manifest = {
      {"format", kManifestFormat},
      {"seed", corpus.seed},
      {"generator", to_json(corpus.config)},
      {"content_hash", data::content_hash(corpus)},
      {"splits", {{"train", corpus.splits.train}, {"val", corpus.splits.val}, {"test", corpus.splits.test}}},
      {"files", {{"scenes", "scenes.json"}, {"profiles", "profiles.json"}, {"scanpaths", "scanpaths.jsonl"}}},
  };
  write_json_file(manifest, dir / "manifest.json");
}

data::Corpus read_corpus(const fs::path& dir) {
  const auto manifest = read_file(dir / "manifest.json");
  check_format(manifest, kManifestFormat, (dir / "manifest.json").string());
  data::Corpus c;
  try {
    c.seed = manifest.at("seed").get<std::uint64_t>();
    c.config = generator_config_from_json(manifest.at("generator"));
    const auto& splits = manifest.at("splits");
    c.splits.train = splits.at("train").get<std::vector<int>>();
    c.splits.val = splits.at("val").get<std::vector<int>>();
    c.splits.test = splits.at("test").get<std::vector<int>>();
    const auto& files = manifest.at("files");
    c.scenes = scenes_from_json(read_file(dir / files.at("scenes").get<std::string>()));
    c.profiles = profiles_from_json(read_file(dir / files.at("profiles").get<std::string>()));
    c.scanpaths = read_scanpaths(dir / files.at("scanpaths").get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError((dir / "manifest.json").string() + ": " + e.what());
  }

  std::set<int> ids;
  for (const auto& s : c.scenes) ids.insert(s.id);
  std::set<int> listed;
  for (const auto* split : {&c.splits.train, &c.splits.val, &c.splits.test}) {
    for (int id : *split) {
      if (!ids.count(id)) throw FormatError("manifest lists unknown scene " + std::to_string(id));
      if (!listed.insert(id).second) throw FormatError("scene " + std::to_string(id) + " appears in two splits");
    }
  }
  const auto expected = manifest.at("content_hash").get<std::string>();
  if (data::content_hash(c) != expected) {
    throw FormatError(dir.string() + ": content hash mismatch (manifest " + expected + ")");
  }
  return c;
}

}  // namespace isp::io
