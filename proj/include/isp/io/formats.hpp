#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "isp/data/corpus.hpp"
#include "isp/data/scanpath.hpp"
#include "isp/data/synthetic.hpp"

namespace isp::io {

inline constexpr const char* kGazeFormat = "isp-gaze-v1";
inline constexpr const char* kSceneFormat = "isp-scene-v1";
inline constexpr const char* kProfilesFormat = "isp-profiles-v1";
inline constexpr const char* kManifestFormat = "isp-manifest-v1";

// Malformed or invalid file content; the message names the file and line.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const data::Scanpath& sp);
// Validates ranges; unknown keys are rejected.
data::Scanpath scanpath_from_json(const nlohmann::json& j);

// JSON Lines, one scanpath object per line.
void write_scanpaths(std::span<const data::Scanpath> scanpaths, const std::filesystem::path& path);
std::vector<data::Scanpath> read_scanpaths(const std::filesystem::path& path);

nlohmann::json scenes_to_json(std::span<const data::SyntheticScene> scenes);
std::vector<data::SyntheticScene> scenes_from_json(const nlohmann::json& j);

nlohmann::json profiles_to_json(std::span<const data::ObserverProfile> profiles);
std::vector<data::ObserverProfile> profiles_from_json(const nlohmann::json& j);

// Directory layout: manifest.json, scenes.json, profiles.json, scanpaths.jsonl.
void write_corpus(const data::Corpus& corpus, const std::filesystem::path& dir);
// Checks the manifest's content hash against the loaded data.
data::Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace isp::io
