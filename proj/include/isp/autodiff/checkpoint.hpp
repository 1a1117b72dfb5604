#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "isp/autodiff/adam.hpp"

namespace isp::ad {

inline constexpr const char* kCheckpointFormat = "isp-ckpt-v1";

struct Checkpoint {
  NamedTensors params;
  nlohmann::json config = nlohmann::json::object();
};

// {"format": "isp-ckpt-v1", "config": {...}, "params": {name: {"shape": [...], "data": [...]}}}
nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace isp::ad
