#include "isp/autodiff/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace isp::ad {

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, t] : ckpt.params) {
    params[name] = {{"shape", t.shape()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
  }
  return {{"format", kCheckpointFormat}, {"config", ckpt.config}, {"params", std::move(params)}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != kCheckpointFormat) {
    throw std::runtime_error(std::string("checkpoint: expected format ") + kCheckpointFormat);
  }
  Checkpoint ckpt;
  ckpt.config = doc.value("config", nlohmann::json::object());
  for (const auto& [name, entry] : doc.at("params").items()) {
    auto shape = entry.at("shape").get<Shape>();
    auto data = entry.at("data").get<std::vector<double>>();
    ckpt.params.emplace(name, Tensor(std::move(shape), std::move(data)));
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  out << checkpoint_to_json(ckpt).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
  return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace isp::ad
