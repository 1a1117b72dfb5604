#include "isp/io/config.hpp"

#include <fstream>
#include <stdexcept>

#include "isp/io/json_util.hpp"

namespace isp::io {

using nlohmann::json;

void RunConfig::sync_seeds() {
  train.seed = seeds.train;
  predict.seed = seeds.predict;
  saliency.seed = seeds.saliency;
  classifier.seed = seeds.classifier;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  metrics.validate();
  if (generator.n_observers != model.n_observers || generator.grid_h != model.grid_h ||
      generator.grid_w != model.grid_w || generator.channels != model.channels) {
    throw std::invalid_argument("run config: generator and model disagree on observers, grid or channels");
  }
  if (generator.scanpath_length > model.max_steps) {
    throw std::invalid_argument("run config: generator.scanpath_length exceeds model.max_steps");
  }
  if (permutations < 1) throw std::invalid_argument("run config: permutations must be >= 1");
  if (classifier.hidden < 1) throw std::invalid_argument("run config: classifier.hidden must be >= 1");
  if (saliency.height < 1 || saliency.width < 1) throw std::invalid_argument("run config: empty saliency resolution");
}

json to_json(const data::GeneratorConfig& c) {
  return {{"grid_h", c.grid_h},
          {"grid_w", c.grid_w},
          {"channels", c.channels},
          {"n_scenes", c.n_scenes},
          {"n_observers", c.n_observers},
          {"scanpath_length", c.scanpath_length},
          {"group_split", c.group_split},
          {"min_blobs", c.min_blobs},
          {"max_blobs", c.max_blobs},
          {"blob_sigma_min", c.blob_sigma_min},
          {"blob_sigma_max", c.blob_sigma_max},
          {"background_level", c.background_level},
          {"m0_center_strength", c.m0_center_strength},
          {"ior_sigma", c.ior_sigma},
          {"center_bias_sigma", c.center_bias_sigma}};
}

data::GeneratorConfig generator_config_from_json(const json& j) {
  data::GeneratorConfig c;
  StrictReader r(j, "generator");
  r.get("grid_h", c.grid_h);
  r.get("grid_w", c.grid_w);
  r.get("channels", c.channels);
  r.get("n_scenes", c.n_scenes);
  r.get("n_observers", c.n_observers);
  r.get("scanpath_length", c.scanpath_length);
  r.get("group_split", c.group_split);
  r.get("min_blobs", c.min_blobs);
  r.get("max_blobs", c.max_blobs);
  r.get("blob_sigma_min", c.blob_sigma_min);
  r.get("blob_sigma_max", c.blob_sigma_max);
  r.get("background_level", c.background_level);
  r.get("m0_center_strength", c.m0_center_strength);
  r.get("ior_sigma", c.ior_sigma);
  r.get("center_bias_sigma", c.center_bias_sigma);
  r.finish();
  return c;
}

json to_json(const train::TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"ft_lr", c.ft_lr},
          {"ft_epochs", c.ft_epochs},
          {"duration_loss_weight", c.duration_loss_weight}};
}

train::TrainConfig train_config_from_json(const json& j) {
  train::TrainConfig c;
  StrictReader r(j, "train");
  r.get("epochs", c.epochs);
  r.get("lr", c.lr);
  r.get("weight_decay", c.weight_decay);
  r.get("batch_size", c.batch_size);
  r.get("ft_lr", c.ft_lr);
  r.get("ft_epochs", c.ft_epochs);
  r.get("duration_loss_weight", c.duration_loss_weight);
  r.finish();
  return c;
}

json to_json(const metrics::MetricConfig& c) {
  return {{"sm_grid_x", c.sm_grid_x}, {"sm_grid_y", c.sm_grid_y},   {"sm_tbin_ms", c.sm_tbin_ms},
          {"sm_gap", c.sm_gap},       {"sed_grid_x", c.sed_grid_x}, {"sed_grid_y", c.sed_grid_y},
          {"aspect_w", c.aspect_w},   {"aspect_h", c.aspect_h}};
}

metrics::MetricConfig metric_config_from_json(const json& j) {
  metrics::MetricConfig c;
  StrictReader r(j, "metrics");
  r.get("sm_grid_x", c.sm_grid_x);
  r.get("sm_grid_y", c.sm_grid_y);
  r.get("sm_tbin_ms", c.sm_tbin_ms);
  r.get("sm_gap", c.sm_gap);
  r.get("sed_grid_x", c.sed_grid_x);
  r.get("sed_grid_y", c.sed_grid_y);
  r.get("aspect_w", c.aspect_w);
  r.get("aspect_h", c.aspect_h);
  r.finish();
  return c;
}

json to_json(const RunConfig& c) {
  return {
      {"generator", to_json(c.generator)},
      {"model", model::to_json(c.model)},
      {"train", to_json(c.train)},
      {"metrics", to_json(c.metrics)},
      {"predict", {{"mode", model::decode_mode_name(c.predict.mode)}, {"steps", c.predict.steps}}},
      {"saliency",
       {{"height", c.saliency.height},
        {"width", c.saliency.width},
        {"sigma", c.saliency.sigma},
        {"shuffle_images", c.saliency.shuffle_images}}},
      {"classifier",
       {{"hidden", c.classifier.hidden},
        {"epochs", c.classifier.epochs},
        {"lr", c.classifier.lr},
        {"class_balanced", c.classifier.class_balanced}}},
      {"permutations", c.permutations},
      {"seeds",
       {{"data", c.seeds.data},
        {"init", c.seeds.init},
        {"train", c.seeds.train},
        {"predict", c.seeds.predict},
        {"saliency", c.seeds.saliency},
        {"analysis", c.seeds.analysis},
        {"classifier", c.seeds.classifier}}},
      {"paths", {{"data_dir", c.paths.data_dir}, {"checkpoint", c.paths.checkpoint}, {"out_dir", c.paths.out_dir}}},
  };
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  StrictReader r(j, "config");
  if (const auto* s = r.sub("generator")) c.generator = generator_config_from_json(*s);
  if (const auto* s = r.sub("model")) c.model = model::model_config_from_json(*s);
  if (const auto* s = r.sub("train")) c.train = train_config_from_json(*s);
  if (const auto* s = r.sub("metrics")) c.metrics = metric_config_from_json(*s);
  if (const auto* s = r.sub("predict")) {
    StrictReader p(*s, "predict");
    std::string mode(model::decode_mode_name(c.predict.mode));
    p.get("mode", mode);
    p.get("steps", c.predict.steps);
    p.finish();
    c.predict.mode = model::decode_mode_from_name(mode);
  }
  if (const auto* s = r.sub("saliency")) {
    StrictReader p(*s, "saliency");
    p.get("height", c.saliency.height);
    p.get("width", c.saliency.width);
    p.get("sigma", c.saliency.sigma);
    p.get("shuffle_images", c.saliency.shuffle_images);
    p.finish();
  }
  if (const auto* s = r.sub("classifier")) {
    StrictReader p(*s, "classifier");
    p.get("hidden", c.classifier.hidden);
    p.get("epochs", c.classifier.epochs);
    p.get("lr", c.classifier.lr);
    p.get("class_balanced", c.classifier.class_balanced);
    p.finish();
  }
  r.get("permutations", c.permutations);
  if (const auto* s = r.sub("seeds")) {
    StrictReader p(*s, "seeds");
    p.get("data", c.seeds.data);
    p.get("init", c.seeds.init);
    p.get("train", c.seeds.train);
    p.get("predict", c.seeds.predict);
    p.get("saliency", c.seeds.saliency);
    p.get("analysis", c.seeds.analysis);
    p.get("classifier", c.seeds.classifier);
    p.finish();
  }
  if (const auto* s = r.sub("paths")) {
    StrictReader p(*s, "paths");
    p.get("data_dir", c.paths.data_dir);
    p.get("checkpoint", c.paths.checkpoint);
    p.get("out_dir", c.paths.out_dir);
    p.finish();
  }
  r.finish();
  c.sync_seeds();
  c.validate();
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

RunConfig load_run_config(const std::filesystem::path& path) { return run_config_from_json(read_json_file(path)); }

}  // namespace isp::io
