/* Copyright 2026 The JNR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "jnr/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "jnr/error.hpp"
#include "jnr/rng.hpp"
#include "json.hpp"

namespace jnr {
namespace {

using nlohmann::json;

void only_keys(const json& j, std::string_view section,
               std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, std::string_view section, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section) + "." + key + ": wrong type");
  }
}

void read_path(const json& j, const char* key, std::filesystem::path& out) {
  std::string s = out.string();
  read(j, "paths", key, s);
  out = s;
}

GenConfig parse_gen(const json& j) {
  only_keys(j, "gen",
            {"n_total", "split_fractions", "class_skew", "blur_sigma_max", "noise_std",
             "occlusion_prob", "visibility_threshold", "balance_visibility", "height",
             "width", "channels"});
  GenConfig g;
  read(j, "gen", "n_total", g.n_total);
  read(j, "gen", "split_fractions", g.split_fractions);
  read(j, "gen", "class_skew", g.class_skew);
  read(j, "gen", "blur_sigma_max", g.blur_sigma_max);
  read(j, "gen", "noise_std", g.noise_std);
  read(j, "gen", "occlusion_prob", g.occlusion_prob);
  read(j, "gen", "visibility_threshold", g.visibility_threshold);
  read(j, "gen", "balance_visibility", g.balance_visibility);
  read(j, "gen", "height", g.dims.height);
  read(j, "gen", "width", g.dims.width);
  read(j, "gen", "channels", g.dims.channels);
  return g;
}

NetConfig parse_net(const json& j, const ImageDims& dims) {
  only_keys(j, "net", {"preset", "conv_blocks", "feature_dim"});
  NetConfig n;
  if (j.contains("preset")) {
    if (j.contains("conv_blocks"))
      throw ConfigError("net: 'preset' and 'conv_blocks' are mutually exclusive");
    std::string name;
    read(j, "net", "preset", name);
    try {
      n = preset_config(parse_preset(name), dims);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("net.preset: ") + e.what());
    }
  }
  if (auto it = j.find("conv_blocks"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("net.conv_blocks: expected an array");
    n.conv_blocks.clear();
    for (const json& b : *it) {
      only_keys(b, "net.conv_blocks[]", {"out_channels", "kernel", "stride"});
      ConvSpec c;
      read(b, "net.conv_blocks[]", "out_channels", c.out_channels);
      read(b, "net.conv_blocks[]", "kernel", c.kernel);
      read(b, "net.conv_blocks[]", "stride", c.stride);
      n.conv_blocks.push_back(c);
    }
  }
  read(j, "net", "feature_dim", n.feature_dim);
  n.input = dims;
  return n;
}

TrainConfig parse_train(const json& j) {
  only_keys(j, "train",
            {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "shuffle"});
  TrainConfig t;
  read(j, "train", "epochs", t.epochs);
  read(j, "train", "batch_size", t.batch_size);
  read(j, "train", "learning_rate", t.learning_rate);
  read(j, "train", "beta1", t.beta1);
  read(j, "train", "beta2", t.beta2);
  read(j, "train", "epsilon", t.epsilon);
  read(j, "train", "shuffle", t.shuffle);
  return t;
}

}  // namespace

void RunConfig::validate() const {
  auto check = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const DomainError& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  check("gen", [&] { gen.validate(); });
  check("net", [&] { net.validate(); });
  check("train", [&] { train.validate(); });
  check("loss_weights", [&] { loss_weights.validate(); });
  if (net.input != gen.dims) throw ConfigError("net: input dims differ from gen dims");
  if (paths.dataset_dir.empty() || paths.checkpoint.empty() || paths.report_dir.empty())
    throw ConfigError("paths: entries must be non-empty");
}

std::uint64_t RunConfig::gen_seed() const { return named_stream(seed, "gen"); }
std::uint64_t RunConfig::baseline_seed() const { return named_stream(seed, "baseline"); }

RunConfig parse_run_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  only_keys(j, "config", {"seed", "gen", "net", "train", "loss_weights", "paths"});

  RunConfig c;
  read(j, "config", "seed", c.seed);
  if (j.contains("gen")) c.gen = parse_gen(j["gen"]);
  c.net = parse_net(j.value("net", json::object()), c.gen.dims);
  if (j.contains("train")) c.train = parse_train(j["train"]);
  read(j, "config", "loss_weights", c.loss_weights.alpha);
  c.train.seed = c.seed;
  if (j.contains("paths")) {
    only_keys(j["paths"], "paths", {"dataset_dir", "checkpoint", "report_dir"});
    read_path(j["paths"], "dataset_dir", c.paths.dataset_dir);
    read_path(j["paths"], "checkpoint", c.paths.checkpoint);
    read_path(j["paths"], "report_dir", c.paths.report_dir);
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_json_text(const RunConfig& c) {
  json blocks = json::array();
  for (const ConvSpec& b : c.net.conv_blocks)
    blocks.push_back({{"out_channels", b.out_channels}, {"kernel", b.kernel}, {"stride", b.stride}});
  json j = {
      {"seed", c.seed},
      {"gen",
       {{"n_total", c.gen.n_total},
        {"split_fractions", c.gen.split_fractions},
        {"class_skew", c.gen.class_skew},
        {"blur_sigma_max", c.gen.blur_sigma_max},
        {"noise_std", c.gen.noise_std},
        {"occlusion_prob", c.gen.occlusion_prob},
        {"visibility_threshold", c.gen.visibility_threshold},
        {"balance_visibility", c.gen.balance_visibility},
        {"height", c.gen.dims.height},
        {"width", c.gen.dims.width},
        {"channels", c.gen.dims.channels}}},
      {"net", {{"conv_blocks", blocks}, {"feature_dim", c.net.feature_dim}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"learning_rate", c.train.learning_rate},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"epsilon", c.train.epsilon},
        {"shuffle", c.train.shuffle}}},
      {"loss_weights", c.loss_weights.alpha},
      {"paths",
       {{"dataset_dir", c.paths.dataset_dir.string()},
        {"checkpoint", c.paths.checkpoint.string()},
        {"report_dir", c.paths.report_dir.string()}}},
  };
  return j.dump(2);
}

std::filesystem::path dataset_path(const RunConfig& c, std::string_view split) {
  return c.paths.dataset_dir / (std::string(split) + ".jnrd");
}

std::filesystem::path manifest_path(const RunConfig& c, std::string_view split) {
  return c.paths.dataset_dir / (std::string(split) + ".csv");
}

}  // namespace jnr
