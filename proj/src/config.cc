/* Copyright 2026 The PCPP Simulator Authors. All Rights Reserved.

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

#include "pcpp/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pcpp/error.h"

namespace pcpp {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw InvalidConfig(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw InvalidConfig("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::string_view sampler_variant_name(SamplerVariant v) {
  return v == SamplerVariant::kDdim ? "ddim" : "ddpm";
}

std::string_view schedule_variant_name(ScheduleVariant v) {
  return v == ScheduleVariant::kLinear ? "linear" : "scaled_linear";
}

}  // namespace

double default_partial(int devices, const GuidanceConfig& guidance) {
  return devices * guidance.passes() <= 4 ? 0.3 : 0.8;
}

double RunConfig::effective_partial() const { return partial.value_or(default_partial(devices, guidance)); }

Scheme RunConfig::make_scheme() const { return Scheme{scheme, effective_partial(), warmup_steps}; }

PatchLayout RunConfig::layout() const {
  return PatchLayout(static_cast<std::size_t>(model.height), scheme == SchemeKind::kSerial ? 1 : devices);
}

SchedulePolicy RunConfig::schedule_policy() const { return parse_policy(policy, layout().devices()); }

void RunConfig::validate() const {
  model.validate();
  sampler.validate();
  guidance.validate();
  if (devices < 1) throw InvalidConfig("devices must be >= 1");
  make_scheme().validate();
  layout();
  schedule_policy();
}

bool operator==(const RunConfig& a, const RunConfig& b) { return to_config_text(a) == to_config_text(b); }

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    reject_unknown(doc,
                   {"schema_version", "model", "sampler", "guidance", "devices", "scheme", "partial",
                    "warmup_steps", "policy", "seed", "prompt_id", "output_dir"},
                   "config");
    if (!doc.contains("schema_version")) throw InvalidConfig("config lacks schema_version");
    const int version = doc.at("schema_version").get<int>();
    if (version != kConfigSchemaVersion) {
      throw InvalidConfig("unsupported schema_version " + std::to_string(version));
    }
    if (doc.contains("model")) {
      const json& m = doc.at("model");
      reject_unknown(m, {"height", "width", "channels", "blocks", "groups", "heads", "head_dim"}, "model");
      read(m, "height", cfg.model.height);
      read(m, "width", cfg.model.width);
      read(m, "channels", cfg.model.channels);
      read(m, "blocks", cfg.model.blocks);
      read(m, "groups", cfg.model.groups);
      read(m, "heads", cfg.model.heads);
      read(m, "head_dim", cfg.model.head_dim);
    }
    if (doc.contains("sampler")) {
      const json& s = doc.at("sampler");
      reject_unknown(s, {"variant", "eta", "steps", "train_steps", "schedule"}, "sampler");
      if (s.contains("variant")) {
        const auto v = s.at("variant").get<std::string>();
        if (v == "ddim") cfg.sampler.variant = SamplerVariant::kDdim;
        else if (v == "ddpm") cfg.sampler.variant = SamplerVariant::kDdpmAncestral;
        else throw InvalidConfig("unknown sampler variant '" + v + "'");
      }
      read(s, "eta", cfg.sampler.eta);
      read(s, "steps", cfg.sampler.steps);
      read(s, "train_steps", cfg.sampler.train_steps);
      if (s.contains("schedule")) {
        const auto v = s.at("schedule").get<std::string>();
        if (v == "linear") cfg.sampler.schedule = ScheduleVariant::kLinear;
        else if (v == "scaled_linear") cfg.sampler.schedule = ScheduleVariant::kScaledLinear;
        else throw InvalidConfig("unknown schedule '" + v + "'");
      }
    }
    if (doc.contains("guidance")) {
      const json& g = doc.at("guidance");
      reject_unknown(g, {"scale", "enabled"}, "guidance");
      read(g, "scale", cfg.guidance.scale);
      read(g, "enabled", cfg.guidance.enabled);
    }
    read(doc, "devices", cfg.devices);
    if (doc.contains("scheme")) cfg.scheme = parse_scheme(doc.at("scheme").get<std::string>());
    if (doc.contains("partial") && !doc.at("partial").is_null()) cfg.partial = doc.at("partial").get<double>();
    read(doc, "warmup_steps", cfg.warmup_steps);
    read(doc, "policy", cfg.policy);
    read(doc, "seed", cfg.seed);
    read(doc, "prompt_id", cfg.prompt_id);
    read(doc, "output_dir", cfg.output_dir);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("config has a field of the wrong type: ") + e.what());
  }
  cfg.sampler.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const RunConfig& cfg) {
  json doc;
  doc["schema_version"] = kConfigSchemaVersion;
  doc["model"] = {{"height", cfg.model.height}, {"width", cfg.model.width},   {"channels", cfg.model.channels},
                  {"blocks", cfg.model.blocks}, {"groups", cfg.model.groups}, {"heads", cfg.model.heads},
                  {"head_dim", cfg.model.head_dim}};
  doc["sampler"] = {{"variant", sampler_variant_name(cfg.sampler.variant)},
                    {"eta", cfg.sampler.eta},
                    {"steps", cfg.sampler.steps},
                    {"train_steps", cfg.sampler.train_steps},
                    {"schedule", schedule_variant_name(cfg.sampler.schedule)}};
  doc["guidance"] = {{"scale", cfg.guidance.scale}, {"enabled", cfg.guidance.enabled}};
  doc["devices"] = cfg.devices;
  doc["scheme"] = scheme_name(cfg.scheme);
  doc["partial"] = cfg.partial ? json(*cfg.partial) : json(nullptr);
  doc["warmup_steps"] = cfg.warmup_steps;
  doc["policy"] = cfg.policy;
  doc["seed"] = cfg.seed;
  doc["prompt_id"] = cfg.prompt_id;
  doc["output_dir"] = cfg.output_dir;
  return doc.dump(2) + "\n";
}

}  // namespace pcpp
