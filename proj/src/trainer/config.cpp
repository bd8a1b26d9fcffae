// Copyright 2026 The cmarr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmarr/trainer/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "cmarr/error.hpp"

namespace cmarr {

namespace {

struct Field {
  std::string key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v +
                      "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Field real_at(const std::string& key, std::function<double&(TrainConfig&)> ref) {
  return {key, [ref](TrainConfig c) { return format_double(ref(c)); },
          [key, ref](TrainConfig& c, const std::string& v) { ref(c) = to_double(key, v); }};
}

template <class U>
Field uint_at(const std::string& key, std::function<U&(TrainConfig&)> ref) {
  return {key,
          [ref](TrainConfig c) { return std::to_string(ref(c)); },
          [key, ref](TrainConfig& c, const std::string& v) {
            ref(c) = static_cast<U>(to_uint(key, v));
          }};
}

Field flag_at(const std::string& key, std::function<bool&(TrainConfig&)> ref) {
  return {key,
          [ref](TrainConfig c) { return std::string(ref(c) ? "true" : "false"); },
          [key, ref](TrainConfig& c, const std::string& v) { ref(c) = to_bool(key, v); }};
}

#define CMARR_REAL(name, expr) real_at(name, [](TrainConfig& c) -> double& { return expr; })
#define CMARR_SIZE(name, expr) \
  uint_at<std::size_t>(name, [](TrainConfig& c) -> std::size_t& { return expr; })
#define CMARR_U64(name, expr) \
  uint_at<std::uint64_t>(name, [](TrainConfig& c) -> std::uint64_t& { return expr; })
#define CMARR_FLAG(name, expr) flag_at(name, [](TrainConfig& c) -> bool& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f = {
        CMARR_REAL("alpha", c.alpha),
        CMARR_REAL("beta", c.beta),
        CMARR_REAL("lambda", c.lambda),
        CMARR_REAL("gamma", c.gamma),
        CMARR_REAL("tau2", c.tau2),
        CMARR_REAL("learning_rate", c.learning_rate),
        CMARR_REAL("weight_decay", c.weight_decay),
        CMARR_SIZE("batch_size", c.batch_size),
        CMARR_SIZE("epochs", c.epochs),
        CMARR_U64("seed", c.seed),
        Field{"missing_policy",
              [](const TrainConfig& c) { return c.missing_policy.to_string(); },
              [](TrainConfig& c, const std::string& v) {
                try {
                  c.missing_policy = MissingPolicy::parse(v);
                } catch (const Error& e) {
                  throw ConfigError(std::string("config key 'missing_policy': ") + e.what());
                }
              }},
        CMARR_FLAG("disable_udcl", c.disable_udcl),
        CMARR_FLAG("disable_spcl", c.disable_spcl),
        CMARR_FLAG("no_attention", c.no_attention),
        CMARR_FLAG("point_alignment", c.point_alignment),
        CMARR_FLAG("baseline", c.baseline),
        CMARR_SIZE("folds", c.folds),
        CMARR_SIZE("fold", c.fold),
        CMARR_SIZE("adapter_width", c.umc.width),
        CMARR_SIZE("umc_hidden", c.umc.hidden),
        CMARR_SIZE("embed_dim", c.umc.embed_dim),
        CMARR_SIZE("umc_heads", c.umc.heads),
        CMARR_SIZE("channels", c.flow.channels),
        CMARR_SIZE("common_length", c.flow.length),
        CMARR_SIZE("coupling_layers", c.flow.coupling_layers),
        CMARR_SIZE("coupling_hidden", c.flow.coupling_hidden),
        CMARR_REAL("max_log_scale", c.flow.max_log_scale),
        CMARR_SIZE("refine_blocks", c.flow.refine_blocks),
        CMARR_SIZE("attention_reduction", c.flow.attention_reduction),
        CMARR_SIZE("kernel", c.flow.kernel),
        CMARR_SIZE("fusion_heads", c.fusion_heads),
        CMARR_FLAG("third_block", c.third_block),
        CMARR_FLAG("fusion_residual", c.fusion_residual),
        CMARR_SIZE("classifier_hidden", c.classifier_hidden),
        CMARR_SIZE("num_classes", c.data.num_classes),
        CMARR_SIZE("n_per_class", c.data.n_per_class),
        CMARR_SIZE("semantic_dim", c.data.semantic_dim),
        CMARR_SIZE("emotion_dim", c.data.emotion_dim),
        CMARR_REAL("noise_std", c.data.noise_std),
        CMARR_REAL("emotion_jitter", c.data.emotion_jitter),
        CMARR_U64("data_seed", c.data_seed),
    };
    for (Modality m : kAllModalities) {
      const std::size_t i = index_of(m);
      const std::string s = short_name(m);
      f.push_back(uint_at<std::size_t>(
          "dim_" + s, [i](TrainConfig& c) -> std::size_t& { return c.data.dims[i]; }));
      f.push_back(uint_at<std::size_t>(
          "length_" + s, [i](TrainConfig& c) -> std::size_t& { return c.data.lengths[i]; }));
      f.push_back(real_at("strength_" + s, [i](TrainConfig& c) -> double& {
        return c.data.modality_strengths[i];
      }));
    }
    return f;
  }();
  return table;
}

#undef CMARR_REAL
#undef CMARR_SIZE
#undef CMARR_U64
#undef CMARR_FLAG

}  // namespace

void TrainConfig::validate() const {
  for (auto [name, w] : {std::pair{"alpha", alpha}, {"beta", beta}, {"lambda", lambda},
                         {"gamma", gamma}}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError(std::string("loss weight ") + name + " must be finite and >= 0");
    }
  }
  if (!(tau2 > 0.0)) throw ConfigError("tau2 must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (folds != 0 && folds < 3) throw ConfigError("folds must be 0 or >= 3");
  if (folds != 0 && fold >= folds) throw ConfigError("fold must be below folds");
  if (flow.channels == 0 || flow.channels % 2 != 0) throw ConfigError("channels must be even");
  if (flow.length == 0) throw ConfigError("common_length must be positive");
  if (flow.kernel % 2 == 0) throw ConfigError("kernel must be odd");
  if (umc.width % umc.heads != 0) throw ConfigError("adapter_width must divide by umc_heads");
  if (flow.channels % fusion_heads != 0) throw ConfigError("channels must divide by fusion_heads");
  if (flow.channels / flow.attention_reduction == 0) {
    throw ConfigError("attention_reduction exceeds channels");
  }
}

FusionSpec TrainConfig::fusion_spec(std::size_t num_classes) const {
  FusionSpec s;
  s.channels = flow.channels;
  s.heads = fusion_heads;
  s.attention = !no_attention;
  s.third_block = third_block;
  s.residual = fusion_residual;
  s.classifier_hidden = classifier_hidden;
  s.num_classes = num_classes;
  return s;
}

void set_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    }
    set_config_value(base, key, value);
  }
  base.validate();
  return base;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_text(const TrainConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

std::string config_hash(const TrainConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cmarr
