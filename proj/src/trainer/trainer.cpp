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

#include "cmarr/trainer/trainer.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cmarr/alignment/alignment.hpp"
#include "cmarr/error.hpp"
#include "cmarr/evalcli/metrics.hpp"

namespace cmarr {

namespace {

using nlohmann::json;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

json tensor_to_json(const Tensor& t) {
  json data = json::array();
  for (double v : t.data()) data.push_back(hex(v));
  return {{"shape", t.shape()}, {"data", std::move(data)}};
}

Tensor tensor_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    throw FormatError("checkpoint: tensor " + where + " lacks shape or data");
  }
  std::vector<std::size_t> shape = j.at("shape").get<std::vector<std::size_t>>();
  std::vector<double> data;
  for (const json& v : j.at("data")) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) {
      throw FormatError("checkpoint: tensor " + where + " has a malformed value '" + s + "'");
    }
    data.push_back(d);
  }
  try {
    return Tensor(std::move(shape), std::move(data));
  } catch (const Error& e) {
    throw FormatError("checkpoint: tensor " + where + ": " + e.what());
  }
}

json tensors_to_json(const std::map<std::string, Tensor>& tensors) {
  json out = json::object();
  for (const auto& [name, t] : tensors) out[name] = tensor_to_json(t);
  return out;
}

std::map<std::string, Tensor> tensors_from_json(const json& j) {
  std::map<std::string, Tensor> out;
  for (const auto& [name, t] : j.items()) out.emplace(name, tensor_from_json(t, name));
  return out;
}

std::uint64_t batch_seed(const TrainConfig& config, std::size_t epoch) {
  return config.seed * 1000003ULL + epoch;
}

double mean_or_zero(double sum, std::size_t n) { return n == 0 ? 0.0 : sum / static_cast<double>(n); }

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const Model& model = checkpoint.model;
  json params = json::object();
  for (const auto& [name, entry] : model.store.entries()) params[name] = tensor_to_json(entry.value);
  std::ostringstream rng;
  rng << checkpoint.mask_rng;
  const json doc = {
      {"format", "cmarr-checkpoint"},
      {"version", 1},
      {"config", config_to_text(model.config)},
      {"config_hash", config_hash(model.config)},
      {"num_classes", model.num_classes},
      {"dims", model.dims},
      {"epoch", checkpoint.epoch},
      {"rng", rng.str()},
      {"adam",
       {{"steps", checkpoint.optimizer.steps()},
        {"first", tensors_to_json(checkpoint.optimizer.first_moments())},
        {"second", tensors_to_json(checkpoint.optimizer.second_moments())}}},
      {"params", std::move(params)},
  };
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path);
    out << doc.dump(1) << '\n';
    if (!out) throw IoError("failed writing checkpoint " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  try {
    if (doc.at("format") != "cmarr-checkpoint" || doc.at("version") != 1) {
      throw FormatError("checkpoint " + path + " has an unknown format or version");
    }
    Checkpoint ck;
    ck.model.config = parse_config(doc.at("config").get<std::string>());
    if (config_hash(ck.model.config) != doc.at("config_hash").get<std::string>()) {
      throw FormatError("checkpoint " + path + " config hash does not match its config");
    }
    ck.model.num_classes = doc.at("num_classes").get<std::size_t>();
    ck.model.dims = doc.at("dims").get<std::array<std::size_t, 3>>();
    for (auto& [name, t] : tensors_from_json(doc.at("params"))) ck.model.store.add(name, std::move(t));
    ck.epoch = doc.at("epoch").get<std::size_t>();
    std::istringstream rng(doc.at("rng").get<std::string>());
    rng >> ck.mask_rng;
    if (!rng) throw FormatError("checkpoint " + path + " has a malformed RNG state");
    const json& adam = doc.at("adam");
    ck.optimizer = Adam(ck.model.config.learning_rate, ck.model.config.weight_decay);
    ck.optimizer.first_moments() = tensors_from_json(adam.at("first"));
    ck.optimizer.second_moments() = tensors_from_json(adam.at("second"));
    ck.optimizer.set_steps(adam.at("steps").get<std::uint64_t>());
    return ck;
  } catch (const json::exception& e) {
    throw FormatError("checkpoint " + path + " is missing fields: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError("checkpoint " + path + " has an invalid config: " + e.what());
  }
}

LossValues train_step(Model& model, Adam& optimizer, const Dataset& dataset, const Batch& batch) {
  model.store.zero_grad();
  Graph g;
  const LossTerms terms = forward_losses(g, model, dataset, batch);
  Var total = total_loss(terms, model.config);
  g.backward(total);
  optimizer.step(model.store);
  if (model.store.contains("align.tau")) clamp_temperature(model.store);
  return loss_values(terms, total);
}

void assign_masks(Batch& batch, const TrainConfig& config, std::mt19937_64& rng) {
  batch.masks.clear();
  for (std::size_t i = 0; i < batch.indices.size(); ++i) {
    batch.masks.push_back(config.baseline ? ModalityMask::full()
                                          : sample_missing_pattern(rng, config.missing_policy));
  }
}

Split split_for(const TrainConfig& config, const Dataset& dataset) {
  if (config.folds == 0) return stratified_split(dataset, config.seed);
  return kfold_split(dataset, config.folds, config.fold, config.seed);
}

std::string log_header() {
  return "epoch\tl_udcl\tl_spcl\tl_rec\tl_cls\tl_nll\ttotal\tval_war\tval_uar";
}

std::string log_line(const EpochRecord& r) {
  std::string out = std::to_string(r.epoch);
  for (double v : {r.losses.udcl, r.losses.spcl, r.losses.rec, r.losses.cls, r.losses.nll,
                   r.losses.total, r.val_war, r.val_uar}) {
    out += '\t' + format_value(v);
  }
  return out;
}

TrainResult train(const TrainConfig& config, const Dataset& dataset, const TrainOptions& options) {
  config.validate();
  dataset.validate();
  TrainResult result;
  result.split = split_for(config, dataset);
  if (result.split.train.size() < 2) throw ArgumentError("train: fewer than 2 training instances");

  Checkpoint state;
  state.model = init_model(config, dataset.num_classes(), dataset.dims);
  state.optimizer = Adam(config.learning_rate, config.weight_decay);
  state.mask_rng.seed(config.seed ^ 0x6a09e667f3bcc908ULL);

  std::ofstream log;
  if (!options.log_path.empty()) {
    log.open(options.log_path, std::ios::trunc);
    if (!log) throw IoError("cannot write training log " + options.log_path);
    log << log_header() << '\n';
  }

  std::vector<std::size_t> val_labels;
  for (std::size_t i : result.split.validation) val_labels.push_back(dataset.instances[i].label);

  double best_uar = -1.0;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    LossValues sum;
    std::size_t steps = 0;
    for (Batch& batch : make_batches(result.split.train, config.batch_size,
                                     batch_seed(config, epoch), true)) {
      assign_masks(batch, config, state.mask_rng);
      const LossValues v = train_step(state.model, state.optimizer, dataset, batch);
      sum.udcl += v.udcl;
      sum.spcl += v.spcl;
      sum.rec += v.rec;
      sum.cls += v.cls;
      sum.nll += v.nll;
      sum.total += v.total;
      ++steps;
      ++step;
      if (options.on_step) options.on_step(StepInfo{epoch, step, v, state.model});
    }
    state.epoch = epoch;

    EpochRecord record;
    record.epoch = epoch;
    record.losses = {mean_or_zero(sum.udcl, steps), mean_or_zero(sum.spcl, steps),
                     mean_or_zero(sum.rec, steps),  mean_or_zero(sum.cls, steps),
                     mean_or_zero(sum.nll, steps),  mean_or_zero(sum.total, steps)};
    if (!result.split.validation.empty()) {
      const auto preds =
          predict(state.model, dataset, result.split.validation, ModalityMask::full());
      record.val_war = war(preds, val_labels);
      record.val_uar = uar(preds, val_labels);
    }
    result.log.push_back(record);
    if (options.on_epoch) options.on_epoch(record);

    if (record.val_uar > best_uar) {
      best_uar = record.val_uar;
      result.best = state;
      if (!options.checkpoint_path.empty()) save_checkpoint(state, options.checkpoint_path);
    }
    if (log.is_open()) {
      log << log_line(record) << '\n' << std::flush;
      if (!log) throw IoError("failed writing training log " + options.log_path);
    }
  }
  result.last = std::move(state);
  return result;
}

}  // namespace cmarr
