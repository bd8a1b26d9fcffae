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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"

#include "cmarr/error.hpp"
#include "cmarr/numcore/grad_check.hpp"
#include "cmarr/trainer/trainer.hpp"
#include "test_util.hpp"
#include "tiny_config.hpp"

using namespace cmarr;
using cmarr::testing::tiny_config;

namespace {

Dataset tiny_data(const TrainConfig& c) { return generate_synthetic(c.data, 3); }

Batch mixed_batch() {
  Batch b;
  b.indices = {0, 11, 4, 17};
  b.masks = {ModalityMask({Modality::kSpeech}), ModalityMask({Modality::kVideo, Modality::kText}),
             ModalityMask::full(), ModalityMask({Modality::kSpeech, Modality::kText})};
  return b;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cmarr_trainer_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config text parsing") {
  TrainConfig c = parse_config("alpha = 0.5  # udcl weight\n\nepochs=3\nmissing_policy = uniform6\n");
  CHECK(c.alpha == 0.5);
  CHECK(c.epochs == 3);
  CHECK(c.missing_policy.kind == MissingPolicy::Kind::kUniformProper);
  CHECK(c.beta == TrainConfig{}.beta);

  CHECK_THROWS_AS(parse_config("alpah = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("alpha 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("alpha = x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("alpha = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs = 0\n"), ConfigError);

  TrainConfig d = tiny_config();
  d.point_alignment = true;
  d.missing_policy = MissingPolicy::parse("fixed:{s,t}");
  d.learning_rate = 0.1 + 0.2;
  const std::string text = config_to_text(d);
  CHECK(config_to_text(parse_config(text)) == text);
  CHECK(config_hash(parse_config(text)) == config_hash(d));
  CHECK(config_hash(d).size() == 16);
  d.gamma = 0.5;
  CHECK(config_hash(d) != config_hash(parse_config(text)));
}

TEST_CASE("total_loss examples") {
  TrainConfig c;
  c.alpha = 1.0;
  c.beta = 0.1;
  c.lambda = 10.0;
  c.gamma = 0.0;
  LossValues ones{1, 1, 1, 1, 1, 0};
  CHECK(total_loss(ones, c) == 12.1);

  TrainConfig zero = c;
  zero.alpha = zero.beta = zero.lambda = zero.gamma = 0.0;
  CHECK(total_loss(LossValues{3, 4, 5, 0.7, 9, 0}, zero) == 0.7);
  CHECK(total_loss(LossValues{}, c) == 0.0);

  Graph g;
  auto k = [&](double v) { return g.constant(Tensor::scalar(v)); };
  LossTerms terms{k(1), k(1), k(1), k(1), k(1)};
  CHECK(total_loss(terms, c).value()[0] == 12.1);

  for (int bad = 0; bad < 5; ++bad) {
    LossValues v = ones;
    double* parts[] = {&v.udcl, &v.spcl, &v.rec, &v.cls, &v.nll};
    const char* names[] = {"l_udcl", "l_spcl", "l_rec", "l_cls", "l_nll"};
    *parts[bad] = std::numeric_limits<double>::quiet_NaN();
    try {
      total_loss(v, c);
      FAIL("non-finite component accepted");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find(names[bad]) != std::string::npos);
    }
  }
  LossTerms inf_terms = terms;
  inf_terms.rec = k(std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(total_loss(inf_terms, c), NumericError);
}

TEST_CASE("effective weights follow the ablation switches") {
  TrainConfig c;
  c.disable_udcl = true;
  CHECK(c.effective_alpha() == 0.0);
  CHECK(c.effective_beta() == c.beta);
  c = TrainConfig{};
  c.baseline = true;
  CHECK(c.effective_alpha() == 0.0);
  CHECK(c.effective_beta() == 0.0);
  CHECK(c.effective_lambda() == 0.0);
  CHECK(c.effective_gamma() == 0.0);
}

TEST_CASE("full-modality batches reconstruct nothing") {
  const TrainConfig c = tiny_config();
  const Dataset ds = tiny_data(c);
  Model model = init_model(c, ds.num_classes(), ds.dims);
  Batch b = mixed_batch();
  b.masks.assign(4, ModalityMask::full());
  Graph g;
  const LossTerms t = forward_losses(g, model, ds, b);
  CHECK(t.rec.value()[0] == 0.0);
  CHECK(t.udcl.valid());
  CHECK(t.spcl.valid());
  CHECK(t.nll.valid());

  Batch one = b;
  one.indices.resize(1);
  one.masks.erase(one.masks.begin() + 1, one.masks.end());
  CHECK_THROWS_AS(forward_losses(g, model, ds, one), ArgumentError);

  // Distinct labels leave the refinement term out rather than failing.
  Batch distinct;
  distinct.indices = {0, 19};
  distinct.masks.assign(2, ModalityMask::full());
  REQUIRE(ds.instances[0].label != ds.instances[19].label);
  CHECK_FALSE(forward_losses(g, model, ds, distinct).spcl.valid());
}

TEST_CASE("missing features never reach the prediction path") {
  const TrainConfig c = tiny_config();
  Dataset ds = tiny_data(c);
  Model model = init_model(c, ds.num_classes(), ds.dims);
  const std::vector<std::size_t> idx = {2};
  const std::vector<ModalityMask> mask = {ModalityMask({Modality::kSpeech, Modality::kVideo})};
  const Tensor before = predict_logits(model, ds, idx, mask);
  for (double& v : ds.instances[2].features[index_of(Modality::kText)].data()) v = 1e6;
  CHECK(predict_logits(model, ds, idx, mask) == before);
}

TEST_CASE("train_step is deterministic") {
  const TrainConfig c = tiny_config();
  const Dataset ds = tiny_data(c);
  Model a = init_model(c, ds.num_classes(), ds.dims);
  Model b = init_model(c, ds.num_classes(), ds.dims);
  Adam oa(c.learning_rate, c.weight_decay), ob(c.learning_rate, c.weight_decay);
  for (int i = 0; i < 2; ++i) {
    const LossValues va = train_step(a, oa, ds, mixed_batch());
    const LossValues vb = train_step(b, ob, ds, mixed_batch());
    CHECK(va.total == vb.total);
  }
  CHECK(a.store.values_equal(b.store));
}

TEST_CASE("alpha = 0 isolates the uncertainty heads") {
  TrainConfig c = tiny_config();
  const Dataset ds = tiny_data(c);
  Model model = init_model(c, ds.num_classes(), ds.dims);
  REQUIRE(model.store.contains("umc.mu.w"));
  model.config.alpha = 0.0;
  model.store.zero_grad();
  Graph g;
  const LossTerms terms = forward_losses(g, model, ds, mixed_batch());
  CHECK_FALSE(terms.udcl.valid());
  g.backward(total_loss(terms, model.config));
  std::size_t checked = 0;
  for (const auto& [name, entry] : model.store.entries()) {
    if (!name.starts_with("umc.") && !name.starts_with("align.")) continue;
    for (double v : entry.grad.data()) CHECK(v == 0.0);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("total_loss gradient is the weighted sum of component gradients") {
  TrainConfig c = tiny_config();
  const Dataset ds = tiny_data(c);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> w(0.05, 3.0);
  c.alpha = w(rng);
  c.beta = w(rng);
  c.lambda = w(rng);
  c.gamma = w(rng);
  Model model = init_model(c, ds.num_classes(), ds.dims);
  const Batch batch = mixed_batch();
  const auto frozen = frozen_projections(model, ds, batch);

  auto grads_of = [&](auto pick) {
    model.store.zero_grad();
    Graph g;
    const LossTerms t = forward_losses(g, model, ds, batch, &frozen);
    g.backward(pick(t));
    std::map<std::string, Tensor> out;
    for (const auto& [name, e] : model.store.entries()) out.emplace(name, e.grad);
    return out;
  };
  const auto total = grads_of([&](const LossTerms& t) { return total_loss(t, c); });
  const std::array<std::pair<double, Var LossTerms::*>, 5> parts = {{{c.alpha, &LossTerms::udcl},
                                                                     {c.beta, &LossTerms::spcl},
                                                                     {c.lambda, &LossTerms::rec},
                                                                     {1.0, &LossTerms::cls},
                                                                     {c.gamma, &LossTerms::nll}}};
  std::map<std::string, Tensor> sum, magnitude;
  for (const auto& [weight, member] : parts) {
    const auto part = grads_of([&](const LossTerms& t) { return t.*member; });
    for (const auto& [name, grad] : part) {
      Tensor& acc = sum.try_emplace(name, Tensor(grad.shape(), 0.0)).first->second;
      Tensor& mag = magnitude.try_emplace(name, Tensor(grad.shape(), 0.0)).first->second;
      for (std::size_t i = 0; i < grad.size(); ++i) {
        acc[i] += weight * grad[i];
        mag[i] += std::abs(weight * grad[i]);
      }
    }
  }
  // Exact-zero gradients carry round-off only, so the floor is a global scale.
  double scale = 0.0;
  for (const auto& [name, mag] : magnitude)
    for (double m : mag.data()) scale = std::max(scale, m);
  double worst = 0.0;
  for (const auto& [name, grad] : total) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double err = std::abs(grad[i] - sum.at(name)[i]);
      worst = std::max(worst, err / std::max(magnitude.at(name)[i], 1e-6 * scale));
    }
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("composite objective gradient check") {
  TrainConfig c = tiny_config();
  c.alpha = 1.0;
  c.beta = 0.5;
  c.lambda = 2.0;
  c.gamma = 0.3;
  const Dataset ds = tiny_data(c);
  Model model = init_model(c, ds.num_classes(), ds.dims);
  const Batch batch = mixed_batch();
  const auto frozen = frozen_projections(model, ds, batch);
  auto loss = [&](Graph& g, ParamStore&) {
    return total_loss(forward_losses(g, model, ds, batch, &frozen), c);
  };
  const GradCheckReport report = grad_check(loss, model.store);
  INFO("worst " << report.worst()->name);
  CHECK(report.max_rel_error() < 1e-4);
}

TEST_CASE("adam decays only weight matrices") {
  ParamStore s;
  s.add("a.w", Tensor::from_rows({{2.0}}));
  s.add("a.b", Tensor::from_rows({{2.0}}));
  Adam opt(0.1, 0.5);
  s.zero_grad();
  opt.step(s);
  CHECK(s.value("a.w")[0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0).epsilon(1e-14));
  CHECK(s.value("a.b")[0] == 2.0);
}

TEST_CASE("one-epoch smoke run writes a loadable checkpoint") {
  const TrainConfig c = tiny_config();
  const Dataset ds = tiny_data(c);
  REQUIRE(ds.size() == 20);
  const std::string ck = temp_path("smoke.json"), log = temp_path("smoke.tsv");
  TrainOptions opts;
  opts.checkpoint_path = ck;
  opts.log_path = log;
  const TrainResult r = train(c, ds, opts);
  REQUIRE(r.log.size() == 1);
  Checkpoint loaded = load_checkpoint(ck);
  CHECK(loaded.epoch == 1);
  CHECK(loaded.model.store.values_equal(r.best.model.store));
  CHECK(config_hash(loaded.model.config) == config_hash(c));
  CHECK(loaded.optimizer.steps() == r.best.optimizer.steps());

  std::istringstream lines(slurp(log));
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == log_header());
  CHECK(std::count(row.begin(), row.end(), '\t') == 8);

  // Probe outputs survive the round trip bitwise.
  Checkpoint best = r.best;
  const std::vector<std::size_t> probe = {0, 5, 13};
  for (ModalityMask m : {ModalityMask::full(), ModalityMask({Modality::kVideo})}) {
    const std::vector<ModalityMask> masks(probe.size(), m);
    CHECK(predict_logits(loaded.model, ds, probe, masks) ==
          predict_logits(best.model, ds, probe, masks));
  }

  // Resuming from the loaded optimizer matches resuming from memory.
  Batch b = mixed_batch();
  train_step(best.model, best.optimizer, ds, b);
  train_step(loaded.model, loaded.optimizer, ds, b);
  CHECK(best.model.store.values_equal(loaded.model.store));

  std::filesystem::remove(ck);
  std::filesystem::remove(log);
}

TEST_CASE("corrupted checkpoints are rejected") {
  const TrainConfig c = tiny_config();
  const Dataset ds = tiny_data(c);
  Checkpoint ck;
  ck.model = init_model(c, ds.num_classes(), ds.dims);
  const std::string path = temp_path("corrupt.json");
  save_checkpoint(ck, path);
  const std::string good = slurp(path);

  auto rewrite = [&](const std::string& text) {
    std::ofstream(path, std::ios::trunc) << text;
  };
  std::string tampered = good;
  const std::size_t at = tampered.find("\"config_hash\": \"") + 16;
  tampered[at] = tampered[at] == '0' ? '1' : '0';
  rewrite(tampered);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  rewrite(good.substr(0, good.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  rewrite("{\"format\": \"other\", \"version\": 1}");
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}

TEST_CASE("training is reproducible and reduces the loss") {
  TrainConfig c;
  c.epochs = 5;
  const Dataset ds = generate_synthetic(c.data, c.data_seed);
  const std::string log_a = temp_path("a.tsv"), log_b = temp_path("b.tsv");
  TrainOptions a, b;
  a.log_path = log_a;
  b.log_path = log_b;
  const TrainResult ra = train(c, ds, a);
  train(c, ds, b);
  CHECK(slurp(log_a) == slurp(log_b));
  CHECK(ra.log.back().losses.total < ra.log.front().losses.total);
  std::filesystem::remove(log_a);
  std::filesystem::remove(log_b);
}

TEST_CASE("shipped default config matches the built-in defaults") {
  const TrainConfig shipped = load_config(std::string(CMARR_CONFIG_DIR) + "/default.cfg");
  CHECK(config_to_text(shipped) == config_to_text(TrainConfig{}));
}
