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

#include "cmarr/trainer/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cmarr/alignment/alignment.hpp"
#include "cmarr/error.hpp"
#include "cmarr/flow/flow.hpp"
#include "cmarr/numcore/ops.hpp"
#include "cmarr/refine_fuse/refine_fuse.hpp"

namespace cmarr {

namespace {

std::string with_modality(const char* stem, Modality m) {
  return std::string(stem) + "." + short_name(m);
}

bool uses_alignment(const TrainConfig& c) { return c.effective_alpha() > 0.0; }

Var adapted_projection(Graph& g, Model& model, const Instance& instance, Modality m) {
  Var adapted = adapter_forward(g, model.store, m, g.constant(instance.feature(m)));
  return project_modality(g, model.store, with_modality("proj", m), model.config.flow, adapted);
}

}  // namespace

Model init_model(const TrainConfig& config, std::size_t num_classes,
                 std::array<std::size_t, 3> dims) {
  config.validate();
  Model model;
  model.config = config;
  model.num_classes = num_classes;
  model.dims = dims;
  Rng rng(config.seed);
  ParamStore& s = model.store;
  for (Modality m : kAllModalities) {
    init_adapter(s, m, dims[index_of(m)], config.umc.width, rng);
    init_projection(s, with_modality("proj", m), config.umc.width, config.flow, rng);
  }
  if (uses_alignment(config)) {
    init_umc(s, config.umc, rng);
    init_alignment_scalars(s);
  }
  if (!config.baseline) {
    for (Modality m : kAllModalities) {
      init_flow(s, with_modality("flow", m), config.flow, rng);
      init_refiner(s, with_modality("refine", m), config.flow, rng);
    }
  }
  const FusionSpec fs = model.fusion();
  init_fusion(s, fs, rng);
  init_classifier(s, fs, rng);
  return model;
}

FrozenProjections frozen_projections(Model& model, const Instance& instance) {
  Graph g(false);
  FrozenProjections out;
  for (Modality m : kAllModalities) {
    out[index_of(m)] = adapted_projection(g, model, instance, m).value();
  }
  return out;
}

std::vector<FrozenProjections> frozen_projections(Model& model, const Dataset& dataset,
                                                  const Batch& batch) {
  std::vector<FrozenProjections> out;
  for (std::size_t idx : batch.indices) {
    out.push_back(frozen_projections(model, dataset.instances[idx]));
  }
  return out;
}

InstancePass run_instance(Graph& g, Model& model, const Instance& instance, ModalityMask mask,
                          const FrozenProjections* frozen) {
  const TrainConfig& c = model.config;
  InstancePass pass;
  std::map<Modality, Var> latents;
  for (Modality m : mask.available()) {
    const std::size_t i = index_of(m);
    pass.projected[i] = adapted_projection(g, model, instance, m);
    pass.final[i] = pass.projected[i];
    if (c.baseline) continue;
    Var flow_in = g.constant(frozen ? (*frozen)[i] : pass.projected[i].value());
    FlowOutput f = flow_forward(g, model.store, with_modality("flow", m), c.flow, flow_in);
    pass.latent[i] = f.latent;
    pass.logdet[i] = f.logdet;
    latents.emplace(m, f.latent);
  }
  for (Modality m : mask.missing()) {
    const std::size_t i = index_of(m);
    if (c.baseline) {
      pass.final[i] = g.constant(Tensor::matrix(c.flow.length, c.flow.channels));
      continue;
    }
    Var z = latent_transfer(latents, m);
    Var x = flow_inverse(g, model.store, with_modality("flow", m), c.flow, z);
    pass.final[i] = refine_reconstruction(g, model.store, with_modality("refine", m), c.flow, x);
  }
  return pass;
}

LossTerms forward_losses(Graph& g, Model& model, const Dataset& dataset, const Batch& batch,
                         const std::vector<FrozenProjections>* frozen) {
  const TrainConfig& c = model.config;
  const std::size_t n = batch.indices.size();
  if (n < 2) throw ArgumentError("training batch needs at least 2 instances");
  if (batch.masks.size() != n) throw ArgumentError("training batch needs one mask per instance");
  std::vector<FrozenProjections> own;
  if (frozen == nullptr && !c.baseline) {
    own = frozen_projections(model, dataset, batch);
    frozen = &own;
  }
  if (frozen != nullptr && frozen->size() != n) {
    throw ArgumentError("forward_losses: one frozen projection set per instance required");
  }
  LossTerms terms;

  if (uses_alignment(c)) {
    std::array<std::vector<Var>, 3> mus, vars;
    for (std::size_t idx : batch.indices) {
      for (Modality m : kAllModalities) {
        Var adapted =
            adapter_forward(g, model.store, m, g.constant(dataset.instances[idx].feature(m)));
        GaussianVars e = umc_forward(g, model.store, c.umc, adapted);
        mus[index_of(m)].push_back(e.mu);
        vars[index_of(m)].push_back(e.var);
      }
    }
    auto gaussians = [&](Modality m) {
      return GaussianVars{concat_rows(mus[index_of(m)]), concat_rows(vars[index_of(m)])};
    };
    const GaussianVars s = gaussians(Modality::kSpeech), v = gaussians(Modality::kVideo),
                       t = gaussians(Modality::kText);
    Var tau = temperature(g, model.store);
    if (c.point_alignment) {
      terms.udcl = point_infonce_pair_loss(s.mu, t.mu, tau) +
                   point_infonce_pair_loss(t.mu, v.mu, tau) +
                   point_infonce_pair_loss(s.mu, v.mu, tau);
    } else {
      terms.udcl = udcl_loss(s, v, t, tau, negative_scale(g, model.store), shift(g, model.store));
    }
  }

  std::vector<Var> pooled, fused, rec_terms, nll_terms;
  std::vector<std::size_t> pool_labels, pool_ids, labels;
  const FusionSpec fs = model.fusion();
  for (std::size_t b = 0; b < n; ++b) {
    const Instance& inst = dataset.instances[batch.indices[b]];
    const ModalityMask mask = c.baseline ? ModalityMask::full() : batch.masks[b];
    const FrozenProjections* fixed = frozen ? &(*frozen)[b] : nullptr;
    InstancePass pass = run_instance(g, model, inst, mask, fixed);
    for (Modality m : mask.available()) {
      if (pass.latent[index_of(m)].valid()) {
        nll_terms.push_back(flow_nll(pass.latent[index_of(m)], pass.logdet[index_of(m)]));
      }
    }
    for (Modality m : mask.missing()) {
      Var target = g.constant((*fixed)[index_of(m)]);
      rec_terms.push_back(rec_loss(pass.final[index_of(m)], target));
    }
    for (Modality m : kAllModalities) {
      pooled.push_back(mean_rows(pass.final[index_of(m)]));
      pool_labels.push_back(inst.label);
      pool_ids.push_back(b);
    }
    fused.push_back(fuse(g, model.store, fs, pass.final[index_of(Modality::kText)],
                         pass.final[index_of(Modality::kSpeech)],
                         pass.final[index_of(Modality::kVideo)]));
    labels.push_back(inst.label);
  }

  auto mean_of = [&](const std::vector<Var>& xs) {
    Var acc = xs.front();
    for (std::size_t i = 1; i < xs.size(); ++i) acc = acc + xs[i];
    return scale(acc, 1.0 / static_cast<double>(xs.size()));
  };
  if (!nll_terms.empty()) terms.nll = mean_of(nll_terms);
  if (!c.baseline) {
    // Summed over each instance's missing modalities, averaged over all instances.
    Var rec = g.constant(Tensor::scalar(0.0));
    for (Var r : rec_terms) rec = rec + r;
    terms.rec = scale(rec, 1.0 / static_cast<double>(n));
  }
  // A batch whose labels are all distinct offers no positive pair.
  std::vector<std::size_t> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  const bool has_positive = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  if (c.effective_beta() > 0.0 && has_positive) {
    terms.spcl = spcl_loss(concat_rows(pooled), pool_labels, pool_ids, c.tau2).loss;
  }
  terms.cls = cls_loss(classify(g, model.store, concat_rows(fused)), labels);
  return terms;
}

Var total_loss(const LossTerms& terms, const TrainConfig& config) {
  if (!terms.cls.valid()) throw ArgumentError("total_loss: classification term is required");
  const std::array<std::pair<const char*, Var>, 5> named = {{{"l_udcl", terms.udcl},
                                                             {"l_spcl", terms.spcl},
                                                             {"l_rec", terms.rec},
                                                             {"l_cls", terms.cls},
                                                             {"l_nll", terms.nll}}};
  for (const auto& [name, term] : named) {
    if (term.valid() && !term.value().all_finite()) {
      throw NumericError(std::string("total_loss: component ") + name + " is not finite");
    }
  }
  const std::array<std::pair<Var, double>, 4> weighted = {{{terms.udcl, config.effective_alpha()},
                                                           {terms.spcl, config.effective_beta()},
                                                           {terms.rec, config.effective_lambda()},
                                                           {terms.nll, config.effective_gamma()}}};
  Var total = terms.cls;
  for (const auto& [term, weight] : weighted) {
    if (term.valid() && weight != 0.0) total = total + scale(term, weight);
  }
  return total;
}

double total_loss(const LossValues& v, const TrainConfig& config) {
  const std::array<std::pair<const char*, double>, 5> parts = {
      {{"l_udcl", v.udcl}, {"l_spcl", v.spcl}, {"l_rec", v.rec}, {"l_cls", v.cls}, {"l_nll", v.nll}}};
  for (const auto& [name, value] : parts) {
    if (!std::isfinite(value)) {
      throw NumericError(std::string("total_loss: component ") + name + " is not finite");
    }
  }
  double total = v.cls;
  if (config.effective_alpha() != 0.0) total += config.effective_alpha() * v.udcl;
  if (config.effective_beta() != 0.0) total += config.effective_beta() * v.spcl;
  if (config.effective_lambda() != 0.0) total += config.effective_lambda() * v.rec;
  if (config.effective_gamma() != 0.0) total += config.effective_gamma() * v.nll;
  return total;
}

LossValues loss_values(const LossTerms& terms, Var total) {
  auto value = [](Var v) { return v.valid() ? v.value()[0] : 0.0; };
  return {value(terms.udcl), value(terms.spcl), value(terms.rec),
          value(terms.cls),  value(terms.nll),  value(total)};
}

Tensor predict_logits(Model& model, const Dataset& dataset, std::span<const std::size_t> indices,
                      std::span<const ModalityMask> masks) {
  if (masks.size() != indices.size()) throw ArgumentError("predict: one mask per instance");
  const FusionSpec fs = model.fusion();
  Tensor out = Tensor::matrix(indices.size(), model.num_classes);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    Graph g(false);
    InstancePass pass = run_instance(g, model, dataset.instances[indices[r]], masks[r]);
    Var h = fuse(g, model.store, fs, pass.final[index_of(Modality::kText)],
                 pass.final[index_of(Modality::kSpeech)], pass.final[index_of(Modality::kVideo)]);
    const Tensor logits = classify(g, model.store, h).value();
    for (std::size_t c = 0; c < model.num_classes; ++c) out(r, c) = logits[c];
  }
  return out;
}

std::vector<std::size_t> predict(Model& model, const Dataset& dataset,
                                 std::span<const std::size_t> indices, ModalityMask mask) {
  const std::vector<ModalityMask> masks(indices.size(), mask);
  const Tensor logits = predict_logits(model, dataset, indices, masks);
  std::vector<std::size_t> out(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    out[r] = best;
  }
  return out;
}

}  // namespace cmarr
