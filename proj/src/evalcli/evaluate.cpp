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

#include "cmarr/evalcli/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "cmarr/error.hpp"
#include "cmarr/evalcli/metrics.hpp"
#include "cmarr/numcore/ops.hpp"

namespace cmarr {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ConditionRow measure(Model& model, const Dataset& dataset, std::span<const std::size_t> indices,
                     const std::vector<std::size_t>& labels, ModalityMask mask) {
  const auto preds = predict(model, dataset, indices, mask);
  return {mask.to_string(), war(preds, labels), uar(preds, labels)};
}

double squared_error(const Tensor& a, const Tensor& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return sum;
}

ConditionReport mean_reports(const std::vector<ConditionReport>& reports) {
  ConditionReport out = reports.front();
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    double w = 0.0, u = 0.0;
    for (const ConditionReport& rep : reports) {
      w += rep.rows[r].war;
      u += rep.rows[r].uar;
    }
    out.rows[r].war = w / static_cast<double>(reports.size());
    out.rows[r].uar = u / static_cast<double>(reports.size());
  }
  return out;
}

}  // namespace

const ConditionRow& ConditionReport::row(const std::string& condition) const {
  for (const ConditionRow& r : rows)
    if (r.condition == condition) return r;
  throw ArgumentError("condition report has no row " + condition);
}

ConditionReport evaluate_conditions(Model& model, const Dataset& dataset,
                                    std::span<const std::size_t> indices) {
  if (indices.empty()) throw ArgumentError("evaluate_conditions: no instances to evaluate");
  std::vector<std::size_t> labels;
  for (std::size_t i : indices) labels.push_back(dataset.instances.at(i).label);
  ConditionReport report;
  ConditionRow avg{"Avg.", 0.0, 0.0};
  for (ModalityMask mask : missing_conditions()) {
    report.rows.push_back(measure(model, dataset, indices, labels, mask));
    avg.war += report.rows.back().war;
    avg.uar += report.rows.back().uar;
  }
  avg.war /= 6.0;
  avg.uar /= 6.0;
  report.rows.push_back(avg);
  report.rows.push_back(measure(model, dataset, indices, labels, ModalityMask::full()));
  return report;
}

std::string report_to_tsv(const ConditionReport& report) {
  std::string out = "condition\twar\tuar\n";
  for (const ConditionRow& r : report.rows) out += r.condition + '\t' + num(r.war) + '\t' + num(r.uar) + '\n';
  return out;
}

ReconstructionErrors reconstruction_errors(Model& model, const Dataset& dataset,
                                           std::span<const std::size_t> indices,
                                           std::span<const std::size_t> reference) {
  if (indices.empty() || reference.empty()) {
    throw ArgumentError("reconstruction_errors: empty instance set");
  }
  const FlowSpec& f = model.config.flow;
  std::array<Tensor, 3> mean_fill;
  for (Tensor& t : mean_fill) t = Tensor::matrix(f.length, f.channels);
  for (std::size_t i : reference) {
    const FrozenProjections p = frozen_projections(model, dataset.instances.at(i));
    for (std::size_t m = 0; m < 3; ++m)
      for (std::size_t k = 0; k < p[m].size(); ++k) mean_fill[m][k] += p[m][k];
  }
  for (Tensor& t : mean_fill)
    for (double& v : t.data()) v /= static_cast<double>(reference.size());

  ReconstructionErrors err;
  std::size_t count = 0;
  for (std::size_t i : indices) {
    const Instance& inst = dataset.instances.at(i);
    const FrozenProjections truth = frozen_projections(model, inst);
    for (ModalityMask mask : missing_conditions()) {
      Graph g(false);
      const InstancePass pass = run_instance(g, model, inst, mask);
      for (Modality m : mask.missing()) {
        const Tensor& target = truth[index_of(m)];
        err.model += squared_error(pass.final[index_of(m)].value(), target);
        err.zero_fill += squared_error(Tensor(target.shape(), 0.0), target);
        err.mean_fill += squared_error(mean_fill[index_of(m)], target);
        count += target.size();
      }
    }
  }
  err.model /= static_cast<double>(count);
  err.zero_fill /= static_cast<double>(count);
  err.mean_fill /= static_cast<double>(count);
  return err;
}

const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> kVariants = {
      "full", "w/o L_udcl", "w/o L_spcl", "w/o attention", "w/ Point", "Baseline"};
  return kVariants;
}

TrainConfig variant_config(const TrainConfig& base, const std::string& variant) {
  TrainConfig c = base;
  if (variant == "full") return c;
  if (variant == "w/o L_udcl") c.disable_udcl = true;
  else if (variant == "w/o L_spcl") c.disable_spcl = true;
  else if (variant == "w/o attention") c.no_attention = true;
  else if (variant == "w/ Point") c.point_alignment = true;
  else if (variant == "Baseline") c.baseline = true;
  else throw ArgumentError("unknown ablation variant '" + variant + "'");
  return c;
}

RunOutcome train_and_evaluate(const TrainConfig& config, const Dataset& dataset) {
  const std::size_t runs = config.folds == 0 ? 1 : config.folds;
  std::vector<ConditionReport> reports;
  ReconstructionErrors rec;
  for (std::size_t fold = 0; fold < runs; ++fold) {
    TrainConfig c = config;
    if (config.folds != 0) c.fold = fold;
    TrainResult result = train(c, dataset);
    Model& model = result.best.model;
    reports.push_back(evaluate_conditions(model, dataset, result.split.test));
    const ReconstructionErrors e =
        reconstruction_errors(model, dataset, result.split.test, result.split.train);
    rec.model += e.model / static_cast<double>(runs);
    rec.zero_fill += e.zero_fill / static_cast<double>(runs);
    rec.mean_fill += e.mean_fill / static_cast<double>(runs);
  }
  return {mean_reports(reports), rec};
}

std::vector<AblationRow> run_ablation(const TrainConfig& config, const Dataset& dataset,
                                      std::size_t seeds) {
  if (seeds == 0) throw ArgumentError("run_ablation: at least one seed required");
  std::vector<AblationRow> rows;
  for (const std::string& variant : ablation_variants()) {
    for (std::size_t k = 0; k < seeds; ++k) {
      TrainConfig c = variant_config(config, variant);
      c.seed = config.seed + k;
      const RunOutcome out = train_and_evaluate(c, dataset);
      rows.push_back({variant, c.seed, out.report.average().war, out.report.average().uar,
                      out.report.full().war, out.report.full().uar, out.reconstruction});
    }
  }
  return rows;
}

std::vector<AblationRow> mean_by_variant(const std::vector<AblationRow>& rows) {
  std::vector<AblationRow> out;
  std::map<std::string, std::size_t> position;
  std::vector<std::size_t> counts;
  for (const AblationRow& r : rows) {
    auto [it, fresh] = position.try_emplace(r.variant, out.size());
    if (fresh) {
      out.emplace_back();
      out.back().variant = r.variant;
      counts.push_back(0);
    }
    AblationRow& acc = out[it->second];
    acc.avg_war += r.avg_war;
    acc.avg_uar += r.avg_uar;
    acc.full_war += r.full_war;
    acc.full_uar += r.full_uar;
    acc.reconstruction.model += r.reconstruction.model;
    acc.reconstruction.zero_fill += r.reconstruction.zero_fill;
    acc.reconstruction.mean_fill += r.reconstruction.mean_fill;
    ++counts[it->second];
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double n = static_cast<double>(counts[i]);
    AblationRow& r = out[i];
    r.seed = counts[i];
    r.avg_war /= n;
    r.avg_uar /= n;
    r.full_war /= n;
    r.full_uar /= n;
    r.reconstruction.model /= n;
    r.reconstruction.zero_fill /= n;
    r.reconstruction.mean_fill /= n;
  }
  return out;
}

std::string ablation_to_tsv(const std::vector<AblationRow>& rows, const std::string& seed_column) {
  std::string out = "variant\t" + seed_column +
                    "\tavg_war\tavg_uar\tfull_war\tfull_uar\trec_model\trec_zero_fill\trec_mean_fill\n";
  for (const AblationRow& r : rows) {
    out += r.variant + '\t' + std::to_string(r.seed);
    for (double v : {r.avg_war, r.avg_uar, r.full_war, r.full_uar, r.reconstruction.model,
                     r.reconstruction.zero_fill, r.reconstruction.mean_fill}) {
      out += '\t' + num(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<SweepRow> run_sweep(const TrainConfig& config, const Dataset& dataset,
                                const std::string& param, std::span<const double> values) {
  if (param != "alpha" && param != "beta" && param != "lambda" && param != "gamma") {
    throw ArgumentError("sweep parameter must be alpha, beta, lambda or gamma, not '" + param + "'");
  }
  if (values.empty()) throw ArgumentError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (double v : values) {
    TrainConfig c = config;
    set_config_value(c, param, num(v));
    const RunOutcome out = train_and_evaluate(c, dataset);
    rows.push_back({param, v, out.report.average().war, out.report.average().uar,
                    out.report.full().war, out.report.full().uar});
  }
  return rows;
}

std::string sweep_to_tsv(const std::vector<SweepRow>& rows) {
  std::string out = "param\tvalue\tavg_war\tavg_uar\tfull_war\tfull_uar\n";
  for (const SweepRow& r : rows) {
    out += r.param;
    for (double v : {r.value, r.avg_war, r.avg_uar, r.full_war, r.full_uar}) out += '\t' + num(v);
    out += '\n';
  }
  return out;
}

namespace {

struct PooledPair {
  Tensor reconstructed, ground_truth;
};

// Pooled vectors of modality m: recovered from the other two, and projected directly.
PooledPair pooled_pair(Model& model, const Instance& inst, const FrozenProjections& truth,
                       Modality m) {
  const auto others = static_cast<std::uint8_t>(7U & ~(1U << index_of(m)));
  Graph g(false);
  const InstancePass pass = run_instance(g, model, inst, ModalityMask(others));
  return {mean_rows(pass.final[index_of(m)]).value(),
          mean_rows(g.constant(truth[index_of(m)])).value()};
}

}  // namespace

double embedding_gap(Model& model, const Dataset& dataset, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ArgumentError("embedding_gap: no instances");
  double total = 0.0;
  for (std::size_t i : indices) {
    const Instance& inst = dataset.instances.at(i);
    const FrozenProjections truth = frozen_projections(model, inst);
    for (Modality m : kAllModalities) {
      const PooledPair p = pooled_pair(model, inst, truth, m);
      total += std::sqrt(squared_error(p.reconstructed, p.ground_truth));
    }
  }
  return total / static_cast<double>(3 * indices.size());
}

std::size_t export_embeddings(Model& model, const Dataset& dataset,
                              std::span<const std::size_t> indices, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write embeddings to " + path);
  out << "id\tmodality\tkind\tlabel";
  for (std::size_t c = 0; c < model.config.flow.channels; ++c) out << "\tc" << c;
  out << '\n';
  std::size_t rows = 0;
  auto write = [&](const Instance& inst, Modality m, const char* kind, const Tensor& pooled) {
    out << inst.id << '\t' << short_name(m) << '\t' << kind << '\t' << inst.label;
    for (double v : pooled.data()) out << '\t' << num(v);
    out << '\n';
    ++rows;
  };
  for (std::size_t i : indices) {
    const Instance& inst = dataset.instances.at(i);
    const FrozenProjections truth = frozen_projections(model, inst);
    for (Modality m : kAllModalities) {
      const PooledPair p = pooled_pair(model, inst, truth, m);
      write(inst, m, "reconstructed", p.reconstructed);
      write(inst, m, "ground_truth", p.ground_truth);
    }
  }
  if (!out) throw IoError("failed writing embeddings to " + path);
  return rows;
}

}  // namespace cmarr
