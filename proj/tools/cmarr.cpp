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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cmarr/error.hpp"
#include "cmarr/evalcli/evaluate.hpp"
#include "cmarr/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace cmarr;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ArgumentError("bad sweep value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ArgumentError("no sweep values given");
  return out;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << "error: " << kind << ": " << one_line(message) << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Missing-modality emotion recognition on synthetic multimodal data"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_path, checkpoint_path, report_path, param, values;
  std::size_t seeds = 5;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--config", config_path, "Config file")->required();
  gen->add_option("--out", out_path, "Output dataset directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", config_path, "Config file")->required();
  train_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  train_cmd->add_option("--out", out_path, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on its test split");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval->add_option("--data", data_dir, "Dataset directory")->required();
  eval->add_option("--report", report_path, "Report file")->required();

  auto* ablate = app.add_subcommand("ablate", "Train and compare the ablation variants");
  ablate->add_option("--config", config_path, "Config file")->required();
  ablate->add_option("--data", data_dir, "Dataset directory")->required();
  ablate->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  ablate->add_option("--report", report_path, "Report file")->required();

  auto* sweep = app.add_subcommand("sweep", "Train once per value of a loss weight");
  sweep->add_option("--config", config_path, "Config file")->required();
  sweep->add_option("--param", param, "Loss weight")
      ->required()
      ->check(CLI::IsMember({"alpha", "beta", "lambda", "gamma"}));
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--report", report_path, "Report file")->required();
  sweep->add_option("--data", data_dir, "Dataset directory (generated from the config if absent)");

  auto* export_cmd = app.add_subcommand("export-emb", "Export pooled embeddings of the test split");
  export_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  export_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  export_cmd->add_option("--out", out_path, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*gen) {
      const TrainConfig config = load_config(config_path);
      const Dataset ds = generate_synthetic(config.data, config.data_seed);
      save_dataset(ds, out_path);
      std::cout << "wrote " << ds.size() << " instances to " << out_path << '\n';
    } else if (*train_cmd) {
      const TrainConfig config = load_config(config_path);
      const Dataset ds = load_dataset(data_dir);
      make_dir(out_path);
      const std::string dir = fs::path(out_path).string();
      write_text(dir + "/config.txt", config_to_text(config));
      TrainOptions options;
      options.log_path = dir + "/train_log.tsv";
      options.checkpoint_path = dir + "/checkpoint.json";
      options.on_epoch = [](const EpochRecord& r) {
        std::cout << "epoch " << r.epoch << " loss " << r.losses.total << " val_war " << r.val_war
                  << " val_uar " << r.val_uar << '\n';
      };
      TrainResult result = train(config, ds, options);
      const ConditionReport report =
          evaluate_conditions(result.best.model, ds, result.split.test);
      write_text(dir + "/report.tsv", report_to_tsv(report));
      std::cout << report_to_tsv(report);
    } else if (*eval) {
      Checkpoint ck = load_checkpoint(checkpoint_path);
      const Dataset ds = load_dataset(data_dir);
      const Split split = split_for(ck.model.config, ds);
      const std::string tsv = report_to_tsv(evaluate_conditions(ck.model, ds, split.test));
      write_text(report_path, tsv);
      std::cout << tsv;
    } else if (*ablate) {
      const TrainConfig config = load_config(config_path);
      const Dataset ds = load_dataset(data_dir);
      const auto rows = run_ablation(config, ds, seeds);
      const std::string summary = ablation_to_tsv(mean_by_variant(rows), "seeds");
      write_text(report_path, summary);
      write_text(report_path + ".seeds.tsv", ablation_to_tsv(rows));
      std::cout << summary;
    } else if (*sweep) {
      const TrainConfig config = load_config(config_path);
      const Dataset ds = data_dir.empty() ? generate_synthetic(config.data, config.data_seed)
                                          : load_dataset(data_dir);
      const std::vector<double> grid = parse_values(values);
      const std::string tsv = sweep_to_tsv(run_sweep(config, ds, param, grid));
      write_text(report_path, tsv);
      std::cout << tsv;
    } else if (*export_cmd) {
      Checkpoint ck = load_checkpoint(checkpoint_path);
      const Dataset ds = load_dataset(data_dir);
      const Split split = split_for(ck.model.config, ds);
      const std::size_t rows = export_embeddings(ck.model, ds, split.test, out_path);
      std::cout << "wrote " << rows << " rows to " << out_path << '\n';
    }
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
