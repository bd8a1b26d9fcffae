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
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"

#include "cmarr/data/dataset.hpp"
#include "cmarr/error.hpp"

using namespace cmarr;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("cmarr_data_test_" + name);
  fs::remove_all(p);
  return p;
}

SyntheticConfig small_config() {
  SyntheticConfig c;
  c.num_classes = 3;
  c.n_per_class = 2;
  c.dims = {4, 3, 5};
  c.lengths = {3, 2, 4};
  return c;
}

std::vector<double> pooled(const Tensor& frames) {
  std::vector<double> out(frames.cols(), 0.0);
  for (std::size_t t = 0; t < frames.rows(); ++t)
    for (std::size_t d = 0; d < frames.cols(); ++d) out[d] += frames(t, d);
  for (double& v : out) v /= static_cast<double>(frames.rows());
  return out;
}

// Nearest-class-centroid probe (a linear classifier) trained on `train`,
// scored by mean per-class recall on `test`.
double centroid_probe_uar(const Dataset& ds, const Split& split, Modality m) {
  const std::size_t c = ds.num_classes(), d = ds.dims[index_of(m)];
  std::vector<std::vector<double>> centroid(c, std::vector<double>(d, 0.0));
  std::vector<double> count(c, 0.0);
  for (std::size_t i : split.train) {
    const auto p = pooled(ds.instances[i].feature(m));
    const std::size_t y = ds.instances[i].label;
    for (std::size_t k = 0; k < d; ++k) centroid[y][k] += p[k];
    count[y] += 1.0;
  }
  for (std::size_t y = 0; y < c; ++y)
    for (double& v : centroid[y]) v /= count[y];
  std::vector<double> hits(c, 0.0), seen(c, 0.0);
  for (std::size_t i : split.test) {
    const auto p = pooled(ds.instances[i].feature(m));
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t y = 0; y < c; ++y) {
      double dist = 0.0;
      for (std::size_t k = 0; k < d; ++k) dist += (p[k] - centroid[y][k]) * (p[k] - centroid[y][k]);
      if (dist < best_d) best_d = dist, best = y;
    }
    const std::size_t y = ds.instances[i].label;
    seen[y] += 1.0;
    if (best == y) hits[y] += 1.0;
  }
  double uar = 0.0;
  for (std::size_t y = 0; y < c; ++y) uar += hits[y] / seen[y];
  return uar / static_cast<double>(c);
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("synthetic generation is deterministic per seed") {
  const auto a = generate_synthetic(small_config(), 7);
  const auto b = generate_synthetic(small_config(), 7);
  const auto c = generate_synthetic(small_config(), 8);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("synthetic shape contract") {
  SyntheticConfig cfg;
  cfg.num_classes = 4;
  cfg.n_per_class = 50;
  cfg.dims = {16, 16, 16};
  cfg.lengths = {8, 8, 8};
  const auto ds = generate_synthetic(cfg, 1);
  CHECK(ds.size() == 200);
  for (const auto& inst : ds.instances)
    for (Modality m : kAllModalities) {
      CHECK(inst.feature(m).rows() == 8);
      CHECK(inst.feature(m).cols() == 16);
    }
  CHECK(ds.class_names == std::vector<std::string>{"ang", "hap", "neu", "sad"});
  std::map<std::size_t, int> counts;
  for (const auto& inst : ds.instances) ++counts[inst.label];
  for (const auto& [label, n] : counts) CHECK(n == 50);
}

TEST_CASE("synthetic generator validates its config") {
  SyntheticConfig cfg = small_config();
  cfg.num_classes = 1;
  CHECK_THROWS_AS(generate_synthetic(cfg, 0), ArgumentError);
  cfg = small_config();
  cfg.noise_std = -1.0;
  CHECK_THROWS_AS(generate_synthetic(cfg, 0), ArgumentError);
}

TEST_CASE("without emotion signal the probe is at chance") {
  SyntheticConfig cfg;
  cfg.n_per_class = 150;
  cfg.noise_std = 0.0;
  cfg.modality_strengths = {0.0, 0.0, 0.0};
  const auto ds = generate_synthetic(cfg, 5);
  const Split split = stratified_split(ds, 5);
  for (Modality m : kAllModalities) {
    const double uar = centroid_probe_uar(ds, split, m);
    CHECK(std::abs(uar - 0.25) < 0.15);
  }
}

TEST_CASE("with strong signal a linear probe separates the classes") {
  SyntheticConfig cfg;
  cfg.noise_std = 0.1;
  cfg.emotion_jitter = 0.2;
  cfg.modality_strengths = {3.0, 3.0, 3.0};
  const auto ds = generate_synthetic(cfg, 9);
  const Split split = stratified_split(ds, 9);
  for (Modality m : kAllModalities) CHECK(centroid_probe_uar(ds, split, m) > 0.9);
}

TEST_CASE("dataset files round-trip bitwise") {
  SyntheticConfig cfg = small_config();
  cfg.num_classes = 3;
  cfg.n_per_class = 1;
  const auto ds = generate_synthetic(cfg, 3);
  REQUIRE(ds.size() == 3);
  const auto dir = scratch_dir("roundtrip");
  save_dataset(ds, dir.string());
  const auto loaded = load_dataset(dir.string());
  CHECK(loaded == ds);

  const auto big = generate_synthetic(SyntheticConfig{}, 4);
  const auto dir2 = scratch_dir("roundtrip_big");
  save_dataset(big, dir2.string());
  CHECK(load_dataset(dir2.string()) == big);
}

TEST_CASE("malformed dataset files raise format errors naming the file") {
  const auto ds = generate_synthetic(small_config(), 3);
  const auto dir = scratch_dir("malformed");
  save_dataset(ds, dir.string());
  const fs::path victim = dir / (ds.instances[1].id + ".v.f32");
  const std::string original = read_bytes(victim);

  auto expect_error = [&](const std::string& needle) {
    try {
      load_dataset(dir.string());
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      const std::string what = e.what();
      CHECK(what.find(victim.filename().string()) != std::string::npos);
      CHECK(what.find(needle) != std::string::npos);
    }
  };

  fs::remove(victim);
  expect_error("missing");

  write_bytes(victim, original.substr(0, original.size() - 4));
  expect_error("payload");

  std::string bad_magic = original;
  bad_magic[0] = 'X';
  write_bytes(victim, bad_magic);
  expect_error("magic");

  std::string bad_dim = original;
  bad_dim[12] = static_cast<char>(bad_dim[12] + 1);
  write_bytes(victim, bad_dim);
  expect_error("does not match manifest");

  write_bytes(victim, original);
  CHECK(load_dataset(dir.string()) == ds);
}

TEST_CASE("manifest header is required") {
  const auto ds = generate_synthetic(small_config(), 3);
  const auto dir = scratch_dir("header");
  save_dataset(ds, dir.string());
  std::string manifest = read_bytes(dir / "manifest.tsv");
  write_bytes(dir / "manifest.tsv", manifest.substr(manifest.find('\n') + 1));
  CHECK_THROWS_AS(load_dataset(dir.string()), FormatError);
}

TEST_CASE("make_batches sizes") {
  std::vector<std::size_t> ten(10), nine(9);
  std::iota(ten.begin(), ten.end(), 0);
  std::iota(nine.begin(), nine.end(), 0);
  auto sizes = [](const std::vector<Batch>& bs) {
    std::vector<std::size_t> out;
    for (const auto& b : bs) out.push_back(b.indices.size());
    return out;
  };
  CHECK(sizes(make_batches(ten, 4, 0, false)) == std::vector<std::size_t>{4, 4, 2});
  CHECK(sizes(make_batches(nine, 4, 0, false)) == std::vector<std::size_t>{4, 5});

  const auto a = make_batches(ten, 4, 42, true);
  const auto b = make_batches(ten, 4, 42, true);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].indices == b[i].indices);
  std::set<std::size_t> seen;
  for (const auto& batch : a) seen.insert(batch.indices.begin(), batch.indices.end());
  CHECK(seen.size() == 10);

  std::vector<std::size_t> one{0};
  CHECK_THROWS_AS(make_batches(one, 4, 0, false), ArgumentError);
  CHECK_THROWS_AS(make_batches(ten, 1, 0, false), ArgumentError);
}

TEST_CASE("missing-pattern sampling") {
  std::mt19937_64 rng(123);
  const auto fixed = MissingPolicy::parse("fixed:sv");
  for (int i = 0; i < 100; ++i) {
    CHECK(sample_missing_pattern(rng, fixed) ==
          ModalityMask({Modality::kSpeech, Modality::kVideo}));
  }

  std::map<int, int> counts;
  const auto uniform7 = MissingPolicy::parse("uniform7");
  for (int i = 0; i < 70000; ++i) ++counts[sample_missing_pattern(rng, uniform7).bits()];
  CHECK(counts.size() == 7);
  for (const auto& [bits, n] : counts) CHECK(std::abs(n / 70000.0 - 1.0 / 7.0) < 0.01);

  const auto uniform6 = MissingPolicy::parse("uniform6");
  std::set<int> support;
  for (int i = 0; i < 10000; ++i) {
    const auto m = sample_missing_pattern(rng, uniform6);
    CHECK_FALSE(m.is_full());
    support.insert(m.bits());
  }
  CHECK(support.size() == 6);
  CHECK_THROWS_AS(MissingPolicy::parse("sometimes"), ArgumentError);
}

TEST_CASE("modality masks") {
  CHECK_THROWS_AS(ModalityMask(std::uint8_t{0}), ArgumentError);
  const auto m = ModalityMask::parse("{s,t}");
  CHECK(m.to_string() == "{s,t}");
  CHECK(m.missing() == std::vector<Modality>{Modality::kVideo});
  CHECK(ModalityMask::full().to_string() == "{s,v,t}");
  std::vector<std::string> names;
  for (const auto& c : missing_conditions()) names.push_back(c.to_string());
  CHECK(names == std::vector<std::string>{"{t}", "{s}", "{v}", "{v,t}", "{s,v}", "{s,t}"});
}

TEST_CASE("stratified split proportions") {
  const auto ds = generate_synthetic(SyntheticConfig{}, 2);
  const Split s = stratified_split(ds, 2);
  CHECK(s.train.size() == 280);
  CHECK(s.validation.size() == 60);
  CHECK(s.test.size() == 60);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 400);

  const Split f = kfold_split(ds, 5, 0, 2);
  CHECK(f.test.size() == 80);
  CHECK(f.validation.size() == 80);
  CHECK(f.train.size() == 240);
}
