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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cmarr/data/dataset.hpp"
#include "cmarr/error.hpp"

namespace cmarr {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'C', 'M', 'A', 'R', 'R', 'F', '3', '2'};
constexpr const char* kManifestHeader =
    "id\tlabel_index\ts_path\ts_len\ts_dim\tv_path\tv_len\tv_dim\tt_path\tt_len\tt_dim";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_f32(const fs::path& path, const Tensor& frames) {
  std::string buf(kMagic, sizeof(kMagic));
  put_u32(buf, static_cast<std::uint32_t>(frames.rows()));
  put_u32(buf, static_cast<std::uint32_t>(frames.cols()));
  for (double v : frames.data()) put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

Tensor read_f32(const fs::path& path, std::size_t expect_len, std::size_t expect_dim) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path.string() + ": file referenced by manifest is missing");
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 16) throw FormatError(path.string() + ": truncated header");
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + ": bad magic");
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(buf.data());
  const std::size_t t_len = get_u32(bytes + 8), dim = get_u32(bytes + 12);
  if (t_len != expect_len || dim != expect_dim) {
    throw FormatError(path.string() + ": shape " + std::to_string(t_len) + "x" +
                      std::to_string(dim) + " does not match manifest " +
                      std::to_string(expect_len) + "x" + std::to_string(expect_dim));
  }
  const std::size_t payload = buf.size() - 16;
  if (payload != t_len * dim * 4) {
    throw FormatError(path.string() + ": payload is " + std::to_string(payload) +
                      " bytes, expected " + std::to_string(t_len * dim * 4));
  }
  Tensor out = Tensor::matrix(t_len, dim);
  for (std::size_t i = 0; i < t_len * dim; ++i) {
    out[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes + 16 + 4 * i)));
  }
  return out;
}

std::size_t parse_count(const std::string& field, const std::string& where) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(field, &pos);
  } catch (const std::exception&) {
    throw FormatError(where + ": expected an unsigned integer, got '" + field + "'");
  }
  if (pos != field.size()) {
    throw FormatError(where + ": expected an unsigned integer, got '" + field + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& dir) {
  dataset.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  const fs::path root(dir);

  {
    std::ofstream os(root / "classes.txt");
    if (!os) throw IoError("cannot write " + (root / "classes.txt").string());
    for (const auto& name : dataset.class_names) os << name << '\n';
  }
  std::ofstream manifest(root / "manifest.tsv");
  if (!manifest) throw IoError("cannot write " + (root / "manifest.tsv").string());
  manifest << kManifestHeader << '\n';
  for (const Instance& inst : dataset.instances) {
    manifest << inst.id << '\t' << inst.label;
    for (Modality m : kAllModalities) {
      const std::string file = inst.id + "." + short_name(m) + ".f32";
      const Tensor& f = inst.feature(m);
      write_f32(root / file, f);
      manifest << '\t' << file << '\t' << f.rows() << '\t' << f.cols();
    }
    manifest << '\n';
  }
  if (!manifest) throw IoError("failed writing manifest in " + dir);
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  const fs::path manifest_path = root / "manifest.tsv";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw FormatError(manifest_path.string() + ": cannot open manifest");

  Dataset ds;
  {
    std::ifstream classes(root / "classes.txt");
    if (!classes) throw FormatError((root / "classes.txt").string() + ": cannot open");
    std::string line;
    while (std::getline(classes, line)) {
      if (!line.empty()) ds.class_names.push_back(line);
    }
  }

  std::string line;
  if (!std::getline(manifest, line) || line != kManifestHeader) {
    throw FormatError(manifest_path.string() + ": missing or malformed header row");
  }
  bool first = true;
  std::size_t line_no = 1;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    const std::string where = manifest_path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 11) throw FormatError(where + ": expected 11 columns");

    Instance inst;
    inst.id = fields[0];
    inst.label = parse_count(fields[1], where);
    for (Modality m : kAllModalities) {
      const std::size_t base = 2 + 3 * index_of(m);
      const std::size_t len = parse_count(fields[base + 1], where);
      const std::size_t dim = parse_count(fields[base + 2], where);
      if (first) {
        ds.dims[index_of(m)] = dim;
        ds.lengths[index_of(m)] = len;
      } else if (ds.dims[index_of(m)] != dim) {
        throw FormatError(where + ": " + short_name(m) + " dim " + std::to_string(dim) +
                          " differs from earlier rows");
      }
      inst.features[index_of(m)] = read_f32(root / fields[base], len, dim);
    }
    first = false;
    ds.instances.push_back(std::move(inst));
  }
  try {
    ds.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace cmarr
