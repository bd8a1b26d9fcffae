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

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace cmarr {

enum class Modality : std::uint8_t { kSpeech = 0, kVideo = 1, kText = 2 };

inline constexpr std::array<Modality, 3> kAllModalities = {
    Modality::kSpeech, Modality::kVideo, Modality::kText};

inline constexpr std::size_t index_of(Modality m) { return static_cast<std::size_t>(m); }
// "s", "v" or "t".
const char* short_name(Modality m);
Modality parse_modality(const std::string& name);

/// Non-empty subset of {s, v, t}.
class ModalityMask {
 public:
  // Bit i set means modality i (speech=0, video=1, text=2) is available.
  explicit ModalityMask(std::uint8_t bits);
  ModalityMask(std::initializer_list<Modality> available);

  static ModalityMask full() { return ModalityMask(std::uint8_t{7}); }
  // Accepts "s,v", "{s,v}", "svt" and similar.
  static ModalityMask parse(const std::string& text);

  bool has(Modality m) const { return (bits_ >> index_of(m)) & 1U; }
  bool is_full() const { return bits_ == 7; }
  std::uint8_t bits() const { return bits_; }
  std::vector<Modality> available() const;
  std::vector<Modality> missing() const;
  // Written in s, v, t order, e.g. "{s,t}".
  std::string to_string() const;

  friend bool operator==(ModalityMask a, ModalityMask b) { return a.bits_ == b.bits_; }

 private:
  std::uint8_t bits_;
};

/// The six proper subsets in report order: {t},{s},{v},{v,t},{s,v},{s,t}.
const std::array<ModalityMask, 6>& missing_conditions();

struct MissingPolicy {
  enum class Kind { kUniformAll, kUniformProper, kFixed };
  Kind kind = Kind::kUniformAll;
  ModalityMask fixed = ModalityMask::full();

  // "uniform7", "uniform6", or "fixed:<mask>".
  static MissingPolicy parse(const std::string& text);
  std::string to_string() const;
};

ModalityMask sample_missing_pattern(std::mt19937_64& rng, const MissingPolicy& policy);

}  // namespace cmarr
