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

#include "cmarr/data/modality.hpp"

#include "cmarr/error.hpp"

namespace cmarr {

const char* short_name(Modality m) {
  switch (m) {
    case Modality::kSpeech: return "s";
    case Modality::kVideo: return "v";
    case Modality::kText: return "t";
  }
  return "?";
}

Modality parse_modality(const std::string& name) {
  if (name == "s") return Modality::kSpeech;
  if (name == "v") return Modality::kVideo;
  if (name == "t") return Modality::kText;
  throw ArgumentError("unknown modality '" + name + "'");
}

ModalityMask::ModalityMask(std::uint8_t bits) : bits_(bits) {
  if (bits_ == 0 || bits_ > 7) {
    throw ArgumentError("modality mask must name at least one of s, v, t");
  }
}

ModalityMask::ModalityMask(std::initializer_list<Modality> available) : bits_(0) {
  for (Modality m : available) bits_ |= static_cast<std::uint8_t>(1U << index_of(m));
  if (bits_ == 0) throw ArgumentError("modality mask must name at least one of s, v, t");
}

ModalityMask ModalityMask::parse(const std::string& text) {
  std::uint8_t bits = 0;
  for (char c : text) {
    switch (c) {
      case 's': bits |= 1; break;
      case 'v': bits |= 2; break;
      case 't': bits |= 4; break;
      case '{': case '}': case ',': case ' ': break;
      default: throw ArgumentError("bad modality mask '" + text + "'");
    }
  }
  return ModalityMask(bits);
}

std::vector<Modality> ModalityMask::available() const {
  std::vector<Modality> out;
  for (Modality m : kAllModalities)
    if (has(m)) out.push_back(m);
  return out;
}

std::vector<Modality> ModalityMask::missing() const {
  std::vector<Modality> out;
  for (Modality m : kAllModalities)
    if (!has(m)) out.push_back(m);
  return out;
}

std::string ModalityMask::to_string() const {
  std::string out = "{";
  for (Modality m : available()) {
    if (out.size() > 1) out += ',';
    out += short_name(m);
  }
  return out + "}";
}

const std::array<ModalityMask, 6>& missing_conditions() {
  static const std::array<ModalityMask, 6> kConditions = {
      ModalityMask{Modality::kText},
      ModalityMask{Modality::kSpeech},
      ModalityMask{Modality::kVideo},
      ModalityMask{Modality::kVideo, Modality::kText},
      ModalityMask{Modality::kSpeech, Modality::kVideo},
      ModalityMask{Modality::kSpeech, Modality::kText},
  };
  return kConditions;
}

MissingPolicy MissingPolicy::parse(const std::string& text) {
  MissingPolicy p;
  if (text == "uniform7") {
    p.kind = Kind::kUniformAll;
  } else if (text == "uniform6") {
    p.kind = Kind::kUniformProper;
  } else if (text.rfind("fixed:", 0) == 0) {
    p.kind = Kind::kFixed;
    p.fixed = ModalityMask::parse(text.substr(6));
  } else {
    throw ArgumentError("unknown missing policy '" + text + "'");
  }
  return p;
}

std::string MissingPolicy::to_string() const {
  switch (kind) {
    case Kind::kUniformAll: return "uniform7";
    case Kind::kUniformProper: return "uniform6";
    case Kind::kFixed: {
      std::string out = "fixed:";
      for (Modality m : fixed.available()) out += short_name(m);
      return out;
    }
  }
  return "";
}

ModalityMask sample_missing_pattern(std::mt19937_64& rng, const MissingPolicy& policy) {
  switch (policy.kind) {
    case MissingPolicy::Kind::kUniformAll: {
      std::uniform_int_distribution<int> pick(1, 7);
      return ModalityMask(static_cast<std::uint8_t>(pick(rng)));
    }
    case MissingPolicy::Kind::kUniformProper: {
      std::uniform_int_distribution<int> pick(1, 6);
      return ModalityMask(static_cast<std::uint8_t>(pick(rng)));
    }
    case MissingPolicy::Kind::kFixed:
      return policy.fixed;
  }
  return ModalityMask::full();
}

}  // namespace cmarr
