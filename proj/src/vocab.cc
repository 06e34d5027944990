// rescore/vocab.cc

// Copyright 2026  The rescore Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "rescore/vocab.h"

#include <sstream>

#include "rescore/common.h"

namespace rescore {

namespace {
const char *kReserved[3] = {"<s>", "</s>", "<unk>"};
}

Vocabulary::Vocabulary() {
  for (const char *t : kReserved) push(t);
}

void Vocabulary::push(const std::string &token) {
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string> &tokens) {
  Vocabulary v;
  for (const auto &t : tokens) {
    RESCORE_CHECK(!t.empty(), "vocabulary token may not be empty");
    if (v.token_to_id_.count(t)) continue;
    v.push(t);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::string &path) {
  std::istringstream in(read_text_file(path));
  Vocabulary v;
  std::string line;
  int id = 0;
  while (std::getline(in, line)) {
    if (id < 3) {
      RESCORE_CHECK(line == kReserved[id], "vocabulary ", path, " line ",
                    id + 1, " must be ", kReserved[id], ", got '", line, "'");
    } else {
      RESCORE_CHECK(!line.empty(), "vocabulary ", path, ": empty line ",
                    id + 1);
      RESCORE_CHECK(!v.token_to_id_.count(line), "vocabulary ", path,
                    ": duplicate token '", line, "'");
      v.push(line);
    }
    ++id;
  }
  RESCORE_CHECK(id >= 3, "vocabulary ", path, " is missing reserved tokens");
  return v;
}

void Vocabulary::save(const std::string &path) const {
  std::string out;
  for (const auto &t : id_to_token_) {
    out += t;
    out += '\n';
  }
  write_text_file(path, out);
}

int Vocabulary::encode(const std::string &word) const {
  auto it = token_to_id_.find(word);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string &Vocabulary::decode(int id) const {
  RESCORE_CHECK(id >= 0 && id < size(), "vocabulary id ", id,
                " out of range [0, ", size(), ")");
  return id_to_token_[id];
}

bool Vocabulary::contains(const std::string &word) const {
  return token_to_id_.count(word) != 0;
}

std::vector<int> Vocabulary::encode_tokens(const std::string &text) const {
  std::vector<int> ids;
  ids.push_back(kBos);
  for (const auto &w : split_words(text)) ids.push_back(encode(w));
  ids.push_back(kEos);
  return ids;
}

std::vector<std::string> Vocabulary::decode_words(
    const std::vector<int> &ids) const {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (int id : ids) {
    if (id == kBos || id == kEos) continue;
    words.push_back(decode(id));
  }
  return words;
}

uint64_t Vocabulary::hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto &t : id_to_token_) {
    h ^= fnv1a64(t);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<int> strip_boundaries(const std::vector<int> &ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int id : ids)
    if (id != Vocabulary::kBos && id != Vocabulary::kEos) out.push_back(id);
  return out;
}

}  // namespace rescore
