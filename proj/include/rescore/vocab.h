// rescore/vocab.h

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

#ifndef RESCORE_VOCAB_H_
#define RESCORE_VOCAB_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rescore {

// token<->id bijection with dense ids. Ids 0..2 are reserved for the
// sentence boundaries and the OOV token; unseen words encode to <unk>.
class Vocabulary {
 public:
  static constexpr int kBos = 0;  // <s>
  static constexpr int kEos = 1;  // </s>
  static constexpr int kUnk = 2;  // <unk>

  Vocabulary();

  // Appends tokens in first-occurrence order after the reserved three;
  // occurrences of the reserved tokens themselves are skipped.
  static Vocabulary from_tokens(const std::vector<std::string> &tokens);

  // Plain text, one token per line, line number = id; the first three
  // lines must be the reserved tokens.
  static Vocabulary load(const std::string &path);
  void save(const std::string &path) const;

  int encode(const std::string &word) const;
  const std::string &decode(int id) const;

  // "play song" -> [<s>, id(play), id(song), </s>]; OOV words -> <unk>.
  std::vector<int> encode_tokens(const std::string &text) const;

  std::vector<std::string> decode_words(const std::vector<int> &ids) const;

  int size() const { return static_cast<int>(id_to_token_.size()); }
  bool contains(const std::string &word) const;

  // Stable content hash, stored in checkpoints to reject model/vocab skew.
  uint64_t hash() const;

 private:
  void push(const std::string &token);

  std::vector<std::string> id_to_token_;
  std::map<std::string, int> token_to_id_;
};

// Removes <s> and </s> from an id sequence; edit distance and WER work
// on boundary-stripped sequences.
std::vector<int> strip_boundaries(const std::vector<int> &ids);

}  // namespace rescore

#endif  // RESCORE_VOCAB_H_
