// rescore/nbest.h

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

#ifndef RESCORE_NBEST_H_
#define RESCORE_NBEST_H_

#include <cstdint>
#include <string>
#include <vector>

#include "rescore/attention.h"

namespace rescore {

// One first-pass candidate: a word sequence (no boundary tokens) plus the
// acoustic log score the decoder assigned to it.
struct Hypothesis {
  std::vector<std::string> words;
  double am = 0.0;
};

// One utterance as stored in a dataset line: reference transcript, the
// acoustic-embedding frames the first pass saw, and its scored n-best list
// (sorted by am descending).
struct Utterance {
  std::string id;
  std::vector<std::string> ref;
  AudioFrames frames;
  std::vector<Hypothesis> nbest;
};

// Sidecar metadata written next to the JSONL files so a dataset is
// self-describing and regenerable.
struct DatasetMeta {
  uint64_t seed = 0;
  double sigma = 0.0;
  double sigma_conf = 1.0;
  double jitter = 0.0;
  double spread = 0.0;
  int nbest = 10;
  int frame_dim = 0;
  uint64_t grammar_hash = 0;

  void save(const std::string &path) const;
  static DatasetMeta load(const std::string &path);
};

// JSON-lines, one utterance per line:
//   {"id": "...", "ref": "w1 w2", "frames": [[...],...],
//    "nbest": [{"words": "...", "am": -1.25}, ...]}
// The loader validates shape invariants: nonempty n-best, finite scores,
// rectangular frames, and the 64-token sequence cap (boundaries included)
// on both references and hypotheses.
std::vector<Utterance> load_dataset(const std::string &path);
void save_dataset(const std::string &path, const std::vector<Utterance> &utts);

// Drops duplicate word sequences (keeps the first, i.e. best-scoring,
// occurrence). The n-best posterior presumes distinct entries.
std::vector<Hypothesis> dedup_nbest(const std::vector<Hypothesis> &hyps);

// Maximum encoded sequence length (<s> + words + </s>) accepted at load.
constexpr int kMaxSeqLen = 64;

}  // namespace rescore

#endif  // RESCORE_NBEST_H_
