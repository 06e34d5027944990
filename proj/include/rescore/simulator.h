// rescore/simulator.h

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

// Synthetic stand-in for a first-pass ASR system.  References come from a
// small slot grammar; "audio" is a sequence of noisy word-prototype
// embeddings; the decoder segments by the (known) word boundaries, scores
// the nearest prototypes per position, and emits a jittered n-best list.
//
// Prototypes for fillers of the same slot are drawn around a shared
// cluster center, so acoustic confusions are mostly *within* a slot.  A
// within-slot substitution is grammatical — only the audio disambiguates
// it — while cross-slot confusions are ungrammatical and a text-only
// rescorer can repair them.  The score jitter corrupts the decoder's
// ranking without touching the frames, which is what leaves headroom for
// a rescorer that re-reads the audio.

#ifndef RESCORE_SIMULATOR_H_
#define RESCORE_SIMULATOR_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rescore/common.h"
#include "rescore/nbest.h"

namespace rescore {

// Slot grammar.  Text format, one directive per line ('#' comments):
//   slot city: boston denver seattle
//   template 2: what is the weather in <city>
// Slot fillers are single words; a template token is either a literal
// word or <slotname>.  Every template must expand to 2..12 words.
class GrammarSpec {
 public:
  struct Template {
    double weight = 1.0;
    std::vector<std::string> toks;  // literal word or "<slot>"
  };

  static GrammarSpec parse(const std::string &text);
  static GrammarSpec builtin();  // voice-command toy domain

  const std::map<std::string, std::vector<std::string>> &slots() const {
    return slots_;
  }
  const std::vector<Template> &templates() const { return templates_; }

  // All words the grammar can emit, sorted and unique.
  std::vector<std::string> vocabulary() const;

  // Literal template words only (complement of the slot fillers).
  std::vector<std::string> literals() const;

  // Hash of the canonical serialization; stored in dataset metadata.
  uint64_t hash() const;
  std::string to_string() const;

  std::vector<std::string> sample(Rng &rng) const;

  // True iff some template expansion produces exactly these words.
  bool parses(const std::vector<std::string> &words) const;

 private:
  void validate() const;

  std::map<std::string, std::vector<std::string>> slots_;
  std::vector<Template> templates_;
};

// Unit-norm prototype embedding per vocabulary word.  Fillers of one slot
// share a cluster center and are scattered around it by `spread`; literal
// words get independent directions.
class PrototypeTable {
 public:
  static PrototypeTable make(const GrammarSpec &grammar, int dim,
                             uint64_t seed, double spread);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string> &words() const { return words_; }
  int index(const std::string &word) const;  // -1 if unknown
  const double *proto(int w) const { return &mu_[static_cast<size_t>(w) * dim_]; }

  // Squared distance from an arbitrary point to prototype w.
  double dist2(const double *x, int w) const;

 private:
  int dim_ = 0;
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
  std::vector<double> mu_;  // size() x dim_, row-major
};

// Generation knobs.  Defaults are calibrated so that the builtin grammar
// lands the first-pass WER in the low teens with a much lower oracle.
// jitter is relative: the decoder's score noise is jitter * sigma, so
// sigma 0 implies a fully noiseless first pass.
struct SimConfig {
  int frame_dim = 32;
  double sigma = 0.35;       // per-coordinate frame noise
  double sigma_conf = 1.0;   // decoder score temperature
  double jitter = 0.8;       // per-hypothesis score noise, in units of sigma
  double spread = 0.12;      // within-slot prototype scatter
  int nbest = 10;
  uint64_t seed = 1;
};

// Reference texts only; utterance i uses an RNG derived from
// (seed, "<prefix>-<i>") so generation is order-independent.
std::vector<std::string> gen_corpus(const GrammarSpec &grammar, int count,
                                    uint64_t seed,
                                    const std::string &prefix = "utt");

// k in [2,4] frames per word, each prototype + sigma * N(0, I).
// word_frame_counts (optional) receives k per word.
AudioFrames synth_audio(const std::vector<std::string> &words,
                        const PrototypeTable &protos, double sigma, Rng &rng,
                        std::vector<int> *word_frame_counts = nullptr);
AudioFrames synth_audio(const std::vector<std::string> &words,
                        const PrototypeTable &protos, double sigma,
                        uint64_t seed);

// Segments frames by the known word boundaries, takes the 4 nearest
// prototypes per position, enumerates the top-n combinations by summed
// score -sum ||mean - mu||^2 / (2 sigma_conf^2), adds one Gaussian score
// jitter per hypothesis, dedups, and sorts by final score descending.
std::vector<Hypothesis> first_pass_decode(const AudioFrames &frames,
                                          const std::vector<int> &word_frame_counts,
                                          const PrototypeTable &protos, int n,
                                          double sigma_conf, double jitter,
                                          Rng &rng);

// Full utterance pipeline: sample text, synth audio, decode.
Utterance gen_utterance(const GrammarSpec &grammar, const PrototypeTable &protos,
                        const SimConfig &cfg, const std::string &id);

// count utterances with ids "<prefix>-00000" ....
std::vector<Utterance> gen_dataset(const GrammarSpec &grammar,
                                   const PrototypeTable &protos,
                                   const SimConfig &cfg, int count,
                                   const std::string &prefix);

}  // namespace rescore

#endif  // RESCORE_SIMULATOR_H_
