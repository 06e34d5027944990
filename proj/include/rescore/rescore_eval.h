// rescore/rescore_eval.h

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

#ifndef RESCORE_RESCORE_EVAL_H_
#define RESCORE_RESCORE_EVAL_H_

#include <string>
#include <vector>

#include "rescore/lm.h"
#include "rescore/nbest.h"
#include "rescore/vocab.h"

namespace rescore {

// One utterance rescored: g_i = alpha * lm_i + am_i, chosen = argmax_i g_i
// with ties broken to the lowest index. baseline is the argmax of the am
// scores alone (same tie rule).
struct RescoreResult {
  int chosen = 0;
  int baseline = 0;
  std::vector<double> g;
};

RescoreResult rescore(const RescoreModel &model, const Vocabulary &vocab,
                      const Utterance &utt, double alpha);

// 100 * (sum of per-utterance word edit distances) / (total reference
// words). Sequences carry no boundary tokens.
double corpus_wer(const std::vector<std::vector<std::string>> &chosen,
                  const std::vector<std::vector<std::string>> &refs);

// 100 * (baseline - system) / baseline; requires baseline > 0.
double werr(double baseline_wer, double system_wer);

// First-pass top-1 WER / lowest-achievable WER over the stored lists.
double baseline_wer(const std::vector<Utterance> &utts);
double oracle_wer(const std::vector<Utterance> &utts);

struct EvalReport {
  double wer = 0;
  double baseline_wer = 0;
  double werr = 0;  // 0 when the baseline is already perfect
  double oracle_wer = 0;
  int utts = 0;
  int sub = 0, ins = 0, del = 0;  // error decomposition of the chosen side

  std::string to_json() const;
};

// Full corpus evaluation. model == nullptr scores the first-pass ranking
// itself (wer == baseline_wer), which is what dataset generation reports.
EvalReport evaluate(const RescoreModel *model, const Vocabulary *vocab,
                    const std::vector<Utterance> &utts, double alpha);

}  // namespace rescore

#endif  // RESCORE_RESCORE_EVAL_H_
