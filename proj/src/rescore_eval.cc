// rescore/rescore_eval.cc

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

#include "rescore/rescore_eval.h"

#include "json.hpp"
#include "rescore/edit_distance.h"

namespace rescore {

namespace {

int argmax_lowest(const std::vector<double> &v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

RescoreResult rescore(const RescoreModel &model, const Vocabulary &vocab,
                      const Utterance &utt, double alpha) {
  RESCORE_CHECK(!utt.nbest.empty(), "utterance '", utt.id,
                "': empty n-best list");
  const bool attention = model.config().has_attention();
  RESCORE_CHECK(!attention || utt.frames.t > 0, "utterance '", utt.id,
                "': attention model needs audio frames");

  nn::Tensor encoded;
  if (attention) encoded = model.encode_audio(utt.frames);

  RescoreResult r;
  std::vector<double> am(utt.nbest.size());
  for (size_t i = 0; i < utt.nbest.size(); ++i) am[i] = utt.nbest[i].am;
  r.baseline = argmax_lowest(am);

  r.g.resize(utt.nbest.size());
  for (size_t i = 0; i < utt.nbest.size(); ++i) {
    std::vector<int> ids = vocab.encode_tokens(join_words(utt.nbest[i].words));
    double lm = model.sequence_score_t(ids, attention ? &encoded : nullptr).item();
    r.g[i] = alpha * lm + am[i];
  }
  r.chosen = argmax_lowest(r.g);
  return r;
}

double corpus_wer(const std::vector<std::vector<std::string>> &chosen,
                  const std::vector<std::vector<std::string>> &refs) {
  RESCORE_CHECK(!refs.empty(), "empty evaluation set");
  RESCORE_CHECK(chosen.size() == refs.size(), "hypothesis/reference count "
                "mismatch: ", chosen.size(), " vs ", refs.size());
  long edits = 0, words = 0;
  for (size_t i = 0; i < refs.size(); ++i) {
    edits += edit_distance(chosen[i], refs[i]);
    words += static_cast<long>(refs[i].size());
  }
  RESCORE_CHECK(words > 0, "total reference length is zero");
  return 100.0 * edits / words;
}

double werr(double baseline_wer, double system_wer) {
  RESCORE_CHECK(baseline_wer > 0, "WERR undefined for zero baseline WER");
  return 100.0 * (baseline_wer - system_wer) / baseline_wer;
}

namespace {

int oracle_index(const Utterance &u) {
  int best = 0, best_e = -1;
  for (int i = 0; i < static_cast<int>(u.nbest.size()); ++i) {
    int e = edit_distance(u.nbest[i].words, u.ref);
    if (best_e < 0 || e < best_e) {
      best_e = e;
      best = i;
    }
  }
  return best;
}

int am_argmax(const Utterance &u) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(u.nbest.size()); ++i)
    if (u.nbest[i].am > u.nbest[best].am) best = i;
  return best;
}

double wer_by_index(const std::vector<Utterance> &utts,
                    int (*pick)(const Utterance &)) {
  std::vector<std::vector<std::string>> chosen, refs;
  for (const Utterance &u : utts) {
    RESCORE_CHECK(!u.nbest.empty(), "utterance '", u.id, "': empty n-best");
    chosen.push_back(u.nbest[pick(u)].words);
    refs.push_back(u.ref);
  }
  return corpus_wer(chosen, refs);
}

}  // namespace

double baseline_wer(const std::vector<Utterance> &utts) {
  return wer_by_index(utts, &am_argmax);
}

double oracle_wer(const std::vector<Utterance> &utts) {
  return wer_by_index(utts, &oracle_index);
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["wer"] = wer;
  j["baseline_wer"] = baseline_wer;
  j["werr"] = werr;
  j["oracle_wer"] = oracle_wer;
  j["utts"] = utts;
  j["sub"] = sub;
  j["ins"] = ins;
  j["del"] = del;
  return j.dump(2) + "\n";
}

EvalReport evaluate(const RescoreModel *model, const Vocabulary *vocab,
                    const std::vector<Utterance> &utts, double alpha) {
  RESCORE_CHECK(!utts.empty(), "empty evaluation set");
  RESCORE_CHECK(model == nullptr || vocab != nullptr,
                "evaluate: model given without vocabulary");
  EvalReport rep;
  rep.utts = static_cast<int>(utts.size());

  long edits = 0, words = 0;
  for (const Utterance &u : utts) {
    int pick;
    if (model) {
      pick = rescore(*model, *vocab, u, alpha).chosen;
    } else {
      pick = am_argmax(u);
    }
    EditCounts c = edit_alignment(u.nbest[pick].words, u.ref);
    rep.sub += c.sub;
    rep.ins += c.ins;
    rep.del += c.del;
    edits += c.total();
    words += static_cast<long>(u.ref.size());
  }
  RESCORE_CHECK(words > 0, "total reference length is zero");
  rep.wer = 100.0 * edits / words;
  rep.baseline_wer = baseline_wer(utts);
  rep.oracle_wer = oracle_wer(utts);
  rep.werr = rep.baseline_wer > 0 ? werr(rep.baseline_wer, rep.wer) : 0.0;
  return rep;
}

}  // namespace rescore
