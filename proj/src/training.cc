// rescore/training.cc

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

#include "rescore/training.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <ostream>

#include "rescore/edit_distance.h"
#include "rescore/mwer.h"
#include "rescore/rescore_eval.h"

namespace rescore {

void TrainConfig::validate() const {
  RESCORE_CHECK(lr > 0, "learning rate must be positive, got ", lr);
  RESCORE_CHECK(optimizer == "sgd" || optimizer == "adam",
                "unknown optimizer '", optimizer, "'");
  RESCORE_CHECK(batch_size >= 1, "batch size must be >= 1");
  RESCORE_CHECK(epochs >= 0, "epoch count must be >= 0");
  RESCORE_CHECK(max_nbest >= 1 && max_nbest <= 64,
                "max n-best size must be in 1..64, got ", max_nbest);
  RESCORE_CHECK(clip_norm > 0, "clip norm must be positive");
  RESCORE_CHECK(patience >= 1, "patience must be >= 1");
  RESCORE_CHECK(lambda >= 0, "lambda must be >= 0");
}

Optimizer::Optimizer(std::vector<nn::Tensor> params, const TrainConfig &cfg)
    : params_(std::move(params)),
      lr_(cfg.lr),
      clip_(cfg.clip_norm),
      adam_(cfg.optimizer == "adam") {
  RESCORE_CHECK(cfg.optimizer == "sgd" || cfg.optimizer == "adam",
                "unknown optimizer '", cfg.optimizer, "'");
  RESCORE_CHECK(lr_ >= 0, "negative learning rate");
  RESCORE_CHECK(clip_ > 0, "clip norm must be positive");
  if (adam_) {
    for (const nn::Tensor &p : params_) {
      m_.emplace_back(p.numel(), 0.0);
      v_.emplace_back(p.numel(), 0.0);
    }
  }
}

void Optimizer::step() {
  double n2 = 0;
  for (const nn::Tensor &p : params_)
    for (double g : p.grad()) n2 += g * g;
  last_norm_ = std::sqrt(n2);
  const double scale = last_norm_ > clip_ ? clip_ / last_norm_ : 1.0;
  ++t_;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    nn::Tensor &p = params_[i];
    for (int k = 0; k < p.numel(); ++k) {
      const double gc = scale * p.grad()[k];
      if (adam_) {
        double &m = m_[i][k];
        double &v = v_[i][k];
        m = b1 * m + (1 - b1) * gc;
        v = b2 * v + (1 - b2) * gc * gc;
        p.values()[k] -= lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps);
      } else {
        p.values()[k] -= lr_ * gc;
      }
    }
    p.zero_grad();
  }
}

namespace {

std::vector<nn::Tensor> param_list(const RescoreModel &model) {
  std::vector<nn::Tensor> out;
  for (const NamedTensor &np : model.named_params()) out.push_back(np.tensor);
  return out;
}

std::vector<std::vector<double>> snapshot(const RescoreModel &model) {
  std::vector<std::vector<double>> s;
  for (const NamedTensor &np : model.named_params())
    s.push_back(np.tensor.values());
  return s;
}

void restore(RescoreModel &model, const std::vector<std::vector<double>> &s) {
  std::vector<NamedTensor> ps = model.named_params();
  RESCORE_CHECK(ps.size() == s.size(), "snapshot/model mismatch");
  for (size_t i = 0; i < ps.size(); ++i) ps[i].tensor.values() = s[i];
}

}  // namespace

TrainResult pretrain_xent(const std::vector<std::vector<int>> &train,
                          const std::vector<std::vector<int>> &dev,
                          const LmConfig &model_cfg, uint64_t vocab_hash,
                          const TrainConfig &cfg, std::ostream *log_out) {
  RESCORE_CHECK(!train.empty(), "empty training corpus");
  RESCORE_CHECK(!dev.empty(), "empty dev corpus");
  model_cfg.validate();
  RESCORE_CHECK(model_cfg.normalized && !model_cfg.has_attention(),
                "cross-entropy pretraining needs a normalized text-only model");
  RESCORE_CHECK(cfg.lr >= 0 && cfg.batch_size >= 1 && cfg.epochs >= 0 &&
                    cfg.patience >= 1,
                "bad training configuration");

  RescoreModel model = RescoreModel::random_init(model_cfg, vocab_hash, cfg.seed);
  Optimizer opt(param_list(model), cfg);

  TrainResult res;
  double best = model.perplexity(dev);
  std::vector<std::vector<double>> best_snap = snapshot(model);
  res.best_epoch = 0;
  res.log.push_back({0, 0.0, best});
  if (log_out) *log_out << "epoch 0 dev_ppl " << best << "\n";

  Rng rng(cfg.seed);
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0;
    int batches = 0;
    for (size_t b0 = 0; b0 < order.size();
         b0 += static_cast<size_t>(cfg.batch_size)) {
      std::vector<std::vector<int>> batch;
      for (size_t i = b0;
           i < std::min(order.size(), b0 + static_cast<size_t>(cfg.batch_size));
           ++i)
        batch.push_back(train[order[i]]);
      nn::Tape tape;
      nn::TapeScope scope(tape);
      nn::Tensor loss = model.xent_loss_t(batch);
      loss_sum += loss.item();
      ++batches;
      tape.backward(loss);
      opt.step();
    }
    double ppl = model.perplexity(dev);
    res.log.push_back({epoch, loss_sum / batches, ppl});
    if (log_out)
      *log_out << "epoch " << epoch << " train_xent " << loss_sum / batches
               << " dev_ppl " << ppl << "\n";
    if (ppl < best) {
      best = ppl;
      best_snap = snapshot(model);
      res.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  restore(model, best_snap);
  res.best_dev = best;
  res.model = std::move(model);
  return res;
}

namespace {

// Copies src into the leading rows of dst and zeroes the rest. Both are
// row-major with equal column counts; the zeroed tail rows are exactly
// the ones that multiply attention context.
void copy_rows_zero_tail(nn::Tensor dst, const nn::Tensor &src) {
  RESCORE_CHECK(dst.shape().size() == 2 && src.shape().size() == 2 &&
                    dst.dim(1) == src.dim(1) && dst.dim(0) >= src.dim(0),
                "transfer shape mismatch: ", nn::shape_str(src.shape()),
                " into ", nn::shape_str(dst.shape()));
  std::copy(src.values().begin(), src.values().end(), dst.values().begin());
  std::fill(dst.values().begin() + src.values().size(), dst.values().end(),
            0.0);
}

void copy_exact(nn::Tensor dst, const nn::Tensor &src) {
  RESCORE_CHECK(dst.shape() == src.shape(), "transfer shape mismatch");
  dst.values() = src.values();
}

}  // namespace

RescoreModel init_from_pretrained(const RescoreModel &pretrained,
                                  const LmConfig &target,
                                  uint64_t expected_vocab_hash, uint64_t seed) {
  RESCORE_CHECK(pretrained.defined(), "undefined source model");
  RESCORE_CHECK(pretrained.vocab_hash() == expected_vocab_hash,
                "vocabulary hash mismatch between checkpoint and data");
  const LmConfig &pc = pretrained.config();
  RESCORE_CHECK(!pc.has_attention(),
                "transfer source must be a text-only model");
  target.validate();
  RESCORE_CHECK(pc.vocab_size == target.vocab_size &&
                    pc.embed_dim == target.embed_dim &&
                    pc.hidden_dim == target.hidden_dim,
                "transfer dimension mismatch: source V/E/H ", pc.vocab_size,
                "/", pc.embed_dim, "/", pc.hidden_dim, ", target ",
                target.vocab_size, "/", target.embed_dim, "/",
                target.hidden_dim);

  RescoreModel model =
      RescoreModel::random_init(target, pretrained.vocab_hash(), seed);
  const ModelParams &src = pretrained.params();
  ModelParams &dst = model.params();
  copy_exact(dst.embed, src.embed);
  copy_rows_zero_tail(dst.l1.w_ih, src.l1.w_ih);
  copy_exact(dst.l1.w_hh, src.l1.w_hh);
  copy_exact(dst.l1.b, src.l1.b);
  copy_rows_zero_tail(dst.l2.w_ih, src.l2.w_ih);
  copy_exact(dst.l2.w_hh, src.l2.w_hh);
  copy_exact(dst.l2.b, src.l2.b);
  copy_rows_zero_tail(dst.out_w, src.out_w);
  copy_exact(dst.out_b, src.out_b);
  return model;
}

namespace {

// One utterance, encoded and measured once before the epoch loop.
struct PreparedUtt {
  std::vector<int> ref_ids;
  std::vector<std::vector<int>> hyp_ids;
  std::vector<double> am;
  std::vector<int> edits;
  const AudioFrames *frames = nullptr;
};

PreparedUtt prepare_utt(const Utterance &u, const Vocabulary &vocab,
                        int max_nbest, bool attention, int *truncated) {
  std::vector<Hypothesis> hyps = dedup_nbest(u.nbest);
  if (static_cast<int>(hyps.size()) > max_nbest) {
    std::stable_sort(hyps.begin(), hyps.end(),
                     [](const Hypothesis &a, const Hypothesis &b) {
                       return a.am > b.am;
                     });
    hyps.resize(max_nbest);
    ++*truncated;
  }
  if (attention)
    RESCORE_CHECK(u.frames.t > 0, "utterance '", u.id,
                  "': attention model needs audio frames");
  PreparedUtt p;
  p.ref_ids = vocab.encode_tokens(join_words(u.ref));
  for (const Hypothesis &h : hyps) {
    p.hyp_ids.push_back(vocab.encode_tokens(join_words(h.words)));
    p.am.push_back(h.am);
    p.edits.push_back(edit_distance(h.words, u.ref));
  }
  p.frames = &u.frames;
  return p;
}

nn::Tensor utt_loss(const RescoreModel &model, const PreparedUtt &p,
                    double alpha, double lambda) {
  nn::Tensor enc;
  const nn::Tensor *encp = nullptr;
  if (model.config().has_attention()) {
    enc = model.encode_audio(*p.frames);
    encp = &enc;
  }
  std::vector<nn::Tensor> lm;
  for (const std::vector<int> &ids : p.hyp_ids)
    lm.push_back(model.sequence_score_t(ids, encp));
  nn::Tensor post = nbest_posterior(combine_scores(lm, p.am, alpha));
  nn::Tensor werr_part = mwer_loss(post, relative_edit(p.edits));
  nn::Tensor nll = model.sequence_nll_t(p.ref_ids, encp);
  return total_loss(werr_part, nll, lambda);
}

double rescored_wer(const RescoreModel &model, const Vocabulary &vocab,
                    const std::vector<Utterance> &utts, double alpha) {
  std::vector<std::vector<std::string>> chosen, refs;
  for (const Utterance &u : utts) {
    RescoreResult r = rescore(model, vocab, u, alpha);
    chosen.push_back(u.nbest[r.chosen].words);
    refs.push_back(u.ref);
  }
  return corpus_wer(chosen, refs);
}

}  // namespace

TrainResult train_mwer(const std::vector<Utterance> &train,
                       const std::vector<Utterance> &dev, RescoreModel model,
                       const Vocabulary &vocab, const TrainConfig &cfg,
                       std::ostream *log_out) {
  RESCORE_CHECK(!train.empty(), "empty training set");
  RESCORE_CHECK(!dev.empty(), "empty dev set");
  RESCORE_CHECK(model.defined(), "undefined model");
  RESCORE_CHECK(model.vocab_hash() == vocab.hash(),
                "vocabulary hash mismatch between model and data");
  RESCORE_CHECK(cfg.lr >= 0 && cfg.batch_size >= 1 && cfg.epochs >= 0 &&
                    cfg.patience >= 1 && cfg.max_nbest >= 1 &&
                    cfg.max_nbest <= 64 && cfg.lambda >= 0,
                "bad training configuration");

  const bool attention = model.config().has_attention();
  int truncated = 0;
  std::vector<PreparedUtt> preps;
  preps.reserve(train.size());
  for (const Utterance &u : train)
    preps.push_back(prepare_utt(u, vocab, cfg.max_nbest, attention, &truncated));
  if (truncated > 0) {
    std::ostream &warn = log_out ? *log_out : std::cerr;
    warn << "warning: truncated " << truncated
         << " oversized n-best lists to top " << cfg.max_nbest
         << " by acoustic score\n";
  }

  Optimizer opt(param_list(model), cfg);
  TrainResult res;
  double best = rescored_wer(model, vocab, dev, cfg.alpha);
  std::vector<std::vector<double>> best_snap = snapshot(model);
  res.best_epoch = 0;
  res.log.push_back({0, 0.0, best});
  if (log_out) *log_out << "epoch 0 dev_wer " << best << "\n";

  Rng rng(cfg.seed);
  std::vector<int> order(preps.size());
  std::iota(order.begin(), order.end(), 0);
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0;
    int batches = 0;
    for (size_t b0 = 0; b0 < order.size();
         b0 += static_cast<size_t>(cfg.batch_size)) {
      nn::Tape tape;
      nn::TapeScope scope(tape);
      std::vector<nn::Tensor> losses;
      for (size_t i = b0;
           i < std::min(order.size(), b0 + static_cast<size_t>(cfg.batch_size));
           ++i)
        losses.push_back(utt_loss(model, preps[order[i]], cfg.alpha, cfg.lambda));
      nn::Tensor loss = nn::mean_of(losses);
      loss_sum += loss.item();
      ++batches;
      tape.backward(loss);
      opt.step();
    }
    double wer = rescored_wer(model, vocab, dev, cfg.alpha);
    res.log.push_back({epoch, loss_sum / batches, wer});
    if (log_out)
      *log_out << "epoch " << epoch << " train_mwer " << loss_sum / batches
               << " dev_wer " << wer << "\n";
    if (wer < best) {
      best = wer;
      best_snap = snapshot(model);
      res.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  restore(model, best_snap);
  res.best_dev = best;
  res.model = std::move(model);
  return res;
}

}  // namespace rescore
