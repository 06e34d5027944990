// rescore/training.h

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

#ifndef RESCORE_TRAINING_H_
#define RESCORE_TRAINING_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rescore/lm.h"
#include "rescore/nbest.h"
#include "rescore/vocab.h"

namespace rescore {

struct TrainConfig {
  double lr = 1e-3;
  std::string optimizer = "adam";  // "sgd" | "adam"
  int batch_size = 16;
  int epochs = 5;
  double lambda = 0.1;  // CE weight inside the MWER objective
  double alpha = 1.0;   // LM scale in the combined hypothesis score
  int max_nbest = 64;
  double clip_norm = 5.0;
  uint64_t seed = 1;
  int patience = 3;  // epochs without dev improvement before stopping

  // Flag-level sanity for CLI runs (positive lr, max_nbest in 1..64, ...).
  // Library entry points themselves accept lr == 0 for diagnostics.
  void validate() const;
};

// Gradient-clipped SGD / Adam over a fixed parameter list. step() scales
// all gradients by min(1, clip/||g||) (global L2 norm), applies the
// update, and zeroes the gradients. The SGD update is literally
// p -= lr * (scale * g) so tests can predict new values bit-exactly.
class Optimizer {
 public:
  Optimizer(std::vector<nn::Tensor> params, const TrainConfig &cfg);

  void step();
  double last_grad_norm() const { return last_norm_; }

 private:
  std::vector<nn::Tensor> params_;
  double lr_;
  double clip_;
  bool adam_;
  double last_norm_ = 0;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;  // Adam moments
};

// ---- checkpoints -----------------------------------------------------

// Binary layout: "RSCR" | u32 version | u64 header_len | JSON header
// (config, vocab hash, tensor index, metadata) | raw little-endian f64
// payload | u32 CRC32 over everything before it.
constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  int epoch = 0;
  double dev_metric = 0;
  std::string phase;  // "xent" | "mwer"
};

void save_checkpoint(const RescoreModel &model, const std::string &path,
                     const CheckpointMeta &meta = {});
RescoreModel load_checkpoint(const std::string &path,
                             CheckpointMeta *meta = nullptr);

// ---- training loops --------------------------------------------------

struct EpochLog {
  int epoch = 0;        // 0 = pre-training evaluation of the initial model
  double train_loss = 0;
  double dev_metric = 0;  // PPL for xent, WER for MWER
};

struct TrainResult {
  RescoreModel model;  // parameters of the best dev epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev = 0;
};

// Cross-entropy pretraining on boundary-encoded token sequences. Requires
// a normalized, attention-free config. Keeps the best-dev-perplexity
// epoch (the untrained model counts as epoch 0).
TrainResult pretrain_xent(const std::vector<std::vector<int>> &train,
                          const std::vector<std::vector<int>> &dev,
                          const LmConfig &model_cfg, uint64_t vocab_hash,
                          const TrainConfig &cfg,
                          std::ostream *log_out = nullptr);

// Warm start for MWER fine-tuning: embedding, both LSTM layers, and the
// output affine are copied from the pretrained text-only model; attention
// heads, the acoustic projection, and the encoder are fresh random; every
// weight row that consumes attention context is zeroed, so the initial
// model scores exactly like the pretrained one under any placement.
RescoreModel init_from_pretrained(const RescoreModel &pretrained,
                                  const LmConfig &target,
                                  uint64_t expected_vocab_hash, uint64_t seed);

// Expected-word-error training over n-best lists plus lambda * reference
// cross-entropy. Oversized n-best lists are truncated to the top
// max_nbest by acoustic score (with a warning); duplicates are dropped.
// Dev metric is rescored WER at cfg.alpha; keeps the best-dev-WER epoch.
TrainResult train_mwer(const std::vector<Utterance> &train,
                       const std::vector<Utterance> &dev, RescoreModel model,
                       const Vocabulary &vocab, const TrainConfig &cfg,
                       std::ostream *log_out = nullptr);

}  // namespace rescore

#endif  // RESCORE_TRAINING_H_
