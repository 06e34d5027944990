// rescore/lm.h

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

#ifndef RESCORE_LM_H_
#define RESCORE_LM_H_

#include <cstdint>
#include <string>
#include <vector>

#include "rescore/attention.h"
#include "rescore/ops.h"
#include "rescore/tensor.h"

namespace rescore {

struct LmConfig {
  int vocab_size = 0;      // set from the vocabulary
  int embed_dim = 512;
  int hidden_dim = 512;    // two LSTM layers, both this size
  bool normalized = true;  // softmax head vs raw-score head
  Placement placement = Placement::kNone;
  EncoderKind encoder = EncoderKind::kNone;
  int context_dim = 200;
  int attn_dim = 64;
  int frame_dim = 32;      // width of the incoming audio embeddings

  bool has_attention() const { return placement != Placement::kNone; }
  // context concatenated into an LSTM input (delayed one step, the
  // recurrence consumes the previous step's context)
  bool uses_rnn_context() const {
    return placement == Placement::kA1 || placement == Placement::kA2 ||
           placement == Placement::kA1A3;
  }
  // context concatenated before the final affine (current step's context)
  bool uses_out_context() const {
    return placement == Placement::kA3 || placement == Placement::kA1A3;
  }

  void validate() const;
};

struct ModelParams {
  nn::Tensor embed;            // [V x E]
  nn::LstmParams l1, l2;
  nn::Tensor out_w, out_b;     // [(H + C if out context) x V], [V]
  nn::Tensor proj_w, proj_b;   // [D x C], [C]
  EncoderParams enc;
  AttentionHead attn_rnn;      // head feeding the recurrence (A1/A2)
  AttentionHead attn_out;      // head feeding the final affine (A3)
};

struct NamedTensor {
  std::string name;
  nn::Tensor tensor;
};

// Two-layer LSTM language model with optional audio attention. All scoring
// entry points are const and allocate their own recurrent state; the same
// code path runs eagerly for inference and records backward closures when
// a tape is active.
class RescoreModel {
 public:
  RescoreModel() = default;

  // Xavier-uniform weights, zero biases except the forget gates (1.0).
  static RescoreModel random_init(const LmConfig &config, uint64_t vocab_hash,
                                  uint64_t seed);
  // All parameters exactly zero (uniform predictions; used by transfer
  // init and tests).
  static RescoreModel zero_init(const LmConfig &config, uint64_t vocab_hash);

  bool defined() const { return config_.vocab_size > 0; }
  const LmConfig &config() const { return config_; }
  uint64_t vocab_hash() const { return vocab_hash_; }

  ModelParams &params() { return p_; }
  const ModelParams &params() const { return p_; }

  // Every trainable tensor in a stable order (optimizer + checkpoint).
  std::vector<NamedTensor> named_params() const;
  int64_t param_count() const;

  // Projection + encoder over raw frames -> [T' x context_dim]. Compute
  // once per utterance and share across its hypotheses.
  nn::Tensor encode_audio(const AudioFrames &audio) const;

  // Raw output-unit scores, one [V] vector per predicted position
  // 1..L-1 (<s> is never predicted; </s> is). encoded must be present
  // exactly when the model has attention. weights_sink, when non-null,
  // collects every attention weight vector in step order (output head
  // first where both heads fire on one step).
  std::vector<nn::Tensor> forward_scores(
      const std::vector<int> &ids, const nn::Tensor *encoded,
      std::vector<nn::Tensor> *weights_sink = nullptr) const;

  // Sum over positions of the realized next token's score: log softmax
  // scores for the normalized head, raw scores for the unnormalized one.
  nn::Tensor sequence_score_t(const std::vector<int> &ids,
                              const nn::Tensor *encoded) const;

  // Mean -log p(target) over the sequence's predicted tokens; softmax is
  // applied to the raw scores whichever head is configured.
  nn::Tensor sequence_nll_t(const std::vector<int> &ids,
                            const nn::Tensor *encoded) const;

  // Mean -log p(target) over all predicted tokens of the batch
  // (text-only; requires a no-attention model).
  nn::Tensor xent_loss_t(const std::vector<std::vector<int>> &batch) const;

  // Plain-number flavors for evaluation.
  double sequence_log_prob(const std::vector<int> &ids,
                           const AudioFrames *audio) const;
  double sequence_score_unnorm(const std::vector<int> &ids,
                               const AudioFrames *audio) const;

  // exp(total nll / total predicted tokens); normalized no-attention
  // models only.
  double perplexity(const std::vector<std::vector<int>> &corpus) const;

 private:
  LmConfig config_;
  uint64_t vocab_hash_ = 0;
  ModelParams p_;
};

}  // namespace rescore

#endif  // RESCORE_LM_H_
