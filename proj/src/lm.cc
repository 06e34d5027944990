// rescore/lm.cc

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

#include "rescore/lm.h"

#include <algorithm>
#include <cmath>

#include "rescore/common.h"

namespace rescore {

void LmConfig::validate() const {
  RESCORE_CHECK(vocab_size >= 3, "vocab_size must cover the reserved tokens");
  RESCORE_CHECK(embed_dim > 0 && hidden_dim > 0, "model dims must be positive");
  if (has_attention()) {
    RESCORE_CHECK(context_dim > 0 && attn_dim > 0 && frame_dim > 0,
                  "attention dims must be positive");
  } else {
    RESCORE_CHECK(encoder == EncoderKind::kNone,
                  "a context encoder requires an attention placement");
  }
}

namespace {

class Initializer {
 public:
  explicit Initializer(uint64_t seed) : rng_(seed) {}

  // Xavier-uniform over the matrix dimensions.
  nn::Tensor matrix(int rows, int cols) {
    double limit = std::sqrt(6.0 / (rows + cols));
    std::vector<double> v(static_cast<size_t>(rows) * cols);
    for (auto &x : v) x = rng_.uniform(-limit, limit);
    return nn::Tensor::param({rows, cols}, std::move(v));
  }

  static nn::Tensor zeros_param(const nn::Shape &shape) {
    int n = 1;
    for (int d : shape) n *= d;
    return nn::Tensor::param(shape, std::vector<double>(n, 0.0));
  }

  nn::LstmParams lstm(int in, int hidden) {
    nn::LstmParams p;
    p.w_ih = matrix(in, 4 * hidden);
    p.w_hh = matrix(hidden, 4 * hidden);
    p.b = zeros_param({4 * hidden});
    // forget-gate bias 1: remember by default
    for (int k = 0; k < hidden; ++k) p.b.values()[hidden + k] = 1.0;
    return p;
  }

  AttentionHead head(int hidden, int context, int attn) {
    AttentionHead h;
    h.w_q = matrix(hidden, attn);
    h.b_q = zeros_param({attn});
    h.w_k = matrix(context, attn);
    h.b_k = zeros_param({attn});
    return h;
  }

 private:
  Rng rng_;
};

}  // namespace

RescoreModel RescoreModel::random_init(const LmConfig &config,
                                       uint64_t vocab_hash, uint64_t seed) {
  config.validate();
  Initializer init(seed);

  RescoreModel m;
  m.config_ = config;
  m.vocab_hash_ = vocab_hash;

  const int v = config.vocab_size, e = config.embed_dim, h = config.hidden_dim;
  const int c = config.context_dim;
  const bool a1 = config.placement == Placement::kA1 ||
                  config.placement == Placement::kA1A3;
  const bool a2 = config.placement == Placement::kA2;

  ModelParams &p = m.p_;
  p.embed = init.matrix(v, e);
  p.l1 = init.lstm(e + (a1 ? c : 0), h);
  p.l2 = init.lstm(h + (a2 ? c : 0), h);
  p.out_w = init.matrix(h + (config.uses_out_context() ? c : 0), v);
  p.out_b = Initializer::zeros_param({v});

  if (config.has_attention()) {
    p.proj_w = init.matrix(config.frame_dim, c);
    p.proj_b = Initializer::zeros_param({c});
    p.enc.kind = config.encoder;
    switch (config.encoder) {
      case EncoderKind::kNone:
        break;
      case EncoderKind::kCnn:
        p.enc.cnn_kernel = init.matrix(3, 3);
        break;
      case EncoderKind::kTdnn:
        p.enc.tdnn_w = init.matrix(4 * c, c);
        p.enc.tdnn_b = Initializer::zeros_param({c});
        break;
      case EncoderKind::kPylstm:
        p.enc.py1 = init.lstm(2 * c, c);
        p.enc.py2 = init.lstm(2 * c, c);
        break;
    }
    if (config.uses_rnn_context())
      p.attn_rnn = init.head(h, c, config.attn_dim);
    if (config.uses_out_context())
      p.attn_out = init.head(h, c, config.attn_dim);
  }
  return m;
}

RescoreModel RescoreModel::zero_init(const LmConfig &config,
                                     uint64_t vocab_hash) {
  // same layout, every value (including the forget bias) zeroed
  RescoreModel m = random_init(config, vocab_hash, 0);
  for (auto &np : m.named_params())
    std::fill(np.tensor.values().begin(), np.tensor.values().end(), 0.0);
  return m;
}

std::vector<NamedTensor> RescoreModel::named_params() const {
  std::vector<NamedTensor> out;
  auto add = [&out](const char *name, const nn::Tensor &t) {
    if (t.defined()) out.push_back({name, t});
  };
  add("embed", p_.embed);
  add("l1.w_ih", p_.l1.w_ih);
  add("l1.w_hh", p_.l1.w_hh);
  add("l1.b", p_.l1.b);
  add("l2.w_ih", p_.l2.w_ih);
  add("l2.w_hh", p_.l2.w_hh);
  add("l2.b", p_.l2.b);
  add("out.w", p_.out_w);
  add("out.b", p_.out_b);
  add("proj.w", p_.proj_w);
  add("proj.b", p_.proj_b);
  add("enc.cnn.kernel", p_.enc.cnn_kernel);
  add("enc.tdnn.w", p_.enc.tdnn_w);
  add("enc.tdnn.b", p_.enc.tdnn_b);
  add("enc.py1.w_ih", p_.enc.py1.w_ih);
  add("enc.py1.w_hh", p_.enc.py1.w_hh);
  add("enc.py1.b", p_.enc.py1.b);
  add("enc.py2.w_ih", p_.enc.py2.w_ih);
  add("enc.py2.w_hh", p_.enc.py2.w_hh);
  add("enc.py2.b", p_.enc.py2.b);
  add("attn_rnn.w_q", p_.attn_rnn.w_q);
  add("attn_rnn.b_q", p_.attn_rnn.b_q);
  add("attn_rnn.w_k", p_.attn_rnn.w_k);
  add("attn_rnn.b_k", p_.attn_rnn.b_k);
  add("attn_out.w_q", p_.attn_out.w_q);
  add("attn_out.b_q", p_.attn_out.b_q);
  add("attn_out.w_k", p_.attn_out.w_k);
  add("attn_out.b_k", p_.attn_out.b_k);
  return out;
}

int64_t RescoreModel::param_count() const {
  int64_t n = 0;
  for (const auto &np : named_params()) n += np.tensor.numel();
  return n;
}

nn::Tensor RescoreModel::encode_audio(const AudioFrames &audio) const {
  RESCORE_CHECK(config_.has_attention(),
                "audio provided to a model without attention");
  RESCORE_CHECK(audio.d == config_.frame_dim, "audio frames are ", audio.d,
                "-dimensional, model expects ", config_.frame_dim);
  nn::Tensor raw = frames_tensor(audio);
  return encode_frames(project_am(raw, p_.proj_w, p_.proj_b), p_.enc);
}

std::vector<nn::Tensor> RescoreModel::forward_scores(
    const std::vector<int> &ids, const nn::Tensor *encoded,
    std::vector<nn::Tensor> *weights_sink) const {
  RESCORE_CHECK(ids.size() >= 2, "sequence must include both boundaries");
  for (int id : ids)
    RESCORE_CHECK(id >= 0 && id < config_.vocab_size, "token id ", id,
                  " outside vocabulary of ", config_.vocab_size);
  const bool attn = config_.has_attention();
  if (attn)
    RESCORE_CHECK(encoded != nullptr, "this model attends to audio but none was given");
  else
    RESCORE_CHECK(encoded == nullptr, "audio provided to a model without attention");

  const int h = config_.hidden_dim, c = config_.context_dim;
  const int len = static_cast<int>(ids.size());
  const bool rnn_ctx = config_.uses_rnn_context();
  const bool out_ctx = config_.uses_out_context();
  const bool ctx_to_l1 = config_.placement == Placement::kA1 ||
                         config_.placement == Placement::kA1A3;

  nn::LstmState s1{nn::Tensor::zeros({h}), nn::Tensor::zeros({h})};
  nn::LstmState s2{nn::Tensor::zeros({h}), nn::Tensor::zeros({h})};
  // the recurrence consumes the previous step's context; zero before step 1
  nn::Tensor ctx_prev = rnn_ctx ? nn::Tensor::zeros({c}) : nn::Tensor();

  std::vector<nn::Tensor> scores;
  scores.reserve(len - 1);
  for (int pos = 1; pos < len; ++pos) {
    nn::Tensor x = nn::row(p_.embed, ids[pos - 1]);

    // both heads query the top hidden state from before this update
    nn::Tensor ctx_out, ctx_cur;
    if (out_ctx) {
      AttendResult r = attend(s2.h, *encoded, p_.attn_out);
      ctx_out = r.context;
      if (weights_sink) weights_sink->push_back(r.weights);
    }
    if (rnn_ctx && pos < len - 1) {  // consumed next step; skip on the last
      AttendResult r = attend(s2.h, *encoded, p_.attn_rnn);
      ctx_cur = r.context;
      if (weights_sink) weights_sink->push_back(r.weights);
    }

    s1 = nn::lstm_step(ctx_to_l1 ? nn::concat(x, ctx_prev) : x, s1, p_.l1);
    nn::Tensor l2_in = config_.placement == Placement::kA2
                           ? nn::concat(s1.h, ctx_prev)
                           : s1.h;
    s2 = nn::lstm_step(l2_in, s2, p_.l2);

    scores.push_back(nn::affine(
        out_ctx ? nn::concat(s2.h, ctx_out) : s2.h, p_.out_w, p_.out_b));
    if (ctx_cur.defined()) ctx_prev = ctx_cur;
  }
  return scores;
}

nn::Tensor RescoreModel::sequence_score_t(const std::vector<int> &ids,
                                          const nn::Tensor *encoded) const {
  auto scores = forward_scores(ids, encoded);
  std::vector<nn::Tensor> picks;
  picks.reserve(scores.size());
  for (size_t pos = 1; pos < ids.size(); ++pos) {
    nn::Tensor s = scores[pos - 1];
    picks.push_back(
        nn::pick(config_.normalized ? nn::log_softmax(s) : s, ids[pos]));
  }
  return nn::sum(nn::stack(picks));
}

nn::Tensor RescoreModel::sequence_nll_t(const std::vector<int> &ids,
                                        const nn::Tensor *encoded) const {
  auto scores = forward_scores(ids, encoded);
  std::vector<nn::Tensor> nlls;
  nlls.reserve(scores.size());
  for (size_t pos = 1; pos < ids.size(); ++pos)
    nlls.push_back(
        nn::scale(nn::pick(nn::log_softmax(scores[pos - 1]), ids[pos]), -1.0));
  return nn::mean_of(nlls);
}

nn::Tensor RescoreModel::xent_loss_t(
    const std::vector<std::vector<int>> &batch) const {
  RESCORE_CHECK(!batch.empty(), "cross-entropy over an empty batch");
  RESCORE_CHECK(!config_.has_attention(),
                "text-only cross entropy on an attention model");
  std::vector<nn::Tensor> nlls;  // one per predicted token, batch-wide mean
  for (const auto &ids : batch) {
    auto scores = forward_scores(ids, nullptr);
    for (size_t pos = 1; pos < ids.size(); ++pos)
      nlls.push_back(nn::scale(
          nn::pick(nn::log_softmax(scores[pos - 1]), ids[pos]), -1.0));
  }
  return nn::mean_of(nlls);
}

double RescoreModel::sequence_log_prob(const std::vector<int> &ids,
                                       const AudioFrames *audio) const {
  RESCORE_CHECK(config_.normalized,
                "sequence_log_prob needs the normalized head");
  if (audio) {
    nn::Tensor enc = encode_audio(*audio);
    return sequence_score_t(ids, &enc).item();
  }
  return sequence_score_t(ids, nullptr).item();
}

double RescoreModel::sequence_score_unnorm(const std::vector<int> &ids,
                                           const AudioFrames *audio) const {
  RESCORE_CHECK(!config_.normalized,
                "sequence_score_unnorm needs the unnormalized head");
  if (audio) {
    nn::Tensor enc = encode_audio(*audio);
    return sequence_score_t(ids, &enc).item();
  }
  return sequence_score_t(ids, nullptr).item();
}

double RescoreModel::perplexity(
    const std::vector<std::vector<int>> &corpus) const {
  RESCORE_CHECK(config_.normalized, "perplexity needs the normalized head");
  RESCORE_CHECK(!config_.has_attention(),
                "perplexity is defined on text-only models");
  RESCORE_CHECK(!corpus.empty(), "perplexity over an empty corpus");
  double total_nll = 0.0;
  int64_t tokens = 0;
  for (const auto &ids : corpus) {
    total_nll -= sequence_score_t(ids, nullptr).item();
    tokens += static_cast<int64_t>(ids.size()) - 1;
  }
  RESCORE_CHECK(tokens > 0, "no predicted tokens in corpus");
  return std::exp(total_nll / static_cast<double>(tokens));
}

}  // namespace rescore
