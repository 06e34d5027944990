// rescore/tests/attention_test.cc

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

#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "rescore/attention.h"
#include "rescore/lm.h"
#include "rescore/vocab.h"

using namespace rescore;

namespace {

AudioFrames rand_frames(int t, int d, uint64_t seed) {
  AudioFrames f;
  f.t = t;
  f.d = d;
  f.v.resize(static_cast<size_t>(t) * d);
  Rng rng(seed);
  for (auto &x : f.v) x = rng.uniform(-1.0, 1.0);
  return f;
}

Vocabulary toy_vocab() {
  return Vocabulary::from_tokens({"play", "song", "stop", "next", "music"});
}

LmConfig attn_config(const Vocabulary &vocab, Placement p, EncoderKind e) {
  LmConfig c;
  c.vocab_size = vocab.size();
  c.embed_dim = 6;
  c.hidden_dim = 5;
  c.context_dim = 4;
  c.attn_dim = 3;
  c.frame_dim = 7;
  c.placement = p;
  c.encoder = e;
  return c;
}

// Copy the attention model's trunk into a plain model of matching dims.
// Context-consuming matrices keep only their leading (non-context) rows.
void copy_trunk(const RescoreModel &src, RescoreModel *dst) {
  auto copy_rows = [](const nn::Tensor &from, nn::Tensor to) {
    std::memcpy(to.values().data(), from.values().data(),
                to.values().size() * sizeof(double));
  };
  copy_rows(src.params().embed, dst->params().embed);
  copy_rows(src.params().l1.w_ih, dst->params().l1.w_ih);
  copy_rows(src.params().l1.w_hh, dst->params().l1.w_hh);
  copy_rows(src.params().l1.b, dst->params().l1.b);
  copy_rows(src.params().l2.w_ih, dst->params().l2.w_ih);
  copy_rows(src.params().l2.w_hh, dst->params().l2.w_hh);
  copy_rows(src.params().l2.b, dst->params().l2.b);
  copy_rows(src.params().out_w, dst->params().out_w);
  copy_rows(src.params().out_b, dst->params().out_b);
}

// Zero every attention parameter and every context-consuming weight row,
// which must reduce the model to its text-only trunk.
void zero_context_paths(RescoreModel *m) {
  const LmConfig &c = m->config();
  auto zero_all = [](nn::Tensor t) {
    if (!t.defined()) return;
    std::fill(t.values().begin(), t.values().end(), 0.0);
  };
  for (auto head : {&m->params().attn_rnn, &m->params().attn_out}) {
    zero_all(head->w_q);
    zero_all(head->b_q);
    zero_all(head->w_k);
    zero_all(head->b_k);
  }
  zero_all(m->params().proj_w);
  zero_all(m->params().proj_b);
  zero_all(m->params().enc.cnn_kernel);
  zero_all(m->params().enc.tdnn_w);
  zero_all(m->params().enc.tdnn_b);
  for (auto lstm : {&m->params().enc.py1, &m->params().enc.py2}) {
    zero_all(lstm->w_ih);
    zero_all(lstm->w_hh);
    zero_all(lstm->b);
  }
  auto zero_tail_rows = [](nn::Tensor t, int keep_rows) {
    std::fill(t.values().begin() + static_cast<size_t>(keep_rows) * t.dim(1),
              t.values().end(), 0.0);
  };
  if (c.placement == Placement::kA1 || c.placement == Placement::kA1A3)
    zero_tail_rows(m->params().l1.w_ih, c.embed_dim);
  if (c.placement == Placement::kA2)
    zero_tail_rows(m->params().l2.w_ih, c.hidden_dim);
  if (c.uses_out_context())
    zero_tail_rows(m->params().out_w, c.hidden_dim);
}

}  // namespace

TEST_SUITE("attention") {

TEST_CASE("enum string round trips") {
  for (auto p : {Placement::kNone, Placement::kA1, Placement::kA2,
                 Placement::kA3, Placement::kA1A3})
    CHECK(placement_from_string(to_string(p)) == p);
  for (auto e : {EncoderKind::kNone, EncoderKind::kCnn, EncoderKind::kTdnn,
                 EncoderKind::kPylstm})
    CHECK(encoder_from_string(to_string(e)) == e);
  CHECK(placement_from_string("a1+a3") == Placement::kA1A3);
  CHECK_THROWS_AS(placement_from_string("a9"), Error);
  CHECK_THROWS_AS(encoder_from_string("dnn"), Error);
}

TEST_CASE("project_am identity, shape, zero") {
  AudioFrames f = rand_frames(5, 3, 1);
  nn::Tensor x = frames_tensor(f);
  nn::Tensor eye = nn::Tensor::constant(
      {3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  nn::Tensor z3 = nn::Tensor::zeros({3});
  nn::Tensor same = project_am(x, eye, z3);
  REQUIRE(same.dim(0) == 5);
  for (int i = 0; i < same.numel(); ++i) CHECK(same.values()[i] == f.v[i]);

  nn::Tensor proj = project_am(x, nn::Tensor::zeros({3, 2}),
                               nn::Tensor::zeros({2}));
  CHECK(proj.dim(0) == 5);
  CHECK(proj.dim(1) == 2);
  for (double v : proj.values()) CHECK(v == 0.0);

  CHECK_THROWS_AS(project_am(x, nn::Tensor::zeros({4, 2}),
                             nn::Tensor::zeros({2})),
                  DimError);
}

TEST_CASE("encoder output lengths") {
  // none -> T, cnn -> ceil(T/3), tdnn -> T, pylstm -> floor(floor(T/2)/2)
  for (int t = 1; t <= 12; ++t) {
    CHECK(encoder_output_len(EncoderKind::kNone, t) == t);
    CHECK(encoder_output_len(EncoderKind::kCnn, t) == (t + 2) / 3);
    CHECK(encoder_output_len(EncoderKind::kTdnn, t) == t);
  }
  CHECK(encoder_output_len(EncoderKind::kPylstm, 8) == 2);
  CHECK(encoder_output_len(EncoderKind::kPylstm, 9) == 2);
  CHECK(encoder_output_len(EncoderKind::kPylstm, 4) == 1);
  CHECK(encoder_output_len(EncoderKind::kPylstm, 12) == 3);
}

TEST_CASE("pylstm halves twice and rejects short input") {
  Rng rng(5);
  const int c = 3;
  auto mk_lstm = [&rng](int in, int hd) {
    nn::LstmParams p;
    auto fill = [&rng](nn::Tensor t) {
      for (auto &x : t.values()) x = rng.uniform(-0.5, 0.5);
    };
    p.w_ih = nn::Tensor::zeros({in, 4 * hd});
    p.w_hh = nn::Tensor::zeros({hd, 4 * hd});
    p.b = nn::Tensor::zeros({4 * hd});
    fill(p.w_ih);
    fill(p.w_hh);
    return p;
  };
  auto l1 = mk_lstm(2 * c, c), l2 = mk_lstm(2 * c, c);
  for (int t : {4, 8, 9, 11}) {
    AudioFrames f = rand_frames(t, c, t);
    nn::Tensor out = encode_pylstm(frames_tensor(f), l1, l2);
    CHECK(out.dim(0) == (t / 2) / 2);
    CHECK(out.dim(1) == c);
  }
  AudioFrames tiny = rand_frames(3, c, 1);
  CHECK_THROWS_AS(encode_pylstm(frames_tensor(tiny), l1, l2), Error);
}

TEST_CASE("tdnn preserves length and translation invariance") {
  Rng rng(6);
  const int c = 4;
  nn::Tensor w = nn::Tensor::zeros({4 * c, c});
  nn::Tensor b = nn::Tensor::zeros({c});
  for (auto &x : w.values()) x = rng.uniform(-0.5, 0.5);

  for (int t : {1, 5}) {
    AudioFrames f = rand_frames(t, c, t);
    nn::Tensor out = encode_tdnn(frames_tensor(f), w, b);
    CHECK(out.dim(0) == t);
    CHECK(out.dim(1) == c);
  }

  // constant input: every spliced window is identical, so is every output
  std::vector<double> row = {0.3, -0.1, 0.7, 0.2};
  AudioFrames cf;
  cf.t = 6;
  cf.d = c;
  for (int t = 0; t < 6; ++t) cf.v.insert(cf.v.end(), row.begin(), row.end());
  nn::Tensor out = encode_tdnn(frames_tensor(cf), w, b);
  for (int t = 1; t < 6; ++t)
    for (int k = 0; k < c; ++k)
      CHECK(out.values()[t * c + k] == doctest::Approx(out.values()[k]));
}

TEST_CASE("attend singleton, zero maps, convex hull") {
  Rng rng(7);
  const int hd = 4, c = 3, a = 2;
  AttentionHead head;
  head.w_q = nn::Tensor::zeros({hd, a});
  head.b_q = nn::Tensor::zeros({a});
  head.w_k = nn::Tensor::zeros({c, a});
  head.b_k = nn::Tensor::zeros({a});

  nn::Tensor query = nn::Tensor::constant({hd}, {0.5, -0.2, 0.1, 0.9});

  // single frame: weight 1, context equals the frame
  nn::Tensor one = nn::Tensor::constant({1, c}, {0.4, -0.6, 0.2});
  auto r1 = attend(query, one, head);
  CHECK(r1.weights.values()[0] == 1.0);
  for (int k = 0; k < c; ++k)
    CHECK(r1.context.values()[k] == one.values()[k]);

  // zero maps: uniform weights, mean frame
  AudioFrames f = rand_frames(5, c, 3);
  nn::Tensor enc = frames_tensor(f);
  auto r2 = attend(query, enc, head);
  for (double w : r2.weights.values())
    CHECK(w == doctest::Approx(0.2).epsilon(1e-12));
  for (int k = 0; k < c; ++k) {
    double mean = 0.0;
    for (int t = 0; t < 5; ++t) mean += f.at(t, k);
    CHECK(r2.context.values()[k] == doctest::Approx(mean / 5).epsilon(1e-12));
  }

  // random maps: weights sum to 1, context inside per-coordinate hull
  for (auto &x : head.w_q.values()) x = rng.uniform(-1.0, 1.0);
  for (auto &x : head.w_k.values()) x = rng.uniform(-1.0, 1.0);
  auto r3 = attend(query, enc, head);
  double total = 0.0;
  for (double w : r3.weights.values()) {
    CHECK(w >= 0.0);
    total += w;
  }
  CHECK(std::fabs(total - 1.0) < 1e-6);
  for (int k = 0; k < c; ++k) {
    double lo = 1e300, hi = -1e300;
    for (int t = 0; t < 5; ++t) {
      lo = std::min(lo, f.at(t, k));
      hi = std::max(hi, f.at(t, k));
    }
    CHECK(r3.context.values()[k] >= lo - 1e-12);
    CHECK(r3.context.values()[k] <= hi + 1e-12);
  }
}

TEST_CASE("attend gradient vs finite differences") {
  Rng rng(17);
  const int hd = 3, c = 4, a = 3;
  AttentionHead head;
  auto mk = [&rng](nn::Shape shape) {
    int n = 1;
    for (int d : shape) n *= d;
    std::vector<double> v(n);
    for (auto &x : v) x = rng.uniform(-0.8, 0.8);
    return nn::Tensor::param(shape, std::move(v));
  };
  head.w_q = mk({hd, a});
  head.b_q = mk({a});
  head.w_k = mk({c, a});
  head.b_k = mk({a});
  nn::Tensor query = mk({hd});
  nn::Tensor enc = mk({5, c});

  std::vector<nn::Tensor> params = {head.w_q, head.b_q, head.w_k,
                                    head.b_k, query, enc};
  auto f = [&] {
    auto r = attend(query, enc, head);
    return nn::dot_const(r.context, {0.7, -0.3, 1.1, 0.4});
  };
  CHECK(nn::grad_check(f, std::span<nn::Tensor>(params), 1e-5) < 1e-6);
}

TEST_CASE("attention weights sum to 1 in every placement and encoder") {
  Vocabulary v = toy_vocab();
  auto ids = v.encode_tokens("play song stop next");
  struct Combo {
    Placement p;
    EncoderKind e;
  };
  std::vector<Combo> combos = {{Placement::kA1, EncoderKind::kNone},
                               {Placement::kA2, EncoderKind::kNone},
                               {Placement::kA3, EncoderKind::kNone},
                               {Placement::kA1A3, EncoderKind::kNone},
                               {Placement::kA3, EncoderKind::kCnn},
                               {Placement::kA3, EncoderKind::kTdnn},
                               {Placement::kA3, EncoderKind::kPylstm},
                               {Placement::kA1A3, EncoderKind::kCnn}};
  for (auto combo : combos) {
    CAPTURE(to_string(combo.p));
    CAPTURE(to_string(combo.e));
    LmConfig cfg = attn_config(v, combo.p, combo.e);
    RescoreModel m = RescoreModel::random_init(cfg, v.hash(), 21);
    AudioFrames f = rand_frames(6, cfg.frame_dim, 9);
    nn::Tensor enc = m.encode_audio(f);
    CHECK(enc.dim(0) == encoder_output_len(combo.e, 6));
    CHECK(enc.dim(1) == cfg.context_dim);

    std::vector<nn::Tensor> weights;
    auto scores = m.forward_scores(ids, &enc, &weights);
    CHECK(scores.size() == ids.size() - 1);
    CHECK(!weights.empty());
    for (const auto &w : weights) {
      double total = 0.0;
      for (double x : w.values()) {
        CHECK(x >= 0.0);
        total += x;
      }
      CHECK(std::fabs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("zero context paths reproduce the plain model bit for bit") {
  Vocabulary v = toy_vocab();
  auto ids = v.encode_tokens("play song stop");
  for (auto pl : {Placement::kA1, Placement::kA2, Placement::kA3,
                  Placement::kA1A3}) {
    for (auto en : {EncoderKind::kNone, EncoderKind::kCnn}) {
      CAPTURE(to_string(pl));
      CAPTURE(to_string(en));
      LmConfig cfg = attn_config(v, pl, en);
      RescoreModel attn_model = RescoreModel::random_init(cfg, v.hash(), 33);
      zero_context_paths(&attn_model);

      LmConfig plain_cfg = cfg;
      plain_cfg.placement = Placement::kNone;
      plain_cfg.encoder = EncoderKind::kNone;
      RescoreModel plain = RescoreModel::random_init(plain_cfg, v.hash(), 99);
      copy_trunk(attn_model, &plain);

      AudioFrames f = rand_frames(6, cfg.frame_dim, 4);
      nn::Tensor enc = attn_model.encode_audio(f);
      auto sa = attn_model.forward_scores(ids, &enc);
      auto sp = plain.forward_scores(ids, nullptr);
      REQUIRE(sa.size() == sp.size());
      for (size_t i = 0; i < sa.size(); ++i)
        for (int k = 0; k < sa[i].dim(0); ++k)
          CHECK(std::fabs(sa[i].values()[k] - sp[i].values()[k]) < 1e-12);
    }
  }
}

TEST_CASE("full attention model gradient vs finite differences") {
  Vocabulary v = toy_vocab();
  LmConfig cfg = attn_config(v, Placement::kA1A3, EncoderKind::kCnn);
  cfg.embed_dim = 4;
  cfg.hidden_dim = 4;
  cfg.context_dim = 3;
  cfg.attn_dim = 2;
  cfg.frame_dim = 3;
  RescoreModel m = RescoreModel::random_init(cfg, v.hash(), 55);
  AudioFrames f = rand_frames(5, cfg.frame_dim, 6);
  auto ids = v.encode_tokens("play song");

  std::vector<nn::Tensor> params;
  for (auto &np : m.named_params()) params.push_back(np.tensor);
  auto loss = [&] {
    nn::Tensor enc = m.encode_audio(f);
    return m.sequence_nll_t(ids, &enc);
  };
  CHECK(nn::grad_check(loss, std::span<nn::Tensor>(params), 1e-5) < 1e-4);
}

}  // TEST_SUITE
