// rescore/tests/training_test.cc

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
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rescore/mwer.h"
#include "rescore/rescore_eval.h"
#include "rescore/simulator.h"
#include "rescore/training.h"

using namespace rescore;

namespace {

// Small corpus + vocab shared by most cases here.
struct Fixture {
  GrammarSpec grammar = GrammarSpec::builtin();
  Vocabulary vocab = Vocabulary::from_tokens(grammar.vocabulary());

  std::vector<std::vector<int>> encode(const std::vector<std::string> &texts) {
    std::vector<std::vector<int>> ids;
    for (const auto &t : texts) ids.push_back(vocab.encode_tokens(t));
    return ids;
  }
};

LmConfig tiny_cfg(const Vocabulary &v) {
  LmConfig cfg;
  cfg.vocab_size = v.size();
  cfg.embed_dim = 16;
  cfg.hidden_dim = 16;
  return cfg;
}

std::vector<std::vector<double>> values_of(const RescoreModel &m) {
  std::vector<std::vector<double>> s;
  for (const auto &np : m.named_params()) s.push_back(np.tensor.values());
  return s;
}

bool same_values(const RescoreModel &a, const RescoreModel &b) {
  auto va = values_of(a), vb = values_of(b);
  if (va.size() != vb.size()) return false;
  for (size_t i = 0; i < va.size(); ++i)
    if (va[i] != vb[i]) return false;
  return true;
}

AudioFrames random_frames(int t, int d, uint64_t seed) {
  AudioFrames f;
  f.t = t;
  f.d = d;
  f.v.resize(static_cast<size_t>(t) * d);
  Rng rng(seed);
  for (double &x : f.v) x = rng.gaussian();
  return f;
}

// Add-1 unigram perplexity over the same predicted positions the LSTM is
// scored on (everything after the initial boundary token). A pure counting
// oracle: any trained model has to beat this to prove it learned anything.
double unigram_ppl(const std::vector<std::vector<int>> &train,
                   const std::vector<std::vector<int>> &dev, int vocab_size) {
  std::map<int, long> counts;
  long total = 0;
  for (const auto &seq : train)
    for (size_t i = 1; i < seq.size(); ++i) {
      ++counts[seq[i]];
      ++total;
    }
  double nll = 0;
  long m = 0;
  for (const auto &seq : dev)
    for (size_t i = 1; i < seq.size(); ++i) {
      long c = counts.count(seq[i]) ? counts[seq[i]] : 0;
      nll += -std::log(static_cast<double>(c + 1) / (total + vocab_size));
      ++m;
    }
  return std::exp(nll / m);
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("sgd step applies exactly p -= lr * (scale * g)") {
  Fixture fx;
  RescoreModel m = RescoreModel::random_init(tiny_cfg(fx.vocab), fx.vocab.hash(), 7);
  auto ids = fx.encode(gen_corpus(fx.grammar, 4, 21));

  nn::Tape tape;
  {
    nn::TapeScope scope(tape);
    nn::Tensor loss = m.xent_loss_t(ids);
    tape.backward(loss);
  }
  auto before = values_of(m);
  std::vector<std::vector<double>> grads;
  for (const auto &np : m.named_params()) grads.push_back(np.tensor.grad());

  TrainConfig cfg;
  cfg.optimizer = "sgd";
  cfg.lr = 0.05;
  cfg.clip_norm = 0.05;  // small enough that clipping actually fires
  std::vector<nn::Tensor> params;
  for (const auto &np : m.named_params()) params.push_back(np.tensor);
  Optimizer opt(params, cfg);
  opt.step();

  double n2 = 0;
  for (const auto &g : grads)
    for (double x : g) n2 += x * x;
  const double norm = std::sqrt(n2);
  CHECK(opt.last_grad_norm() == norm);
  const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
  CHECK(scale < 1.0);  // the clip fired, otherwise this case tests nothing

  auto after = values_of(m);
  for (size_t i = 0; i < after.size(); ++i)
    for (size_t k = 0; k < after[i].size(); ++k) {
      double want = before[i][k];
      want -= cfg.lr * (scale * grads[i][k]);
      CHECK(after[i][k] == want);  // bit-exact, not approximate
    }
  // gradients were zeroed by the step
  for (const auto &np : m.named_params())
    for (double g : np.tensor.grad()) CHECK(g == 0.0);
}

TEST_CASE("repeated sgd steps on one batch do not increase the loss") {
  Fixture fx;
  RescoreModel m = RescoreModel::random_init(tiny_cfg(fx.vocab), fx.vocab.hash(), 3);
  auto ids = fx.encode(gen_corpus(fx.grammar, 6, 5));

  TrainConfig cfg;
  cfg.optimizer = "sgd";
  cfg.lr = 1e-3;
  std::vector<nn::Tensor> params;
  for (const auto &np : m.named_params()) params.push_back(np.tensor);
  Optimizer opt(params, cfg);

  double prev = 1e300;
  for (int it = 0; it < 5; ++it) {
    nn::Tape tape;
    nn::TapeScope scope(tape);
    nn::Tensor loss = m.xent_loss_t(ids);
    CHECK(loss.item() <= prev + 1e-12);
    prev = loss.item();
    tape.backward(loss);
    opt.step();
  }
}

TEST_CASE("adam moves parameters and keeps them finite") {
  Fixture fx;
  RescoreModel m = RescoreModel::random_init(tiny_cfg(fx.vocab), fx.vocab.hash(), 3);
  RescoreModel init = RescoreModel::random_init(tiny_cfg(fx.vocab), fx.vocab.hash(), 3);
  auto ids = fx.encode(gen_corpus(fx.grammar, 4, 9));
  TrainConfig cfg;  // adam defaults
  std::vector<nn::Tensor> params;
  for (const auto &np : m.named_params()) params.push_back(np.tensor);
  Optimizer opt(params, cfg);
  for (int it = 0; it < 2; ++it) {
    nn::Tape tape;
    nn::TapeScope scope(tape);
    nn::Tensor loss = m.xent_loss_t(ids);
    tape.backward(loss);
    opt.step();
  }
  CHECK_FALSE(same_values(m, init));
  for (const auto &s : values_of(m))
    for (double x : s) CHECK(std::isfinite(x));
}

TEST_CASE("pretrain with lr 0 changes neither parameters nor perplexity") {
  Fixture fx;
  auto train = fx.encode(gen_corpus(fx.grammar, 8, 31));
  auto dev = fx.encode(gen_corpus(fx.grammar, 4, 32, "dev"));

  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.optimizer = "sgd";
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 5;
  TrainResult res = pretrain_xent(train, dev, tiny_cfg(fx.vocab),
                                  fx.vocab.hash(), cfg);
  RescoreModel fresh =
      RescoreModel::random_init(tiny_cfg(fx.vocab), fx.vocab.hash(), cfg.seed);
  CHECK(same_values(res.model, fresh));
  REQUIRE(res.log.size() >= 2);
  for (const EpochLog &e : res.log)
    CHECK(e.dev_metric == res.log[0].dev_metric);
}

TEST_CASE("pretraining beats an add-1 unigram oracle within two epochs") {
  Fixture fx;
  auto train = fx.encode(gen_corpus(fx.grammar, 250, 77));
  auto dev = fx.encode(gen_corpus(fx.grammar, 60, 78, "dev"));
  double oracle = unigram_ppl(train, dev, fx.vocab.size());

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.lr = 3e-3;
  cfg.batch_size = 8;
  cfg.seed = 2;
  std::ostringstream log;
  TrainResult res = pretrain_xent(train, dev, tiny_cfg(fx.vocab),
                                  fx.vocab.hash(), cfg, &log);
  CHECK(res.best_dev < oracle);
  // the log carries one line per epoch plus the initial evaluation
  CHECK(log.str().find("epoch 0") != std::string::npos);
  CHECK(log.str().find("epoch 2") != std::string::npos);
  // best epoch can never be worse than the untrained model
  CHECK(res.best_dev <= res.log[0].dev_metric);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  Fixture fx;
  LmConfig cfg = tiny_cfg(fx.vocab);
  cfg.normalized = false;
  cfg.placement = Placement::kA3;
  cfg.encoder = EncoderKind::kCnn;
  cfg.context_dim = 8;
  cfg.attn_dim = 8;
  cfg.frame_dim = 12;
  RescoreModel m = RescoreModel::random_init(cfg, fx.vocab.hash(), 13);

  const std::string path = "training_roundtrip.ckpt";
  save_checkpoint(m, path, {4, 17.25, "mwer"});
  CheckpointMeta meta;
  RescoreModel loaded = load_checkpoint(path, &meta);
  std::remove(path.c_str());

  CHECK(meta.epoch == 4);
  CHECK(meta.dev_metric == 17.25);
  CHECK(meta.phase == "mwer");
  CHECK(loaded.vocab_hash() == m.vocab_hash());
  CHECK(loaded.config().normalized == cfg.normalized);
  CHECK(loaded.config().placement == cfg.placement);
  CHECK(loaded.config().encoder == cfg.encoder);
  CHECK(same_values(loaded, m));

  // the loaded model scores identically
  AudioFrames audio = random_frames(9, cfg.frame_dim, 3);
  auto ids = fx.vocab.encode_tokens("play some jazz music");
  CHECK(loaded.sequence_score_unnorm(ids, &audio) ==
        m.sequence_score_unnorm(ids, &audio));
}

TEST_CASE("checkpoint loader rejects damaged files") {
  Fixture fx;
  RescoreModel m = RescoreModel::random_init(tiny_cfg(fx.vocab), fx.vocab.hash(), 1);
  const std::string path = "training_damage.ckpt";
  save_checkpoint(m, path);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();

  auto write_bytes = [&](const std::string &b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  // truncation
  write_bytes(bytes.substr(0, bytes.size() - 10));
  CHECK_THROWS_AS(load_checkpoint(path), Error);

  // payload corruption caught by the checksum
  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x40;
  write_bytes(flipped);
  CHECK_THROWS_AS(load_checkpoint(path), Error);

  // future version number named in the message
  std::string versioned = bytes;
  versioned[4] = 9;  // little-endian u32 version right after the magic
  write_bytes(versioned);
  try {
    load_checkpoint(path);
    CHECK(false);
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  // wrong magic
  std::string magic = bytes;
  magic[0] = 'X';
  write_bytes(magic);
  CHECK_THROWS_AS(load_checkpoint(path), Error);

  std::remove(path.c_str());
}

TEST_CASE("transfer init reproduces pretrained scores under every placement") {
  Fixture fx;
  LmConfig base_cfg = tiny_cfg(fx.vocab);
  RescoreModel pre = RescoreModel::random_init(base_cfg, fx.vocab.hash(), 19);

  auto ids = fx.vocab.encode_tokens("what is the weather in boston");
  AudioFrames audio = random_frames(8, 12, 5);
  const double want = pre.sequence_log_prob(ids, nullptr);

  for (Placement p : {Placement::kA1, Placement::kA2, Placement::kA3,
                      Placement::kA1A3}) {
    for (EncoderKind ek : {EncoderKind::kNone, EncoderKind::kCnn}) {
      LmConfig tgt = base_cfg;
      tgt.placement = p;
      tgt.encoder = ek;
      tgt.context_dim = 8;
      tgt.attn_dim = 8;
      tgt.frame_dim = 12;
      RescoreModel warm = init_from_pretrained(pre, tgt, fx.vocab.hash(), 23);
      CHECK(warm.sequence_log_prob(ids, &audio) == want);  // bit-exact
    }
  }

  // identical dims, no attention: a plain parameter copy
  RescoreModel same = init_from_pretrained(pre, base_cfg, fx.vocab.hash(), 23);
  CHECK(same_values(same, pre));

  // guard rails
  CHECK_THROWS_AS(init_from_pretrained(pre, base_cfg, fx.vocab.hash() + 1, 1),
                  Error);
  LmConfig wrong = base_cfg;
  wrong.hidden_dim = 24;
  CHECK_THROWS_AS(init_from_pretrained(pre, wrong, fx.vocab.hash(), 1), Error);
}

TEST_CASE("equal-error n-best with lambda 0 yields exactly zero loss") {
  Fixture fx;
  LmConfig cfg = tiny_cfg(fx.vocab);
  cfg.normalized = false;
  RescoreModel m = RescoreModel::random_init(cfg, fx.vocab.hash(), 5);

  auto ref = fx.vocab.encode_tokens("play the song hello");
  // both hypotheses sit at edit distance 1 from the reference
  auto h1 = fx.vocab.encode_tokens("play a song hello");
  auto h2 = fx.vocab.encode_tokens("play the song stay");

  auto before = values_of(m);
  nn::Tape tape;
  {
    nn::TapeScope scope(tape);
    std::vector<nn::Tensor> lm = {m.sequence_score_t(h1, nullptr),
                                  m.sequence_score_t(h2, nullptr)};
    nn::Tensor g = combine_scores(lm, {-1.0, -2.5}, 1.0);
    nn::Tensor post = nbest_posterior(g);
    nn::Tensor werr_part = mwer_loss(post, relative_edit({1, 1}));
    nn::Tensor loss = total_loss(werr_part, m.sequence_nll_t(ref, nullptr), 0.0);
    CHECK(loss.item() == 0.0);
    tape.backward(loss);
  }
  TrainConfig tc;
  tc.optimizer = "sgd";
  tc.lr = 0.1;
  std::vector<nn::Tensor> params;
  for (const auto &np : m.named_params()) params.push_back(np.tensor);
  Optimizer opt(params, tc);
  opt.step();
  CHECK(values_of(m) == before);
}

TEST_CASE("mwer training is deterministic given the seed") {
  GrammarSpec g = GrammarSpec::builtin();
  Vocabulary vocab = Vocabulary::from_tokens(g.vocabulary());
  PrototypeTable protos = PrototypeTable::make(g, 12, 3, 0.12);
  SimConfig sim;
  sim.frame_dim = 12;
  sim.seed = 3;
  auto train = gen_dataset(g, protos, sim, 12, "train");
  auto dev = gen_dataset(g, protos, sim, 6, "dev");

  LmConfig mc = tiny_cfg(vocab);
  mc.normalized = false;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 11;

  auto run = [&]() {
    RescoreModel m = RescoreModel::random_init(mc, vocab.hash(), cfg.seed);
    return train_mwer(train, dev, std::move(m), vocab, cfg);
  };
  TrainResult a = run();
  TrainResult b = run();
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].dev_metric == b.log[i].dev_metric);
  }
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(same_values(a.model, b.model));
  // the returned dev WER never regresses past the untrained model
  CHECK(a.best_dev <= a.log[0].dev_metric);
}

TEST_CASE("oversized n-best lists are truncated with a warning") {
  GrammarSpec g = GrammarSpec::builtin();
  Vocabulary vocab = Vocabulary::from_tokens(g.vocabulary());
  PrototypeTable protos = PrototypeTable::make(g, 12, 3, 0.12);
  SimConfig sim;
  sim.frame_dim = 12;
  sim.nbest = 8;
  auto train = gen_dataset(g, protos, sim, 6, "train");
  auto dev = gen_dataset(g, protos, sim, 3, "dev");

  LmConfig mc = tiny_cfg(vocab);
  mc.normalized = false;
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  cfg.max_nbest = 2;

  std::ostringstream log;
  RescoreModel m = RescoreModel::random_init(mc, vocab.hash(), 1);
  TrainResult res = train_mwer(train, dev, std::move(m), vocab, cfg, &log);
  CHECK(log.str().find("truncated") != std::string::npos);
  for (const EpochLog &e : res.log) CHECK(std::isfinite(e.train_loss));
}

}  // TEST_SUITE
