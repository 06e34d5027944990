// rescore/tests/lm_test.cc

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
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "rescore/lm.h"
#include "rescore/vocab.h"

using namespace rescore;

namespace {

Vocabulary toy_vocab() {
  return Vocabulary::from_tokens({"play", "song", "stop", "next", "music"});
}

LmConfig toy_config(const Vocabulary &vocab) {
  LmConfig c;
  c.vocab_size = vocab.size();
  c.embed_dim = 6;
  c.hidden_dim = 5;
  c.context_dim = 4;
  c.attn_dim = 3;
  c.frame_dim = 7;
  return c;
}

}  // namespace

TEST_SUITE("lm") {

TEST_CASE("vocabulary ids, OOV, and round trip") {
  Vocabulary v = toy_vocab();
  CHECK(v.size() == 8);  // 3 reserved + 5
  CHECK(v.encode("<s>") == Vocabulary::kBos);
  CHECK(v.encode("</s>") == Vocabulary::kEos);
  CHECK(v.encode("zzyzx") == Vocabulary::kUnk);
  for (int id = 0; id < v.size(); ++id) CHECK(v.encode(v.decode(id)) == id);

  auto ids = v.encode_tokens("play song");
  CHECK(ids.size() == 4);
  CHECK(ids.front() == Vocabulary::kBos);
  CHECK(ids[1] == v.encode("play"));
  CHECK(ids[2] == v.encode("song"));
  CHECK(ids.back() == Vocabulary::kEos);

  auto oov = v.encode_tokens("play zzyzx");
  CHECK(oov[2] == Vocabulary::kUnk);

  auto empty = v.encode_tokens("");
  CHECK(empty == std::vector<int>{Vocabulary::kBos, Vocabulary::kEos});

  for (int id : v.encode_tokens("play whatever stop")) {
    CHECK(id >= 0);
    CHECK(id < v.size());
  }

  std::string path = "/tmp/rescore_vocab_test.txt";
  v.save(path);
  Vocabulary loaded = Vocabulary::load(path);
  CHECK(loaded.size() == v.size());
  CHECK(loaded.hash() == v.hash());
  CHECK(loaded.encode("music") == v.encode("music"));
  std::remove(path.c_str());
}

TEST_CASE("strip_boundaries keeps only content tokens") {
  Vocabulary v = toy_vocab();
  auto ids = v.encode_tokens("play song");
  auto inner = strip_boundaries(ids);
  CHECK(inner.size() == 2);
  CHECK(inner[0] == v.encode("play"));
}

TEST_CASE("forward_scores shape and uniform zero model") {
  Vocabulary v = toy_vocab();
  RescoreModel m = RescoreModel::zero_init(toy_config(v), v.hash());
  auto ids = v.encode_tokens("play song stop");
  auto scores = m.forward_scores(ids, nullptr);
  REQUIRE(scores.size() == ids.size() - 1);
  for (const auto &s : scores) {
    REQUIRE(s.dim(0) == v.size());
    auto probs = nn::softmax(s);
    for (double p : probs.values())
      CHECK(std::fabs(p - 1.0 / v.size()) < 1e-12);
  }
}

TEST_CASE("forward_scores rejects malformed input") {
  Vocabulary v = toy_vocab();
  RescoreModel m = RescoreModel::random_init(toy_config(v), v.hash(), 1);
  CHECK_THROWS_AS(m.forward_scores({Vocabulary::kBos}, nullptr), Error);

  // audio handed to a text-only model
  nn::Tensor fake = nn::Tensor::zeros({3, 4});
  CHECK_THROWS_AS(m.forward_scores(v.encode_tokens("play"), &fake), Error);

  // attention model without audio
  LmConfig ac = toy_config(v);
  ac.placement = Placement::kA3;
  RescoreModel am = RescoreModel::random_init(ac, v.hash(), 1);
  CHECK_THROWS_AS(am.forward_scores(v.encode_tokens("play"), nullptr), Error);
}

TEST_CASE("scoring is deterministic") {
  Vocabulary v = toy_vocab();
  RescoreModel m = RescoreModel::random_init(toy_config(v), v.hash(), 42);
  auto ids = v.encode_tokens("play the song");
  double a = m.sequence_log_prob(ids, nullptr);
  double b = m.sequence_log_prob(ids, nullptr);
  CHECK(a == b);
  CHECK(a <= 0.0);
}

TEST_CASE("uniform model sequence probability and perplexity") {
  Vocabulary v = toy_vocab();
  RescoreModel m = RescoreModel::zero_init(toy_config(v), v.hash());
  auto ids = v.encode_tokens("play song stop");  // 4 predicted positions
  double lp = m.sequence_log_prob(ids, nullptr);
  CHECK(lp == doctest::Approx(4.0 * std::log(1.0 / v.size())).epsilon(1e-12));

  double ppl = m.perplexity({ids, v.encode_tokens("next music")});
  CHECK(ppl == doctest::Approx(static_cast<double>(v.size())).epsilon(1e-10));
  CHECK(ppl >= 1.0);
}

TEST_CASE("per-step probabilities sum to 1 and match brute force") {
  Vocabulary v = toy_vocab();
  RescoreModel m = RescoreModel::random_init(toy_config(v), v.hash(), 7);
  auto ids = v.encode_tokens("play song next");
  auto scores = m.forward_scores(ids, nullptr);

  // brute force: recompute each step's softmax from raw scores and sum the
  // realized picks; must equal sequence_log_prob
  double manual = 0.0;
  for (size_t pos = 1; pos < ids.size(); ++pos) {
    const auto &raw = scores[pos - 1].values();
    double mx = raw[0];
    for (double x : raw) mx = std::max(mx, x);
    double z = 0.0;
    for (double x : raw) z += std::exp(x - mx);
    manual += raw[ids[pos]] - mx - std::log(z);

    double total = 0.0;
    for (double x : raw) total += std::exp(x - mx) / z;
    CHECK(std::fabs(total - 1.0) < 1e-10);
  }
  CHECK(m.sequence_log_prob(ids, nullptr) ==
        doctest::Approx(manual).epsilon(1e-10));
}

TEST_CASE("one-token continuations from a fixed history sum to 1") {
  // sum_w p(history + w) = p(history): enumerating every w in the
  // vocabulary must recover exactly the history's own probability mass
  Vocabulary v = toy_vocab();
  RescoreModel m = RescoreModel::random_init(toy_config(v), v.hash(), 3);
  std::vector<int> hist = {Vocabulary::kBos, v.encode("play")};
  double hist_mass = std::exp(m.sequence_log_prob(hist, nullptr));
  double total = 0.0;
  for (int w = 0; w < v.size(); ++w) {
    std::vector<int> cont = hist;
    cont.push_back(w);
    total += std::exp(m.sequence_log_prob(cont, nullptr));
  }
  CHECK(std::fabs(total / hist_mass - 1.0) < 1e-8);
}

TEST_CASE("unnormalized head: linearity in output bias and argmax parity") {
  Vocabulary v = toy_vocab();
  LmConfig cfg = toy_config(v);
  cfg.normalized = false;
  RescoreModel m = RescoreModel::random_init(cfg, v.hash(), 11);
  auto ids = v.encode_tokens("play song stop next");
  const int predicted = static_cast<int>(ids.size()) - 1;

  double s0 = m.sequence_score_unnorm(ids, nullptr);
  CHECK(std::isfinite(s0));
  CHECK_THROWS_AS(m.sequence_log_prob(ids, nullptr), Error);

  // zero model scores zero
  RescoreModel z = RescoreModel::zero_init(cfg, v.hash());
  CHECK(z.sequence_score_unnorm(ids, nullptr) == 0.0);

  // adding kappa to every output bias shifts the score by kappa*(L-1)
  const double kappa = 0.37;
  for (auto &b : m.params().out_b.values()) b += kappa;
  double s1 = m.sequence_score_unnorm(ids, nullptr);
  CHECK(s1 == doctest::Approx(s0 + kappa * predicted).epsilon(1e-10));
  for (auto &b : m.params().out_b.values()) b -= kappa;

  // softmax is monotone: raw-score argmax equals softmax argmax per step
  auto scores = m.forward_scores(ids, nullptr);
  for (const auto &s : scores) {
    auto sm = nn::softmax(s);
    int arg_raw = 0, arg_sm = 0;
    for (int i = 1; i < s.dim(0); ++i) {
      if (s.values()[i] > s.values()[arg_raw]) arg_raw = i;
      if (sm.values()[i] > sm.values()[arg_sm]) arg_sm = i;
    }
    CHECK(arg_raw == arg_sm);
  }
}

TEST_CASE("xent loss on uniform and perfect models") {
  Vocabulary v = toy_vocab();
  RescoreModel m = RescoreModel::zero_init(toy_config(v), v.hash());
  auto ids = v.encode_tokens("play song");
  double loss = m.xent_loss_t({ids}).item();
  CHECK(loss == doctest::Approx(std::log(v.size())).epsilon(1e-12));
  CHECK(loss >= 0.0);
  CHECK_THROWS_AS(m.xent_loss_t({}), Error);

  // perplexity equals exp(xent) on the same corpus
  RescoreModel r = RescoreModel::random_init(toy_config(v), v.hash(), 9);
  std::vector<std::vector<int>> corpus = {v.encode_tokens("play song"),
                                          v.encode_tokens("stop")};
  CHECK(r.perplexity(corpus) ==
        doctest::Approx(std::exp(r.xent_loss_t(corpus).item()))
            .epsilon(1e-10));
}

TEST_CASE("xent gradient matches finite differences on a tiny model") {
  Vocabulary v = Vocabulary::from_tokens({"a", "b"});  // |V| = 5
  LmConfig cfg;
  cfg.vocab_size = v.size();
  cfg.embed_dim = 4;
  cfg.hidden_dim = 4;
  RescoreModel m = RescoreModel::random_init(cfg, v.hash(), 13);
  std::vector<std::vector<int>> batch = {v.encode_tokens("a b a"),
                                         v.encode_tokens("b b")};
  std::vector<nn::Tensor> params;
  for (auto &np : m.named_params()) params.push_back(np.tensor);
  auto f = [&] { return m.xent_loss_t(batch); };
  CHECK(nn::grad_check(f, std::span<nn::Tensor>(params), 1e-5) < 1e-4);
}

TEST_CASE("parameter name table is stable and complete") {
  Vocabulary v = toy_vocab();
  LmConfig cfg = toy_config(v);
  cfg.placement = Placement::kA1A3;
  cfg.encoder = EncoderKind::kCnn;
  RescoreModel m = RescoreModel::random_init(cfg, v.hash(), 5);
  std::map<std::string, int> seen;
  int64_t total = 0;
  for (const auto &np : m.named_params()) {
    ++seen[np.name];
    total += np.tensor.numel();
  }
  for (const auto &[name, count] : seen) {
    CAPTURE(name);
    CHECK(count == 1);
  }
  CHECK(total == m.param_count());
  CHECK(seen.count("attn_rnn.w_q") == 1);
  CHECK(seen.count("attn_out.w_q") == 1);
  CHECK(seen.count("enc.cnn.kernel") == 1);
  CHECK(seen.count("enc.tdnn.w") == 0);

  // A1+A3 has strictly more parameters than A3 alone
  LmConfig a3 = cfg;
  a3.placement = Placement::kA3;
  CHECK(m.param_count() >
        RescoreModel::random_init(a3, v.hash(), 5).param_count());
}

TEST_CASE("encoder requires attention placement") {
  Vocabulary v = toy_vocab();
  LmConfig bad = toy_config(v);
  bad.encoder = EncoderKind::kCnn;
  CHECK_THROWS_AS(RescoreModel::random_init(bad, v.hash(), 1), Error);
}

}  // TEST_SUITE
