// rescore/tests/cli_test.cc

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

// End-to-end command tests run the CLI in-process and keep everything tiny;
// the full-scale pipeline properties live in the acceptance gate.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "rescore/cli.h"
#include "rescore/nbest.h"
#include "rescore/training.h"
#include "rescore/vocab.h"

using namespace rescore;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int rc = 0;
  std::string out, err;
};

RunResult run(std::initializer_list<std::string> args) {
  std::ostringstream out, err;
  RunResult r;
  r.rc = run_cli(std::vector<std::string>(args), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Scoped scratch directory so reruns never see stale files.
struct TmpDir {
  std::string path;
  explicit TmpDir(const std::string &p) : path(p) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
  std::string operator/(const std::string &sub) const {
    return path + "/" + sub;
  }
};

RunResult gen_tiny(const std::string &dir, const char *seed = "3",
                   const char *sigma = "0.35") {
  return run({"gen-data", "--train-utts", "12", "--dev-utts", "6",
              "--test-utts", "6", "--dim", "8", "--nbest", "4", "--seed", seed,
              "--sigma", sigma, "--out", dir});
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-data writes the complete dataset layout") {
  TmpDir tmp("cli_gen");
  RunResult r = gen_tiny(tmp / "data");
  CHECK(r.rc == 0);
  CHECK(r.err.empty());
  CHECK(r.out.find("baseline WER") != std::string::npos);
  for (const char *f : {"vocab.txt", "grammar.txt", "train.jsonl", "dev.jsonl",
                        "test.jsonl", "meta.json", "config.echo.json"})
    CHECK(fs::exists(tmp / ("data/" + std::string(f))));

  Vocabulary v = Vocabulary::load(tmp / "data/vocab.txt");
  auto train = load_dataset(tmp / "data/train.jsonl");
  CHECK(train.size() == 12);
  for (const auto &u : train) {
    CHECK(u.frames.d == 8);
    CHECK(static_cast<int>(u.nbest.size()) <= 4);
    for (const auto &w : u.ref) CHECK(v.contains(w));
  }
  DatasetMeta meta = DatasetMeta::load(tmp / "data/meta.json");
  CHECK(meta.seed == 3);
  CHECK(meta.frame_dim == 8);
  CHECK(meta.nbest == 4);
}

TEST_CASE("gen-data with sigma 0 reports a perfect first pass") {
  TmpDir tmp("cli_clean");
  RunResult r = gen_tiny(tmp / "data", "5", "0");
  CHECK(r.rc == 0);
  // one "baseline WER 0.00%" line per split
  size_t hits = 0, pos = 0;
  while ((pos = r.out.find("baseline WER 0.00%", pos)) != std::string::npos) {
    ++hits;
    ++pos;
  }
  CHECK(hits == 3);
}

TEST_CASE("gen-data is byte-reproducible under the seed") {
  TmpDir tmp("cli_repro");
  CHECK(gen_tiny(tmp / "a", "9").rc == 0);
  CHECK(gen_tiny(tmp / "b", "9").rc == 0);
  CHECK(gen_tiny(tmp / "c", "10").rc == 0);
  CHECK(slurp(tmp / "a/train.jsonl") == slurp(tmp / "b/train.jsonl"));
  CHECK(slurp(tmp / "a/test.jsonl") == slurp(tmp / "b/test.jsonl"));
  CHECK(slurp(tmp / "a/train.jsonl") != slurp(tmp / "c/train.jsonl"));
}

TEST_CASE("bad invocations fail with a diagnostic and nonzero exit") {
  RunResult unknown = run({"gen-data", "--no-such-flag", "--out", "x"});
  CHECK(unknown.rc != 0);
  CHECK(!unknown.err.empty());

  RunResult missing = run({"gen-data"});  // --out is required
  CHECK(missing.rc != 0);

  RunResult none = run({});  // a subcommand is required
  CHECK(none.rc != 0);

  RunResult badsub = run({"frobnicate"});
  CHECK(badsub.rc != 0);
}

TEST_CASE("incompatible training flags are rejected") {
  TmpDir tmp("cli_flags");
  REQUIRE(gen_tiny(tmp / "data").rc == 0);
  RunResult r = run({"train", "--data", tmp / "data", "--out", tmp / "out",
                     "--variant", "xent", "--attention", "a2"});
  CHECK(r.rc != 0);
  CHECK(r.err.find("mwe-audio") != std::string::npos);

  RunResult r2 = run({"train", "--data", tmp / "data", "--out", tmp / "out",
                      "--variant", "mwe", "--encoder", "cnn"});
  CHECK(r2.rc != 0);
}

TEST_CASE("pipeline: pretrain, fine-tune, evaluate") {
  TmpDir tmp("cli_pipe");
  REQUIRE(gen_tiny(tmp / "data").rc == 0);

  RunResult pre = run({"pretrain", "--data", tmp / "data", "--out",
                       tmp / "pre", "--embed", "12", "--hidden", "12",
                       "--epochs", "1", "--batch", "4", "--seed", "2"});
  CHECK(pre.rc == 0);
  CHECK(fs::exists(tmp / "pre/checkpoints/xent.ckpt"));
  CHECK(fs::exists(tmp / "pre/logs/pretrain.log"));
  CHECK(pre.out.find("dev_ppl") != std::string::npos);

  RunResult tr = run({"train", "--data", tmp / "data", "--out", tmp / "mwe",
                      "--variant", "mwe", "--embed", "12", "--hidden", "12",
                      "--init", tmp / "pre/checkpoints/xent.ckpt", "--epochs",
                      "1", "--batch", "4", "--seed", "2"});
  CHECK(tr.rc == 0);
  CHECK(fs::exists(tmp / "mwe/checkpoints/model.ckpt"));
  CheckpointMeta meta;
  load_checkpoint(tmp / "mwe/checkpoints/model.ckpt", &meta);
  CHECK(meta.phase == "mwer");

  RunResult ev = run({"evaluate", "--data", tmp / "data", "--checkpoint",
                      tmp / "mwe/checkpoints/model.ckpt", "--split", "test",
                      "--alpha", "0", "--out", tmp / "eval"});
  CHECK(ev.rc == 0);
  auto j = nlohmann::json::parse(ev.out);
  CHECK(j["wer"] == j["baseline_wer"]);  // alpha 0 keeps the first pass
  CHECK(j["utts"] == 6);
  CHECK(slurp(tmp / "eval/report.json") == ev.out);

  // determinism: the same evaluation twice prints identical bytes
  RunResult ev2 = run({"evaluate", "--data", tmp / "data", "--checkpoint",
                       tmp / "mwe/checkpoints/model.ckpt", "--split", "test",
                       "--alpha", "0"});
  CHECK(ev2.out == ev.out);
}

TEST_CASE("train writes an echo of the effective configuration") {
  TmpDir tmp("cli_echo");
  REQUIRE(gen_tiny(tmp / "data").rc == 0);
  RunResult tr = run({"train", "--data", tmp / "data", "--out", tmp / "out",
                      "--variant", "mwe-audio", "--attention", "a1", "--encoder",
                      "none", "--embed", "12", "--hidden", "12", "--context",
                      "6", "--attn-dim", "6", "--epochs", "1", "--batch", "4"});
  CHECK(tr.rc == 0);
  auto echo = nlohmann::json::parse(slurp(tmp / "out/config.echo.json"));
  CHECK(echo["variant"] == "mwe-audio");
  CHECK(echo["attention"] == "a1");
  CHECK(echo["encoder"] == "none");
  CHECK(echo["head"] == "unnorm");
  CHECK(echo["train"]["epochs"] == 1);
  auto rep = nlohmann::json::parse(slurp(tmp / "out/report.json"));
  CHECK(rep["phase"] == "mwer");
  CHECK(rep.contains("dev_wer"));
}

TEST_CASE("config file supplies defaults, flags override") {
  TmpDir tmp("cli_cfg");
  {
    std::ofstream cfg(tmp / "gen.cfg");
    cfg << "sigma=0.5\nseed=4\ntrain-utts=5\ndev-utts=2\ntest-utts=2\n"
        << "dim=8\nnbest=4\n";
  }
  RunResult r = run({"gen-data", "--config", tmp / "gen.cfg", "--sigma", "0.2",
                     "--out", tmp / "data"});
  CHECK(r.rc == 0);
  auto echo = nlohmann::json::parse(slurp(tmp / "data/config.echo.json"));
  CHECK(echo["sigma"] == 0.2);  // flag beat the file
  CHECK(echo["seed"] == 4);     // file beat the default
  CHECK(echo["train_utts"] == 5);
  auto train = load_dataset(tmp / "data/train.jsonl");
  CHECK(train.size() == 5);
}

TEST_CASE("ablate trains and tabulates all four variants of a study") {
  TmpDir tmp("cli_ablate");
  REQUIRE(gen_tiny(tmp / "data").rc == 0);
  RunResult r = run({"ablate", "--study", "attention", "--data", tmp / "data",
                     "--out", tmp / "out", "--embed", "10", "--hidden", "10",
                     "--context", "6", "--attn-dim", "6", "--epochs", "1",
                     "--batch", "4", "--max-nbest", "4"});
  CHECK(r.rc == 0);
  CHECK(r.out.find("system\tWER%\tWERR%\tparams") != std::string::npos);
  auto rep = nlohmann::json::parse(slurp(tmp / "out/report.json"));
  REQUIRE(rep.size() == 4);
  CHECK(rep[0]["system"] == "A3");
  CHECK(rep[1]["system"] == "A1");
  CHECK(rep[2]["system"] == "A2");
  CHECK(rep[3]["system"] == "A1+A3");
  // the A1+A3 combination carries two attention heads, so more parameters
  CHECK(rep[3]["params"].get<int64_t>() > rep[0]["params"].get<int64_t>());
}

}  // TEST_SUITE
