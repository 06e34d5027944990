// rescore/cli.cc

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

#include "rescore/cli.h"

#include <filesystem>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rescore/nbest.h"
#include "rescore/rescore_eval.h"
#include "rescore/simulator.h"
#include "rescore/training.h"
#include "rescore/vocab.h"

namespace rescore {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

void ensure_outdir(const std::string &out) {
  fs::create_directories(out);
  fs::create_directories(out + "/checkpoints");
  fs::create_directories(out + "/logs");
}

void write_echo(const std::string &out, const json &j) {
  write_text_file(out + "/config.echo.json", j.dump(2) + "\n");
}

std::vector<std::vector<int>> encode_refs(const std::vector<Utterance> &utts,
                                          const Vocabulary &vocab) {
  std::vector<std::vector<int>> ids;
  ids.reserve(utts.size());
  for (const Utterance &u : utts)
    ids.push_back(vocab.encode_tokens(join_words(u.ref)));
  return ids;
}

// Audio width as stored in the data; attention models must match it.
int data_frame_dim(const std::vector<Utterance> &utts) {
  for (const Utterance &u : utts)
    if (u.frames.t > 0) return u.frames.d;
  return 0;
}

std::string trim(const std::string &s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// CLI11 only reads config files attached to the root app, so each
// subcommand's --config is expanded by hand: key=value lines become
// trailing flags, except where the flag was already given explicitly
// (explicit flags win). Unknown keys surface as ordinary parse errors.
std::vector<std::string> expand_config_args(
    const std::vector<std::string> &args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  std::vector<std::string> full = args;
  if (path.empty()) return full;
  std::istringstream in(read_text_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    RESCORE_CHECK(eq != std::string::npos && eq > 0, path, ":", lineno,
                  ": expected key=value, got \"", s, "\"");
    std::string flag = "--" + trim(s.substr(0, eq));
    bool given = false;
    for (const std::string &a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) given = true;
    if (!given) {
      full.push_back(flag);
      full.push_back(trim(s.substr(eq + 1)));
    }
  }
  return full;
}

// ---- gen-data ---------------------------------------------------------

struct GenOpts {
  std::string grammar, out;
  int train = 3000, dev = 300, test = 500;
  int nbest = 10, dim = 32;
  double sigma = 0.35, sigma_conf = 1.0, jitter = 0.8, spread = 0.12;
  uint64_t seed = 1;
};

int cmd_gen_data(const GenOpts &o, std::ostream &out) {
  GrammarSpec grammar = o.grammar.empty()
                            ? GrammarSpec::builtin()
                            : GrammarSpec::parse(read_text_file(o.grammar));
  PrototypeTable protos = PrototypeTable::make(grammar, o.dim, o.seed, o.spread);
  Vocabulary vocab = Vocabulary::from_tokens(grammar.vocabulary());

  fs::create_directories(o.out);
  vocab.save(o.out + "/vocab.txt");
  write_text_file(o.out + "/grammar.txt", grammar.to_string());

  DatasetMeta meta;
  meta.seed = o.seed;
  meta.sigma = o.sigma;
  meta.sigma_conf = o.sigma_conf;
  meta.jitter = o.jitter;
  meta.spread = o.spread;
  meta.nbest = o.nbest;
  meta.frame_dim = o.dim;
  meta.grammar_hash = grammar.hash();
  meta.save(o.out + "/meta.json");

  SimConfig cfg;
  cfg.frame_dim = o.dim;
  cfg.sigma = o.sigma;
  cfg.sigma_conf = o.sigma_conf;
  cfg.jitter = o.jitter;
  cfg.spread = o.spread;
  cfg.nbest = o.nbest;
  cfg.seed = o.seed;

  const std::pair<const char *, int> splits[] = {
      {"train", o.train}, {"dev", o.dev}, {"test", o.test}};
  for (const auto &[name, count] : splits) {
    std::vector<Utterance> utts = gen_dataset(grammar, protos, cfg, count, name);
    save_dataset(strcat_all(o.out, "/", name, ".jsonl"), utts);
    EvalReport rep = evaluate(nullptr, nullptr, utts, 0.0);
    out << name << ": baseline WER " << pct(rep.baseline_wer)
        << "%  oracle WER " << pct(rep.oracle_wer) << "%  (" << rep.utts
        << " utts)\n";
  }

  write_echo(o.out, json{{"command", "gen-data"},
                         {"grammar", o.grammar},
                         {"train_utts", o.train},
                         {"dev_utts", o.dev},
                         {"test_utts", o.test},
                         {"nbest", o.nbest},
                         {"dim", o.dim},
                         {"sigma", o.sigma},
                         {"sigma_conf", o.sigma_conf},
                         {"jitter", o.jitter},
                         {"spread", o.spread},
                         {"seed", o.seed},
                         {"out", o.out}});
  return 0;
}

// ---- pretrain ----------------------------------------------------------

struct PretrainOpts {
  std::string data, out;
  int embed = 64, hidden = 64;
  TrainConfig t;
};

json train_cfg_json(const TrainConfig &t) {
  return json{{"lr", t.lr},           {"optimizer", t.optimizer},
              {"batch", t.batch_size}, {"epochs", t.epochs},
              {"lambda", t.lambda},    {"alpha", t.alpha},
              {"max_nbest", t.max_nbest}, {"clip", t.clip_norm},
              {"seed", t.seed},        {"patience", t.patience}};
}

int cmd_pretrain(const PretrainOpts &o, std::ostream &out) {
  o.t.validate();
  Vocabulary vocab = Vocabulary::load(o.data + "/vocab.txt");
  std::vector<Utterance> train = load_dataset(o.data + "/train.jsonl");
  std::vector<Utterance> dev = load_dataset(o.data + "/dev.jsonl");

  LmConfig mc;
  mc.vocab_size = vocab.size();
  mc.embed_dim = o.embed;
  mc.hidden_dim = o.hidden;
  mc.normalized = true;

  ensure_outdir(o.out);
  std::ostringstream log;
  TrainResult res = pretrain_xent(encode_refs(train, vocab),
                                  encode_refs(dev, vocab), mc, vocab.hash(),
                                  o.t, &log);
  write_text_file(o.out + "/logs/pretrain.log", log.str());
  out << log.str();
  save_checkpoint(res.model, o.out + "/checkpoints/xent.ckpt",
                  {res.best_epoch, res.best_dev, "xent"});
  out << "best epoch " << res.best_epoch << " dev_ppl " << res.best_dev
      << "\n";

  json echo = {{"command", "pretrain"}, {"data", o.data},   {"out", o.out},
               {"embed", o.embed},      {"hidden", o.hidden}};
  echo["train"] = train_cfg_json(o.t);
  write_echo(o.out, echo);
  write_text_file(o.out + "/report.json",
                  json{{"phase", "xent"},
                       {"best_epoch", res.best_epoch},
                       {"dev_ppl", res.best_dev},
                       {"params", res.model.param_count()}}
                          .dump(2) +
                      "\n");
  return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainOpts {
  std::string data, out;
  std::string variant = "mwe";
  std::string head;       // "" = variant default (xent: norm, else unnorm)
  std::string attention;  // "" = a3 for mwe-audio
  std::string encoder;    // "" = cnn for mwe-audio
  std::string init;
  int embed = 64, hidden = 64, context = 32, attn = 32;
  TrainConfig t;
};

LmConfig model_cfg_for(const TrainOpts &o, const Vocabulary &vocab,
                       int frame_dim) {
  LmConfig mc;
  mc.vocab_size = vocab.size();
  mc.embed_dim = o.embed;
  mc.hidden_dim = o.hidden;
  mc.context_dim = o.context;
  mc.attn_dim = o.attn;
  mc.frame_dim = frame_dim;
  // MWER variants default to the unnormalized head; mwe-audio defaults to
  // the chosen production configuration (context at the final affine, CNN).
  mc.normalized = o.head == "norm";
  if (o.variant == "mwe-audio") {
    mc.placement = placement_from_string(o.attention.empty() ? "a3" : o.attention);
    mc.encoder = encoder_from_string(o.encoder.empty() ? "cnn" : o.encoder);
  }
  mc.validate();
  return mc;
}

int cmd_train(const TrainOpts &o, bool attention_given, bool encoder_given,
              std::ostream &out) {
  o.t.validate();
  RESCORE_CHECK(o.variant == "mwe-audio" || (!attention_given && !encoder_given),
                "--attention/--encoder require --variant mwe-audio");
  if (o.variant == "xent") {
    RESCORE_CHECK(o.head != "unnorm",
                  "--variant xent trains a generative model; --head unnorm "
                  "is only meaningful for MWER variants");
    RESCORE_CHECK(o.init.empty(), "--init applies to MWER variants");
    PretrainOpts p;
    p.data = o.data;
    p.out = o.out;
    p.embed = o.embed;
    p.hidden = o.hidden;
    p.t = o.t;
    return cmd_pretrain(p, out);
  }

  Vocabulary vocab = Vocabulary::load(o.data + "/vocab.txt");
  std::vector<Utterance> train = load_dataset(o.data + "/train.jsonl");
  std::vector<Utterance> dev = load_dataset(o.data + "/dev.jsonl");

  int frame_dim = data_frame_dim(train);
  RESCORE_CHECK(o.variant != "mwe-audio" || frame_dim > 0,
                "mwe-audio needs audio frames in the dataset");
  LmConfig mc = model_cfg_for(o, vocab, frame_dim > 0 ? frame_dim : 32);

  RescoreModel model;
  if (o.init.empty()) {
    model = RescoreModel::random_init(mc, vocab.hash(), o.t.seed);
  } else {
    RescoreModel pre = load_checkpoint(o.init);
    model = init_from_pretrained(pre, mc, vocab.hash(), o.t.seed);
  }

  ensure_outdir(o.out);
  std::ostringstream log;
  TrainResult res = train_mwer(train, dev, std::move(model), vocab, o.t, &log);
  write_text_file(o.out + "/logs/train.log", log.str());
  out << log.str();
  save_checkpoint(res.model, o.out + "/checkpoints/model.ckpt",
                  {res.best_epoch, res.best_dev, "mwer"});
  out << "best epoch " << res.best_epoch << " dev_wer " << pct(res.best_dev)
      << "\n";

  json echo = {{"command", "train"},
               {"data", o.data},
               {"out", o.out},
               {"variant", o.variant},
               {"head", mc.normalized ? "norm" : "unnorm"},
               {"attention", to_string(mc.placement)},
               {"encoder", to_string(mc.encoder)},
               {"init", o.init},
               {"embed", o.embed},
               {"hidden", o.hidden},
               {"context", o.context},
               {"attn", o.attn}};
  echo["train"] = train_cfg_json(o.t);
  write_echo(o.out, echo);
  write_text_file(o.out + "/report.json",
                  json{{"phase", "mwer"},
                       {"variant", o.variant},
                       {"best_epoch", res.best_epoch},
                       {"dev_wer", res.best_dev},
                       {"params", res.model.param_count()}}
                          .dump(2) +
                      "\n");
  return 0;
}

// ---- evaluate -------------------------------------------------------------

struct EvalOpts {
  std::string data, checkpoint, split = "test", out;
  double alpha = 1.0;
};

int cmd_evaluate(const EvalOpts &o, std::ostream &out) {
  Vocabulary vocab = Vocabulary::load(o.data + "/vocab.txt");
  std::vector<Utterance> utts =
      load_dataset(strcat_all(o.data, "/", o.split, ".jsonl"));
  RescoreModel model = load_checkpoint(o.checkpoint);
  RESCORE_CHECK(model.vocab_hash() == vocab.hash(),
                "vocabulary hash mismatch between checkpoint and data");
  EvalReport rep = evaluate(&model, &vocab, utts, o.alpha);
  out << rep.to_json();
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text_file(o.out + "/report.json", rep.to_json());
    write_echo(o.out, json{{"command", "evaluate"},
                           {"data", o.data},
                           {"split", o.split},
                           {"checkpoint", o.checkpoint},
                           {"alpha", o.alpha},
                           {"out", o.out}});
  }
  return 0;
}

// ---- ablate ----------------------------------------------------------------

struct AblateOpts {
  std::string data, out, study, init;
  int embed = 64, hidden = 64, context = 32, attn = 32;
  TrainConfig t;
};

int cmd_ablate(const AblateOpts &o, std::ostream &out) {
  o.t.validate();
  Vocabulary vocab = Vocabulary::load(o.data + "/vocab.txt");
  std::vector<Utterance> train = load_dataset(o.data + "/train.jsonl");
  std::vector<Utterance> dev = load_dataset(o.data + "/dev.jsonl");
  std::vector<Utterance> test = load_dataset(o.data + "/test.jsonl");
  int frame_dim = data_frame_dim(train);
  RESCORE_CHECK(frame_dim > 0, "ablations need audio frames in the dataset");

  struct Row {
    std::string name;
    Placement placement;
    EncoderKind encoder;
  };
  std::vector<Row> rows;
  if (o.study == "attention") {
    // Placement sweep attends to the projected frames directly.
    rows = {{"A3", Placement::kA3, EncoderKind::kNone},
            {"A1", Placement::kA1, EncoderKind::kNone},
            {"A2", Placement::kA2, EncoderKind::kNone},
            {"A1+A3", Placement::kA1A3, EncoderKind::kNone}};
  } else if (o.study == "encoder") {
    // Encoder sweep keeps the context at the final affine layer.
    rows = {{"none", Placement::kA3, EncoderKind::kNone},
            {"PyLSTM", Placement::kA3, EncoderKind::kPylstm},
            {"TDNN", Placement::kA3, EncoderKind::kTdnn},
            {"CNN", Placement::kA3, EncoderKind::kCnn}};
  } else {
    throw Error(strcat_all("unknown study '", o.study,
                           "' (expected attention or encoder)"));
  }

  RescoreModel pre;
  if (!o.init.empty()) pre = load_checkpoint(o.init);

  ensure_outdir(o.out);
  std::ostringstream log;
  json report = json::array();
  std::vector<std::string> lines;
  for (const Row &row : rows) {
    LmConfig mc;
    mc.vocab_size = vocab.size();
    mc.embed_dim = o.embed;
    mc.hidden_dim = o.hidden;
    mc.context_dim = o.context;
    mc.attn_dim = o.attn;
    mc.frame_dim = frame_dim;
    mc.normalized = false;
    mc.placement = row.placement;
    mc.encoder = row.encoder;
    mc.validate();

    RescoreModel model =
        o.init.empty()
            ? RescoreModel::random_init(mc, vocab.hash(), o.t.seed)
            : init_from_pretrained(pre, mc, vocab.hash(), o.t.seed);
    log << "== " << row.name << " ==\n";
    TrainResult res = train_mwer(train, dev, std::move(model), vocab, o.t, &log);
    EvalReport rep = evaluate(&res.model, &vocab, test, o.t.alpha);
    report.push_back(json{{"system", row.name},
                          {"wer", rep.wer},
                          {"werr", rep.werr},
                          {"params", res.model.param_count()}});
    lines.push_back(strcat_all(row.name, "\t", pct(rep.wer), "\t",
                               pct(rep.werr), "\t", res.model.param_count()));
  }

  out << "system\tWER%\tWERR%\tparams\n";
  for (const std::string &l : lines) out << l << "\n";
  write_text_file(o.out + "/logs/ablate.log", log.str());
  write_text_file(o.out + "/report.json", report.dump(2) + "\n");
  json echo = {{"command", "ablate"}, {"study", o.study}, {"data", o.data},
               {"out", o.out},        {"init", o.init},   {"embed", o.embed},
               {"hidden", o.hidden},  {"context", o.context}, {"attn", o.attn}};
  echo["train"] = train_cfg_json(o.t);
  write_echo(o.out, echo);
  return 0;
}

void add_train_flags(CLI::App *sub, TrainConfig &t) {
  sub->add_option("--lr", t.lr, "learning rate");
  sub->add_option("--optimizer", t.optimizer, "sgd | adam")
      ->check(CLI::IsMember({"sgd", "adam"}));
  sub->add_option("--batch", t.batch_size, "utterances per batch");
  sub->add_option("--epochs", t.epochs, "max training epochs");
  sub->add_option("--max-nbest", t.max_nbest, "n-best truncation for training");
  sub->add_option("--clip", t.clip_norm, "global gradient-norm clip");
  sub->add_option("--seed", t.seed, "RNG seed");
  sub->add_option("--patience", t.patience, "early-stop patience (epochs)");
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out,
            std::ostream &err) {
  CLI::App app{"synthetic first-pass simulation, LSTM LM training, and "
               "n-best rescoring"};
  app.name("rescore");
  app.require_subcommand(1);

  GenOpts g;
  CLI::App *gen = app.add_subcommand("gen-data",
                                     "generate a synthetic n-best dataset");
  gen->add_option("--config", "key=value defaults file; explicit flags win");
  gen->add_option("--grammar", g.grammar,
                  "grammar file (default: builtin voice-command grammar)");
  gen->add_option("--train-utts", g.train, "training utterances");
  gen->add_option("--dev-utts", g.dev, "dev utterances");
  gen->add_option("--test-utts", g.test, "test utterances");
  gen->add_option("--sigma", g.sigma, "frame noise std");
  gen->add_option("--sigma-conf", g.sigma_conf, "decoder score temperature");
  gen->add_option("--jitter", g.jitter,
                  "per-hypothesis am score noise, in units of sigma");
  gen->add_option("--spread", g.spread, "within-slot prototype scatter");
  gen->add_option("--nbest", g.nbest, "n-best list size");
  gen->add_option("--dim", g.dim, "audio embedding dimension");
  gen->add_option("--seed", g.seed, "RNG seed");
  gen->add_option("--out", g.out, "output directory")->required();

  PretrainOpts p;
  CLI::App *pre = app.add_subcommand(
      "pretrain", "cross-entropy pretraining on reference texts");
  pre->add_option("--config", "key=value defaults file; explicit flags win");
  pre->add_option("--data", p.data, "dataset directory")->required();
  pre->add_option("--out", p.out, "output directory")->required();
  pre->add_option("--embed", p.embed, "embedding dim");
  pre->add_option("--hidden", p.hidden, "LSTM hidden dim");
  add_train_flags(pre, p.t);

  TrainOpts t;
  CLI::App *tr = app.add_subcommand("train", "train a rescoring variant");
  tr->add_option("--config", "key=value defaults file; explicit flags win");
  tr->add_option("--data", t.data, "dataset directory")->required();
  tr->add_option("--out", t.out, "output directory")->required();
  tr->add_option("--variant", t.variant, "xent | mwe | mwe-audio")
      ->check(CLI::IsMember({"xent", "mwe", "mwe-audio"}));
  tr->add_option("--head", t.head, "norm | unnorm (default: norm for xent, "
                                   "unnorm otherwise)")
      ->check(CLI::IsMember({"norm", "unnorm"}));
  CLI::Option *att_opt =
      tr->add_option("--attention", t.attention, "a1 | a2 | a3 | a1a3");
  att_opt->check(CLI::IsMember({"a1", "a2", "a3", "a1a3", "a1+a3"}));
  CLI::Option *enc_opt =
      tr->add_option("--encoder", t.encoder, "none | cnn | tdnn | pylstm");
  enc_opt->check(CLI::IsMember({"none", "cnn", "tdnn", "pylstm"}));
  tr->add_option("--init", t.init, "warm-start from an xent checkpoint");
  tr->add_option("--embed", t.embed, "embedding dim");
  tr->add_option("--hidden", t.hidden, "LSTM hidden dim");
  tr->add_option("--context", t.context, "attention context dim");
  tr->add_option("--attn-dim", t.attn, "attention space dim");
  tr->add_option("--alpha", t.t.alpha, "LM scale in the combined score");
  tr->add_option("--lambda", t.t.lambda, "CE weight in the MWER objective");
  add_train_flags(tr, t.t);

  EvalOpts e;
  CLI::App *ev = app.add_subcommand("evaluate", "rescore a split and report "
                                                "WER/WERR/oracle");
  ev->add_option("--config", "key=value defaults file; explicit flags win");
  ev->add_option("--data", e.data, "dataset directory")->required();
  ev->add_option("--checkpoint", e.checkpoint, "model checkpoint")->required();
  ev->add_option("--split", e.split, "train | dev | test");
  ev->add_option("--alpha", e.alpha, "LM scale in the combined score");
  ev->add_option("--out", e.out, "optional report directory");

  AblateOpts a;
  CLI::App *ab = app.add_subcommand("ablate", "train and compare the "
                                              "attention or encoder variants");
  ab->add_option("--config", "key=value defaults file; explicit flags win");
  ab->add_option("--study", a.study, "attention | encoder")
      ->required()
      ->check(CLI::IsMember({"attention", "encoder"}));
  ab->add_option("--data", a.data, "dataset directory")->required();
  ab->add_option("--out", a.out, "output directory")->required();
  ab->add_option("--init", a.init, "warm-start from an xent checkpoint");
  ab->add_option("--embed", a.embed, "embedding dim");
  ab->add_option("--hidden", a.hidden, "LSTM hidden dim");
  ab->add_option("--context", a.context, "attention context dim");
  ab->add_option("--attn-dim", a.attn, "attention space dim");
  ab->add_option("--alpha", a.t.alpha, "LM scale in the combined score");
  ab->add_option("--lambda", a.t.lambda, "CE weight in the MWER objective");
  add_train_flags(ab, a.t);

  try {
    std::vector<std::string> full = expand_config_args(args);
    // CLI11's vector overload expects the arguments in reverse order.
    std::vector<std::string> rev(full.rbegin(), full.rend());
    app.parse(rev);
    if (app.got_subcommand(gen)) return cmd_gen_data(g, out);
    if (app.got_subcommand(pre)) return cmd_pretrain(p, out);
    if (app.got_subcommand(tr))
      return cmd_train(t, att_opt->count() > 0, enc_opt->count() > 0, out);
    if (app.got_subcommand(ev)) return cmd_evaluate(e, out);
    if (app.got_subcommand(ab)) return cmd_ablate(a, out);
  } catch (const CLI::ParseError &pe) {
    return app.exit(pe, out, err);
  } catch (const std::exception &ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace rescore
