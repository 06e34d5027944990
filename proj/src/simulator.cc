// rescore/simulator.cc

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

#include "rescore/simulator.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <queue>
#include <set>
#include <sstream>

namespace rescore {

namespace {

bool is_slot_ref(const std::string &tok) {
  return tok.size() >= 3 && tok.front() == '<' && tok.back() == '>';
}

std::string slot_name(const std::string &tok) {
  return tok.substr(1, tok.size() - 2);
}

std::string utt_id(const std::string &prefix, int i) {
  std::ostringstream os;
  os << prefix << "-" << std::setw(5) << std::setfill('0') << i;
  return os.str();
}

uint64_t utt_seed(uint64_t corpus_seed, const std::string &id) {
  return splitmix64(corpus_seed ^ fnv1a64(id));
}

}  // namespace

GrammarSpec GrammarSpec::parse(const std::string &text) {
  GrammarSpec g;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::vector<std::string> toks = split_words(line);
    if (toks.empty()) continue;
    size_t colon = line.find(':');
    RESCORE_CHECK(colon != std::string::npos, "grammar line ", lineno,
                  ": expected 'slot name: ...' or 'template weight: ...'");
    std::vector<std::string> head = split_words(line.substr(0, colon));
    std::vector<std::string> body = split_words(line.substr(colon + 1));
    RESCORE_CHECK(head.size() == 2, "grammar line ", lineno,
                  ": directive head must be two tokens");
    RESCORE_CHECK(!body.empty(), "grammar line ", lineno, ": empty body");
    if (head[0] == "slot") {
      RESCORE_CHECK(!g.slots_.count(head[1]), "grammar line ", lineno,
                    ": duplicate slot '", head[1], "'");
      for (const std::string &w : body)
        RESCORE_CHECK(!is_slot_ref(w), "grammar line ", lineno,
                      ": slot fillers must be plain words");
      g.slots_[head[1]] = body;
    } else if (head[0] == "template") {
      Template t;
      try {
        size_t idx = 0;
        t.weight = std::stod(head[1], &idx);
        RESCORE_CHECK(idx == head[1].size(), "trailing junk");
      } catch (const std::exception &) {
        throw Error(strcat_all("grammar line ", lineno, ": bad weight '",
                               head[1], "'"));
      }
      RESCORE_CHECK(t.weight > 0, "grammar line ", lineno,
                    ": weight must be positive");
      t.toks = body;
      g.templates_.push_back(std::move(t));
    } else {
      throw Error(strcat_all("grammar line ", lineno, ": unknown directive '",
                             head[0], "'"));
    }
  }
  g.validate();
  return g;
}

void GrammarSpec::validate() const {
  RESCORE_CHECK(!templates_.empty(), "grammar has no templates");
  for (const Template &t : templates_) {
    RESCORE_CHECK(t.toks.size() >= 2 && t.toks.size() <= 12,
                  "template '", join_words(t.toks),
                  "' must expand to 2..12 words");
    for (const std::string &tok : t.toks) {
      if (is_slot_ref(tok)) {
        RESCORE_CHECK(slots_.count(slot_name(tok)), "template references "
                      "undefined slot '", tok, "'");
      }
    }
  }
  for (const auto &[name, fillers] : slots_)
    RESCORE_CHECK(!fillers.empty(), "slot '", name, "' has no fillers");
}

std::vector<std::string> GrammarSpec::vocabulary() const {
  std::set<std::string> words;
  for (const auto &[name, fillers] : slots_) words.insert(fillers.begin(), fillers.end());
  for (const Template &t : templates_)
    for (const std::string &tok : t.toks)
      if (!is_slot_ref(tok)) words.insert(tok);
  return {words.begin(), words.end()};
}

std::vector<std::string> GrammarSpec::literals() const {
  std::set<std::string> fillers;
  for (const auto &[name, fs] : slots_) fillers.insert(fs.begin(), fs.end());
  std::set<std::string> words;
  for (const Template &t : templates_)
    for (const std::string &tok : t.toks)
      if (!is_slot_ref(tok) && !fillers.count(tok)) words.insert(tok);
  return {words.begin(), words.end()};
}

std::string GrammarSpec::to_string() const {
  std::ostringstream os;
  for (const auto &[name, fillers] : slots_)
    os << "slot " << name << ": " << join_words(fillers) << "\n";
  for (const Template &t : templates_)
    os << "template " << t.weight << ": " << join_words(t.toks) << "\n";
  return os.str();
}

uint64_t GrammarSpec::hash() const { return fnv1a64(to_string()); }

std::vector<std::string> GrammarSpec::sample(Rng &rng) const {
  RESCORE_CHECK(!templates_.empty(), "grammar has no templates");
  double total = 0;
  for (const Template &t : templates_) total += t.weight;
  double r = rng.uniform(0, total);
  const Template *pick = &templates_.back();
  for (const Template &t : templates_) {
    if (r < t.weight) {
      pick = &t;
      break;
    }
    r -= t.weight;
  }
  std::vector<std::string> words;
  for (const std::string &tok : pick->toks) {
    if (is_slot_ref(tok)) {
      const std::vector<std::string> &fillers = slots_.at(slot_name(tok));
      words.push_back(fillers[rng.uniform_int(static_cast<int>(fillers.size()))]);
    } else {
      words.push_back(tok);
    }
  }
  return words;
}

bool GrammarSpec::parses(const std::vector<std::string> &words) const {
  for (const Template &t : templates_) {
    if (t.toks.size() != words.size()) continue;
    bool ok = true;
    for (size_t i = 0; i < words.size() && ok; ++i) {
      if (is_slot_ref(t.toks[i])) {
        const std::vector<std::string> &fs = slots_.at(slot_name(t.toks[i]));
        ok = std::find(fs.begin(), fs.end(), words[i]) != fs.end();
      } else {
        ok = t.toks[i] == words[i];
      }
    }
    if (ok) return true;
  }
  return false;
}

GrammarSpec GrammarSpec::builtin() {
  static const char *kText = R"(
# toy voice-command domain
slot artist: adele coldplay drake eminem madonna metallica prince queen rihanna shakira
slot song: believer demons hello happy roar radioactive satisfaction stay thriller yesterday
slot genre: blues classical country jazz metal pop reggae rock
slot place: basement bedroom garage hallway kitchen office
slot city: austin boston chicago dallas denver miami portland seattle
slot day: friday monday saturday sunday thursday today tomorrow tuesday wednesday
slot num: eight five four nine one seven six ten three two

template 3: play <song> by <artist>
template 3: play some <genre> music
template 2: play the song <song>
template 2: next song
template 1: stop the music
template 1: pause the music
template 2: turn the volume up
template 2: turn the volume down
template 2: set volume to <num>
template 3: what is the weather in <city>
template 2: will it rain in <city> on <day>
template 2: set an alarm for <num> thirty
template 2: remind me to call mom on <day>
template 1: turn on the <place> lights
template 1: turn off the <place> lights
template 2: add <song> to my playlist
template 1: how is the traffic in <city>
template 1: skip this track
)";
  return parse(kText);
}

PrototypeTable PrototypeTable::make(const GrammarSpec &grammar, int dim,
                                    uint64_t seed, double spread) {
  RESCORE_CHECK(dim >= 2, "prototype dimension must be >= 2, got ", dim);
  PrototypeTable t;
  t.dim_ = dim;
  Rng rng(splitmix64(seed ^ fnv1a64("prototypes")));

  auto normalize = [&](std::vector<double> &v) {
    double n2 = 0;
    for (double x : v) n2 += x * x;
    double n = std::sqrt(n2);
    RESCORE_CHECK(n > 1e-6, "degenerate prototype direction");
    for (double &x : v) x /= n;
  };
  auto add_word = [&](const std::string &w, const std::vector<double> &mu) {
    if (t.index_.count(w)) return;  // first assignment wins on overlap
    t.index_[w] = static_cast<int>(t.words_.size());
    t.words_.push_back(w);
    t.mu_.insert(t.mu_.end(), mu.begin(), mu.end());
  };

  // Slot fillers cluster around a per-slot center; map order is sorted, so
  // the draw sequence is a pure function of (grammar, dim, seed, spread).
  for (const auto &[name, fillers] : grammar.slots()) {
    std::vector<double> center(dim);
    for (double &x : center) x = rng.gaussian();
    normalize(center);
    for (const std::string &w : fillers) {
      std::vector<double> mu(dim);
      for (int k = 0; k < dim; ++k) mu[k] = center[k] + spread * rng.gaussian();
      normalize(mu);
      add_word(w, mu);
    }
  }
  for (const std::string &w : grammar.literals()) {
    std::vector<double> mu(dim);
    for (double &x : mu) x = rng.gaussian();
    normalize(mu);
    add_word(w, mu);
  }
  RESCORE_CHECK(!t.words_.empty(), "grammar has no vocabulary");
  return t;
}

int PrototypeTable::index(const std::string &word) const {
  auto it = index_.find(word);
  return it == index_.end() ? -1 : it->second;
}

double PrototypeTable::dist2(const double *x, int w) const {
  const double *mu = proto(w);
  double d2 = 0;
  for (int k = 0; k < dim_; ++k) {
    double d = x[k] - mu[k];
    d2 += d * d;
  }
  return d2;
}

std::vector<std::string> gen_corpus(const GrammarSpec &grammar, int count,
                                    uint64_t seed, const std::string &prefix) {
  RESCORE_CHECK(count >= 1, "corpus size must be >= 1, got ", count);
  RESCORE_CHECK(!grammar.templates().empty(), "empty grammar");
  std::vector<std::string> texts;
  texts.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(utt_seed(seed, utt_id(prefix, i)));
    texts.push_back(join_words(grammar.sample(rng)));
  }
  return texts;
}

AudioFrames synth_audio(const std::vector<std::string> &words,
                        const PrototypeTable &protos, double sigma, Rng &rng,
                        std::vector<int> *word_frame_counts) {
  RESCORE_CHECK(!words.empty(), "cannot synthesize empty text");
  AudioFrames frames;
  frames.d = protos.dim();
  if (word_frame_counts) word_frame_counts->clear();
  for (const std::string &w : words) {
    int p = protos.index(w);
    RESCORE_CHECK(p >= 0, "word not in prototype table: '", w, "'");
    int k = 2 + rng.uniform_int(3);  // 2..4 frames
    if (word_frame_counts) word_frame_counts->push_back(k);
    const double *mu = protos.proto(p);
    for (int f = 0; f < k; ++f)
      for (int c = 0; c < frames.d; ++c)
        frames.v.push_back(mu[c] + sigma * rng.gaussian());
    frames.t += k;
  }
  return frames;
}

AudioFrames synth_audio(const std::vector<std::string> &words,
                        const PrototypeTable &protos, double sigma,
                        uint64_t seed) {
  Rng rng(seed);
  return synth_audio(words, protos, sigma, rng);
}

std::vector<Hypothesis> first_pass_decode(
    const AudioFrames &frames, const std::vector<int> &word_frame_counts,
    const PrototypeTable &protos, int n, double sigma_conf, double jitter,
    Rng &rng) {
  RESCORE_CHECK(n >= 1, "n-best size must be >= 1, got ", n);
  RESCORE_CHECK(sigma_conf > 0, "sigma_conf must be positive");
  RESCORE_CHECK(frames.d == protos.dim(), "frame dim ", frames.d,
                " != prototype dim ", protos.dim());
  int total = 0;
  for (int k : word_frame_counts) {
    RESCORE_CHECK(k >= 1, "empty word segment");
    total += k;
  }
  RESCORE_CHECK(total == frames.t, "word segments cover ", total,
                " frames but utterance has ", frames.t);
  const int L = static_cast<int>(word_frame_counts.size());
  const int kCands = std::min(4, protos.size());

  // Per position: mean frame, then the 4 nearest prototypes, best first.
  std::vector<std::vector<std::pair<double, int>>> cands(L);
  int start = 0;
  std::vector<double> mean(frames.d);
  for (int p = 0; p < L; ++p) {
    int k = word_frame_counts[p];
    std::fill(mean.begin(), mean.end(), 0.0);
    for (int f = start; f < start + k; ++f)
      for (int c = 0; c < frames.d; ++c) mean[c] += frames.at(f, c);
    for (double &m : mean) m /= k;
    start += k;

    std::vector<std::pair<double, int>> scored(protos.size());
    for (int w = 0; w < protos.size(); ++w)
      scored[w] = {-protos.dist2(mean.data(), w) / (2 * sigma_conf * sigma_conf),
                   w};
    std::partial_sort(scored.begin(), scored.begin() + kCands, scored.end(),
                      [](const auto &a, const auto &b) {
                        return a.first != b.first ? a.first > b.first
                                                  : a.second < b.second;
                      });
    scored.resize(kCands);
    cands[p] = std::move(scored);
  }

  // Best-first enumeration of index tuples. A node may only advance
  // positions at or after the last one it advanced, so every tuple is
  // reached exactly once (increments applied in nondecreasing position
  // order) and no visited-set is needed.
  struct Node {
    double score;
    std::vector<int> idx;
    int last;
  };
  auto worse = [](const Node &a, const Node &b) { return a.score < b.score; };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> heap(worse);
  Node root{0.0, std::vector<int>(L, 0), 0};
  for (int p = 0; p < L; ++p) root.score += cands[p][0].first;
  heap.push(std::move(root));

  std::vector<Hypothesis> hyps;
  while (!heap.empty() && static_cast<int>(hyps.size()) < n) {
    Node node = heap.top();
    heap.pop();
    Hypothesis h;
    for (int p = 0; p < L; ++p)
      h.words.push_back(protos.words()[cands[p][node.idx[p]].second]);
    h.am = node.score + jitter * rng.gaussian();
    hyps.push_back(std::move(h));
    for (int p = node.last; p < L; ++p) {
      if (node.idx[p] + 1 >= kCands) continue;
      Node next = node;
      next.score += cands[p][node.idx[p] + 1].first - cands[p][node.idx[p]].first;
      next.idx[p] += 1;
      next.last = p;
      heap.push(std::move(next));
    }
  }

  hyps = dedup_nbest(hyps);
  std::stable_sort(hyps.begin(), hyps.end(),
                   [](const Hypothesis &a, const Hypothesis &b) {
                     return a.am > b.am;
                   });
  return hyps;
}

Utterance gen_utterance(const GrammarSpec &grammar, const PrototypeTable &protos,
                        const SimConfig &cfg, const std::string &id) {
  Rng rng(utt_seed(cfg.seed, id));
  Utterance u;
  u.id = id;
  u.ref = grammar.sample(rng);
  std::vector<int> counts;
  u.frames = synth_audio(u.ref, protos, cfg.sigma, rng, &counts);
  // Score jitter rides on the frame noise: sigma 0 means a noiseless
  // first pass with no knob juggling.
  u.nbest = first_pass_decode(u.frames, counts, protos, cfg.nbest,
                              cfg.sigma_conf, cfg.jitter * cfg.sigma, rng);
  return u;
}

std::vector<Utterance> gen_dataset(const GrammarSpec &grammar,
                                   const PrototypeTable &protos,
                                   const SimConfig &cfg, int count,
                                   const std::string &prefix) {
  RESCORE_CHECK(count >= 1, "dataset size must be >= 1, got ", count);
  std::vector<Utterance> utts;
  utts.reserve(count);
  for (int i = 0; i < count; ++i)
    utts.push_back(gen_utterance(grammar, protos, cfg, utt_id(prefix, i)));
  return utts;
}

}  // namespace rescore
