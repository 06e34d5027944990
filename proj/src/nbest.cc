// rescore/nbest.cc

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

#include "rescore/nbest.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rescore/common.h"

namespace rescore {

using nlohmann::json;

void DatasetMeta::save(const std::string &path) const {
  json j;
  j["seed"] = seed;
  j["sigma"] = sigma;
  j["sigma_conf"] = sigma_conf;
  j["jitter"] = jitter;
  j["spread"] = spread;
  j["nbest"] = nbest;
  j["frame_dim"] = frame_dim;
  j["grammar_hash"] = grammar_hash;
  write_text_file(path, j.dump(2) + "\n");
}

DatasetMeta DatasetMeta::load(const std::string &path) {
  json j = json::parse(read_text_file(path));
  DatasetMeta m;
  m.seed = j.at("seed").get<uint64_t>();
  m.sigma = j.at("sigma").get<double>();
  m.sigma_conf = j.at("sigma_conf").get<double>();
  m.jitter = j.at("jitter").get<double>();
  m.spread = j.at("spread").get<double>();
  m.nbest = j.at("nbest").get<int>();
  m.frame_dim = j.at("frame_dim").get<int>();
  m.grammar_hash = j.at("grammar_hash").get<uint64_t>();
  return m;
}

namespace {

void check_words(const std::vector<std::string> &words, const std::string &id,
                 const char *what) {
  // +2 for the boundary tokens added at encode time.
  RESCORE_CHECK(static_cast<int>(words.size()) + 2 <= kMaxSeqLen,
                "utterance '", id, "': ", what, " has ", words.size(),
                " words; the sequence cap is ", kMaxSeqLen,
                " tokens including boundaries");
}

Utterance parse_utterance(const std::string &line, int lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const std::exception &e) {
    throw Error(strcat_all("dataset line ", lineno, ": bad JSON: ", e.what()));
  }
  Utterance u;
  u.id = j.at("id").get<std::string>();
  u.ref = split_words(j.at("ref").get<std::string>());
  check_words(u.ref, u.id, "reference");

  const json &fr = j.at("frames");
  u.frames.t = static_cast<int>(fr.size());
  u.frames.d = u.frames.t > 0 ? static_cast<int>(fr[0].size()) : 0;
  u.frames.v.reserve(static_cast<size_t>(u.frames.t) * u.frames.d);
  for (const json &row : fr) {
    RESCORE_CHECK(static_cast<int>(row.size()) == u.frames.d, "utterance '",
                  u.id, "': ragged frame matrix");
    for (const json &x : row) u.frames.v.push_back(x.get<double>());
  }

  const json &nb = j.at("nbest");
  RESCORE_CHECK(!nb.empty(), "utterance '", u.id, "': empty n-best list");
  for (const json &h : nb) {
    Hypothesis hyp;
    hyp.words = split_words(h.at("words").get<std::string>());
    hyp.am = h.at("am").get<double>();
    RESCORE_CHECK(std::isfinite(hyp.am), "utterance '", u.id,
                  "': non-finite am score");
    check_words(hyp.words, u.id, "hypothesis");
    u.nbest.push_back(std::move(hyp));
  }
  return u;
}

}  // namespace

std::vector<Utterance> load_dataset(const std::string &path) {
  std::ifstream in(path);
  RESCORE_CHECK(in.good(), "cannot open dataset: ", path);
  std::vector<Utterance> utts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    utts.push_back(parse_utterance(line, lineno));
  }
  RESCORE_CHECK(!utts.empty(), "dataset is empty: ", path);
  return utts;
}

void save_dataset(const std::string &path, const std::vector<Utterance> &utts) {
  std::ostringstream out;
  for (const Utterance &u : utts) {
    json j;
    j["id"] = u.id;
    j["ref"] = join_words(u.ref);
    json fr = json::array();
    for (int t = 0; t < u.frames.t; ++t) {
      json row = json::array();
      for (int k = 0; k < u.frames.d; ++k) row.push_back(u.frames.at(t, k));
      fr.push_back(std::move(row));
    }
    j["frames"] = std::move(fr);
    json nb = json::array();
    for (const Hypothesis &h : u.nbest) {
      nb.push_back({{"words", join_words(h.words)}, {"am", h.am}});
    }
    j["nbest"] = std::move(nb);
    out << j.dump() << "\n";
  }
  write_text_file(path, out.str());
}

std::vector<Hypothesis> dedup_nbest(const std::vector<Hypothesis> &hyps) {
  std::vector<Hypothesis> out;
  std::set<std::string> seen;
  for (const Hypothesis &h : hyps) {
    if (seen.insert(join_words(h.words)).second) out.push_back(h);
  }
  return out;
}

}  // namespace rescore
