// rescore/mwer.cc

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

#include "rescore/mwer.h"

#include <algorithm>
#include <cmath>

#include "rescore/common.h"

namespace rescore {

std::vector<double> relative_edit(const std::vector<int> &e) {
  RESCORE_CHECK(!e.empty(), "relative_edit: empty list");
  double mean = 0.0;
  for (int x : e) mean += x;
  mean /= static_cast<double>(e.size());
  std::vector<double> out(e.size());
  for (size_t i = 0; i < e.size(); ++i) out[i] = e[i] - mean;
  return out;
}

std::vector<double> combine_scores(const std::vector<double> &lm_scores,
                                   const std::vector<double> &am_log_scores,
                                   double alpha) {
  RESCORE_CHECK(lm_scores.size() == am_log_scores.size(),
                "combine_scores: ", lm_scores.size(), " lm scores vs ",
                am_log_scores.size(), " am scores");
  std::vector<double> g(lm_scores.size());
  for (size_t i = 0; i < g.size(); ++i)
    g[i] = alpha * lm_scores[i] + am_log_scores[i];
  return g;
}

std::vector<double> nbest_posterior(const std::vector<double> &g) {
  RESCORE_CHECK(!g.empty(), "nbest_posterior: empty list");
  double m = *std::max_element(g.begin(), g.end());
  std::vector<double> p(g.size());
  double z = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    p[i] = std::exp(g[i] - m);
    z += p[i];
  }
  for (auto &x : p) x /= z;
  return p;
}

double mwer_loss(const std::vector<double> &posterior,
                 const std::vector<double> &e_rel) {
  RESCORE_CHECK(posterior.size() == e_rel.size(),
                "mwer_loss: ", posterior.size(), " posteriors vs ",
                e_rel.size(), " relative errors");
  double loss = 0.0;
  for (size_t i = 0; i < posterior.size(); ++i) loss += posterior[i] * e_rel[i];
  return loss;
}

double total_loss(double mwer, double xent, double lambda) {
  return mwer + lambda * xent;
}

nn::Tensor combine_scores(const std::vector<nn::Tensor> &lm_scores,
                          const std::vector<double> &am_log_scores,
                          double alpha) {
  RESCORE_CHECK(lm_scores.size() == am_log_scores.size(),
                "combine_scores: ", lm_scores.size(), " lm scores vs ",
                am_log_scores.size(), " am scores");
  return nn::axpb(nn::stack(lm_scores), alpha, am_log_scores);
}

nn::Tensor nbest_posterior(const nn::Tensor &g) { return nn::softmax(g); }

nn::Tensor mwer_loss(const nn::Tensor &posterior,
                     const std::vector<double> &e_rel) {
  return nn::dot_const(posterior, e_rel);
}

nn::Tensor total_loss(const nn::Tensor &mwer, const nn::Tensor &xent,
                      double lambda) {
  return nn::add(mwer, nn::scale(xent, lambda));
}

MwerBatchResult mwer_stats(const std::vector<int> &e,
                           const std::vector<double> &lm_scores,
                           const std::vector<double> &am_log_scores,
                           double alpha) {
  RESCORE_CHECK(e.size() == lm_scores.size(),
                "mwer_stats: ", e.size(), " errors vs ", lm_scores.size(),
                " lm scores");
  MwerBatchResult r;
  r.e = e;
  for (int x : e) r.e_bar += x;
  r.e_bar /= static_cast<double>(e.size());
  r.e_rel = relative_edit(e);
  r.g = combine_scores(lm_scores, am_log_scores, alpha);
  r.p = nbest_posterior(r.g);
  r.loss = mwer_loss(r.p, r.e_rel);
  return r;
}

}  // namespace rescore
