// rescore/mwer.h

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

#ifndef RESCORE_MWER_H_
#define RESCORE_MWER_H_

#include <vector>

#include "rescore/ops.h"
#include "rescore/tensor.h"

namespace rescore {

// Expected-word-error training objective over one n-best list:
//
//   g_i    = alpha * lm_i + am_i        (score combination)
//   p      = softmax(g)                 (list-level posterior)
//   Ehat_i = E_i - mean(E)              (relative edit distance)
//   loss   = sum_i p_i * Ehat_i
//
// The LM scores carry gradient; AM scores and edit distances are data.
// Every function exists in a plain flavor (doubles, inference/eval) and a
// tape flavor (Tensors, training).

// E_i - mean(E); the mean is the uniform average over the list.
std::vector<double> relative_edit(const std::vector<int> &e);

std::vector<double> combine_scores(const std::vector<double> &lm_scores,
                                   const std::vector<double> &am_log_scores,
                                   double alpha);
std::vector<double> nbest_posterior(const std::vector<double> &g);
double mwer_loss(const std::vector<double> &posterior,
                 const std::vector<double> &e_rel);
double total_loss(double mwer, double xent, double lambda);

// Tape flavor: lm_scores are scalar tensors (one per hypothesis).
nn::Tensor combine_scores(const std::vector<nn::Tensor> &lm_scores,
                          const std::vector<double> &am_log_scores,
                          double alpha);
nn::Tensor nbest_posterior(const nn::Tensor &g);
nn::Tensor mwer_loss(const nn::Tensor &posterior,
                     const std::vector<double> &e_rel);
nn::Tensor total_loss(const nn::Tensor &mwer, const nn::Tensor &xent,
                      double lambda);

// One fully worked list, for diagnostics and the evaluation path.
struct MwerBatchResult {
  std::vector<int> e;
  double e_bar = 0.0;
  std::vector<double> e_rel;
  std::vector<double> g;
  std::vector<double> p;
  double loss = 0.0;
};

MwerBatchResult mwer_stats(const std::vector<int> &e,
                           const std::vector<double> &lm_scores,
                           const std::vector<double> &am_log_scores,
                           double alpha);

}  // namespace rescore

#endif  // RESCORE_MWER_H_
