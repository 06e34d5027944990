// rescore/ops.h

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

#ifndef RESCORE_OPS_H_
#define RESCORE_OPS_H_

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "rescore/tensor.h"

namespace rescore {
namespace nn {

// Elementwise. Shapes must match exactly; no broadcasting.
Tensor add(const Tensor &a, const Tensor &b);
Tensor sub(const Tensor &a, const Tensor &b);
Tensor mul(const Tensor &a, const Tensor &b);
Tensor scale(const Tensor &a, double c);
Tensor add_const(const Tensor &a, const std::vector<double> &c);
// y_i = a * x_i + b_i with constant a and b.
Tensor axpb(const Tensor &x, double a, const std::vector<double> &b);

Tensor sigmoid(const Tensor &x);
Tensor tanh_op(const Tensor &x);

// y = xW + b for a single input vector x[in], W[in x out], b[out].
Tensor affine(const Tensor &x, const Tensor &w, const Tensor &b);

// Y = XW (+ b per row): X[T x D], W[D x C], b[C] or undefined.
Tensor linear_rows(const Tensor &x, const Tensor &w, const Tensor &b = Tensor());

// e = Mv: M[T x A], v[A] -> [T].
Tensor matvec(const Tensor &m, const Tensor &v);

// y = sum_t w_t * M[t]: M[T x D], w[T] -> [D].
Tensor weighted_row_sum(const Tensor &m, const Tensor &w);

// Row extraction (embedding lookup); gradient scatters into the row.
Tensor row(const Tensor &m, int r);

// Gather rows t+off for each offset, clamping at the edges: [T x k*D].
Tensor splice_rows(const Tensor &m, const std::vector<int> &offsets);

Tensor concat(const Tensor &a, const Tensor &b);
Tensor slice(const Tensor &v, int begin, int len);
Tensor pick(const Tensor &v, int i);

Tensor stack(const std::vector<Tensor> &scalars);     // n scalars -> [n]
Tensor stack_rows(const std::vector<Tensor> &rows);   // n vectors [d] -> [n x d]

Tensor softmax(const Tensor &v);
Tensor log_softmax(const Tensor &v);

Tensor sum(const Tensor &v);
Tensor mean_of(const std::vector<Tensor> &scalars);
Tensor dot(const Tensor &a, const Tensor &b);
Tensor dot_const(const Tensor &a, const std::vector<double> &c);

struct LstmParams {
  Tensor w_ih;  // [in x 4H], gate order i, f, g, o
  Tensor w_hh;  // [H x 4H]
  Tensor b;     // [4H]
  int hidden_dim() const { return w_hh.dim(0); }
  int input_dim() const { return w_ih.dim(0); }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

// One LSTM cell step. h stays in (-1, 1) by construction.
LstmState lstm_step(const Tensor &x, const LstmState &state, const LstmParams &p);

// 3x3 convolution over the (time, feature) plane of X[T x D] with zero
// same-padding, followed by non-overlapping max pooling of width 3 over
// time. Output is [ceil(T/3) x D].
Tensor conv_time(const Tensor &x, const Tensor &kernel3x3);

// Central finite differences against the analytic gradient of f() over
// every element of every tensor in params. f must rebuild its graph on
// each call. Relative error uses max(|analytic|, |numeric|, 1e-5) as the
// denominator; returns the max over all checked elements. The floor must
// sit well above the ~1e-10 absolute accuracy of central differences in
// double precision, or components whose true gradient is (near) zero --
// e.g. embedding rows never used as inputs -- turn FD rounding noise into
// spurious relative error.
double grad_check(const std::function<Tensor()> &f, std::span<Tensor> params,
                  double eps);

}  // namespace nn
}  // namespace rescore

#endif  // RESCORE_OPS_H_
