// rescore/tensor.cc

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

#include "rescore/tensor.h"

#include <numeric>

namespace rescore {
namespace nn {

std::string shape_str(const Shape &s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace {
size_t shape_numel(const Shape &shape) {
  size_t n = 1;
  for (int d : shape) {
    RESCORE_CHECK(d >= 0, "negative dimension in shape ", shape_str(shape));
    n *= static_cast<size_t>(d);
  }
  return n;
}

thread_local Tape *g_active_tape = nullptr;
}  // namespace

Tensor Tensor::zeros(const Shape &shape) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->v.assign(shape_numel(shape), 0.0);
  return Tensor(std::move(impl));
}

Tensor Tensor::constant(const Shape &shape, std::vector<double> values) {
  RESCORE_CHECK(values.size() == shape_numel(shape),
                "value count ", values.size(), " does not match shape ",
                shape_str(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->v = std::move(values);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) { return constant({1}, {value}); }

Tensor Tensor::param(const Shape &shape, std::vector<double> values) {
  Tensor t = constant(shape, std::move(values));
  t.impl_->tracked = true;
  t.impl_->g.assign(t.impl_->v.size(), 0.0);
  return t;
}

double Tensor::item() const {
  RESCORE_CHECK(numel() == 1, "item() on tensor of shape ",
                shape_str(impl_->shape));
  return impl_->v[0];
}

void Tensor::zero_grad() {
  if (impl_ && !impl_->g.empty()) std::fill(impl_->g.begin(), impl_->g.end(), 0.0);
}

Tape::~Tape() { clear(); }

void Tape::record(std::function<void()> backward_fn) {
  nodes_.push_back(std::move(backward_fn));
}

void Tape::backward(const Tensor &loss) {
  RESCORE_CHECK(loss.defined() && loss.numel() == 1,
                "backward requires a scalar loss, got shape ",
                loss.defined() ? shape_str(loss.shape()) : "<undefined>");
  RESCORE_CHECK(loss.tracked(), "backward: loss is not tracked on any tape");
  loss.impl()->g[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

Tape *Tape::active() { return g_active_tape; }

TapeScope::TapeScope(Tape &tape) : prev_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = prev_; }

}  // namespace nn
}  // namespace rescore
